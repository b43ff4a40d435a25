// Test-only oracles: independent routes to values the library computes.
// Everything here is deliberately brute force and shares no code with the
// implementation paths it checks.
#pragma once

#include <Eigen/Dense>

#include "hfi/factor/var.hpp"
#include "hfi/ssm/kalman.hpp"

namespace oracle {

using hfi::BoolArray;
using hfi::Index;
using hfi::Matrix;
using hfi::Vector;

/// Dense joint projection of all periods at once:
/// (Sigma_F^-1 + I_T (x) L'Phi^-1 L) vecF = (I_T (x) L'Phi^-1) vecX.
inline Matrix dense_joint_projection(const Matrix& X, const Matrix& loadings,
                                     const Vector& idio_var,
                                     const hfi::factor::VarDynamics& dyn) {
  const Index T = X.rows(), r = loadings.cols();
  Matrix Sigma = hfi::factor::stacked_autocovariance(dyn, T);
  Matrix A = Sigma.llt().solve(Matrix::Identity(r * T, r * T));
  Matrix LPhiL = loadings.transpose() * idio_var.cwiseInverse().asDiagonal() *
                 loadings;
  Matrix LPhi = loadings.transpose() * idio_var.cwiseInverse().asDiagonal();
  Vector rhs(r * T);
  for (Index t = 0; t < T; ++t) {
    A.block(t * r, t * r, r, r) += LPhiL;
    rhs.segment(t * r, r) = LPhi * X.row(t).transpose();
  }
  Vector vecF = A.ldlt().solve(rhs);
  Matrix F(T, r);
  for (Index t = 0; t < T; ++t) F.row(t) = vecF.segment(t * r, r).transpose();
  return F;
}

/// Row-reduced filtering: drop the masked rows from the observation system
/// period by period and run a plain no-missing filter written from scratch.
struct ReducedFilterResult {
  Matrix filtered_mean;
  double loglik = 0.0;
};

inline ReducedFilterResult row_reduced_filter(const hfi::ssm::StateSpaceModel& m,
                                              const Matrix& Y,
                                              const BoolArray& mask) {
  const Index T = Y.rows(), k = m.state_dim();
  ReducedFilterResult out;
  out.filtered_mean.resize(T, k);
  Vector a = m.init_mean;
  Matrix P = m.init_cov;
  for (Index t = 0; t < T; ++t) {
    if (t > 0) {
      a = m.trans_mat * a;
      P = m.trans_mat * P * m.trans_mat.transpose() + m.trans_cov;
      P = 0.5 * (P + P.transpose());
    }
    std::vector<Index> rows;
    for (Index i = 0; i < Y.cols(); ++i)
      if (mask(t, i)) rows.push_back(i);
    if (!rows.empty()) {
      const Index n = static_cast<Index>(rows.size());
      Matrix H(n, k);
      Vector v(n), R(n);
      const Matrix& L = m.load_at(t);
      const Vector& noise = m.noise_at(t);
      for (Index j = 0; j < n; ++j) {
        H.row(j) = L.row(rows[static_cast<std::size_t>(j)]);
        R[j] = noise[rows[static_cast<std::size_t>(j)]];
        v[j] = Y(t, rows[static_cast<std::size_t>(j)]) -
               m.intercept_at(t, rows[static_cast<std::size_t>(j)]) -
               H.row(j).dot(a);
      }
      Matrix S = H * P * H.transpose();
      S.diagonal() += R;
      S = 0.5 * (S + S.transpose());
      Matrix Sinv = S.inverse();
      Matrix K = P * H.transpose() * Sinv;
      a += K * v;
      Matrix IKH = Matrix::Identity(k, k) - K * H;
      P = IKH * P * IKH.transpose() + K * R.asDiagonal() * K.transpose();
      P = 0.5 * (P + P.transpose());
      out.loglik += -0.5 * (double(n) * std::log(2.0 * M_PI) +
                            std::log(S.determinant()) + v.dot(Sinv * v));
    }
    out.filtered_mean.row(t) = a.transpose();
  }
  return out;
}

/// Constrained-minimization BLUP: for each target row s, minimize the
/// prediction error variance a' V_L a - 2 a' cov(u_L, u_s) subject to
/// Z_L' a = Z_s, by solving the KKT system directly.
inline Matrix chow_lin_blup_rows(const Matrix& VL, const Matrix& cross,
                                 const Matrix& ZL, const Matrix& Zstar) {
  const Index To = VL.rows(), K = ZL.cols(), T = cross.rows();
  Matrix A(T, To);
  Matrix KKT(To + K, To + K);
  KKT.setZero();
  KKT.topLeftCorner(To, To) = 2.0 * VL;
  KKT.topRightCorner(To, K) = ZL;
  KKT.bottomLeftCorner(K, To) = ZL.transpose();
  Eigen::FullPivLU<Matrix> lu(KKT);
  for (Index s = 0; s < T; ++s) {
    Vector rhs(To + K);
    rhs.head(To) = 2.0 * cross.row(s).transpose();
    rhs.tail(K) = Zstar.row(s).transpose();
    Vector sol = lu.solve(rhs);
    A.row(s) = sol.head(To).transpose();
  }
  return A;
}

/// Trace ratio computed from column-wise no-intercept regressions with an
/// explicit normal-equation solve.
inline double trace_ratio_by_regressions(const Matrix& Ftrue,
                                         const Matrix& Fhat) {
  const Matrix G = Fhat.transpose() * Fhat;
  const Matrix Ginv = G.inverse();
  double fit = 0.0, total = 0.0;
  for (Index j = 0; j < Ftrue.cols(); ++j) {
    Vector b = Ginv * (Fhat.transpose() * Ftrue.col(j));
    fit += (Fhat * b).squaredNorm();
    total += Ftrue.col(j).squaredNorm();
  }
  return fit / total;
}

/// Simulate an AR(1), keep every m-th point, fit AR(1) to the kept points.
inline double skip_sampled_ar1(double rho, int m, Index T_keep,
                               std::uint64_t seed) {
  hfi::Rng rng(seed);
  double x = 0.0;
  for (int burn = 0; burn < 500; ++burn) x = rho * x + rng.normal();
  std::vector<double> kept;
  for (Index i = 0; i < T_keep * m; ++i) {
    x = rho * x + rng.normal();
    if (i % m == 0) kept.push_back(x);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i < kept.size(); ++i) {
    num += kept[i] * kept[i - 1];
    den += kept[i - 1] * kept[i - 1];
  }
  return num / den;
}

}  // namespace oracle
