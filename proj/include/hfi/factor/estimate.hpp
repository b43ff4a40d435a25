#pragma once

#include <optional>
#include <vector>

#include "hfi/common.hpp"
#include "hfi/linalg.hpp"

namespace hfi::factor {

enum class FactorMethod { PC, MLE_H, PC_GLS_H, PC_GLS_HAR, PC_KS, EM_DFM };

inline const char* method_name(FactorMethod m) {
  switch (m) {
    case FactorMethod::PC: return "pc";
    case FactorMethod::MLE_H: return "mle-h";
    case FactorMethod::PC_GLS_H: return "pc-gls-h";
    case FactorMethod::PC_GLS_HAR: return "pc-gls-har";
    case FactorMethod::PC_KS: return "pc-ks";
    case FactorMethod::EM_DFM: return "em-dfm";
  }
  return "?";
}

/// VAR(p) dynamics for the factor process.
struct VarDynamics {
  int order = 1;
  std::vector<Matrix> coefs;  // A_1..A_p, each r x r
  Matrix innov_cov;           // r x r
  bool shrunk = false;        // scaled toward stationarity at fit time

  Index dim() const { return innov_cov.rows(); }

  Matrix companion() const {
    const Index r = dim();
    Matrix C = Matrix::Zero(r * order, r * order);
    for (int k = 0; k < order; ++k)
      C.block(0, k * r, r, r) = coefs[static_cast<std::size_t>(k)];
    if (order > 1)
      C.block(r, 0, r * (order - 1), r * (order - 1)) =
          Matrix::Identity(r * (order - 1), r * (order - 1));
    return C;
  }

  Matrix companion_innov_cov() const {
    const Index r = dim();
    Matrix Q = Matrix::Zero(r * order, r * order);
    Q.topLeftCorner(r, r) = innov_cov;
    return Q;
  }

  double companion_spectral_radius() const { return spectral_radius(companion()); }
};

struct FactorDiagnostics {
  bool converged = true;
  int iterations = 0;
  std::vector<double> loglik_path;  // quasi-log-likelihood per iteration
  bool heywood = false;             // an idiosyncratic variance hit the floor
  bool rho_capped = false;          // an AR(1) estimate hit the |rho| cap
  bool var_shrunk = false;          // VAR fit shrunk toward stationarity
};

/// Factors, loadings and second-moment estimates from one of the complete
/// data schemes. Normalization depends on the method; the sign convention
/// (largest-absolute loading positive per factor) is always applied.
struct FactorEstimate {
  Matrix factors;     // T x r
  Matrix loadings;    // N x r
  Vector idio_var;    // N, diagonal of Phi
  Matrix factor_cov;  // r x r
  FactorMethod method = FactorMethod::PC;
  Vector ar_coefs;    // per-series rho_i (size 0 unless estimated)
  std::optional<VarDynamics> dynamics;
  FactorDiagnostics diag;

  Index n_factors() const { return factors.cols(); }
  Matrix common_component() const { return factors * loadings.transpose(); }
};

/// Flips factor/loading column pairs so the largest-absolute loading of each
/// factor is positive. Leaves the common component unchanged.
inline void fix_sign(Matrix& factors, Matrix& loadings) {
  for (Index j = 0; j < loadings.cols(); ++j) {
    Index imax = 0;
    loadings.col(j).cwiseAbs().maxCoeff(&imax);
    if (loadings(imax, j) < 0.0) {
      loadings.col(j) = -loadings.col(j);
      factors.col(j) = -factors.col(j);
    }
  }
}

}  // namespace hfi::factor
