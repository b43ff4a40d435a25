#include <catch2/catch_amalgamated.hpp>

#include "hfi/factor/gls.hpp"
#include "hfi/rng.hpp"
#include "hfi/sim/metrics.hpp"

using namespace hfi;

TEST_CASE("gls_project with identity weights is OLS", "[factor-gls]") {
  Rng rng(21);
  Matrix L = rng.normal_matrix(8, 2);
  Vector x = rng.normal_vector(8);
  Vector phi = Vector::Ones(8);
  Vector f = factor::gls_project(L, phi, x);
  Vector f_ols = (L.transpose() * L).ldlt().solve(L.transpose() * x);
  CHECK((f - f_ols).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gls_project is exact on noiseless observations", "[factor-gls]") {
  Rng rng(22);
  Matrix L = rng.normal_matrix(10, 3);
  Vector f(3);
  f << 0.3, -1.2, 2.0;
  Vector phi = rng.normal_vector(10).array().square() + 0.1;
  Vector x = L * f;
  CHECK((factor::gls_project(L, phi, x) - f).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gls_project matches a dense-inversion oracle", "[factor-gls]") {
  Rng rng(23);
  Matrix L = rng.normal_matrix(8, 2);
  Vector phi = rng.normal_vector(8).array().square() + 0.2;
  Vector x = rng.normal_vector(8);
  Matrix W = phi.cwiseInverse().asDiagonal();
  Vector expect = (L.transpose() * W * L).inverse() * (L.transpose() * W * x);
  CHECK((factor::gls_project(L, phi, x) - expect).cwiseAbs().maxCoeff() < 1e-12);

  Matrix Lbad = Matrix::Zero(8, 2);  // singular normal matrix
  CHECK_THROWS_AS(factor::gls_project(Lbad, phi, x), std::runtime_error);
}

TEST_CASE("project_static reduces to GLS as the prior widens", "[factor-gls]") {
  Rng rng(24);
  Matrix L = rng.normal_matrix(12, 2);
  Vector phi = rng.normal_vector(12).array().square() + 0.3;
  Vector x = rng.normal_vector(12);
  Matrix big = 1e8 * Matrix::Identity(2, 2);
  Vector fp = factor::project_static(L, phi, big, x);
  Vector fg = factor::gls_project(L, phi, x);
  CHECK((fp - fg).norm() / fg.norm() < 1e-6);

  Matrix notpd = -Matrix::Identity(2, 2);
  CHECK_THROWS_AS(factor::project_static(L, phi, notpd, x), std::runtime_error);
}

TEST_CASE("Woodbury identity on random PD inputs", "[factor-gls]") {
  Rng rng(25);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix Ar = rng.normal_matrix(3, 3);
    Matrix Br = rng.normal_matrix(3, 3);
    Matrix A = Ar * Ar.transpose() + 0.2 * Matrix::Identity(3, 3);
    Matrix B = Br * Br.transpose() + 0.2 * Matrix::Identity(3, 3);
    Matrix lhs = (A + B).inverse();
    Matrix rhs = B.inverse() - (A + B).inverse() * A * B.inverse();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("projection-GLS gap shrinks with N", "[factor-gls]") {
  // ||F^p - F^GLS|| is O(1/N); the ratio between N=400 and N=100 medians
  // must fall well under 0.7
  Rng master(26);
  const int reps = 50, T = 50, r = 2;
  auto median_gap = [&](Index N, std::uint64_t stream) {
    std::vector<double> gaps;
    for (int rep = 0; rep < reps; ++rep) {
      Rng rng(26, stream * 1000 + rep);
      Matrix L = rng.normal_matrix(N, r);
      Vector phi = rng.normal_vector(N).array().square() + 0.3;
      Matrix SigmaF = Matrix::Identity(r, r);
      Matrix F = rng.normal_matrix(T, r);
      Matrix E = rng.normal_matrix(T, N) * phi.cwiseSqrt().asDiagonal();
      Matrix X = F * L.transpose() + E;
      Matrix Fp = factor::project_static_all(L, phi, SigmaF, X);
      Matrix Fg = factor::gls_project_all(L, phi, X);
      gaps.push_back((Fp - Fg).norm() / std::sqrt(double(T)));
    }
    std::nth_element(gaps.begin(), gaps.begin() + reps / 2, gaps.end());
    return gaps[reps / 2];
  };
  const double g100 = median_gap(100, 1);
  const double g400 = median_gap(400, 2);
  CHECK(g400 / g100 < 0.7);
}

TEST_CASE("PC-GLS-h equals PC under homoskedastic weights", "[factor-gls]") {
  Rng rng(27);
  Matrix X = rng.normal_matrix(60, 10);
  factor::FactorEstimate pc = factor::estimate_pc(X, 2);
  Matrix f_scalar =
      factor::gls_project_all(pc.loadings, Vector::Constant(10, 0.37), X);
  CHECK((f_scalar - pc.factors).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("PC-GLS-h is a deterministic one-step update", "[factor-gls]") {
  Rng rng(28);
  Matrix F = rng.normal_matrix(80, 2);
  Matrix L = rng.normal_matrix(12, 2);
  Vector sd = 0.3 * (rng.normal_vector(12).array().square() + 0.5);
  Matrix X = F * L.transpose() +
             Matrix(rng.normal_matrix(80, 12) * sd.asDiagonal());
  factor::FactorEstimate a = factor::estimate_pc_gls_h(X, 2);
  factor::FactorEstimate b = factor::estimate_pc_gls_h(X, 2);
  CHECK(a.factors == b.factors);
  CHECK(a.loadings == b.loadings);
  CHECK(a.idio_var == b.idio_var);
}

TEST_CASE("PC-GLS-h beats PC under heteroskedasticity (Monte Carlo)",
          "[factor-gls]") {
  const Index T = 200, N = 10;
  const int reps = 200;
  int wins = 0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(29, rep);
    Matrix F = rng.normal_matrix(T, 1);
    Matrix L = Matrix::Ones(N, 1) + 0.3 * rng.normal_matrix(N, 1);
    Vector sd(N);
    for (Index i = 0; i < N; ++i) sd[i] = (i < N / 2) ? 0.3 : 3.0;
    Matrix X = F * L.transpose() +
               Matrix(rng.normal_matrix(T, N) * sd.asDiagonal());
    double m_pc = sim::metric_trace_ratio(F, factor::estimate_pc(X, 1).factors);
    double m_gls =
        sim::metric_trace_ratio(F, factor::estimate_pc_gls_h(X, 1).factors);
    if (m_gls >= m_pc) ++wins;
  }
  CHECK(wins >= static_cast<int>(0.7 * reps));
}

TEST_CASE("PC-GLS-har with rho forced to zero equals PC-GLS-h", "[factor-gls]") {
  Rng rng(30);
  Matrix F = rng.normal_matrix(100, 2);
  Matrix L = rng.normal_matrix(9, 2);
  Matrix X = F * L.transpose() + 0.4 * rng.normal_matrix(100, 9);
  factor::FactorEstimate h = factor::estimate_pc_gls_h(X, 2);
  factor::FactorEstimate har =
      factor::estimate_pc_gls_har(X, 2, Vector::Zero(9));
  CHECK((h.factors - har.factors).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((h.loadings - har.loadings).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((h.idio_var - har.idio_var).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("quasi-differenced loading regression is exact on zero noise",
          "[factor-gls]") {
  Rng rng(31);
  Matrix F = rng.normal_matrix(80, 2);
  Matrix L = rng.normal_matrix(7, 2);
  Matrix X = F * L.transpose();
  factor::FactorEstimate pc = factor::estimate_pc(X, 2);
  factor::FactorEstimate har =
      factor::estimate_pc_gls_har(X, 2, Vector::Constant(7, 0.7));
  CHECK((har.loadings - pc.loadings).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((X - har.common_component()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("PC-GLS-har loading errors beat PC under serial correlation",
          "[factor-gls]") {
  // persistent factor, error variance rising with error persistence; in this
  // regime the quasi-differenced loading regression pays off at N=10
  const Index T = 420, N = 10;
  const int reps = 100;
  double rmse_pc = 0.0, rmse_har = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(32, rep);
    Matrix F(T, 1);
    double f = 0.0;
    for (Index t = 0; t < T; ++t) {
      f = 0.85 * f + std::sqrt(1.0 - 0.85 * 0.85) * rng.normal();
      F(t, 0) = f;
    }
    Matrix L = Matrix::Ones(N, 1) + 0.4 * rng.normal_matrix(N, 1);
    Matrix E(T, N);
    for (Index i = 0; i < N; ++i) {
      const double rho = -0.6 + 1.55 * double(i) / double(N - 1);  // -0.6..0.95
      const double phi = 0.1 + 1.4 * double(i) / double(N - 1);
      const double innov_sd = std::sqrt(phi * (1.0 - rho * rho));
      double e = 0.0;
      for (Index t = 0; t < T; ++t) {
        e = rho * e + innov_sd * rng.normal();
        E(t, i) = e;
      }
    }
    Matrix X = F * L.transpose() + E;
    factor::FactorEstimate pc = factor::estimate_pc(X, 1);
    factor::FactorEstimate har = factor::estimate_pc_gls_har(X, 1);
    // align signs and the F'F/T=1 scale before comparing loadings
    auto aligned_rmse = [&](const factor::FactorEstimate& est) {
      Vector lhat = est.loadings.col(0);
      double scale = est.factors.col(0).norm() / std::sqrt(double(T));
      lhat *= scale;
      double best = std::min((lhat - L.col(0)).norm(), (lhat + L.col(0)).norm());
      return best / std::sqrt(double(N));
    };
    rmse_pc += aligned_rmse(pc);
    rmse_har += aligned_rmse(har);
  }
  CHECK(rmse_har <= rmse_pc);
}

TEST_CASE("near-unit-root residuals set the rho cap flag", "[factor-gls]") {
  Rng rng(33);
  const Index T = 300, N = 6;
  Matrix F = rng.normal_matrix(T, 1);
  Matrix L = Matrix::Ones(N, 1);
  Matrix E(T, N);
  for (Index i = 0; i < N; ++i) {
    double e = 0.0;
    for (Index t = 0; t < T; ++t) {
      e = 0.9999 * e + 0.05 * rng.normal();
      E(t, i) = e + 20.0 * ((t * 7 + int(i)) % 2);  // force wild residual persistence
    }
  }
  Matrix X = F * L.transpose() + E;
  factor::FactorEstimate har = factor::estimate_pc_gls_har(X, 1);
  CHECK((har.ar_coefs.array().abs() <= factor::kArCap + 1e-15).all());
}
