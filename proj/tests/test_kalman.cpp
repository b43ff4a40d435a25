#include <catch2/catch_amalgamated.hpp>

#include "hfi/factor/gls.hpp"
#include "hfi/rng.hpp"
#include "hfi/ssm/kalman.hpp"
#include "oracles.hpp"

using namespace hfi;

namespace {

ssm::StateSpaceModel small_model(Rng& rng, Index N, Index k) {
  ssm::StateSpaceModel m;
  m.obs_load = rng.normal_matrix(N, k);
  m.obs_noise_var = rng.normal_vector(N).array().square() + 0.3;
  Matrix A = rng.normal_matrix(k, k);
  m.trans_mat = 0.6 * A / spectral_radius(A);
  Matrix Q = rng.normal_matrix(k, k);
  m.trans_cov = Q * Q.transpose() / double(k) + 0.1 * Matrix::Identity(k, k);
  m.init_mean = Vector::Zero(k);
  m.init_cov = solve_discrete_lyapunov(m.trans_mat, m.trans_cov);
  m.layout = ssm::StateLayout{k, 1, 0};
  return m;
}

Matrix simulate_from(const ssm::StateSpaceModel& m, Index T, Rng& rng) {
  Matrix chol = sqrt_psd(m.trans_cov);
  Matrix init_chol = sqrt_psd(m.init_cov);
  Vector s = m.init_mean + init_chol * rng.normal_vector(m.state_dim());
  Matrix Y(T, m.obs_dim());
  for (Index t = 0; t < T; ++t) {
    if (t > 0) s = m.trans_mat * s + chol * rng.normal_vector(m.state_dim());
    for (Index i = 0; i < m.obs_dim(); ++i)
      Y(t, i) = m.obs_load.row(i).dot(s) +
                std::sqrt(m.obs_noise_var[i]) * rng.normal();
  }
  return Y;
}

}  // namespace

TEST_CASE("fully missing period propagates prediction only", "[kalman]") {
  Rng rng(61);
  ssm::StateSpaceModel m = small_model(rng, 4, 2);
  Matrix Y = simulate_from(m, 12, rng);
  BoolArray mask = BoolArray::Constant(12, 4, true);
  mask.row(5).setConstant(false);

  ssm::FilterOutput f = ssm::kalman_filter(m, Y, mask);
  CHECK((f.filtered_mean.row(5) - f.predicted_mean.row(5)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((f.filtered_cov[5] - f.predicted_cov[5]).cwiseAbs().maxCoeff() == 0.0);
  // and the prediction is the transition applied to the previous filtered state
  Vector pred = m.trans_mat * f.filtered_mean.row(4).transpose();
  CHECK((f.predicted_mean.row(5).transpose() - pred).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("masked filtering equals the row-reduced system exactly", "[kalman]") {
  Rng rng(62);
  const Index T = 30, N = 5;
  ssm::StateSpaceModel m = small_model(rng, N, 2);
  Matrix Y = simulate_from(m, T, rng);
  for (int trial = 0; trial < 8; ++trial) {
    BoolArray mask(T, N);
    for (Index t = 0; t < T; ++t)
      for (Index i = 0; i < N; ++i) mask(t, i) = rng.uniform() > 0.3;

    ssm::FilterOutput f = ssm::kalman_filter(m, Y, mask);
    oracle::ReducedFilterResult red = oracle::row_reduced_filter(m, Y, mask);
    CHECK((f.filtered_mean - red.filtered_mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(f.loglik == Catch::Approx(red.loglik).margin(1e-12));
  }
}

TEST_CASE("static model filtering equals project_static per period", "[kalman]") {
  Rng rng(63);
  const Index T = 20, N = 7;
  const int r = 2;
  Matrix L = rng.normal_matrix(N, r);
  Vector phi = rng.normal_vector(N).array().square() + 0.4;
  Matrix SigmaF = Matrix::Identity(r, r) * 1.7;

  ssm::StateSpaceModel m;
  m.obs_load = L;
  m.obs_noise_var = phi;
  m.trans_mat = Matrix::Zero(r, r);
  m.trans_cov = SigmaF;
  m.init_mean = Vector::Zero(r);
  m.init_cov = SigmaF;
  m.layout = ssm::StateLayout{r, 1, 0};

  Matrix Y = rng.normal_matrix(T, N);
  ssm::FilterOutput f = ssm::kalman_filter(m, Y);
  Matrix direct = factor::project_static_all(L, phi, SigmaF, Y);
  CHECK((f.filtered_mean - direct).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("smoother boundary conditions", "[kalman]") {
  Rng rng(64);
  ssm::StateSpaceModel m = small_model(rng, 3, 2);
  Matrix Y1 = simulate_from(m, 1, rng);
  ssm::FilterOutput f1;
  ssm::SmootherOutput s1 = ssm::kalman_smoother(m, Y1, {}, &f1);
  CHECK((s1.smoothed_mean.row(0) - f1.filtered_mean.row(0)).cwiseAbs().maxCoeff() ==
        0.0);

  Matrix Y = simulate_from(m, 25, rng);
  ssm::FilterOutput f;
  ssm::SmootherOutput s = ssm::kalman_smoother(m, Y, {}, &f);
  CHECK((s.smoothed_mean.row(24) - f.filtered_mean.row(24)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("smoothed covariance is below filtered covariance in PSD order",
          "[kalman]") {
  Rng rng(65);
  ssm::StateSpaceModel m = small_model(rng, 4, 3);
  Matrix Y = simulate_from(m, 15, rng);
  ssm::FilterOutput f;
  ssm::SmootherOutput s = ssm::kalman_smoother(m, Y, {}, &f);
  for (Index t = 0; t < 15; ++t) {
    Matrix diff = f.filtered_cov[static_cast<std::size_t>(t)] -
                  s.smoothed_cov[static_cast<std::size_t>(t)];
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(diff),
                                             Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
  }
}

TEST_CASE("smoother output does not depend on an all-true mask", "[kalman]") {
  Rng rng(66);
  ssm::StateSpaceModel m = small_model(rng, 4, 2);
  Matrix Y = simulate_from(m, 20, rng);
  ssm::SmootherOutput a = ssm::kalman_smoother(m, Y);
  ssm::SmootherOutput b =
      ssm::kalman_smoother(m, Y, BoolArray::Constant(20, 4, true));
  CHECK((a.smoothed_mean - b.smoothed_mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("filter covariances stay symmetric PSD", "[kalman]") {
  Rng rng(67);
  ssm::StateSpaceModel m = small_model(rng, 5, 3);
  Matrix Y = simulate_from(m, 40, rng);
  BoolArray mask(40, 5);
  for (Index t = 0; t < 40; ++t)
    for (Index i = 0; i < 5; ++i) mask(t, i) = rng.uniform() > 0.4;
  ssm::FilterOutput f = ssm::kalman_filter(m, Y, mask);
  for (const Matrix& P : f.filtered_cov) {
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(P, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}
