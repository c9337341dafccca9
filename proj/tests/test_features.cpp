#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "nirens/error.hpp"
#include "nirens/features.hpp"

using namespace nirens;

namespace {

// Spectra-like matrix: a few smooth latent directions with decaying scales
// plus small noise.
Eigen::MatrixXd structured(Index n, Index p, std::uint64_t seed) {
  const Eigen::MatrixXd latent = testing::random_matrix(n, 6, seed);
  const Eigen::MatrixXd dirs = testing::random_matrix(6, p, seed + 1000);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
  for (Index j = 0; j < 6; ++j) {
    X += std::pow(0.5, double(j)) * latent.col(j) * dirs.row(j);
  }
  return X + 0.01 * testing::random_matrix(n, p, seed + 2000);
}

}  // namespace

TEST_CASE("PCA score variances equal covariance eigenvalues") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::MatrixXd X = testing::random_matrix(30, 80, seed);
    const Projection pca = fit_pca(X, 5);
    const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / 29.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::MatrixXd T = pca.scores(X);
    const Eigen::MatrixXd score_cov = T.transpose() * T / 29.0;
    for (Index j = 0; j < 5; ++j) {
      const double lambda = eig.eigenvalues()(79 - j);
      CHECK(std::abs(score_cov(j, j) - lambda) / lambda < 1e-6);
      for (Index l = 0; l < j; ++l) {
        CHECK(std::abs(score_cov(j, l)) < 1e-8 * lambda);
      }
    }
    const Eigen::MatrixXd gram = pca.loadings.transpose() * pca.loadings;
    CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("PCA explained fractions and signs") {
  const Eigen::MatrixXd X = testing::random_matrix(25, 10, 3);
  const Projection pca = fit_pca(X, 10);
  double total = 0.0;
  for (std::size_t j = 0; j < pca.explained.size(); ++j) {
    CHECK(pca.explained[j] >= 0.0);
    CHECK(pca.explained[j] <= 1.0);
    if (j > 0) {
      CHECK(pca.explained[j] <= pca.explained[j - 1]);
    }
    total += pca.explained[j];
  }
  CHECK(total == doctest::Approx(1.0));
  for (Index j = 0; j < pca.k(); ++j) {
    Index at = 0;
    pca.loadings.col(j).cwiseAbs().maxCoeff(&at);
    CHECK(pca.loadings(at, j) > 0.0);
  }
  // Full basis reconstructs the data.
  const Eigen::MatrixXd recon =
      (pca.scores(X) * pca.loadings.transpose()).rowwise() + pca.center;
  CHECK((recon - X).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("PCA on points along y = 2x") {
  Eigen::MatrixXd X(5, 2);
  for (Index i = 0; i < 5; ++i) {
    X(i, 0) = double(i);
    X(i, 1) = 2.0 * double(i);
  }
  const Projection pca = fit_pca(X, 1);
  CHECK(pca.explained[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pca.loadings(0, 0) == doctest::Approx(1.0 / std::sqrt(5.0)));
  CHECK(pca.loadings(1, 0) == doctest::Approx(2.0 / std::sqrt(5.0)));
  CHECK_THROWS_AS(fit_pca(X, 2), NumericalError);
  CHECK_THROWS_AS(fit_pca(X, 0), UsageError);
  CHECK_THROWS_AS(fit_pca(X.topRows(1), 1), DataError);
}

TEST_CASE("PLS_X scores match PCA scores up to sign") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::MatrixXd X = structured(40, 120, seed);
    const Eigen::MatrixXd a = fit_pca(X, 5).scores(X);
    const Eigen::MatrixXd b = fit_pls_x(X, 5).scores(X);
    for (Index j = 0; j < 5; ++j) {
      const double sign = a.col(j).dot(b.col(j)) >= 0 ? 1.0 : -1.0;
      CHECK((a.col(j) - sign * b.col(j)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("PLS_X converges on plain Gaussian matrices") {
  const Eigen::MatrixXd X = testing::random_matrix(30, 80, 17);
  const Eigen::MatrixXd a = fit_pca(X, 5).scores(X);
  const Eigen::MatrixXd b = fit_pls_x(X, 5).scores(X);
  for (Index j = 0; j < 5; ++j) {
    CHECK(std::abs(std::abs(a.col(j).dot(b.col(j))) - a.col(j).squaredNorm()) <
          1e-6 * a.col(j).squaredNorm());
  }
}

TEST_CASE("PLS_X on rank-1 data deflates to zero") {
  const Eigen::VectorXd u = testing::random_vector(12, 1);
  const Eigen::VectorXd v = testing::random_vector(30, 2);
  const Eigen::MatrixXd X = u * v.transpose();
  const Projection p = fit_pls_x(X, 1);
  const Eigen::MatrixXd centered = X.rowwise() - p.center;
  const Eigen::MatrixXd residual = centered - p.scores(X) * p.loadings.transpose();
  CHECK(residual.norm() < 1e-8);
  CHECK_THROWS_AS(fit_pls_x(X, 2), NumericalError);
}

TEST_CASE("PLS_X picks a direction inside a degenerate dominant eigenspace") {
  // Equal variance along e0 and e1, small along e2.
  Eigen::MatrixXd X(6, 3);
  X << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 0.1, 0, 0, -0.1;
  const Projection p = fit_pls_x(X, 1);
  CHECK(std::abs(p.loadings(2, 0)) < 1e-12);
  CHECK(p.loadings.col(0).norm() == doctest::Approx(1.0));
}

TEST_CASE("feature projection with temperature") {
  const Eigen::MatrixXd X = structured(30, 60, 4);
  const Eigen::VectorXd temps = (20.0 + 40.0 * (testing::random_vector(30, 9).array() * 0.2 + 0.5)).matrix();
  for (auto kind : {ProjectionKind::pca, ProjectionKind::pls_x}) {
    const FeatureSpec spec = fit_feature_spec(kind, X, temps, 5, true);
    CHECK(spec.dimension() == 6);
    const Eigen::MatrixXd F = project(spec, X, temps);
    CHECK(F.cols() == 6);
    CHECK(F.colwise().mean().cwiseAbs().maxCoeff() < 1e-10);

    // Center row maps to zero scores.
    Eigen::MatrixXd c(1, 60);
    c.row(0) = spec.projection.center;
    const Eigen::MatrixXd fc = project(spec, c, Eigen::VectorXd::Constant(1, spec.temperature_mean));
    CHECK(fc.cwiseAbs().maxCoeff() < 1e-10);

    // Affine in X for a fixed spec.
    const Eigen::MatrixXd X1 = X.topRows(5), X2 = X.bottomRows(5);
    const Eigen::VectorXd t5 = temps.head(5);
    const Eigen::MatrixXd mix = project(spec, 0.3 * X1 + 0.7 * X2, t5).leftCols(5);
    const Eigen::MatrixXd sep =
        0.3 * project(spec, X1, t5).leftCols(5) + 0.7 * project(spec, X2, t5).leftCols(5);
    CHECK((mix - sep).cwiseAbs().maxCoeff() < 1e-10);
  }
  const FeatureSpec no_t = fit_feature_spec(ProjectionKind::pca, X, temps, 5, false);
  CHECK(project(no_t, X, temps).cols() == 5);
  CHECK_THROWS_AS(project(no_t, X.leftCols(10), temps), DataError);
  CHECK(projection_kind_from_string("plsx") == ProjectionKind::pls_x);
  CHECK(to_string(ProjectionKind::pca) == "pca");
  CHECK_THROWS_AS(projection_kind_from_string("ica"), UsageError);
}
