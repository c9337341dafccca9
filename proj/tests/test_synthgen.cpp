#include <doctest.h>

#include "helpers.hpp"
#include "nirens/error.hpp"
#include "nirens/synthgen.hpp"

using namespace nirens;

namespace {

GenConfig linear_config(std::size_t n) {
  GenConfig g = testing::small_gen(n, 4);
  g.noise_sd = 0.0;
  g.temp_shift = 0.0;
  g.temp_width = 0.0;
  g.baseline_drift = 0.0;
  return g;
}

}  // namespace

TEST_CASE("default dataset shape and ranges") {
  const GenConfig g;
  const SampleSet s = generate(g);
  CHECK(s.n_samples() == 493);
  CHECK(s.n_points() == 426);
  CHECK(s.wavenumbers(0) == 7600.0);
  CHECK(s.wavenumbers(425) == 11000.0);
  CHECK(s.concentrations.col(0).minCoeff() >= 0.0);
  CHECK(s.concentrations.col(0).maxCoeff() <= 3.0);
  CHECK(s.concentrations.col(1).maxCoeff() <= 7.0);
  CHECK(s.temperatures.minCoeff() >= g.temp_lo);
  CHECK(s.temperatures.maxCoeff() <= g.temp_hi);
  CHECK(s.absorbance.allFinite());
  for (Index i = 1; i < s.n_points(); ++i) {
    REQUIRE(s.wavenumbers(i) > s.wavenumbers(i - 1));
  }
}

TEST_CASE("generation is a pure function of the config") {
  const GenConfig g = testing::small_gen(20, 9);
  const SampleSet a = generate(g);
  const SampleSet b = generate(g);
  CHECK(a.absorbance == b.absorbance);
  CHECK(a.concentrations == b.concentrations);
  GenConfig other = g;
  other.seed = 10;
  CHECK(generate(other).absorbance != a.absorbance);

  // Rows depend only on their own index.
  GenConfig longer = g;
  longer.n_samples = 30;
  CHECK(generate(longer).absorbance.topRows(20) == a.absorbance);
}

TEST_CASE("linear regime superposes") {
  const GenConfig g = linear_config(5);
  const double t = 35.0;
  const Eigen::VectorXd w = water_background(g, t);
  const Eigen::VectorXd a = mixture_spectrum(g, Eigen::Vector2d(1, 0), t) - w;
  const Eigen::VectorXd b = mixture_spectrum(g, Eigen::Vector2d(0, 1), t) - w;
  const Eigen::VectorXd ab = mixture_spectrum(g, Eigen::Vector2d(1, 1), t) - w;
  CHECK((ab - a - b).cwiseAbs().maxCoeff() < 1e-10);

  for (double temp : {20.0, 40.0, 60.0}) {
    const Eigen::VectorXd pure = mixture_spectrum(g, Eigen::Vector2d(0, 0), temp);
    CHECK((pure - water_background(g, 40.0)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("temperature changes the spectrum") {
  const GenConfig g;
  const Eigen::Vector2d c(1.5, 3.5);
  const Eigen::VectorXd cold = mixture_spectrum(g, c, 30.0);
  const Eigen::VectorXd warm = mixture_spectrum(g, c, 50.0);
  CHECK((cold - warm).cwiseAbs().maxCoeff() > 4 * g.noise_sd);
}

TEST_CASE("noiseless linear set is exactly rank 2") {
  const SampleSet s = generate(linear_config(100));
  for (double e : oracle_linear_fit_error(s)) {
    CHECK(e < 1e-6);
  }
  GenConfig noisy = linear_config(100);
  noisy.noise_sd = 0.01;
  const SampleSet n = generate(noisy);
  for (double e : linear_fit_error(n)) {
    CHECK(e > 1e-4);
  }
  CHECK_THROWS_AS(oracle_linear_fit_error(n), NumericalError);
  CHECK_THROWS_AS(oracle_linear_fit_error(generate(linear_config(2))), DataError);
}

TEST_CASE("config validation") {
  GenConfig g;
  g.temp_lo = 70.0;
  CHECK_THROWS_AS(g.validate(), UsageError);
  g = GenConfig{};
  g.noise_sd = -1.0;
  CHECK_THROWS_AS(g.validate(), UsageError);
  g = GenConfig{};
  g.n_samples = 1;
  CHECK_THROWS_AS(g.validate(), UsageError);
  g = GenConfig{};
  g.bands[0][0].amplitude = -0.1;
  CHECK_THROWS_AS(g.validate(), UsageError);
  g = GenConfig{};
  g.concentration_ranges[1] = {5.0, 5.0};
  CHECK_THROWS_AS(g.validate(), UsageError);
}
