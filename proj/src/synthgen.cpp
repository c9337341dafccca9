#include "nirens/synthgen.hpp"

#include <cmath>

#include "nirens/error.hpp"
#include "nirens/linmodel.hpp"
#include "nirens/random.hpp"

namespace nirens {
namespace {

void add_band(Eigen::VectorXd& out, const Eigen::VectorXd& grid, const Band& band, double scale,
              double shift, double width_factor) {
  const double center = band.center + shift;
  const double width = band.width * width_factor;
  out.array() += scale * band.amplitude *
                 (-0.5 * ((grid.array() - center) / width).square()).exp();
}

}  // namespace

std::vector<std::vector<Band>> GenConfig::default_component_bands() {
  return {
      {{8250.0, 120.0, 0.031}, {8800.0, 180.0, 0.019}, {10150.0, 200.0, 0.012}},
      {{8400.0, 200.0, 0.025}, {9700.0, 250.0, 0.016}, {10500.0, 150.0, 0.012}},
  };
}

std::vector<Band> GenConfig::default_water_bands() {
  return {{8450.0, 260.0, 0.13}, {10300.0, 320.0, 0.05}};
}

Eigen::VectorXd GenConfig::grid() const {
  return Eigen::VectorXd::LinSpaced(static_cast<Index>(n_points), wn_lo, wn_hi);
}

void GenConfig::validate() const {
  if (n_samples < 2) {
    throw UsageError("synth.n_samples must be at least 2");
  }
  if (n_points < 2) {
    throw UsageError("synth.n_points must be at least 2");
  }
  if (!(wn_lo < wn_hi)) {
    throw UsageError("synth.wn_lo must be below synth.wn_hi");
  }
  if (!(temp_lo < temp_hi)) {
    throw UsageError("synth.temp_lo must be below synth.temp_hi");
  }
  if (component_names.empty() || component_names.size() != concentration_ranges.size() ||
      component_names.size() != bands.size()) {
    throw UsageError("synth: component names, ranges and band lists must have equal length");
  }
  for (std::size_t c = 0; c < concentration_ranges.size(); ++c) {
    const auto [lo, hi] = concentration_ranges[c];
    if (!(lo >= 0.0 && lo < hi)) {
      throw UsageError("synth.c" + std::to_string(c + 1) +
                       "_lo must be non-negative and below synth.c" + std::to_string(c + 1) +
                       "_hi");
    }
  }
  auto check_bands = [](const std::vector<Band>& list, const std::string& key) {
    for (const auto& b : list) {
      if (!(b.width > 0.0) || !(b.amplitude >= 0.0) || !std::isfinite(b.center)) {
        throw UsageError(key + ": bands need positive width and non-negative amplitude");
      }
    }
  };
  for (std::size_t c = 0; c < bands.size(); ++c) {
    check_bands(bands[c], "synth.bands" + std::to_string(c + 1));
  }
  check_bands(water_bands, "synth.water_bands");
  if (!(noise_sd >= 0.0)) {
    throw UsageError("synth.noise_sd must be non-negative");
  }
  if (!(baseline_drift >= 0.0)) {
    throw UsageError("synth.baseline_drift must be non-negative");
  }
  const double extreme = 1.0 + temp_width * std::min(temp_lo - temp_mid(), temp_hi - temp_mid());
  if (!(extreme > 0.0)) {
    throw UsageError("synth.temp_width makes band widths non-positive over the temperature range");
  }
}

Eigen::VectorXd water_background(const GenConfig& cfg, double temperature) {
  const Eigen::VectorXd grid = cfg.grid();
  const double dt = temperature - cfg.temp_mid();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.size());
  for (const auto& band : cfg.water_bands) {
    add_band(out, grid, band, 1.0, cfg.temp_shift * dt, 1.0 + cfg.temp_width * dt);
  }
  return out;
}

Eigen::VectorXd mixture_spectrum(const GenConfig& cfg, const Eigen::VectorXd& concentrations,
                                 double temperature) {
  if (static_cast<std::size_t>(concentrations.size()) != cfg.bands.size()) {
    throw DataError("concentration vector length differs from component count");
  }
  const Eigen::VectorXd grid = cfg.grid();
  const double dt = temperature - cfg.temp_mid();
  Eigen::VectorXd out = water_background(cfg, temperature);
  for (std::size_t c = 0; c < cfg.bands.size(); ++c) {
    for (const auto& band : cfg.bands[c]) {
      add_band(out, grid, band, concentrations[static_cast<Index>(c)], cfg.temp_shift * dt,
               1.0 + cfg.temp_width * dt);
    }
  }
  return out;
}

SampleSet generate(const GenConfig& cfg) {
  cfg.validate();
  SampleSet set;
  set.wavenumbers = cfg.grid();
  set.component_names = cfg.component_names;
  const auto n = static_cast<Index>(cfg.n_samples);
  const auto n_comp = static_cast<Index>(cfg.component_names.size());
  set.absorbance.resize(n, set.n_points());
  set.concentrations.resize(n, n_comp);
  set.temperatures.resize(n);
  const double v_mid = 0.5 * (cfg.wn_lo + cfg.wn_hi);

  for (Index i = 0; i < n; ++i) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    Eigen::VectorXd c(n_comp);
    for (Index k = 0; k < n_comp; ++k) {
      const auto [lo, hi] = cfg.concentration_ranges[static_cast<std::size_t>(k)];
      c[k] = rng.uniform(lo, hi);
    }
    const double temperature = rng.uniform(cfg.temp_lo, cfg.temp_hi);
    const double slope = rng.uniform(-cfg.baseline_drift, cfg.baseline_drift);
    Eigen::VectorXd spectrum = mixture_spectrum(cfg, c, temperature);
    spectrum.array() += slope * (set.wavenumbers.array() - v_mid);
    if (cfg.noise_sd > 0.0) {
      for (Index p = 0; p < spectrum.size(); ++p) {
        spectrum[p] += cfg.noise_sd * rng.normal();
      }
    }
    set.absorbance.row(i) = spectrum.transpose();
    set.concentrations.row(i) = c.transpose();
    set.temperatures[i] = temperature;
  }
  return set;
}

std::vector<double> linear_fit_error(const SampleSet& set) {
  std::vector<double> out;
  for (Index c = 0; c < set.n_components(); ++c) {
    const Eigen::VectorXd y = set.concentrations.col(c);
    const PlsRegModel model = fit_pls1(set.absorbance, y, 2);
    out.push_back(std::sqrt((y - predict_pls(model, set.absorbance)).squaredNorm() /
                            double(y.size())));
  }
  return out;
}

std::vector<double> oracle_linear_fit_error(const SampleSet& set) {
  if (set.n_samples() < 3) {
    throw DataError("linear self-check needs at least 3 samples for a rank-2 fit");
  }
  auto errors = linear_fit_error(set);
  for (std::size_t c = 0; c < errors.size(); ++c) {
    if (!(errors[c] < 1e-6)) {
      throw NumericalError("generator self-check failed for " + set.component_names[c] +
                           ": 2-factor RMSE " + std::to_string(errors[c]));
    }
  }
  return errors;
}

}  // namespace nirens
