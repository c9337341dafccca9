#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nirens/spectra.hpp"

namespace nirens {

struct Band {
  double center = 0.0;     // cm^-1 at the mid temperature
  double width = 0.0;      // Gaussian sigma, cm^-1
  double amplitude = 0.0;  // absorbance per % (components) or absolute (water)
};

/// Synthetic two-component aqueous mixture spectra.
///
/// Every band shifts by temp_shift * (T - T_mid) and its width scales by
/// 1 + temp_width * (T - T_mid), which makes the fixed-grid spectra a
/// nonlinear function of concentration and temperature. The defaults are
/// arbitrary toolkit choices, not a model of any real solution.
struct GenConfig {
  std::size_t n_samples = 493;
  std::size_t n_points = 426;
  double wn_lo = 7600.0;
  double wn_hi = 11000.0;
  std::vector<std::string> component_names{"C1", "C2"};
  std::vector<std::pair<double, double>> concentration_ranges{{0.0, 3.0}, {0.0, 7.0}};
  double temp_lo = 20.0;
  double temp_hi = 60.0;
  std::vector<std::vector<Band>> bands = default_component_bands();
  std::vector<Band> water_bands = default_water_bands();
  double temp_shift = 1.0;
  double temp_width = 0.03;
  double noise_sd = 0.02;
  double baseline_drift = 2e-5;
  std::uint64_t seed = 1;

  double temp_mid() const { return 0.5 * (temp_lo + temp_hi); }
  Eigen::VectorXd grid() const;
  void validate() const;

  static std::vector<std::vector<Band>> default_component_bands();
  static std::vector<Band> default_water_bands();
};

/// Noise- and drift-free spectrum for given concentrations and temperature.
Eigen::VectorXd mixture_spectrum(const GenConfig& cfg, const Eigen::VectorXd& concentrations,
                                 double temperature);

/// The water-only part of mixture_spectrum.
Eigen::VectorXd water_background(const GenConfig& cfg, double temperature);

/// Draws concentrations, temperatures, baseline slopes and noise per row from
/// row-derived seeds, so the output is a pure function of cfg.
SampleSet generate(const GenConfig& cfg);

/// Training RMSE per component of a 2-factor PLS1 fit.
std::vector<double> linear_fit_error(const SampleSet& set);

/// Generator self-check. A set generated with noise, drift and temperature
/// effects switched off is exactly rank 2; NumericalError is thrown if any
/// component's 2-factor RMSE reaches 1e-6.
std::vector<double> oracle_linear_fit_error(const SampleSet& set);

}  // namespace nirens
