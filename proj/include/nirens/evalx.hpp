#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nirens/calibration.hpp"
#include "nirens/ensemble.hpp"
#include "nirens/spectra.hpp"

namespace nirens {

double rmse(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

/// Fraction of samples whose actual value lies inside its interval (bounds
/// inclusive).
double coverage(const std::vector<PredictionInterval>& intervals, const Eigen::VectorXd& actual);

/// Training sizes start, start + step, ... up to and including stop.
std::vector<std::size_t> learning_schedule(std::size_t start, std::size_t step, std::size_t stop);

/// Nested train/test splits for a schedule: the first from split_indices,
/// each later one grown from its predecessor.
std::vector<Split> schedule_splits(std::size_t n_samples, const std::vector<std::size_t>& schedule,
                                   std::uint64_t seed);

/// Named method presets used by the learning-curve experiment:
/// boot_plsx, cv_plsx, boot_pca, boot_plsx_linear, pls_baseline,
/// single_plsx, single_pca.
ModelSpec method_preset(const std::string& name, const ModelSpec& base);

std::vector<std::string> default_methods();

struct LearningCurveSettings {
  std::size_t start = 27;
  std::size_t step = 30;
  std::size_t stop = 267;
  std::vector<std::string> components;  // empty: all components
  std::uint64_t seed = 1;
  PreprocessConfig preprocess;
  unsigned threads = 1;
};

struct LearningCurve {
  std::vector<std::size_t> schedule;
  std::vector<std::string> methods;
  std::vector<std::string> components;
  /// rmse[component][size][method]; NaN marks a failed cell.
  std::vector<std::vector<std::vector<double>>> rmse;
  /// Error message per failed cell, same indexing, empty when the cell succeeded.
  std::vector<std::vector<std::vector<std::string>>> errors;
  std::uint64_t seed = 0;
  std::vector<Split> splits;
};

/// Fits every method at every schedule size on the same training rows and
/// scores it on the same test rows. Preprocessing is fitted once per size and
/// shared by all methods. A failing (method, size) cell is recorded and the
/// sweep continues; DataError is thrown only when every cell failed.
LearningCurve run_learning_curve(const SampleSet& data, const std::vector<ModelSpec>& methods,
                                 const LearningCurveSettings& settings);

/// Element-wise mean over repeated curves with identical shape.
LearningCurve mean_curve(const std::vector<LearningCurve>& curves);

/// Table text for one component: `size,<method>...` with 5-decimal cells and
/// NA for failed cells.
std::string curve_table(const LearningCurve& curve, std::size_t component);

/// Writes `rmse_<component>.csv` per component into `dir` (prefixed by
/// `prefix` when given). Returns the written paths.
std::vector<std::filesystem::path> export_curve(const LearningCurve& curve,
                                                const std::filesystem::path& dir,
                                                const std::string& prefix = "");

}  // namespace nirens
