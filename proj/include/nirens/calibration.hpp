#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nirens/config.hpp"
#include "nirens/ensemble.hpp"
#include "nirens/linmodel.hpp"
#include "nirens/preprocess.hpp"
#include "nirens/spectra.hpp"

namespace nirens {

/// Preprocessing chain, applied in this order: range selection, polynomial
/// baseline correction, optional MSC, optional Savitzky-Golay, mean centering.
struct PreprocessConfig {
  double range_lo = 7600.0;
  double range_hi = 11000.0;
  int baseline_order = 1;
  bool msc_enabled = false;
  bool sg_enabled = false;
  int sg_window = 11;
  int sg_poly = 2;
  int sg_deriv = 0;

  static PreprocessConfig from_config(const Config& cfg);
  void validate() const;
};

/// Preprocessing state fitted on a training set.
struct PreprocessModel {
  PreprocessConfig config;
  Eigen::VectorXd wavenumbers;  // grid after range selection
  std::optional<Eigen::RowVectorXd> msc_reference;
  CenteringModel centering;
};

PreprocessModel fit_preprocess(const PreprocessConfig& cfg, const SampleSet& train);

/// Applies a fitted chain; DataError if the selected grid differs from the
/// training grid.
Eigen::MatrixXd apply_preprocess(const PreprocessModel& model, const SampleSet& set);

enum class ModelFamily { mlp, linear, pls_baseline };

std::string to_string(ModelFamily family);
ModelFamily model_family_from_string(const std::string& text);

/// Everything needed to fit one calibration method for one component.
struct ModelSpec {
  std::string name = "model";
  ModelFamily family = ModelFamily::mlp;
  ResampleKind resample = ResampleKind::bootstrap;
  std::size_t n_models = 70;
  double holdout = 0.20;
  ProjectionKind feature_kind = ProjectionKind::pls_x;
  Index n_features = 5;
  bool include_temperature = true;
  bool refit_per_member = false;
  Index n_hidden = 10;
  TrainConfig train;
  Index max_factors = 15;
  Index folds = 10;

  /// Reads the `features.*`, `mlp.*`, `ensemble.*` and `baseline_model.*` keys.
  static ModelSpec from_config(const Config& cfg);
  void validate() const;
};

/// Fitted calibration for one component: an ensemble (possibly of one
/// member) or a PLS regression.
struct FittedModel {
  std::variant<Ensemble, PlsRegModel> model;

  std::size_t n_members() const;
  /// n_samples x n_members predictions on preprocessed spectra.
  Eigen::MatrixXd member_predictions(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& temperatures) const;
};

FittedModel fit_model(const ModelSpec& spec, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& temperatures, const Eigen::VectorXd& y,
                      const std::string& component, std::uint64_t seed, unsigned threads = 1);

/// Preprocessing plus fitted model for one component.
struct CalibrationModel {
  std::string component;
  ModelSpec spec;
  PreprocessModel preprocess;
  FittedModel fitted;
};

CalibrationModel fit_calibration(const SampleSet& train, const std::string& component,
                                 const PreprocessConfig& pre, const ModelSpec& spec,
                                 std::uint64_t seed, unsigned threads = 1);

std::vector<PredictionInterval> predict_intervals(const CalibrationModel& model,
                                                  const SampleSet& set, double alpha);

/// Versioned JSON model file holding one calibration per component.
std::string serialize_models(const std::vector<CalibrationModel>& models);
std::vector<CalibrationModel> deserialize_models(const std::string& text);

}  // namespace nirens
