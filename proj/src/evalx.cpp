#include "nirens/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nirens/error.hpp"
#include "nirens/io.hpp"
#include "nirens/random.hpp"

namespace nirens {
namespace {

constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;
constexpr std::uint64_t kGrowStream = 0x67726f77ULL;
constexpr std::uint64_t kModelStream = 0x6d6f64656cULL;

}  // namespace

double rmse(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
  if (actual.size() != predicted.size()) {
    throw DataError("RMSE inputs differ in length (" + std::to_string(actual.size()) + " vs " +
                    std::to_string(predicted.size()) + ")");
  }
  if (actual.size() == 0) {
    throw DataError("RMSE of an empty set");
  }
  if (!actual.allFinite() || !predicted.allFinite()) {
    throw DataError("RMSE inputs contain non-finite values");
  }
  return std::sqrt((actual - predicted).squaredNorm() / double(actual.size()));
}

double coverage(const std::vector<PredictionInterval>& intervals, const Eigen::VectorXd& actual) {
  if (static_cast<Index>(intervals.size()) != actual.size()) {
    throw DataError("coverage inputs differ in length");
  }
  if (intervals.empty()) {
    throw DataError("coverage of an empty set");
  }
  std::size_t inside = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const double a = actual[static_cast<Index>(i)];
    if (intervals[i].lower <= a && a <= intervals[i].upper) {
      ++inside;
    }
  }
  return double(inside) / double(intervals.size());
}

std::vector<std::size_t> learning_schedule(std::size_t start, std::size_t step, std::size_t stop) {
  if (start < 1 || step < 1 || stop < start) {
    throw UsageError("curve schedule needs start >= 1, step >= 1 and stop >= start");
  }
  std::vector<std::size_t> sizes;
  for (std::size_t s = start; s <= stop; s += step) {
    sizes.push_back(s);
  }
  return sizes;
}

std::vector<Split> schedule_splits(std::size_t n_samples, const std::vector<std::size_t>& schedule,
                                   std::uint64_t seed) {
  if (schedule.empty()) {
    throw UsageError("empty training-size schedule");
  }
  if (schedule.back() >= n_samples) {
    throw UsageError("largest training size " + std::to_string(schedule.back()) +
                     " leaves no test samples out of " + std::to_string(n_samples));
  }
  std::vector<Split> splits;
  splits.push_back(split_indices(n_samples, schedule.front(), derive_seed(seed, kSplitStream)));
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    if (schedule[k] <= schedule[k - 1]) {
      throw UsageError("training-size schedule must be increasing");
    }
    splits.push_back(grow_train(splits.back(), schedule[k] - schedule[k - 1],
                                derive_seed(seed, kGrowStream, k)));
  }
  return splits;
}

ModelSpec method_preset(const std::string& name, const ModelSpec& base) {
  ModelSpec s = base;
  s.name = name;
  if (name == "boot_plsx") {
    s.family = ModelFamily::mlp;
    s.resample = ResampleKind::bootstrap;
    s.feature_kind = ProjectionKind::pls_x;
  } else if (name == "cv_plsx") {
    s.family = ModelFamily::mlp;
    s.resample = ResampleKind::cross_validation;
    s.feature_kind = ProjectionKind::pls_x;
  } else if (name == "boot_pca") {
    s.family = ModelFamily::mlp;
    s.resample = ResampleKind::bootstrap;
    s.feature_kind = ProjectionKind::pca;
  } else if (name == "boot_plsx_linear") {
    s.family = ModelFamily::linear;
    s.resample = ResampleKind::bootstrap;
    s.feature_kind = ProjectionKind::pls_x;
  } else if (name == "pls_baseline") {
    s.family = ModelFamily::pls_baseline;
    s.resample = ResampleKind::none;
  } else if (name == "single_plsx") {
    s.family = ModelFamily::mlp;
    s.resample = ResampleKind::none;
    s.feature_kind = ProjectionKind::pls_x;
  } else if (name == "single_pca") {
    s.family = ModelFamily::mlp;
    s.resample = ResampleKind::none;
    s.feature_kind = ProjectionKind::pca;
  } else {
    throw UsageError("curve.methods: unknown method '" + name + "'");
  }
  s.validate();
  return s;
}

std::vector<std::string> default_methods() {
  return {"boot_plsx", "cv_plsx", "boot_pca", "pls_baseline", "single_plsx"};
}

LearningCurve run_learning_curve(const SampleSet& data, const std::vector<ModelSpec>& methods,
                                 const LearningCurveSettings& settings) {
  if (methods.empty()) {
    throw UsageError("learning curve needs at least one method");
  }
  data.validate();
  LearningCurve curve;
  curve.seed = settings.seed;
  curve.schedule = learning_schedule(settings.start, settings.step, settings.stop);
  curve.splits = schedule_splits(static_cast<std::size_t>(data.n_samples()), curve.schedule,
                                 settings.seed);
  for (const auto& m : methods) {
    if (std::find(curve.methods.begin(), curve.methods.end(), m.name) != curve.methods.end()) {
      throw UsageError("duplicate method name '" + m.name + "'");
    }
    curve.methods.push_back(m.name);
  }
  curve.components = settings.components.empty() ? data.component_names : settings.components;
  std::vector<Index> component_cols;
  for (const auto& c : curve.components) {
    component_cols.push_back(data.component_index(c));
  }

  const std::size_t n_comp = curve.components.size();
  const std::size_t n_sizes = curve.schedule.size();
  curve.rmse.assign(n_comp, std::vector<std::vector<double>>(
                                n_sizes, std::vector<double>(methods.size(),
                                                             std::numeric_limits<double>::quiet_NaN())));
  curve.errors.assign(n_comp, std::vector<std::vector<std::string>>(
                                  n_sizes, std::vector<std::string>(methods.size())));

  std::size_t succeeded = 0;
  std::string last_error;
  for (std::size_t k = 0; k < n_sizes; ++k) {
    const SampleSet train = data.rows(curve.splits[k].train);
    const SampleSet test = data.rows(curve.splits[k].test);
    Eigen::MatrixXd Xtr;
    Eigen::MatrixXd Xte;
    std::string prep_error;
    try {
      const PreprocessModel prep = fit_preprocess(settings.preprocess, train);
      Xtr = apply_preprocess(prep, train);
      Xte = apply_preprocess(prep, test);
    } catch (const std::exception& e) {
      prep_error = std::string("preprocessing: ") + e.what();
    }
    for (std::size_t c = 0; c < n_comp; ++c) {
      const Eigen::VectorXd ytr = train.concentrations.col(component_cols[c]);
      const Eigen::VectorXd yte = test.concentrations.col(component_cols[c]);
      const std::uint64_t cell_seed = derive_seed(settings.seed, kModelStream + k, c);
      for (std::size_t m = 0; m < methods.size(); ++m) {
        if (!prep_error.empty()) {
          curve.errors[c][k][m] = prep_error;
          last_error = prep_error;
          continue;
        }
        try {
          const FittedModel fitted = fit_model(methods[m], Xtr, train.temperatures, ytr,
                                               curve.components[c], cell_seed, settings.threads);
          const Eigen::VectorXd pred =
              fitted.member_predictions(Xte, test.temperatures).rowwise().mean();
          curve.rmse[c][k][m] = rmse(yte, pred);
          ++succeeded;
        } catch (const std::exception& e) {
          curve.errors[c][k][m] = e.what();
          last_error = e.what();
        }
      }
    }
  }
  if (succeeded == 0) {
    throw DataError("every learning-curve cell failed; last error: " + last_error);
  }
  return curve;
}

LearningCurve mean_curve(const std::vector<LearningCurve>& curves) {
  if (curves.empty()) {
    throw UsageError("no curves to average");
  }
  LearningCurve out = curves.front();
  for (std::size_t c = 0; c < out.rmse.size(); ++c) {
    for (std::size_t k = 0; k < out.rmse[c].size(); ++k) {
      for (std::size_t m = 0; m < out.rmse[c][k].size(); ++m) {
        double sum = 0.0;
        std::string error;
        for (const auto& curve : curves) {
          if (curve.rmse.size() != out.rmse.size() || curve.schedule != out.schedule ||
              curve.methods != out.methods) {
            throw UsageError("curves to average have different shapes");
          }
          sum += curve.rmse[c][k][m];
          if (!curve.errors[c][k][m].empty()) {
            error = curve.errors[c][k][m];
          }
        }
        out.rmse[c][k][m] = sum / double(curves.size());
        out.errors[c][k][m] = error;
      }
    }
  }
  return out;
}

std::string curve_table(const LearningCurve& curve, std::size_t component) {
  std::string out = "size";
  for (const auto& m : curve.methods) {
    out += "," + m;
  }
  out += "\n";
  for (std::size_t k = 0; k < curve.schedule.size(); ++k) {
    out += std::to_string(curve.schedule[k]);
    for (std::size_t m = 0; m < curve.methods.size(); ++m) {
      const double v = curve.rmse.at(component)[k][m];
      out += ",";
      out += std::isfinite(v) ? format_fixed(v, 5) : "NA";
    }
    out += "\n";
  }
  return out;
}

std::vector<std::filesystem::path> export_curve(const LearningCurve& curve,
                                                const std::filesystem::path& dir,
                                                const std::string& prefix) {
  if (curve.methods.empty() || curve.schedule.empty()) {
    throw UsageError("cannot export an empty learning curve");
  }
  std::vector<std::string> tables;
  for (std::size_t c = 0; c < curve.components.size(); ++c) {
    tables.push_back(curve_table(curve, c));
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create output directory '" + dir.string() + "'");
  }
  std::vector<std::filesystem::path> paths;
  for (std::size_t c = 0; c < curve.components.size(); ++c) {
    const auto path = dir / (prefix + "rmse_" + curve.components[c] + ".csv");
    write_text_atomic(path, tables[c]);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace nirens
