#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nirens/features.hpp"
#include "nirens/linmodel.hpp"
#include "nirens/mlp.hpp"
#include "nirens/spectra.hpp"

namespace nirens {

enum class ResampleKind { bootstrap, cross_validation, none };
enum class BaseLearner { mlp, linear };

std::string to_string(ResampleKind kind);
std::string to_string(BaseLearner base);
ResampleKind resample_kind_from_string(const std::string& text);
BaseLearner base_learner_from_string(const std::string& text);

/// Training rows (indices into the training set) for every member.
struct ResamplePlan {
  ResampleKind kind = ResampleKind::none;
  std::size_t n_train = 0;
  double holdout_fraction = 0.0;
  std::size_t folds = 0;  // cross_validation only
  std::uint64_t seed = 0;
  std::vector<IndexList> member_indices;
  std::vector<IndexList> holdouts;  // cross_validation only, parallel to members

  std::size_t n_models() const { return member_indices.size(); }
};

/// n_train draws with replacement from {0..n_train-1}.
IndexList bootstrap_indices(std::size_t n_train, std::uint64_t seed);

ResamplePlan bootstrap_plan(std::size_t n_train, std::size_t n_models, std::uint64_t seed);

/// Repeated k-fold partitions, k = round(1 / holdout_fraction). Member j
/// leaves out fold (j mod k) of partition floor(j / k). Fold sizes within a
/// partition differ by at most one.
ResamplePlan cv_plan(std::size_t n_train, double holdout_fraction, std::size_t n_models,
                     std::uint64_t seed);

/// A single member trained on every row.
ResamplePlan identity_plan(std::size_t n_train);

using Member = std::variant<MlpModel, LinearModel>;

struct EnsembleConfig {
  BaseLearner base = BaseLearner::mlp;
  ProjectionKind feature_kind = ProjectionKind::pca;
  Index n_features = 5;
  bool include_temperature = true;
  bool refit_per_member = false;
  Index n_hidden = 10;
  TrainConfig train;  // train.seed is the experiment seed
  unsigned threads = 1;
};

struct Ensemble {
  std::string component_name;
  BaseLearner base = BaseLearner::mlp;
  /// One shared spec, or one per member when features are refitted.
  std::vector<FeatureSpec> features;
  ResamplePlan plan;
  std::vector<Member> members;

  std::size_t size() const { return members.size(); }
  const FeatureSpec& features_for(std::size_t member) const {
    return features.size() == 1 ? features.front() : features.at(member);
  }
};

/// Seed handed to member `member`'s restarts (member index and experiment seed
/// mixed injectively).
std::uint64_t member_seed(std::uint64_t experiment_seed, std::size_t member);

/// Fits the feature projection on all training rows, then one model per plan
/// member on that member's rows. Member training may run on cfg.threads
/// threads; the result does not depend on the thread count.
Ensemble fit_ensemble(const Eigen::MatrixXd& X, const Eigen::VectorXd& temperatures,
                      const Eigen::VectorXd& y, const std::string& component,
                      const ResamplePlan& plan, const EnsembleConfig& cfg);

/// Convenience overload over a (preprocessed) sample set.
Ensemble fit_ensemble(const SampleSet& train, const std::string& component,
                      const ResamplePlan& plan, const EnsembleConfig& cfg);

/// n_samples x n_members matrix of y_i(x).
Eigen::MatrixXd predict_members(const Ensemble& ensemble, const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& temperatures);

/// Arithmetic mean of the member predictions, per sample.
Eigen::VectorXd predict_mean(const Ensemble& ensemble, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& temperatures);

double ensemble_mean(const Eigen::VectorXd& predictions);

/// Population variance of the member predictions around `mean`; throws
/// DataError when `mean` is not their average (to 1e-9).
double ambiguity(const Eigen::VectorXd& predictions, double mean);

/// sqrt(ambiguity).
double ensemble_sigma(const Eigen::VectorXd& predictions, double mean);

struct Decomposition {
  double ensemble_sq_err = 0.0;         // (ybar - y)^2
  double mean_individual_sq_err = 0.0;  // (1/n) sum (y_i - y)^2
  double ambiguity = 0.0;               // (1/n) sum (y_i - ybar)^2
  double residual = 0.0;  // ensemble_sq_err - (mean_individual_sq_err - ambiguity)
};

Decomposition decomposition_check(const Eigen::VectorXd& predictions, double true_y);

struct PredictionInterval {
  double mean = 0.0;
  double sigma = 0.0;
  double alpha = 2.0;
  double lower = 0.0;
  double upper = 0.0;
};

PredictionInterval confidence_interval(double mean, double sigma, double alpha);

/// Mean, sigma and bounds for every row of a member-prediction matrix.
std::vector<PredictionInterval> intervals_from_members(const Eigen::MatrixXd& member_predictions,
                                                       double alpha);

}  // namespace nirens
