#include "nirens/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>

#include "nirens/error.hpp"
#include "nirens/random.hpp"

namespace nirens {
namespace {

// Runs task(i) for i in [0, count) on up to `threads` workers. The first
// exception (lowest index) is rethrown after all workers finish.
template <typename Task>
void parallel_for(std::size_t count, unsigned threads, Task task) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      task(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = count;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back(worker);
  }
  pool.clear();
  if (error) {
    std::rethrow_exception(error);
  }
}

std::size_t rounded(double value) { return static_cast<std::size_t>(std::llround(value)); }

}  // namespace

std::string to_string(ResampleKind kind) {
  switch (kind) {
    case ResampleKind::bootstrap:
      return "bootstrap";
    case ResampleKind::cross_validation:
      return "cv";
    case ResampleKind::none:
      break;
  }
  return "none";
}

std::string to_string(BaseLearner base) { return base == BaseLearner::mlp ? "mlp" : "linear"; }

ResampleKind resample_kind_from_string(const std::string& text) {
  if (text == "bootstrap") {
    return ResampleKind::bootstrap;
  }
  if (text == "cv" || text == "cross_validation") {
    return ResampleKind::cross_validation;
  }
  if (text == "none") {
    return ResampleKind::none;
  }
  throw UsageError("unknown ensemble kind '" + text + "' (expected bootstrap, cv or none)");
}

BaseLearner base_learner_from_string(const std::string& text) {
  if (text == "mlp") {
    return BaseLearner::mlp;
  }
  if (text == "linear") {
    return BaseLearner::linear;
  }
  throw UsageError("unknown base learner '" + text + "' (expected mlp or linear)");
}

IndexList bootstrap_indices(std::size_t n_train, std::uint64_t seed) {
  if (n_train < 1) {
    throw UsageError("bootstrap needs at least one training sample");
  }
  Rng rng(seed);
  IndexList draws(n_train);
  for (auto& d : draws) {
    d = rng.index(n_train);
  }
  return draws;
}

ResamplePlan bootstrap_plan(std::size_t n_train, std::size_t n_models, std::uint64_t seed) {
  if (n_models < 1) {
    throw UsageError("ensemble needs at least one member");
  }
  ResamplePlan plan;
  plan.kind = ResampleKind::bootstrap;
  plan.n_train = n_train;
  plan.seed = seed;
  for (std::size_t j = 0; j < n_models; ++j) {
    plan.member_indices.push_back(bootstrap_indices(n_train, derive_seed(seed, j)));
  }
  return plan;
}

ResamplePlan cv_plan(std::size_t n_train, double holdout_fraction, std::size_t n_models,
                     std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw UsageError("holdout fraction must lie in (0, 1)");
  }
  if (n_models < 1) {
    throw UsageError("ensemble needs at least one member");
  }
  const std::size_t m = rounded(holdout_fraction * double(n_train));
  if (m < 1) {
    throw UsageError("holdout fraction leaves out no samples of " + std::to_string(n_train));
  }
  const std::size_t folds = std::max<std::size_t>(2, rounded(1.0 / holdout_fraction));
  if (folds > n_train) {
    throw UsageError(std::to_string(folds) + " folds need at least as many training samples");
  }

  ResamplePlan plan;
  plan.kind = ResampleKind::cross_validation;
  plan.n_train = n_train;
  plan.holdout_fraction = holdout_fraction;
  plan.folds = folds;
  plan.seed = seed;
  const std::size_t partitions = (n_models + folds - 1) / folds;
  for (std::size_t p = 0; p < partitions; ++p) {
    Rng rng(derive_seed(seed, p));
    const auto perm = random_permutation(n_train, rng);
    for (std::size_t f = 0; f < folds && plan.n_models() < n_models; ++f) {
      const std::size_t begin = f * n_train / folds;
      const std::size_t end = (f + 1) * n_train / folds;
      IndexList train;
      IndexList held;
      for (std::size_t i = 0; i < n_train; ++i) {
        (i >= begin && i < end ? held : train).push_back(perm[i]);
      }
      std::sort(train.begin(), train.end());
      std::sort(held.begin(), held.end());
      plan.member_indices.push_back(std::move(train));
      plan.holdouts.push_back(std::move(held));
    }
  }
  return plan;
}

ResamplePlan identity_plan(std::size_t n_train) {
  ResamplePlan plan;
  plan.kind = ResampleKind::none;
  plan.n_train = n_train;
  IndexList all(n_train);
  for (std::size_t i = 0; i < n_train; ++i) {
    all[i] = i;
  }
  plan.member_indices.push_back(std::move(all));
  return plan;
}

std::uint64_t member_seed(std::uint64_t experiment_seed, std::size_t member) {
  return derive_seed(experiment_seed, 0x6d656d62ULL, member);
}

Ensemble fit_ensemble(const Eigen::MatrixXd& X, const Eigen::VectorXd& temperatures,
                      const Eigen::VectorXd& y, const std::string& component,
                      const ResamplePlan& plan, const EnsembleConfig& cfg) {
  if (X.rows() != y.size() || temperatures.size() != y.size()) {
    throw DataError("spectra, temperatures and targets have different row counts");
  }
  if (plan.n_train != static_cast<std::size_t>(X.rows())) {
    throw UsageError("resample plan built for " + std::to_string(plan.n_train) +
                     " samples, training set has " + std::to_string(X.rows()));
  }
  if (plan.n_models() < 1) {
    throw UsageError("ensemble needs at least one member");
  }
  if (cfg.base == BaseLearner::mlp) {
    cfg.train.validate();
  }

  Ensemble ens;
  ens.component_name = component;
  ens.base = cfg.base;
  ens.plan = plan;
  ens.members.resize(plan.n_models());
  if (cfg.refit_per_member) {
    ens.features.resize(plan.n_models());
  } else {
    ens.features.push_back(fit_feature_spec(cfg.feature_kind, X, temperatures, cfg.n_features,
                                            cfg.include_temperature));
  }

  parallel_for(plan.n_models(), cfg.threads, [&](std::size_t j) {
    try {
      const auto& rows = plan.member_indices[j];
      std::vector<Index> idx(rows.begin(), rows.end());
      const Eigen::MatrixXd Xj = X(idx, Eigen::all);
      const Eigen::VectorXd tj = temperatures(idx);
      const Eigen::VectorXd yj = y(idx);
      if (cfg.refit_per_member) {
        ens.features[j] = fit_feature_spec(cfg.feature_kind, Xj, tj, cfg.n_features,
                                           cfg.include_temperature);
      }
      const Eigen::MatrixXd F = project(ens.features_for(j), Xj, tj);
      if (cfg.base == BaseLearner::mlp) {
        TrainConfig tc = cfg.train;
        tc.seed = member_seed(cfg.train.seed, j);
        ens.members[j] = train_restarts(F, yj, cfg.n_hidden, tc).model;
      } else {
        ens.members[j] = fit_ols(F, yj);
      }
    } catch (const UsageError& e) {
      throw UsageError("member " + std::to_string(j) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("member " + std::to_string(j) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("member " + std::to_string(j) + ": " + e.what());
    }
  });
  return ens;
}

Ensemble fit_ensemble(const SampleSet& train, const std::string& component,
                      const ResamplePlan& plan, const EnsembleConfig& cfg) {
  const Index c = train.component_index(component);
  return fit_ensemble(train.absorbance, train.temperatures, train.concentrations.col(c), component,
                      plan, cfg);
}

Eigen::MatrixXd predict_members(const Ensemble& ensemble, const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& temperatures) {
  Eigen::MatrixXd out(X.rows(), static_cast<Index>(ensemble.size()));
  Eigen::MatrixXd shared;
  if (ensemble.features.size() == 1) {
    shared = project(ensemble.features.front(), X, temperatures);
  }
  for (std::size_t j = 0; j < ensemble.size(); ++j) {
    const Eigen::MatrixXd F =
        ensemble.features.size() == 1 ? shared : project(ensemble.features_for(j), X, temperatures);
    out.col(static_cast<Index>(j)) = std::visit(
        [&](const auto& model) -> Eigen::VectorXd {
          using T = std::decay_t<decltype(model)>;
          if constexpr (std::is_same_v<T, MlpModel>) {
            return forward(model, F);
          } else {
            return predict_linear(model, F);
          }
        },
        ensemble.members[j]);
  }
  return out;
}

Eigen::VectorXd predict_mean(const Ensemble& ensemble, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& temperatures) {
  return predict_members(ensemble, X, temperatures).rowwise().mean();
}

double ensemble_mean(const Eigen::VectorXd& predictions) {
  if (predictions.size() < 1) {
    throw DataError("ensemble mean of zero predictions");
  }
  return predictions.mean();
}

double ambiguity(const Eigen::VectorXd& predictions, double mean) {
  const double actual = ensemble_mean(predictions);
  if (std::abs(actual - mean) > 1e-9 * std::max(1.0, std::abs(actual))) {
    throw DataError("supplied mean is not the average of the member predictions");
  }
  return (predictions.array() - mean).square().mean();
}

double ensemble_sigma(const Eigen::VectorXd& predictions, double mean) {
  return std::sqrt(ambiguity(predictions, mean));
}

Decomposition decomposition_check(const Eigen::VectorXd& predictions, double true_y) {
  Decomposition d;
  const double mean = ensemble_mean(predictions);
  d.ensemble_sq_err = (mean - true_y) * (mean - true_y);
  d.mean_individual_sq_err = (predictions.array() - true_y).square().mean();
  d.ambiguity = ambiguity(predictions, mean);
  d.residual = d.ensemble_sq_err - (d.mean_individual_sq_err - d.ambiguity);
  return d;
}

PredictionInterval confidence_interval(double mean, double sigma, double alpha) {
  if (!(sigma >= 0.0)) {
    throw DataError("interval sigma must be non-negative");
  }
  if (!(alpha > 0.0)) {
    throw UsageError("interval multiplier alpha must be positive");
  }
  return PredictionInterval{mean, sigma, alpha, mean - alpha * sigma, mean + alpha * sigma};
}

std::vector<PredictionInterval> intervals_from_members(const Eigen::MatrixXd& member_predictions,
                                                       double alpha) {
  std::vector<PredictionInterval> out;
  out.reserve(static_cast<std::size_t>(member_predictions.rows()));
  for (Index s = 0; s < member_predictions.rows(); ++s) {
    const Eigen::VectorXd row = member_predictions.row(s).transpose();
    const double mean = ensemble_mean(row);
    out.push_back(confidence_interval(mean, ensemble_sigma(row, mean), alpha));
  }
  return out;
}

}  // namespace nirens
