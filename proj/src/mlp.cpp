#include "nirens/mlp.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "nirens/error.hpp"
#include "nirens/random.hpp"

namespace nirens {
namespace {

constexpr int kRetriesPerEpoch = 10;
constexpr double kMaxDamping = 1e10;

Eigen::MatrixXd hidden_activations(const MlpModel& m, const Eigen::MatrixXd& Z) {
  return ((Z * m.W1.transpose()).rowwise() + m.b1.transpose()).array().tanh();
}

void check_inputs(const MlpModel& m, const Eigen::MatrixXd& F) {
  if (F.cols() != m.n_in()) {
    throw DataError("network expects " + std::to_string(m.n_in()) + " inputs, got " +
                    std::to_string(F.cols()));
  }
}

}  // namespace

Eigen::VectorXd MlpModel::parameters() const {
  Eigen::VectorXd theta(n_parameters());
  Index at = 0;
  for (Index h = 0; h < n_hidden(); ++h) {
    for (Index i = 0; i < n_in(); ++i) {
      theta[at++] = W1(h, i);
    }
  }
  theta.segment(at, n_hidden()) = b1;
  at += n_hidden();
  theta.segment(at, n_hidden()) = W2;
  at += n_hidden();
  theta[at] = b2;
  return theta;
}

void MlpModel::set_parameters(const Eigen::VectorXd& theta) {
  if (theta.size() != n_parameters()) {
    throw DataError("parameter vector has wrong length");
  }
  Index at = 0;
  for (Index h = 0; h < n_hidden(); ++h) {
    for (Index i = 0; i < n_in(); ++i) {
      W1(h, i) = theta[at++];
    }
  }
  b1 = theta.segment(at, n_hidden());
  at += n_hidden();
  W2 = theta.segment(at, n_hidden());
  at += n_hidden();
  b2 = theta[at];
}

double MlpModel::scale_target(double y) const {
  const double mid = 0.5 * (target_min + target_max);
  const double half = 0.5 * (target_max - target_min);
  return (y - mid) / half;
}

double MlpModel::unscale_target(double z) const {
  const double mid = 0.5 * (target_min + target_max);
  const double half = 0.5 * (target_max - target_min);
  return mid + z * half;
}

Eigen::MatrixXd MlpModel::scale_inputs(const Eigen::MatrixXd& F) const {
  return (F.rowwise() - input_mean).array().rowwise() / input_std.array();
}

void MlpModel::fit_scalers(const Eigen::MatrixXd& F, const Eigen::VectorXd& y) {
  input_mean = F.colwise().mean();
  const double denom = std::max<double>(1.0, double(F.rows() - 1));
  input_std = ((F.rowwise() - input_mean).array().square().colwise().sum() / denom).sqrt();
  for (Index i = 0; i < input_std.size(); ++i) {
    if (!(input_std[i] >= 1e-12)) {
      input_std[i] = 1.0;
    }
  }
  target_min = y.minCoeff();
  target_max = y.maxCoeff();
  if (!(target_max - target_min > 1e-12)) {
    target_max = target_min + 2.0;
  }
}

MlpModel init_mlp(Index n_in, Index n_hidden, std::uint64_t seed) {
  if (n_in < 1 || n_hidden < 1) {
    throw UsageError("network needs at least one input and one hidden unit");
  }
  Rng rng(seed);
  MlpModel m;
  const double r1 = 1.0 / std::sqrt(double(n_in));
  const double r2 = 1.0 / std::sqrt(double(n_hidden));
  m.W1.resize(n_hidden, n_in);
  for (Index h = 0; h < n_hidden; ++h) {
    for (Index i = 0; i < n_in; ++i) {
      m.W1(h, i) = rng.uniform(-r1, r1);
    }
  }
  m.b1 = Eigen::VectorXd::Zero(n_hidden);
  m.W2.resize(n_hidden);
  for (Index h = 0; h < n_hidden; ++h) {
    m.W2[h] = rng.uniform(-r2, r2);
  }
  m.b2 = 0.0;
  m.input_mean = Eigen::RowVectorXd::Zero(n_in);
  m.input_std = Eigen::RowVectorXd::Ones(n_in);
  m.target_min = -1.0;
  m.target_max = 1.0;
  return m;
}

Eigen::VectorXd forward_scaled(const MlpModel& model, const Eigen::MatrixXd& Z) {
  return (hidden_activations(model, Z) * model.W2).array() + model.b2;
}

Eigen::VectorXd forward(const MlpModel& model, const Eigen::MatrixXd& F) {
  check_inputs(model, F);
  Eigen::VectorXd z = forward_scaled(model, model.scale_inputs(F));
  for (Index s = 0; s < z.size(); ++s) {
    z[s] = model.unscale_target(z[s]);
  }
  return z;
}

double forward(const MlpModel& model, const Eigen::RowVectorXd& x) {
  return forward(model, Eigen::MatrixXd(x))[0];
}

Eigen::MatrixXd jacobian(const MlpModel& model, const Eigen::MatrixXd& F) {
  check_inputs(model, F);
  const Eigen::MatrixXd Z = model.scale_inputs(F);
  const Eigen::MatrixXd A = hidden_activations(model, Z);
  const Index n_h = model.n_hidden();
  const Index n_i = model.n_in();
  Eigen::MatrixXd J(F.rows(), model.n_parameters());
  for (Index s = 0; s < F.rows(); ++s) {
    for (Index h = 0; h < n_h; ++h) {
      const double a = A(s, h);
      const double delta = model.W2[h] * (1.0 - a * a);
      for (Index i = 0; i < n_i; ++i) {
        J(s, h * n_i + i) = delta * Z(s, i);
      }
      J(s, n_h * n_i + h) = delta;
      J(s, n_h * n_i + n_h + h) = a;
    }
    J(s, n_h * (n_i + 2)) = 1.0;
  }
  return J;
}

void TrainConfig::validate() const {
  if (max_epochs < 1) {
    throw UsageError("mlp.max_epochs must be at least 1");
  }
  if (n_restarts < 1) {
    throw UsageError("mlp.restarts must be at least 1");
  }
  if (!(lm_lambda0 > 0.0)) {
    throw UsageError("mlp.lambda0 must be positive");
  }
  if (!(lm_factor > 1.0)) {
    throw UsageError("mlp.lm_factor must exceed 1");
  }
}

TrainResult train_lm(const MlpModel& initial, const Eigen::MatrixXd& F, const Eigen::VectorXd& y,
                     const TrainConfig& cfg) {
  cfg.validate();
  check_inputs(initial, F);
  if (F.rows() != y.size()) {
    throw DataError("feature rows and target length differ");
  }
  if (F.rows() < 2) {
    throw DataError("network training needs at least 2 samples");
  }
  if (!F.allFinite() || !y.allFinite()) {
    throw DataError("training data contain non-finite values");
  }

  MlpModel model = initial;
  model.fit_scalers(F, y);
  const Eigen::MatrixXd Z = model.scale_inputs(F);
  Eigen::VectorXd target(y.size());
  for (Index s = 0; s < y.size(); ++s) {
    target[s] = model.scale_target(y[s]);
  }
  const double n = double(y.size());
  const double half_range = 0.5 * (model.target_max - model.target_min);
  const auto to_rmse = [&](double sse) { return std::sqrt(sse / n) * half_range; };

  Eigen::VectorXd theta = model.parameters();
  Eigen::VectorXd residual = target - forward_scaled(model, Z);
  double sse = residual.squaredNorm();
  if (!std::isfinite(sse)) {
    throw NumericalError("initial network output is not finite");
  }

  TrainResult result;
  result.rmse_trace.push_back(to_rmse(sse));
  double lambda = cfg.lm_lambda0;
  MlpModel trial = model;
  bool stop = false;
  for (int epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
    const Eigen::MatrixXd J = jacobian(model, F);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd Jtr = J.transpose() * residual;
    for (int attempt = 0; attempt < kRetriesPerEpoch; ++attempt) {
      Eigen::MatrixXd normal = JtJ;
      normal.diagonal().array() += lambda;
      const Eigen::VectorXd step = normal.ldlt().solve(Jtr);
      double trial_sse = std::numeric_limits<double>::infinity();
      Eigen::VectorXd trial_residual;
      if (step.allFinite()) {
        trial.set_parameters(theta + step);
        trial_residual = target - forward_scaled(trial, Z);
        trial_sse = trial_residual.squaredNorm();
      }
      if (std::isfinite(trial_sse) && trial_sse < sse) {
        theta += step;
        model = trial;
        residual = std::move(trial_residual);
        sse = trial_sse;
        lambda /= cfg.lm_factor;
        ++result.accepted_steps;
        result.rmse_trace.push_back(to_rmse(sse));
        break;
      }
      lambda *= cfg.lm_factor;
      if (lambda > kMaxDamping) {
        stop = true;
        break;
      }
    }
  }
  result.model = std::move(model);
  return result;
}

TrainResult train_restarts(const Eigen::MatrixXd& F, const Eigen::VectorXd& y, Index n_hidden,
                           const TrainConfig& cfg) {
  cfg.validate();
  std::optional<TrainResult> best;
  std::string last_error;
  for (int r = 0; r < cfg.n_restarts; ++r) {
    try {
      const MlpModel start = init_mlp(F.cols(), n_hidden, cfg.seed + std::uint64_t(r));
      TrainResult run = train_lm(start, F, y, cfg);
      if (!best || run.final_rmse() < best->final_rmse()) {
        best = std::move(run);
      }
    } catch (const NumericalError& e) {
      last_error = e.what();
    }
  }
  if (!best) {
    throw NumericalError("all " + std::to_string(cfg.n_restarts) +
                         " training restarts failed: " + last_error);
  }
  return std::move(*best);
}

}  // namespace nirens
