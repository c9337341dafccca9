#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nirens/spectra.hpp"

namespace nirens {

/// Single-hidden-layer perceptron: tanh hidden units, one linear output.
///
/// Inputs are standardized with the training mean/std and the target is
/// min-max mapped to [-1, 1]; all weights live in that scaled space.
struct MlpModel {
  Eigen::MatrixXd W1;  // n_hidden x n_in
  Eigen::VectorXd b1;  // n_hidden
  Eigen::VectorXd W2;  // n_hidden
  double b2 = 0.0;
  Eigen::RowVectorXd input_mean;  // n_in
  Eigen::RowVectorXd input_std;   // n_in, entries >= 1e-12
  double target_min = -1.0;
  double target_max = 1.0;

  Index n_in() const { return W1.cols(); }
  Index n_hidden() const { return W1.rows(); }
  Index n_parameters() const { return n_hidden() * (n_in() + 2) + 1; }

  /// Parameter vector layout: W1 row-major, b1, W2, b2.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);

  double scale_target(double y) const;
  double unscale_target(double z) const;
  Eigen::MatrixXd scale_inputs(const Eigen::MatrixXd& F) const;

  /// Fits both scalers to training data.
  void fit_scalers(const Eigen::MatrixXd& F, const Eigen::VectorXd& y);
};

/// Uniform weights on +-1/sqrt(fan_in) per layer, zero biases, identity
/// scalers.
MlpModel init_mlp(Index n_in, Index n_hidden, std::uint64_t seed);

double forward(const MlpModel& model, const Eigen::RowVectorXd& x);
Eigen::VectorXd forward(const MlpModel& model, const Eigen::MatrixXd& F);

/// Scaled-space network output for already scaled inputs.
Eigen::VectorXd forward_scaled(const MlpModel& model, const Eigen::MatrixXd& Z);

/// d(scaled output of sample s) / d(parameter p), with inputs scaled by the
/// model's own input scaler. Rows follow samples, columns follow parameters().
Eigen::MatrixXd jacobian(const MlpModel& model, const Eigen::MatrixXd& F);

struct TrainConfig {
  int max_epochs = 20;
  int n_restarts = 10;
  double lm_lambda0 = 1e-2;
  double lm_factor = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  MlpModel model;
  /// Training RMSE (target units) before training and after each accepted step.
  std::vector<double> rmse_trace;
  int accepted_steps = 0;

  double final_rmse() const { return rmse_trace.back(); }
};

/// Levenberg-Marquardt training. Scalers are refitted on (F, y); the weights of
/// `initial` are the starting point. Returns the best iterate.
TrainResult train_lm(const MlpModel& initial, const Eigen::MatrixXd& F, const Eigen::VectorXd& y,
                     const TrainConfig& cfg);

/// Best of cfg.n_restarts runs of train_lm from seeds cfg.seed + r; ties go to
/// the lowest restart index.
TrainResult train_restarts(const Eigen::MatrixXd& F, const Eigen::VectorXd& y, Index n_hidden,
                           const TrainConfig& cfg);

}  // namespace nirens
