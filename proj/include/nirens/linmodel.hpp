#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nirens/spectra.hpp"

namespace nirens {

struct LinearModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  /// Euclidean norm of the training residuals.
  double residual_norm = 0.0;

  Index dimension() const { return weights.size(); }
};

/// Least squares with intercept. A Tikhonov term of 1e-8 on the (centered)
/// feature block keeps duplicated bootstrap rows from making the normal
/// equations singular.
LinearModel fit_ols(const Eigen::MatrixXd& F, const Eigen::VectorXd& y);

Eigen::VectorXd predict_linear(const LinearModel& model, const Eigen::MatrixXd& F);

/// PLS1 regression from spectra to one target.
struct PlsRegModel {
  Eigen::RowVectorXd x_center;
  double y_center = 0.0;
  Eigen::MatrixXd weights;   // n_points x a
  Eigen::MatrixXd loadings;  // n_points x a
  Eigen::VectorXd y_loadings;  // a
  Eigen::VectorXd coefficients;  // n_points, maps centered spectra to centered y
  /// CV RMSE per candidate factor count (fit_pls_cv only; +inf where a
  /// candidate could not be evaluated).
  std::vector<double> cv_rmse;

  Index n_factors() const { return weights.cols(); }
};

PlsRegModel fit_pls1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Index factors);

Eigen::VectorXd predict_pls(const PlsRegModel& model, const Eigen::MatrixXd& X);

/// Chooses the factor count in 1..max_factors by k-fold CV RMSE (seeded
/// permutation cut into contiguous folds; ties go to fewer factors) and refits
/// on all rows.
PlsRegModel fit_pls_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Index max_factors,
                       Index folds, std::uint64_t seed);

}  // namespace nirens
