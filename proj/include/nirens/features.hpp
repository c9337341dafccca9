#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nirens/spectra.hpp"

namespace nirens {

enum class ProjectionKind { pca, pls_x };

std::string to_string(ProjectionKind kind);
ProjectionKind projection_kind_from_string(const std::string& text);

/// A fitted linear feature extractor: scores = (X - center) * loadings.
struct Projection {
  ProjectionKind kind = ProjectionKind::pca;
  Eigen::RowVectorXd center;   // n_points
  Eigen::MatrixXd loadings;    // n_points x k
  std::vector<double> explained;  // captured variance fraction per component (PCA only)

  Index k() const { return loadings.cols(); }
  Index n_points() const { return loadings.rows(); }

  Eigen::MatrixXd scores(const Eigen::MatrixXd& X) const;
};

/// Principal components of X via a thin SVD of the centered matrix. Loadings
/// are ordered by descending singular value and each loading's
/// largest-magnitude entry is made positive.
Projection fit_pca(const Eigen::MatrixXd& X, Index k);

/// NIPALS factors of X using X itself as the response block. Each weight is
/// the dominant direction of the deflated X^T X found by power iteration,
/// started from the highest-variance column; the loading is p = X^T t / t^T t.
/// Signs are left as the iteration produces them.
Projection fit_pls_x(const Eigen::MatrixXd& X, Index k);

Projection fit_projection(ProjectionKind kind, const Eigen::MatrixXd& X, Index k);

/// Projection plus optional standardized temperature as a trailing feature.
struct FeatureSpec {
  Projection projection;
  bool include_temperature = true;
  double temperature_mean = 0.0;
  double temperature_std = 1.0;

  Index dimension() const { return projection.k() + (include_temperature ? 1 : 0); }
};

FeatureSpec fit_feature_spec(ProjectionKind kind, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& temperatures, Index k,
                             bool include_temperature);

Eigen::MatrixXd project(const FeatureSpec& spec, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& temperatures);

}  // namespace nirens
