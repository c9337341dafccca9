#include "nirens/features.hpp"

#include <cmath>

#include "nirens/error.hpp"

namespace nirens {
namespace {

constexpr int kPowerIterations = 500;
constexpr double kPowerTolerance = 1e-10;
constexpr int kPowerSquarings = 4;

void check_bounds(const Eigen::MatrixXd& X, Index k) {
  if (X.rows() < 2) {
    throw DataError("projection fitting needs at least 2 samples");
  }
  const Index max_k = std::min<Index>(X.rows() - 1, X.cols());
  if (k < 1 || k > max_k) {
    throw UsageError("component count " + std::to_string(k) + " outside [1, " +
                     std::to_string(max_k) + "]");
  }
}

void make_largest_entry_positive(Eigen::Ref<Eigen::VectorXd> v) {
  Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0.0) {
    v = -v;
  }
}

}  // namespace

std::string to_string(ProjectionKind kind) {
  return kind == ProjectionKind::pca ? "pca" : "pls_x";
}

ProjectionKind projection_kind_from_string(const std::string& text) {
  if (text == "pca") {
    return ProjectionKind::pca;
  }
  if (text == "pls_x" || text == "plsx") {
    return ProjectionKind::pls_x;
  }
  throw UsageError("unknown feature kind '" + text + "' (expected pca or pls_x)");
}

Eigen::MatrixXd Projection::scores(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_points()) {
    throw DataError("projection fitted on " + std::to_string(n_points()) +
                    " points applied to " + std::to_string(X.cols()));
  }
  return (X.rowwise() - center) * loadings;
}

Projection fit_pca(const Eigen::MatrixXd& X, Index k) {
  check_bounds(X, k);
  Projection proj;
  proj.kind = ProjectionKind::pca;
  proj.center = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - proj.center;
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();

  const double tol = 1e-10 * std::max(1.0, sv.size() > 0 ? sv[0] : 0.0);
  Index rank = 0;
  while (rank < sv.size() && sv[rank] > tol) {
    ++rank;
  }
  if (rank < k) {
    throw NumericalError("data rank " + std::to_string(rank) + " is below the requested " +
                         std::to_string(k) + " components");
  }

  proj.loadings = svd.matrixV().leftCols(k);
  for (Index j = 0; j < k; ++j) {
    make_largest_entry_positive(proj.loadings.col(j));
  }
  const double total = sv.squaredNorm();
  for (Index j = 0; j < k; ++j) {
    proj.explained.push_back(total > 0.0 ? sv[j] * sv[j] / total : 0.0);
  }
  return proj;
}

Projection fit_pls_x(const Eigen::MatrixXd& X, Index k) {
  check_bounds(X, k);
  Projection proj;
  proj.kind = ProjectionKind::pls_x;
  proj.center = X.colwise().mean();
  Eigen::MatrixXd residual = X.rowwise() - proj.center;
  proj.loadings.resize(X.cols(), k);

  const double scale = std::max(1.0, residual.squaredNorm());
  for (Index j = 0; j < k; ++j) {
    Index start_col = 0;
    residual.colwise().squaredNorm().maxCoeff(&start_col);
    Eigen::VectorXd t = residual.col(start_col);
    if (t.squaredNorm() < 1e-24 * scale) {
      throw NumericalError("matrix is exhausted after " + std::to_string(j) + " factors");
    }

    // Each sweep applies the 16th power of the smaller cross-product matrix,
    // so near-degenerate trailing factors still converge within the budget.
    const bool gram = residual.rows() <= residual.cols();
    Eigen::MatrixXd op = gram ? Eigen::MatrixXd(residual * residual.transpose())
                              : Eigen::MatrixXd(residual.transpose() * residual);
    for (int s = 0; s < kPowerSquarings; ++s) {
      op = op * op;
      const double norm = op.norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw NumericalError("power iteration collapsed at factor " + std::to_string(j + 1));
      }
      op /= norm;
    }

    Eigen::VectorXd w = residual.transpose() * t;
    w.normalize();
    bool converged = false;
    for (int iter = 0; iter < kPowerIterations; ++iter) {
      Eigen::VectorXd next = gram ? Eigen::VectorXd(residual.transpose() * (op * (residual * w)))
                                  : Eigen::VectorXd(op * w);
      const double norm = next.norm();
      if (!(norm > 0.0)) {
        throw NumericalError("power iteration collapsed at factor " + std::to_string(j + 1));
      }
      next /= norm;
      const double change = (next - w).norm();
      w = next;
      if (change < kPowerTolerance) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw NumericalError("power iteration for factor " + std::to_string(j + 1) +
                           " did not converge in " + std::to_string(kPowerIterations) +
                           " iterations");
    }
    t = residual * w;
    const double tt = t.squaredNorm();
    const Eigen::VectorXd p = residual.transpose() * t / tt;
    residual -= t * p.transpose();
    proj.loadings.col(j) = p;
  }
  return proj;
}

Projection fit_projection(ProjectionKind kind, const Eigen::MatrixXd& X, Index k) {
  return kind == ProjectionKind::pca ? fit_pca(X, k) : fit_pls_x(X, k);
}

FeatureSpec fit_feature_spec(ProjectionKind kind, const Eigen::MatrixXd& X,
                             const Eigen::VectorXd& temperatures, Index k,
                             bool include_temperature) {
  FeatureSpec spec;
  spec.projection = fit_projection(kind, X, k);
  spec.include_temperature = include_temperature;
  if (include_temperature) {
    if (temperatures.size() != X.rows()) {
      throw DataError("temperature count differs from sample count");
    }
    spec.temperature_mean = temperatures.mean();
    const double var = (temperatures.array() - spec.temperature_mean).square().sum() /
                       std::max<double>(1.0, double(temperatures.size() - 1));
    const double sd = std::sqrt(var);
    spec.temperature_std = sd > 1e-12 ? sd : 1.0;
  }
  return spec;
}

Eigen::MatrixXd project(const FeatureSpec& spec, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& temperatures) {
  const Eigen::MatrixXd scores = spec.projection.scores(X);
  if (!spec.include_temperature) {
    return scores;
  }
  if (temperatures.size() != X.rows()) {
    throw DataError("temperature count differs from sample count");
  }
  Eigen::MatrixXd features(X.rows(), spec.dimension());
  features.leftCols(spec.projection.k()) = scores;
  features.col(spec.projection.k()) =
      (temperatures.array() - spec.temperature_mean) / spec.temperature_std;
  return features;
}

}  // namespace nirens
