#include "nirens/linmodel.hpp"

#include <cmath>
#include <limits>

#include "nirens/error.hpp"
#include "nirens/random.hpp"

namespace nirens {
namespace {

constexpr double kRidge = 1e-8;
constexpr double kMinScoreNorm = 1e-12;

struct Nipals {
  Eigen::MatrixXd weights;
  Eigen::MatrixXd loadings;
  Eigen::VectorXd y_loadings;
  bool exhausted = false;  // stopped early on a degenerate deflation
};

// Extracts up to `factors` PLS1 factors from centered data.
Nipals nipals_pls1(Eigen::MatrixXd X, Eigen::VectorXd y, Index factors) {
  Nipals out;
  out.weights.resize(X.cols(), factors);
  out.loadings.resize(X.cols(), factors);
  out.y_loadings.resize(factors);
  Index a = 0;
  for (; a < factors; ++a) {
    Eigen::VectorXd w = X.transpose() * y;
    const double wn = w.norm();
    if (!(wn > 0.0)) {
      break;
    }
    w /= wn;
    const Eigen::VectorXd t = X * w;
    const double tt = t.squaredNorm();
    if (tt < kMinScoreNorm) {
      break;
    }
    const Eigen::VectorXd p = X.transpose() * t / tt;
    const double q = y.dot(t) / tt;
    X -= t * p.transpose();
    y -= q * t;
    out.weights.col(a) = w;
    out.loadings.col(a) = p;
    out.y_loadings[a] = q;
  }
  if (a < factors) {
    out.exhausted = true;
    out.weights.conservativeResize(Eigen::NoChange, a);
    out.loadings.conservativeResize(Eigen::NoChange, a);
    out.y_loadings.conservativeResize(a);
  }
  return out;
}

// Regression vector using the first `a` factors: W (P^T W)^-1 q.
Eigen::VectorXd regression_vector(const Nipals& f, Index a) {
  if (a == 0) {
    return Eigen::VectorXd::Zero(f.weights.rows());
  }
  const auto W = f.weights.leftCols(a);
  const Eigen::MatrixXd PtW = f.loadings.leftCols(a).transpose() * W;
  return W * PtW.partialPivLu().solve(f.y_loadings.head(a));
}

void check_finite(const Eigen::MatrixXd& F, const Eigen::VectorXd& y) {
  if (!F.allFinite() || !y.allFinite()) {
    throw DataError("regression inputs contain non-finite values");
  }
}

}  // namespace

LinearModel fit_ols(const Eigen::MatrixXd& F, const Eigen::VectorXd& y) {
  if (F.rows() != y.size()) {
    throw DataError("feature rows and target length differ");
  }
  if (F.rows() < 1) {
    throw DataError("least squares needs at least one sample");
  }
  check_finite(F, y);
  const Eigen::RowVectorXd f_mean = F.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd Fc = F.rowwise() - f_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::MatrixXd normal = Fc.transpose() * Fc;
  normal.diagonal().array() += kRidge;
  LinearModel model;
  model.weights = normal.ldlt().solve(Fc.transpose() * yc);
  if (!model.weights.allFinite()) {
    throw NumericalError("least-squares normal equations are singular");
  }
  model.intercept = y_mean - f_mean.dot(model.weights);
  model.residual_norm = (y - predict_linear(model, F)).norm();
  return model;
}

Eigen::VectorXd predict_linear(const LinearModel& model, const Eigen::MatrixXd& F) {
  if (F.cols() != model.dimension()) {
    throw DataError("linear model expects " + std::to_string(model.dimension()) +
                    " features, got " + std::to_string(F.cols()));
  }
  return (F * model.weights).array() + model.intercept;
}

PlsRegModel fit_pls1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Index factors) {
  if (X.rows() != y.size()) {
    throw DataError("spectra rows and target length differ");
  }
  check_finite(X, y);
  const Index max_factors = std::min<Index>(X.rows() - 1, X.cols());
  if (factors < 1 || factors > max_factors) {
    throw UsageError("PLS factor count " + std::to_string(factors) + " outside [1, " +
                     std::to_string(std::max<Index>(max_factors, 0)) + "]");
  }
  PlsRegModel model;
  model.x_center = X.colwise().mean();
  model.y_center = y.mean();
  const Eigen::VectorXd yc = y.array() - model.y_center;
  if (yc.squaredNorm() <= 1e-24 * std::max(1.0, y.squaredNorm())) {
    throw DataError("PLS target has zero variance");
  }
  const Nipals f = nipals_pls1(X.rowwise() - model.x_center, yc, factors);
  if (f.exhausted) {
    throw NumericalError("degenerate PLS deflation at factor " +
                         std::to_string(f.weights.cols() + 1));
  }
  model.weights = f.weights;
  model.loadings = f.loadings;
  model.y_loadings = f.y_loadings;
  model.coefficients = regression_vector(f, factors);
  return model;
}

Eigen::VectorXd predict_pls(const PlsRegModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.x_center.size()) {
    throw DataError("PLS model fitted on " + std::to_string(model.x_center.size()) +
                    " points applied to " + std::to_string(X.cols()));
  }
  return ((X.rowwise() - model.x_center) * model.coefficients).array() + model.y_center;
}

PlsRegModel fit_pls_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Index max_factors,
                       Index folds, std::uint64_t seed) {
  if (folds < 2) {
    throw UsageError("cross-validation needs at least 2 folds");
  }
  if (max_factors < 1) {
    throw UsageError("maximum factor count must be at least 1");
  }
  if (X.rows() != y.size()) {
    throw DataError("spectra rows and target length differ");
  }
  const Index n = X.rows();
  if (folds > n) {
    throw UsageError("more folds (" + std::to_string(folds) + ") than samples (" +
                     std::to_string(n) + ")");
  }
  check_finite(X, y);

  Rng rng(seed);
  const auto perm = random_permutation(static_cast<std::size_t>(n), rng);
  std::vector<double> sse(static_cast<std::size_t>(max_factors), 0.0);
  std::vector<bool> usable(static_cast<std::size_t>(max_factors), true);

  for (Index f = 0; f < folds; ++f) {
    const Index begin = f * n / folds;
    const Index end = (f + 1) * n / folds;
    std::vector<Index> train_rows;
    std::vector<Index> test_rows;
    for (Index i = 0; i < n; ++i) {
      (i >= begin && i < end ? test_rows : train_rows).push_back(
          static_cast<Index>(perm[static_cast<std::size_t>(i)]));
    }
    const Eigen::MatrixXd Xtr = X(train_rows, Eigen::all);
    const Eigen::VectorXd ytr = y(train_rows);
    const Eigen::MatrixXd Xte = X(test_rows, Eigen::all);
    const Eigen::VectorXd yte = y(test_rows);

    const Eigen::RowVectorXd xc = Xtr.colwise().mean();
    const double yc = ytr.mean();
    const Index fold_max = std::min<Index>({max_factors, Xtr.rows() - 1, Xtr.cols()});
    const Nipals fit = nipals_pls1(Xtr.rowwise() - xc, ytr.array() - yc, fold_max);
    const Index extracted = fit.weights.cols();
    const Eigen::MatrixXd Xte_c = Xte.rowwise() - xc;
    for (Index a = 1; a <= max_factors; ++a) {
      if (a > fold_max) {
        usable[static_cast<std::size_t>(a - 1)] = false;
        continue;
      }
      // Past an exhausted deflation the model cannot change any further.
      const Eigen::VectorXd b = regression_vector(fit, std::min(a, extracted));
      const Eigen::VectorXd pred = (Xte_c * b).array() + yc;
      sse[static_cast<std::size_t>(a - 1)] += (yte - pred).squaredNorm();
    }
  }

  std::vector<double> curve(static_cast<std::size_t>(max_factors),
                            std::numeric_limits<double>::infinity());
  Index best = 0;
  for (Index a = 1; a <= max_factors; ++a) {
    const auto i = static_cast<std::size_t>(a - 1);
    if (!usable[i]) {
      continue;
    }
    curve[i] = std::sqrt(sse[i] / double(n));
    if (best == 0 || curve[i] < curve[static_cast<std::size_t>(best - 1)]) {
      best = a;
    }
  }
  if (best == 0) {
    throw DataError("no factor count can be cross-validated with " + std::to_string(n) +
                    " samples");
  }

  // The refit may exhaust earlier than the folds did; fall back to the
  // largest factor count the full data supports.
  PlsRegModel model;
  for (Index a = best; a >= 1; --a) {
    try {
      model = fit_pls1(X, y, a);
      break;
    } catch (const NumericalError&) {
      if (a == 1) {
        throw;
      }
    }
  }
  model.cv_rmse = std::move(curve);
  return model;
}

}  // namespace nirens
