#include "nirens/preprocess.hpp"

#include <cmath>
#include <string>

#include "nirens/error.hpp"

namespace nirens {
namespace {

// Vandermonde basis on a rescaled axis; the column space (and so the fitted
// polynomial) is the same as for raw wavenumbers, the conditioning is not.
Eigen::MatrixXd polynomial_basis(const Eigen::VectorXd& wavenumbers, int order) {
  const double lo = wavenumbers.minCoeff();
  const double hi = wavenumbers.maxCoeff();
  const double mid = 0.5 * (lo + hi);
  const double half = hi > lo ? 0.5 * (hi - lo) : 1.0;
  Eigen::MatrixXd basis(wavenumbers.size(), order + 1);
  for (Index i = 0; i < wavenumbers.size(); ++i) {
    const double u = (wavenumbers[i] - mid) / half;
    double term = 1.0;
    for (int k = 0; k <= order; ++k) {
      basis(i, k) = term;
      term *= u;
    }
  }
  return basis;
}

double falling_factorial(int k, int d) {
  double out = 1.0;
  for (int i = 0; i < d; ++i) {
    out *= k - i;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd baseline_correct(const Eigen::VectorXd& wavenumbers, const Eigen::MatrixXd& X,
                                 int order) {
  if (order < 0 || order > 2) {
    throw UsageError("baseline order must be 0, 1 or 2, got " + std::to_string(order));
  }
  if (wavenumbers.size() < order + 2) {
    throw DataError("baseline correction of order " + std::to_string(order) + " needs at least " +
                    std::to_string(order + 2) + " grid points");
  }
  if (X.cols() != wavenumbers.size()) {
    throw DataError("spectra width differs from grid length");
  }
  const Eigen::MatrixXd basis = polynomial_basis(wavenumbers, order);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd coefficients = qr.solve(X.transpose());
  return X - (basis * coefficients).transpose();
}

Spectrum baseline_correct(const Spectrum& spectrum, int order) {
  spectrum.validate();
  const Eigen::MatrixXd corrected =
      baseline_correct(spectrum.wavenumbers, spectrum.absorbance.transpose(), order);
  return Spectrum{spectrum.wavenumbers, corrected.row(0).transpose()};
}

CenteringModel fit_centering(const Eigen::MatrixXd& X) {
  if (X.rows() < 1) {
    throw DataError("centering needs at least one sample");
  }
  return CenteringModel{X.colwise().mean()};
}

Eigen::MatrixXd apply_centering(const CenteringModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.mean_spectrum.size()) {
    throw DataError("centering model fitted on " + std::to_string(model.mean_spectrum.size()) +
                    " points applied to " + std::to_string(X.cols()));
  }
  return X.rowwise() - model.mean_spectrum;
}

Eigen::MatrixXd msc(const Eigen::MatrixXd& X, const std::optional<Eigen::RowVectorXd>& reference) {
  if (X.cols() < 2) {
    throw DataError("scatter correction needs at least 2 points per spectrum");
  }
  if (X.rows() < 1) {
    throw DataError("scatter correction needs at least one spectrum");
  }
  const Eigen::RowVectorXd ref = reference ? *reference : Eigen::RowVectorXd(X.colwise().mean());
  if (ref.size() != X.cols()) {
    throw DataError("scatter reference length differs from spectrum length");
  }
  const double ref_mean = ref.mean();
  const Eigen::RowVectorXd ref_dev = ref.array() - ref_mean;
  const double ref_ss = ref_dev.squaredNorm();
  if (!(ref_ss > 0.0)) {
    throw DataError("scatter reference spectrum is constant");
  }
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Index r = 0; r < X.rows(); ++r) {
    const double row_mean = X.row(r).mean();
    double slope = (X.row(r).array() - row_mean).matrix().dot(ref_dev) / ref_ss;
    const double offset = row_mean - slope * ref_mean;
    if (std::abs(slope) < 1e-8) {
      slope = std::copysign(1e-8, slope);
    }
    out.row(r) = (X.row(r).array() - offset) / slope;
  }
  return out;
}

SgFilter::SgFilter(int window, int poly_order, int deriv_order)
    : window_(window), poly_order_(poly_order), deriv_order_(deriv_order) {
  if (window < 3 || window % 2 == 0) {
    throw UsageError("Savitzky-Golay window must be odd and at least 3, got " +
                     std::to_string(window));
  }
  if (poly_order < 0 || poly_order >= window) {
    throw UsageError("Savitzky-Golay polynomial order must lie in [0, window)");
  }
  if (deriv_order < 0 || deriv_order > poly_order) {
    throw UsageError("Savitzky-Golay derivative order must lie in [0, poly_order]");
  }
  const int h = half();
  Eigen::MatrixXd vander(window, poly_order + 1);
  for (int i = 0; i < window; ++i) {
    const double x = i - h;
    for (int k = 0; k <= poly_order; ++k) {
      vander(i, k) = std::pow(x, k);
    }
  }
  // Rows of the pseudo-inverse map window samples to polynomial coefficients.
  const Eigen::MatrixXd pinv = vander.colPivHouseholderQr().solve(
      Eigen::MatrixXd::Identity(window, window));

  weights_.resize(window, window);
  for (int j = 0; j < window; ++j) {
    const double x0 = j - h;
    Eigen::RowVectorXd eval = Eigen::RowVectorXd::Zero(poly_order + 1);
    for (int k = deriv_order; k <= poly_order; ++k) {
      eval[k] = falling_factorial(k, deriv_order) * std::pow(x0, k - deriv_order);
    }
    weights_.col(j) = (eval * pinv).transpose();
  }
  central_ = weights_.col(h);
}

Eigen::VectorXd SgFilter::apply(const Eigen::VectorXd& values, double spacing) const {
  const Index n = values.size();
  if (n < window_) {
    throw DataError("Savitzky-Golay window " + std::to_string(window_) +
                    " exceeds series length " + std::to_string(n));
  }
  const int h = half();
  Eigen::VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    Index start = i - h;
    int column = h;
    if (i < h) {
      start = 0;
      column = static_cast<int>(i);
    } else if (i >= n - h) {
      start = n - window_;
      column = static_cast<int>(i - start);
    }
    out[i] = weights_.col(column).dot(values.segment(start, window_));
  }
  if (deriv_order_ > 0) {
    out /= std::pow(spacing, deriv_order_);
  }
  return out;
}

SgFilter build_sg(int window, int poly_order, int deriv_order) {
  return SgFilter(window, poly_order, deriv_order);
}

Eigen::MatrixXd apply_sg(const SgFilter& filter, const Eigen::VectorXd& wavenumbers,
                         const Eigen::MatrixXd& X) {
  if (X.cols() != wavenumbers.size()) {
    throw DataError("spectra width differs from grid length");
  }
  const double spacing =
      (wavenumbers[wavenumbers.size() - 1] - wavenumbers[0]) / double(wavenumbers.size() - 1);
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Index r = 0; r < X.rows(); ++r) {
    out.row(r) = filter.apply(X.row(r).transpose(), spacing).transpose();
  }
  return out;
}

Spectrum apply_sg(const SgFilter& filter, const Spectrum& spectrum) {
  spectrum.validate();
  const Eigen::MatrixXd out =
      apply_sg(filter, spectrum.wavenumbers, spectrum.absorbance.transpose());
  return Spectrum{spectrum.wavenumbers, out.row(0).transpose()};
}

}  // namespace nirens
