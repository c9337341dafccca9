#pragma once

#include <optional>

#include <Eigen/Dense>

#include "nirens/spectra.hpp"

namespace nirens {

/// Subtracts the least-squares polynomial of degree `order` (0, 1 or 2) in
/// wavenumber fitted to the whole spectrum.
Spectrum baseline_correct(const Spectrum& spectrum, int order);

/// Row-wise baseline correction of a matrix sharing one grid.
Eigen::MatrixXd baseline_correct(const Eigen::VectorXd& wavenumbers, const Eigen::MatrixXd& X,
                                 int order);

struct CenteringModel {
  Eigen::RowVectorXd mean_spectrum;
};

CenteringModel fit_centering(const Eigen::MatrixXd& X);
Eigen::MatrixXd apply_centering(const CenteringModel& model, const Eigen::MatrixXd& X);

/// Multiplicative scatter correction. Each row r becomes (r - a) / b where
/// r ~ a + b * reference in the least-squares sense. The reference defaults
/// to the column mean of X.
Eigen::MatrixXd msc(const Eigen::MatrixXd& X,
                    const std::optional<Eigen::RowVectorXd>& reference = std::nullopt);

/// Savitzky-Golay convolution filter for equally spaced data.
class SgFilter {
 public:
  SgFilter(int window, int poly_order, int deriv_order);

  int window() const { return window_; }
  int poly_order() const { return poly_order_; }
  int deriv_order() const { return deriv_order_; }

  /// Central convolution weights, ordered from offset -h to +h.
  const Eigen::VectorXd& coefficients() const { return central_; }

  /// Filters one equally spaced series. Derivatives are per unit `spacing`.
  /// The first and last (window - 1) / 2 outputs evaluate the polynomial
  /// fitted to the first/last full window at that position.
  Eigen::VectorXd apply(const Eigen::VectorXd& values, double spacing = 1.0) const;

 private:
  int half() const { return (window_ - 1) / 2; }

  int window_;
  int poly_order_;
  int deriv_order_;
  // Column j holds the weights evaluating the fit at window offset j - h.
  Eigen::MatrixXd weights_;
  Eigen::VectorXd central_;
};

SgFilter build_sg(int window, int poly_order, int deriv_order);

/// Applies the filter along the spectrum; derivatives are per cm^-1 using the
/// mean grid spacing.
Spectrum apply_sg(const SgFilter& filter, const Spectrum& spectrum);

Eigen::MatrixXd apply_sg(const SgFilter& filter, const Eigen::VectorXd& wavenumbers,
                         const Eigen::MatrixXd& X);

}  // namespace nirens
