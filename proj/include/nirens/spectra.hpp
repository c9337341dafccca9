#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nirens {

using Index = Eigen::Index;
using IndexList = std::vector<std::size_t>;

/// One absorbance spectrum on a strictly increasing wavenumber grid (cm^-1).
struct Spectrum {
  Eigen::VectorXd wavenumbers;
  Eigen::VectorXd absorbance;

  /// Throws DataError when the grid/value invariants do not hold.
  void validate() const;
};

/// Spectra sharing one grid, with per-sample concentrations (percent by mass)
/// and measurement temperatures (degrees C).
struct SampleSet {
  Eigen::VectorXd wavenumbers;     // n_points
  Eigen::MatrixXd absorbance;      // n_samples x n_points
  Eigen::MatrixXd concentrations;  // n_samples x n_components
  Eigen::VectorXd temperatures;    // n_samples
  std::vector<std::string> component_names;

  Index n_samples() const { return absorbance.rows(); }
  Index n_points() const { return wavenumbers.size(); }
  Index n_components() const { return concentrations.cols(); }

  /// Column of `concentrations` for a component label; DataError if unknown.
  Index component_index(const std::string& name) const;

  Spectrum spectrum(Index row) const;

  /// Copy of the given rows, in the given order (duplicates allowed).
  SampleSet rows(const IndexList& indices) const;

  void validate() const;
};

SampleSet load_sampleset(const std::filesystem::path& path);

/// Writes the dataset CSV. Values are printed with 17 significant digits so a
/// load/save cycle reproduces the file byte for byte.
void save_sampleset(const SampleSet& set, const std::filesystem::path& path);

/// Keeps the grid points p with lo <= p <= hi.
SampleSet select_range(const SampleSet& set, double lo, double hi);

struct Split {
  IndexList train;
  IndexList test;
};

/// Random train/test partition of {0..n-1}; both lists sorted ascending.
Split split_indices(std::size_t n, std::size_t n_train, std::uint64_t seed);

/// Moves k randomly chosen test indices into the training set.
Split grow_train(const Split& split, std::size_t k, std::uint64_t seed);

}  // namespace nirens
