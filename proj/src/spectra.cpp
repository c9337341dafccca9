#include "nirens/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nirens/error.hpp"
#include "nirens/io.hpp"
#include "nirens/random.hpp"

namespace nirens {
namespace {

void check_grid(const Eigen::VectorXd& grid) {
  if (grid.size() < 2) {
    throw DataError("wavenumber grid needs at least 2 points");
  }
  for (Index i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) {
      throw DataError("non-finite wavenumber at position " + std::to_string(i));
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw DataError("wavenumber grid is not strictly increasing at position " +
                      std::to_string(i));
    }
  }
}

std::string wavenumber_label(double v) {
  char text[32];
  std::snprintf(text, sizeof text, "wn_%.6g", v);
  return text;
}

}  // namespace

void Spectrum::validate() const {
  check_grid(wavenumbers);
  if (absorbance.size() != wavenumbers.size()) {
    throw DataError("absorbance length " + std::to_string(absorbance.size()) +
                    " differs from grid length " + std::to_string(wavenumbers.size()));
  }
  if (!absorbance.allFinite()) {
    throw DataError("non-finite absorbance value");
  }
}

Index SampleSet::component_index(const std::string& name) const {
  const auto it = std::find(component_names.begin(), component_names.end(), name);
  if (it == component_names.end()) {
    throw DataError("unknown component '" + name + "'");
  }
  return static_cast<Index>(it - component_names.begin());
}

Spectrum SampleSet::spectrum(Index row) const {
  return Spectrum{wavenumbers, absorbance.row(row).transpose()};
}

SampleSet SampleSet::rows(const IndexList& indices) const {
  SampleSet out;
  out.wavenumbers = wavenumbers;
  out.component_names = component_names;
  const auto n = static_cast<Index>(indices.size());
  out.absorbance.resize(n, n_points());
  out.concentrations.resize(n, n_components());
  out.temperatures.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto src = static_cast<Index>(indices[static_cast<std::size_t>(i)]);
    if (src >= n_samples()) {
      throw DataError("row index " + std::to_string(src) + " out of range");
    }
    out.absorbance.row(i) = absorbance.row(src);
    out.concentrations.row(i) = concentrations.row(src);
    out.temperatures[i] = temperatures[src];
  }
  return out;
}

void SampleSet::validate() const {
  check_grid(wavenumbers);
  if (n_samples() < 1) {
    throw DataError("sample set is empty");
  }
  if (n_components() < 1 || static_cast<Index>(component_names.size()) != n_components()) {
    throw DataError("component names do not match concentration columns");
  }
  if (absorbance.cols() != n_points()) {
    throw DataError("absorbance matrix width differs from grid length");
  }
  if (concentrations.rows() != n_samples() || temperatures.size() != n_samples()) {
    throw DataError("row counts of absorbance, concentrations and temperatures differ");
  }
  if (!absorbance.allFinite() || !concentrations.allFinite() || !temperatures.allFinite()) {
    throw DataError("sample set contains non-finite values");
  }
  if ((concentrations.array() < 0.0).any()) {
    throw DataError("sample set contains negative concentrations");
  }
}

SampleSet load_sampleset(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path.string() + ": missing header row");
  }
  const auto header = split(trim(line), ',');
  if (header.empty() || trim(header[0]) != "temperature") {
    throw DataError(path.string() + ": header must start with 'temperature'");
  }

  SampleSet set;
  std::vector<double> grid;
  std::size_t first_wn = header.size();
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto name = std::string(trim(header[c]));
    if (name.rfind("wn_", 0) == 0) {
      first_wn = std::min(first_wn, c);
      double v = 0.0;
      if (!parse_double(std::string_view(name).substr(3), v)) {
        throw DataError(path.string() + ": malformed wavenumber column '" + name + "'");
      }
      grid.push_back(v);
    } else {
      if (first_wn < c) {
        throw DataError(path.string() + ": component column '" + name +
                        "' after wavenumber columns");
      }
      if (name.empty()) {
        throw DataError(path.string() + ": empty component name in column " +
                        std::to_string(c + 1));
      }
      set.component_names.push_back(name);
    }
  }
  if (set.component_names.empty()) {
    throw DataError(path.string() + ": no component columns");
  }
  set.wavenumbers = Eigen::Map<Eigen::VectorXd>(grid.data(), static_cast<Index>(grid.size()));
  try {
    check_grid(set.wavenumbers);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }

  const auto n_comp = static_cast<Index>(set.component_names.size());
  const auto n_points = set.n_points();
  std::vector<double> values;
  std::size_t n_rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = split(trim(line), ',');
    if (fields.size() != header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(n_rows + 1) + " (line " +
                      std::to_string(line_no) + ") has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      const std::string where = path.string() + ": row " + std::to_string(n_rows + 1) +
                                ", column " + std::to_string(c + 1) + " ('" +
                                std::string(trim(header[c])) + "')";
      if (!parse_double(fields[c], v)) {
        throw DataError(where + ": not a number: '" + std::string(trim(fields[c])) + "'");
      }
      if (!std::isfinite(v)) {
        throw DataError(where + ": non-finite value");
      }
      if (c >= 1 && c <= static_cast<std::size_t>(n_comp) && v < 0.0) {
        throw DataError(where + ": negative concentration");
      }
      values.push_back(v);
    }
    ++n_rows;
  }
  if (n_rows == 0) {
    throw DataError(path.string() + ": no data rows");
  }

  const auto n = static_cast<Index>(n_rows);
  const auto width = static_cast<Index>(header.size());
  set.temperatures.resize(n);
  set.concentrations.resize(n, n_comp);
  set.absorbance.resize(n, n_points);
  for (Index r = 0; r < n; ++r) {
    const double* row = values.data() + r * width;
    set.temperatures[r] = row[0];
    for (Index c = 0; c < n_comp; ++c) {
      set.concentrations(r, c) = row[1 + c];
    }
    for (Index p = 0; p < n_points; ++p) {
      set.absorbance(r, p) = row[1 + n_comp + p];
    }
  }
  return set;
}

void save_sampleset(const SampleSet& set, const std::filesystem::path& path) {
  set.validate();
  std::string out = "temperature";
  for (const auto& name : set.component_names) {
    out += ',';
    out += name;
  }
  for (Index p = 0; p < set.n_points(); ++p) {
    out += ',';
    out += wavenumber_label(set.wavenumbers[p]);
  }
  out += '\n';
  for (Index r = 0; r < set.n_samples(); ++r) {
    out += format_double(set.temperatures[r]);
    for (Index c = 0; c < set.n_components(); ++c) {
      out += ',';
      out += format_double(set.concentrations(r, c));
    }
    for (Index p = 0; p < set.n_points(); ++p) {
      out += ',';
      out += format_double(set.absorbance(r, p));
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

SampleSet select_range(const SampleSet& set, double lo, double hi) {
  if (!(lo < hi)) {
    throw UsageError("range lower bound must be below the upper bound");
  }
  std::vector<Index> keep;
  for (Index p = 0; p < set.n_points(); ++p) {
    if (set.wavenumbers[p] >= lo && set.wavenumbers[p] <= hi) {
      keep.push_back(p);
    }
  }
  if (keep.empty()) {
    throw DataError("no grid points inside the selected wavenumber range");
  }
  SampleSet out = set;
  out.wavenumbers = set.wavenumbers(keep);
  out.absorbance = set.absorbance(Eigen::all, keep);
  return out;
}

Split split_indices(std::size_t n, std::size_t n_train, std::uint64_t seed) {
  if (n_train < 1 || n_train >= n) {
    throw UsageError("training size " + std::to_string(n_train) + " must lie in [1, " +
                     std::to_string(n) + ")");
  }
  Rng rng(seed);
  const auto perm = random_permutation(n, rng);
  Split split;
  split.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Split grow_train(const Split& split, std::size_t k, std::uint64_t seed) {
  if (k > split.test.size()) {
    throw UsageError("cannot move " + std::to_string(k) + " samples out of a test set of " +
                     std::to_string(split.test.size()));
  }
  Rng rng(seed);
  const auto perm = random_permutation(split.test.size(), rng);
  Split out;
  out.train = split.train;
  std::vector<bool> moved(split.test.size(), false);
  for (std::size_t i = 0; i < k; ++i) {
    moved[perm[i]] = true;
    out.train.push_back(split.test[perm[i]]);
  }
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    if (!moved[i]) {
      out.test.push_back(split.test[i]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  return out;
}

}  // namespace nirens
