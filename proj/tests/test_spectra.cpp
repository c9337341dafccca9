#include <doctest.h>

#include <algorithm>
#include <fstream>

#include "helpers.hpp"
#include "nirens/error.hpp"
#include "nirens/io.hpp"
#include "nirens/spectra.hpp"

using namespace nirens;

namespace {

SampleSet tiny_set() {
  SampleSet s;
  s.wavenumbers = Eigen::Vector3d(5000, 8000, 10000);
  s.absorbance = Eigen::MatrixXd::Ones(2, 3);
  s.absorbance(1, 2) = 0.25;
  s.concentrations = Eigen::MatrixXd::Zero(2, 1);
  s.concentrations(1, 0) = 1.5;
  s.temperatures = Eigen::Vector2d(20, 30);
  s.component_names = {"C1"};
  return s;
}

}  // namespace

TEST_CASE("spectrum validation") {
  Spectrum s{Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0, 0, 0)};
  CHECK_NOTHROW(s.validate());
  s.wavenumbers(2) = 2;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.wavenumbers(2) = 3;
  s.absorbance(1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(s.validate(), DataError);
}

TEST_CASE("dataset CSV has one row per sample and is stable under reload") {
  const auto dir = testing::scratch_dir("spectra_csv");
  const SampleSet data = generate(testing::small_gen(493));
  save_sampleset(data, dir / "a.csv");
  const std::string text = read_text(dir / "a.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 494);

  const SampleSet back = load_sampleset(dir / "a.csv");
  CHECK(back.n_samples() == 493);
  CHECK(back.absorbance == data.absorbance);
  save_sampleset(back, dir / "b.csv");
  CHECK(read_text(dir / "b.csv") == text);
  std::filesystem::remove_all(dir);
}

TEST_CASE("malformed CSV rows are reported with their position") {
  const auto dir = testing::scratch_dir("spectra_bad");
  const auto path = dir / "bad.csv";
  {
    std::ofstream f(path);
    f << "temperature,C1,wn_100,wn_200\n20,1,0.1,0.2\n20,1,0.1,oops\n";
  }
  try {
    load_sampleset(path);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 4") != std::string::npos);
  }
  {
    std::ofstream f(path);
    f << "temperature,C1,wn_100,wn_200\n20,-1,0.1,0.2\n";
  }
  CHECK_THROWS_AS(load_sampleset(path), DataError);
  CHECK_THROWS_AS(load_sampleset(dir / "missing.csv"), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("select_range filters by inclusive bounds") {
  const SampleSet s = tiny_set();
  const SampleSet r = select_range(s, 7600, 11000);
  REQUIRE(r.n_points() == 2);
  CHECK(r.wavenumbers(0) == 8000);
  CHECK(r.wavenumbers(1) == 10000);
  CHECK(r.absorbance(1, 1) == 0.25);

  const SampleSet all = select_range(s, 0, 1e6);
  CHECK(all.wavenumbers == s.wavenumbers);
  CHECK(all.absorbance == s.absorbance);

  CHECK_THROWS_AS(select_range(s, 10500, 10900), DataError);
  CHECK_THROWS_AS(select_range(s, 9000, 8000), UsageError);
}

TEST_CASE("select_range on a 1001-point grid counts points by scan") {
  SampleSet s;
  s.wavenumbers = Eigen::VectorXd::LinSpaced(1001, 4000, 12000);
  s.absorbance = Eigen::MatrixXd::Zero(1, 1001);
  s.concentrations = Eigen::MatrixXd::Zero(1, 1);
  s.temperatures = Eigen::VectorXd::Zero(1);
  s.component_names = {"C1"};
  Index expected = 0;
  for (Index i = 0; i < 1001; ++i) {
    expected += (s.wavenumbers(i) >= 7600 && s.wavenumbers(i) <= 11000) ? 1 : 0;
  }
  CHECK(expected == 426);
  CHECK(select_range(s, 7600, 11000).n_points() == expected);
}

TEST_CASE("split_indices partitions and is deterministic") {
  const Split a = split_indices(3, 2, 99);
  IndexList all = a.train;
  all.insert(all.end(), a.test.begin(), a.test.end());
  std::sort(all.begin(), all.end());
  CHECK(all == IndexList{0, 1, 2});

  const Split b = split_indices(493, 27, 5);
  CHECK(b.train.size() == 27);
  CHECK(b.test.size() == 466);
  CHECK(std::is_sorted(b.train.begin(), b.train.end()));
  const Split c = split_indices(493, 27, 5);
  CHECK(b.train == c.train);
  CHECK(split_indices(493, 27, 6).train != b.train);

  CHECK_THROWS_AS(split_indices(10, 0, 1), UsageError);
  CHECK_THROWS_AS(split_indices(10, 10, 1), UsageError);
}

TEST_CASE("grow_train moves test rows into training") {
  Split s = split_indices(493, 27, 1);
  const Split same = grow_train(s, 0, 3);
  CHECK(same.train == s.train);
  CHECK(same.test == s.test);

  const Split g = grow_train(s, 30, 2);
  CHECK(g.train.size() == 57);
  CHECK(g.test.size() == 436);
  CHECK(std::includes(g.train.begin(), g.train.end(), s.train.begin(), s.train.end()));

  for (int i = 0; i < 8; ++i) {
    s = grow_train(s, 30, 10 + i);
  }
  CHECK(s.train.size() == 267);
  CHECK(s.test.size() == 226);
  CHECK_THROWS_AS(grow_train(s, 227, 1), UsageError);
}

TEST_CASE("rows copies in order with duplicates") {
  const SampleSet s = tiny_set();
  const SampleSet r = s.rows({1, 1, 0});
  CHECK(r.n_samples() == 3);
  CHECK(r.concentrations(0, 0) == 1.5);
  CHECK(r.concentrations(2, 0) == 0.0);
  CHECK(r.temperatures(1) == 30);
  CHECK_THROWS_AS(s.rows({5}), DataError);
  CHECK(s.component_index("C1") == 0);
  CHECK_THROWS_AS(s.component_index("C9"), DataError);
}
