#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "nirens/cli.hpp"
#include "nirens/config.hpp"
#include "nirens/io.hpp"
#include "nirens/spectra.hpp"

using namespace nirens;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string p(const std::filesystem::path& path) { return path.string(); }

// Small and fast model settings shared by the fit tests.
const std::vector<std::string> kQuick = {"--mlp.restarts", "2", "--mlp.hidden", "4",
                                         "--ensemble.n_models", "5"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    rows.push_back(split(line, ','));
  }
  return rows;
}

}  // namespace

TEST_CASE("synth writes a deterministic dataset and a manifest") {
  const auto dir = testing::scratch_dir("cli_synth");
  REQUIRE(cli({"synth", "--out", p(dir / "a.csv"), "--seed", "1"}).code == 0);
  REQUIRE(cli({"synth", "--out", p(dir / "b.csv"), "--seed", "1"}).code == 0);
  CHECK(read_text(dir / "a.csv") == read_text(dir / "b.csv"));
  CHECK(load_sampleset(dir / "a.csv").n_samples() == 493);

  const auto manifest = nlohmann::json::parse(read_text(dir / "a.csv.manifest.json"));
  CHECK(manifest["seed"] == 1);
  CHECK(manifest["version"] == kVersion);
  CHECK(manifest.contains("started"));

  const Run bad = cli({"synth", "--out", p(dir / "c.csv"), "--synth.temp_lo", "80"});
  CHECK(bad.code == kExitUsage);
  CHECK(bad.err.find("synth.temp_lo") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "c.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"fit", "--out", "x.json"}).code == kExitUsage);
  const Run unknown = cli({"synth", "--out", "/tmp/nirens_never.csv", "--synth.colour", "red"});
  CHECK(unknown.code == kExitUsage);
  CHECK(unknown.err.find("synth.colour") != std::string::npos);
  CHECK(cli({"--version"}).code == kExitOk);
}

TEST_CASE("fit, predict and evaluate") {
  const auto dir = testing::scratch_dir("cli_fit");
  const auto data = dir / "data.csv";
  const auto probe = dir / "probe.csv";
  REQUIRE(cli({"synth", "--out", p(data), "--synth.n_samples", "40", "--seed", "2"}).code == 0);
  REQUIRE(cli({"synth", "--out", p(probe), "--synth.n_samples", "25", "--seed", "3"}).code == 0);

  SUBCASE("single model has zero-width intervals") {
    const auto model = dir / "single.json";
    REQUIRE(cli(with({"fit", "--dataset", p(data), "--out", p(model), "--ensemble.kind", "none"},
                     kQuick)).code == 0);
    const auto file = nlohmann::json::parse(read_text(model));
    CHECK(file["components"][0]["model"]["members"].size() == 1);
    REQUIRE(cli({"predict", "--model", p(model), "--dataset", p(probe), "--out",
                 p(dir / "pred.csv")}).code == 0);
    const auto rows = csv_rows(read_text(dir / "pred.csv"));
    REQUIRE(rows.size() == 26);
    CHECK(rows[0][1] == "C1_mean");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      CHECK(rows[r][2] == "0");
      CHECK(rows[r][3] == rows[r][1]);
      CHECK(rows[r][4] == rows[r][1]);
    }
  }

  SUBCASE("ensemble member count, alpha scaling and coverage cross-check") {
    const auto model = dir / "boot.json";
    REQUIRE(cli(with({"fit", "--dataset", p(data), "--out", p(model)}, kQuick)).code == 0);
    const auto file = nlohmann::json::parse(read_text(model));
    CHECK(file["components"][0]["model"]["members"].size() == 5);
    CHECK(std::filesystem::exists(dir / "boot.json.manifest.json"));

    REQUIRE(cli({"predict", "--model", p(model), "--dataset", p(probe), "--out",
                 p(dir / "a2.csv")}).code == 0);
    REQUIRE(cli({"predict", "--model", p(model), "--dataset", p(probe), "--out",
                 p(dir / "a1.csv"), "--alpha", "1"}).code == 0);
    const auto r2 = csv_rows(read_text(dir / "a2.csv"));
    const auto r1 = csv_rows(read_text(dir / "a1.csv"));
    for (std::size_t r = 1; r < r2.size(); ++r) {
      double lo2, hi2, lo1, hi1;
      REQUIRE(parse_double(r2[r][3], lo2));
      REQUIRE(parse_double(r2[r][4], hi2));
      REQUIRE(parse_double(r1[r][3], lo1));
      REQUIRE(parse_double(r1[r][4], hi1));
      CHECK(hi2 - lo2 == doctest::Approx(2.0 * (hi1 - lo1)).epsilon(1e-12));
    }

    const Run eval = cli({"evaluate", "--predictions", p(dir / "a2.csv"), "--dataset", p(probe)});
    REQUIRE(eval.code == 0);
    // Recompute coverage of C1 directly from the prediction file.
    const SampleSet truth = load_sampleset(probe);
    int inside = 0;
    for (std::size_t r = 1; r < r2.size(); ++r) {
      double lo, hi;
      parse_double(r2[r][3], lo);
      parse_double(r2[r][4], hi);
      const double y = truth.concentrations(Index(r - 1), 0);
      inside += (y >= lo && y <= hi) ? 1 : 0;
    }
    const auto report = csv_rows(eval.out);
    REQUIRE(report.size() == 3);
    CHECK(report[1][0] == "C1");
    double cov = 0.0;
    REQUIRE(parse_double(report[1][3], cov));
    CHECK(cov == double(inside) / 25.0);
  }

  SUBCASE("predict output does not depend on the thread count") {
    std::vector<std::string> texts;
    for (const char* threads : {"1", "3"}) {
      const auto model = dir / (std::string("t") + threads + ".json");
      const auto pred = dir / (std::string("t") + threads + ".csv");
      REQUIRE(cli(with({"fit", "--dataset", p(data), "--out", p(model), "--threads", threads,
                        "--seed", "5"},
                       kQuick)).code == 0);
      REQUIRE(cli({"predict", "--model", p(model), "--dataset", p(probe), "--out", p(pred)})
                  .code == 0);
      texts.push_back(read_text(pred));
    }
    CHECK(texts[0] == texts[1]);
  }

  SUBCASE("grid mismatch is a data error") {
    const auto model = dir / "lin.json";
    REQUIRE(cli({"fit", "--dataset", p(data), "--out", p(model), "--ensemble.base", "linear"})
                .code == 0);
    const auto other = dir / "other.csv";
    REQUIRE(cli({"synth", "--out", p(other), "--synth.n_points", "100"}).code == 0);
    CHECK(cli({"predict", "--model", p(model), "--dataset", p(other), "--out",
               p(dir / "x.csv")}).code == kExitData);
    CHECK_FALSE(std::filesystem::exists(dir / "x.csv"));
  }

  SUBCASE("config file with command-line override") {
    {
      std::ofstream f(dir / "run.cfg");
      f << "# quick linear run\nensemble.base = linear\nensemble.n_models = 3\nseed = 8\n";
    }
    const auto model = dir / "cfg.json";
    REQUIRE(cli({"fit", "--dataset", p(data), "--out", p(model), "--config", p(dir / "run.cfg"),
                 "--ensemble.n_models", "4"}).code == 0);
    const auto file = nlohmann::json::parse(read_text(model));
    CHECK(file["components"][0]["model"]["members"].size() == 4);
    const auto manifest = nlohmann::json::parse(read_text(dir / "cfg.json.manifest.json"));
    CHECK(manifest["seed"] == 8);
    CHECK(manifest["config"]["ensemble.base"] == "linear");
  }

  CHECK(cli({"fit", "--dataset", p(dir / "missing.csv"), "--out", p(dir / "m.json")}).code ==
        kExitData);
  std::filesystem::remove_all(dir);
}

TEST_CASE("learning-curve command") {
  const auto dir = testing::scratch_dir("cli_curve");
  const auto data = dir / "data.csv";
  REQUIRE(cli({"synth", "--out", p(data), "--synth.n_samples", "60"}).code == 0);
  const std::vector<std::string> base = {
      "learning-curve", "--dataset", p(data), "--curve.start", "20", "--curve.step", "10",
      "--curve.stop", "30", "--curve.methods", "boot_plsx_linear,pls_baseline"};

  REQUIRE(cli(with(base, {"--out", p(dir / "one")})).code == 0);
  const auto rows = csv_rows(read_text(dir / "one" / "rmse_C1.csv"));
  CHECK(rows.size() == 3);
  CHECK(rows[0].size() == 3);
  CHECK(std::filesystem::exists(dir / "one" / "manifest.json"));

  REQUIRE(cli(with(base, {"--out", p(dir / "rep"), "--repeat", "3", "--seed", "1"})).code == 0);
  for (const char* name : {"seed1_rmse_C1.csv", "seed2_rmse_C1.csv", "seed3_rmse_C2.csv",
                           "mean_rmse_C1.csv", "mean_rmse_C2.csv"}) {
    CHECK(std::filesystem::exists(dir / "rep" / name));
  }
  CHECK(read_text(dir / "rep" / "seed1_rmse_C1.csv") == read_text(dir / "one" / "rmse_C1.csv"));

  CHECK(cli(with(base, {"--out", p(dir / "bad"), "--curve.stop", "70"})).code == kExitUsage);
  std::filesystem::remove_all(dir);
}
