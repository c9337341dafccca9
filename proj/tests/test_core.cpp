#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "nirens/config.hpp"
#include "nirens/error.hpp"
#include "nirens/io.hpp"
#include "nirens/random.hpp"

using namespace nirens;

TEST_CASE("mt19937_64 stream matches the standard's 10000th value") {
  // [rand.predef]: the 10000th output of a default-constructed mt19937_64.
  Rng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) {
    v = rng.next();
  }
  CHECK(v == 9981545732273789042ull);
}

TEST_CASE("uniform draws stay in [0, 1) and have the right mean") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("index is unbiased over a small range") {
  Rng rng(11);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    ++counts[rng.index(7)];
  }
  for (int c : counts) {
    CHECK(std::abs(c - 10000) < 400);
  }
  CHECK_THROWS_AS(rng.index(0), UsageError);
}

TEST_CASE("normal draws have unit variance") {
  Rng rng(3);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("derived seeds separate streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a) {
    for (std::uint64_t b = 0; b < 50; ++b) {
      seen.insert(derive_seed(1, a, b));
    }
  }
  CHECK(seen.size() == 2500);
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  CHECK(derive_seed(9, 4, 4) == derive_seed(9, 4, 4));
}

TEST_CASE("random_permutation is a permutation") {
  Rng rng(5);
  auto p = random_permutation(100, rng);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i] == i);
  }
  CHECK(random_permutation(0, rng).empty());
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    double back = 0.0;
    REQUIRE(parse_double(format_double(v), back));
    CHECK(back == v);
  }
  CHECK(format_fixed(0.123456, 5) == "0.12346");
}

TEST_CASE("parse_double rejects junk") {
  double v = 0.0;
  CHECK(parse_double(" +1.5 ", v));
  CHECK(v == 1.5);
  CHECK_FALSE(parse_double("1.5x", v));
  CHECK_FALSE(parse_double("", v));
  CHECK_FALSE(parse_double("abc", v));
}

TEST_CASE("split keeps empty fields") {
  const auto parts = split("a,,b", ',');
  REQUIRE(parts.size() == 3);
  CHECK(parts[1].empty());
  CHECK(trim("  x \t") == "x");
}

TEST_CASE("atomic write leaves no staging file") {
  const auto dir = std::filesystem::temp_directory_path() / "nirens_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  write_text_atomic(path, "hello\n");
  CHECK(read_text(path) == "hello\n");
  CHECK_FALSE(std::filesystem::exists(dir / "out.txt.partial"));
  // FNV-1a of "hello\n".
  CHECK(file_digest(path) == "a9bc80cca21f28b3");
  std::filesystem::remove_all(dir);
}

TEST_CASE("config parsing and typed getters") {
  const Config cfg = Config::parse("# comment\nseed = 42\nmsc.enabled = true\n"
                                   "curve.methods = boot_plsx, pls_baseline\nx = 1.5\n");
  CHECK(cfg.get_u64("seed", 0) == 42);
  CHECK(cfg.get_bool("msc.enabled", false));
  CHECK(cfg.get_double("x", 0) == 1.5);
  CHECK(cfg.get_int("missing", 7) == 7);
  const auto methods = cfg.get_list("curve.methods", {});
  REQUIRE(methods.size() == 2);
  CHECK(methods[1] == "pls_baseline");
  CHECK_THROWS_AS(cfg.get_int("x", 0), UsageError);
  CHECK_THROWS_AS(Config::parse("no equals sign\n"), UsageError);
  CHECK(Config::parse(cfg.to_text()).values() == cfg.values());
}
