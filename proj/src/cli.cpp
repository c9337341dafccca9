#include "nirens/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nirens/calibration.hpp"
#include "nirens/error.hpp"
#include "nirens/evalx.hpp"
#include "nirens/io.hpp"
#include "nirens/random.hpp"

namespace nirens {

using json = nlohmann::json;

namespace {

const std::set<std::string> kModelKeys = {
    "seed",          "threads",          "components",        "range.lo",
    "range.hi",      "baseline.order",   "msc.enabled",       "sg.enabled",
    "sg.window",     "sg.poly",          "sg.deriv",          "features.kind",
    "features.k",    "features.temperature", "features.refit_per_member", "mlp.hidden",
    "mlp.max_epochs", "mlp.restarts",    "mlp.lambda0",       "mlp.lm_factor",
    "ensemble.kind", "ensemble.n_models", "ensemble.holdout", "ensemble.alpha",
    "ensemble.base", "baseline_model.max_factors", "baseline_model.folds", "curve.start",
    "curve.step",    "curve.stop",       "curve.methods",     "curve.repeat"};

const std::regex kSynthKey(
    "synth\\.(n_samples|n_points|wn_lo|wn_hi|components|temp_lo|temp_hi|temp_shift|temp_width|"
    "noise_sd|baseline_drift|water_bands|c[0-9]+_lo|c[0-9]+_hi|bands[0-9]+)");

bool is_synth_key(const std::string& key) { return std::regex_match(key, kSynthKey); }

void check_keys(const Config& cfg, bool synth) {
  for (const auto& [key, value] : cfg.values()) {
    const bool known = synth ? (is_synth_key(key) || key == "seed" || key == "threads") : kModelKeys.count(key) != 0;
    if (!known) {
      throw UsageError("unknown configuration key '" + key + "'");
    }
  }
}

// Folds `--key value` / `--key=value` leftovers into the configuration.
void apply_overrides(Config& cfg, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() <= 2) {
      throw UsageError("unexpected argument '" + arg + "'");
    }
    const std::string body = arg.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      cfg.set(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extras.size()) {
      throw UsageError("option '" + arg + "' needs a value");
    }
    cfg.set(body, extras[++i]);
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char text[32];
  std::strftime(text, sizeof text, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return text;
}

json make_manifest(const std::string& command, const Config& cfg, std::uint64_t seed,
                   const std::vector<std::filesystem::path>& inputs, const json& extra,
                   const std::string& started) {
  json digests = json::object();
  for (const auto& in : inputs) {
    digests[in.string()] = "fnv1a64:" + file_digest(in);
  }
  json config = json::object();
  for (const auto& [k, v] : cfg.values()) {
    config[k] = v;
  }
  json m{{"tool", "nirens"},
         {"version", kVersion},
         {"command", command},
         {"seed", seed},
         {"config", config},
         {"inputs", digests},
         {"started", started},
         {"finished", utc_timestamp()}};
  for (const auto& [k, v] : extra.items()) {
    m[k] = v;
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const json& manifest) {
  write_text_atomic(path, manifest.dump(2) + "\n");
}

std::filesystem::path manifest_path_for(const std::filesystem::path& out) {
  auto p = out;
  p += ".manifest.json";
  return p;
}

std::vector<Band> parse_bands(const Config& cfg, const std::string& key,
                              const std::vector<Band>& fallback) {
  if (!cfg.has(key)) {
    return fallback;
  }
  std::vector<Band> bands;
  for (const auto& item : split(cfg.get_string(key, ""), ';')) {
    if (trim(item).empty()) {
      continue;
    }
    const auto parts = split(trim(item), ':');
    Band b;
    if (parts.size() != 3 || !parse_double(parts[0], b.center) ||
        !parse_double(parts[1], b.width) || !parse_double(parts[2], b.amplitude)) {
      throw UsageError(key + ": expected 'center:width:amplitude' items separated by ';'");
    }
    bands.push_back(b);
  }
  return bands;
}

std::vector<std::string> resolve_components(const Config& cfg, const SampleSet& data) {
  auto components = cfg.get_list("components", data.component_names);
  for (const auto& c : components) {
    if (std::find(data.component_names.begin(), data.component_names.end(), c) ==
        data.component_names.end()) {
      throw UsageError("components: dataset has no component '" + c + "'");
    }
  }
  return components;
}

unsigned resolve_threads(const Config& cfg) {
  const auto threads = cfg.get_int("threads", 1);
  if (threads < 1) {
    throw UsageError("threads must be at least 1");
  }
  return static_cast<unsigned>(threads);
}

// --- commands -------------------------------------------------------------

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

Config load_config(const Common& common, const std::vector<std::string>& extras, bool synth) {
  Config cfg = common.config_path.empty() ? Config{} : Config::load(common.config_path);
  apply_overrides(cfg, extras);
  if (common.seed) {
    cfg.set("seed", std::to_string(*common.seed));
  }
  if (common.threads) {
    cfg.set("threads", std::to_string(*common.threads));
  }
  check_keys(cfg, synth);
  return cfg;
}

int cmd_synth(const Common& common, const Config& cfg, std::ostream& out) {
  const std::string started = utc_timestamp();
  const GenConfig gen = gen_config_from(cfg);
  const SampleSet data = generate(gen);
  save_sampleset(data, common.out);
  std::vector<std::filesystem::path> inputs;
  if (!common.config_path.empty()) {
    inputs.emplace_back(common.config_path);
  }
  write_manifest(manifest_path_for(common.out),
                 make_manifest("synth", cfg, gen.seed, inputs,
                               json{{"outputs", {common.out}}, {"n_samples", gen.n_samples}},
                               started));
  out << "wrote " << data.n_samples() << " samples x " << data.n_points() << " points to "
      << common.out << "\n";
  return kExitOk;
}

int cmd_fit(const Common& common, const std::string& dataset, const Config& cfg,
            std::ostream& out) {
  const std::string started = utc_timestamp();
  const SampleSet data = load_sampleset(dataset);
  const PreprocessConfig pre = PreprocessConfig::from_config(cfg);
  const ModelSpec spec = ModelSpec::from_config(cfg);
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const unsigned threads = resolve_threads(cfg);
  std::vector<CalibrationModel> models;
  const auto components = resolve_components(cfg, data);
  for (std::size_t c = 0; c < components.size(); ++c) {
    models.push_back(fit_calibration(data, components[c], pre, spec, derive_seed(seed, c), threads));
  }
  write_text_atomic(common.out, serialize_models(models));
  std::vector<std::filesystem::path> inputs{dataset};
  if (!common.config_path.empty()) {
    inputs.emplace_back(common.config_path);
  }
  write_manifest(manifest_path_for(common.out),
                 make_manifest("fit", cfg, seed, inputs,
                               json{{"outputs", {common.out}}, {"components", components},
                                    {"members", models.front().fitted.n_members()}},
                               started));
  out << "fitted " << components.size() << " component model(s) with "
      << models.front().fitted.n_members() << " member(s) each; wrote " << common.out << "\n";
  return kExitOk;
}

int cmd_predict(const Common& common, const std::string& model_path, const std::string& dataset,
                double alpha, std::ostream& out) {
  const std::string started = utc_timestamp();
  if (!(alpha > 0.0)) {
    throw UsageError("--alpha must be positive");
  }
  const auto models = deserialize_models(read_text(model_path));
  const SampleSet data = load_sampleset(dataset);
  std::vector<std::vector<PredictionInterval>> results;
  for (const auto& m : models) {
    results.push_back(predict_intervals(m, data, alpha));
  }
  std::string text = "sample";
  for (const auto& m : models) {
    for (const char* col : {"_mean", "_sigma", "_lower", "_upper"}) {
      text += "," + m.component + col;
    }
  }
  text += "\n";
  for (Index s = 0; s < data.n_samples(); ++s) {
    text += std::to_string(s);
    for (const auto& r : results) {
      const auto& iv = r[static_cast<std::size_t>(s)];
      for (double v : {iv.mean, iv.sigma, iv.lower, iv.upper}) {
        text += "," + format_double(v);
      }
    }
    text += "\n";
  }
  write_text_atomic(common.out, text);
  Config record;
  record.set("alpha", format_double(alpha));
  write_manifest(manifest_path_for(common.out),
                 make_manifest("predict", record, 0, {model_path, dataset},
                               json{{"outputs", {common.out}}}, started));
  out << "wrote predictions for " << data.n_samples() << " samples to " << common.out << "\n";
  return kExitOk;
}

int cmd_learning_curve(const Common& common, const std::string& dataset, const Config& cfg,
                       int repeat, std::ostream& out) {
  const std::string started = utc_timestamp();
  if (repeat < 1) {
    throw UsageError("--repeat must be at least 1");
  }
  const SampleSet data = load_sampleset(dataset);
  LearningCurveSettings settings;
  settings.start = static_cast<std::size_t>(cfg.get_int("curve.start", 27));
  settings.step = static_cast<std::size_t>(cfg.get_int("curve.step", 30));
  settings.stop = static_cast<std::size_t>(cfg.get_int("curve.stop", 267));
  settings.components = resolve_components(cfg, data);
  settings.preprocess = PreprocessConfig::from_config(cfg);
  settings.threads = resolve_threads(cfg);
  const std::uint64_t seed = cfg.get_u64("seed", 1);
  const ModelSpec base = ModelSpec::from_config(cfg);
  std::vector<ModelSpec> methods;
  for (const auto& name : cfg.get_list("curve.methods", default_methods())) {
    methods.push_back(method_preset(name, base));
  }

  std::vector<LearningCurve> curves;
  for (int r = 0; r < repeat; ++r) {
    settings.seed = repeat == 1 ? seed : seed + std::uint64_t(r);
    curves.push_back(run_learning_curve(data, methods, settings));
  }

  // Results are complete before anything is written.
  const std::filesystem::path dir = common.out;
  std::vector<std::string> written;
  json failures = json::array();
  for (int r = 0; r < repeat; ++r) {
    const auto& curve = curves[static_cast<std::size_t>(r)];
    const std::string prefix = repeat == 1 ? "" : "seed" + std::to_string(curve.seed) + "_";
    for (const auto& p : export_curve(curve, dir, prefix)) {
      written.push_back(p.string());
    }
    for (std::size_t c = 0; c < curve.components.size(); ++c) {
      for (std::size_t k = 0; k < curve.schedule.size(); ++k) {
        for (std::size_t m = 0; m < curve.methods.size(); ++m) {
          if (!curve.errors[c][k][m].empty()) {
            failures.push_back(json{{"seed", curve.seed},
                                    {"component", curve.components[c]},
                                    {"size", curve.schedule[k]},
                                    {"method", curve.methods[m]},
                                    {"error", curve.errors[c][k][m]}});
          }
        }
      }
    }
  }
  if (repeat > 1) {
    for (const auto& p : export_curve(mean_curve(curves), dir, "mean_")) {
      written.push_back(p.string());
    }
  }
  std::vector<std::string> method_names;
  for (const auto& m : methods) {
    method_names.push_back(m.name);
  }
  std::vector<std::string> inputs{dataset};
  if (!common.config_path.empty()) {
    inputs.push_back(common.config_path);
  }
  write_manifest(dir / "manifest.json",
                 make_manifest("learning-curve", cfg, seed,
                               std::vector<std::filesystem::path>(inputs.begin(), inputs.end()),
                               json{{"outputs", written},
                                    {"schedule", curves.front().schedule},
                                    {"methods", method_names},
                                    {"repeat", repeat},
                                    {"failed_cells", failures}},
                               started));
  for (const auto& p : written) {
    out << "wrote " << p << "\n";
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& predictions, const std::string& dataset,
                 const std::string& out_path, std::ostream& out) {
  const SampleSet data = load_sampleset(dataset);
  const std::string text = read_text(predictions);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(predictions + ": missing header");
  }
  const auto header = split(trim(line), ',');
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = split(trim(line), ',');
    if (fields.size() != header.size()) {
      throw DataError(predictions + ": row " + std::to_string(rows.size() + 1) +
                      " has the wrong number of fields");
    }
    std::vector<double> values;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (!parse_double(fields[c], v)) {
        throw DataError(predictions + ": row " + std::to_string(rows.size() + 1) + ", column " +
                        std::to_string(c + 1) + ": not a number");
      }
      values.push_back(v);
    }
    rows.push_back(std::move(values));
  }
  if (static_cast<Index>(rows.size()) != data.n_samples()) {
    throw DataError("prediction file has " + std::to_string(rows.size()) +
                    " rows but the dataset has " + std::to_string(data.n_samples()));
  }
  auto column = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw DataError(predictions + ": missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  std::string report = "component,n,rmse,coverage\n";
  for (const auto& comp : data.component_names) {
    if (std::find(header.begin(), header.end(), comp + "_mean") == header.end()) {
      continue;
    }
    const std::size_t mean_col = column(comp + "_mean");
    const std::size_t sigma_col = column(comp + "_sigma");
    const std::size_t lower_col = column(comp + "_lower");
    const std::size_t upper_col = column(comp + "_upper");
    const Eigen::VectorXd actual = data.concentrations.col(data.component_index(comp));
    Eigen::VectorXd predicted(actual.size());
    std::vector<PredictionInterval> intervals;
    for (std::size_t s = 0; s < rows.size(); ++s) {
      predicted[static_cast<Index>(s)] = rows[s][mean_col];
      PredictionInterval iv;
      iv.mean = rows[s][mean_col];
      iv.sigma = rows[s][sigma_col];
      iv.lower = rows[s][lower_col];
      iv.upper = rows[s][upper_col];
      intervals.push_back(iv);
    }
    report += comp + "," + std::to_string(rows.size()) + "," +
              format_double(rmse(actual, predicted)) + "," +
              format_double(coverage(intervals, actual)) + "\n";
  }
  if (out_path.empty()) {
    out << report;
  } else {
    write_text_atomic(out_path, report);
    out << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

GenConfig gen_config_from(const Config& cfg) {
  GenConfig g;
  g.n_samples = static_cast<std::size_t>(std::max<long long>(0, cfg.get_int("synth.n_samples", 493)));
  g.n_points = static_cast<std::size_t>(std::max<long long>(0, cfg.get_int("synth.n_points", 426)));
  g.wn_lo = cfg.get_double("synth.wn_lo", g.wn_lo);
  g.wn_hi = cfg.get_double("synth.wn_hi", g.wn_hi);
  if (!(g.wn_lo < g.wn_hi)) {
    throw UsageError("synth.wn_lo must be below synth.wn_hi");
  }
  g.component_names = cfg.get_list("synth.components", g.component_names);
  if (g.component_names.size() != g.concentration_ranges.size()) {
    throw UsageError("synth.components: the generator models exactly " +
                     std::to_string(g.concentration_ranges.size()) + " components");
  }
  for (std::size_t c = 0; c < g.concentration_ranges.size(); ++c) {
    const std::string lo_key = "synth.c" + std::to_string(c + 1) + "_lo";
    const std::string hi_key = "synth.c" + std::to_string(c + 1) + "_hi";
    auto& [lo, hi] = g.concentration_ranges[c];
    lo = cfg.get_double(lo_key, lo);
    hi = cfg.get_double(hi_key, hi);
    if (!(lo < hi)) {
      throw UsageError(lo_key + " must be below " + hi_key);
    }
    g.bands[c] = parse_bands(cfg, "synth.bands" + std::to_string(c + 1), g.bands[c]);
  }
  g.water_bands = parse_bands(cfg, "synth.water_bands", g.water_bands);
  g.temp_lo = cfg.get_double("synth.temp_lo", g.temp_lo);
  g.temp_hi = cfg.get_double("synth.temp_hi", g.temp_hi);
  if (!(g.temp_lo < g.temp_hi)) {
    throw UsageError("synth.temp_lo must be below synth.temp_hi");
  }
  g.temp_shift = cfg.get_double("synth.temp_shift", g.temp_shift);
  g.temp_width = cfg.get_double("synth.temp_width", g.temp_width);
  g.noise_sd = cfg.get_double("synth.noise_sd", g.noise_sd);
  g.baseline_drift = cfg.get_double("synth.baseline_drift", g.baseline_drift);
  g.seed = cfg.get_u64("seed", g.seed);
  g.validate();
  return g;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ensemble neural-network calibration of NIR spectra", "nirens"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  std::uint64_t seed_value = 0;
  unsigned threads_value = 1;
  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", common.config_path, "key = value configuration file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed_value, "experiment seed (overrides the config)");
    sub->add_option("--threads", threads_value, "worker threads")->check(CLI::Range(1u, 1024u));
    auto* o = sub->add_option("--out", common.out, "output path");
    if (needs_out) {
      o->required();
    }
    sub->allow_extras();
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset CSV");
  add_common(synth, true);

  std::string dataset;
  auto* fit = app.add_subcommand("fit", "fit calibration models for every component");
  add_common(fit, true);
  fit->add_option("--dataset", dataset, "dataset CSV")->required();

  std::string model_path;
  double alpha = 2.0;
  auto* predict = app.add_subcommand("predict", "predict with confidence intervals");
  add_common(predict, true);
  predict->add_option("--model", model_path, "model file from 'fit'")->required();
  predict->add_option("--dataset", dataset, "dataset CSV")->required();
  predict->add_option("--alpha", alpha, "interval half-width in ensemble standard deviations");

  int repeat = 1;
  auto* curve = app.add_subcommand("learning-curve", "run the growing-training-set experiment");
  add_common(curve, true);
  curve->add_option("--dataset", dataset, "dataset CSV")->required();
  curve->add_option("--repeat", repeat, "number of seeds (seed, seed+1, ...)");

  std::string predictions;
  auto* evaluate = app.add_subcommand("evaluate", "RMSE and interval coverage of predictions");
  add_common(evaluate, false);
  evaluate->add_option("--predictions", predictions, "prediction CSV from 'predict'")->required();
  evaluate->add_option("--dataset", dataset, "dataset CSV with measured values")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed") > 0) {
      common.seed = seed_value;
    }
    if (sub->count("--threads") > 0) {
      common.threads = threads_value;
    }
    const bool is_synth = sub == synth;
    const Config cfg = load_config(common, sub->remaining(), is_synth);
    if (sub == synth) {
      return cmd_synth(common, cfg, out);
    }
    if (sub == fit) {
      return cmd_fit(common, dataset, cfg, out);
    }
    if (sub == predict) {
      if (sub->count("--alpha") == 0) {
        alpha = cfg.get_double("ensemble.alpha", alpha);
      }
      return cmd_predict(common, model_path, dataset, alpha, out);
    }
    if (sub == curve) {
      if (sub->count("--repeat") == 0) {
        repeat = static_cast<int>(cfg.get_int("curve.repeat", 1));
      }
      return cmd_learning_curve(common, dataset, cfg, repeat, out);
    }
    return cmd_evaluate(predictions, dataset, common.out, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace nirens
