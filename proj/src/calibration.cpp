#include "nirens/calibration.hpp"

#include <cmath>

#include <json.hpp>

#include "nirens/error.hpp"
#include "nirens/random.hpp"

namespace nirens {

using json = nlohmann::json;

namespace {

constexpr const char* kFormat = "nirens-model";
constexpr int kFormatVersion = 1;

json to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      data.push_back(m(r, c));
    }
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Index>(data.size()) != rows * cols) {
    throw DataError("model file: matrix data length does not match its shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    }
  }
  return m;
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
json to_json(const Eigen::RowVectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), static_cast<Index>(data.size()));
}

Eigen::RowVectorXd row_from_json(const json& j) { return vector_from_json(j).transpose(); }

json to_json(const PreprocessModel& p) {
  const auto& c = p.config;
  json j{{"range_lo", c.range_lo},     {"range_hi", c.range_hi},   {"baseline_order", c.baseline_order},
         {"msc_enabled", c.msc_enabled}, {"sg_enabled", c.sg_enabled}, {"sg_window", c.sg_window},
         {"sg_poly", c.sg_poly},       {"sg_deriv", c.sg_deriv},   {"wavenumbers", to_json(p.wavenumbers)},
         {"centering", to_json(p.centering.mean_spectrum)}};
  if (p.msc_reference) {
    j["msc_reference"] = to_json(*p.msc_reference);
  }
  return j;
}

PreprocessModel preprocess_from_json(const json& j) {
  PreprocessModel p;
  auto& c = p.config;
  c.range_lo = j.at("range_lo").get<double>();
  c.range_hi = j.at("range_hi").get<double>();
  c.baseline_order = j.at("baseline_order").get<int>();
  c.msc_enabled = j.at("msc_enabled").get<bool>();
  c.sg_enabled = j.at("sg_enabled").get<bool>();
  c.sg_window = j.at("sg_window").get<int>();
  c.sg_poly = j.at("sg_poly").get<int>();
  c.sg_deriv = j.at("sg_deriv").get<int>();
  p.wavenumbers = vector_from_json(j.at("wavenumbers"));
  p.centering.mean_spectrum = row_from_json(j.at("centering"));
  if (j.contains("msc_reference")) {
    p.msc_reference = row_from_json(j.at("msc_reference"));
  }
  return p;
}

json to_json(const FeatureSpec& f) {
  return json{{"kind", to_string(f.projection.kind)},
              {"center", to_json(f.projection.center)},
              {"loadings", to_json(f.projection.loadings)},
              {"explained", f.projection.explained},
              {"include_temperature", f.include_temperature},
              {"temperature_mean", f.temperature_mean},
              {"temperature_std", f.temperature_std}};
}

FeatureSpec feature_spec_from_json(const json& j) {
  FeatureSpec f;
  f.projection.kind = projection_kind_from_string(j.at("kind").get<std::string>());
  f.projection.center = row_from_json(j.at("center"));
  f.projection.loadings = matrix_from_json(j.at("loadings"));
  f.projection.explained = j.at("explained").get<std::vector<double>>();
  f.include_temperature = j.at("include_temperature").get<bool>();
  f.temperature_mean = j.at("temperature_mean").get<double>();
  f.temperature_std = j.at("temperature_std").get<double>();
  return f;
}

json to_json(const Member& member) {
  if (const auto* m = std::get_if<MlpModel>(&member)) {
    return json{{"type", "mlp"},
                {"W1", to_json(m->W1)},
                {"b1", to_json(m->b1)},
                {"W2", to_json(m->W2)},
                {"b2", m->b2},
                {"input_mean", to_json(m->input_mean)},
                {"input_std", to_json(m->input_std)},
                {"target_min", m->target_min},
                {"target_max", m->target_max}};
  }
  const auto& l = std::get<LinearModel>(member);
  return json{{"type", "linear"},
              {"weights", to_json(l.weights)},
              {"intercept", l.intercept},
              {"residual_norm", l.residual_norm}};
}

Member member_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "mlp") {
    MlpModel m;
    m.W1 = matrix_from_json(j.at("W1"));
    m.b1 = vector_from_json(j.at("b1"));
    m.W2 = vector_from_json(j.at("W2"));
    m.b2 = j.at("b2").get<double>();
    m.input_mean = row_from_json(j.at("input_mean"));
    m.input_std = row_from_json(j.at("input_std"));
    m.target_min = j.at("target_min").get<double>();
    m.target_max = j.at("target_max").get<double>();
    return m;
  }
  if (type == "linear") {
    LinearModel l;
    l.weights = vector_from_json(j.at("weights"));
    l.intercept = j.at("intercept").get<double>();
    l.residual_norm = j.at("residual_norm").get<double>();
    return l;
  }
  throw DataError("model file: unknown member type '" + type + "'");
}

json to_json(const ModelSpec& s) {
  return json{{"name", s.name},
              {"family", to_string(s.family)},
              {"resample", to_string(s.resample)},
              {"n_models", s.n_models},
              {"holdout", s.holdout},
              {"feature_kind", to_string(s.feature_kind)},
              {"n_features", s.n_features},
              {"include_temperature", s.include_temperature},
              {"refit_per_member", s.refit_per_member},
              {"n_hidden", s.n_hidden},
              {"max_epochs", s.train.max_epochs},
              {"restarts", s.train.n_restarts},
              {"lambda0", s.train.lm_lambda0},
              {"lm_factor", s.train.lm_factor},
              {"max_factors", s.max_factors},
              {"folds", s.folds}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.name = j.at("name").get<std::string>();
  s.family = model_family_from_string(j.at("family").get<std::string>());
  s.resample = resample_kind_from_string(j.at("resample").get<std::string>());
  s.n_models = j.at("n_models").get<std::size_t>();
  s.holdout = j.at("holdout").get<double>();
  s.feature_kind = projection_kind_from_string(j.at("feature_kind").get<std::string>());
  s.n_features = j.at("n_features").get<Index>();
  s.include_temperature = j.at("include_temperature").get<bool>();
  s.refit_per_member = j.at("refit_per_member").get<bool>();
  s.n_hidden = j.at("n_hidden").get<Index>();
  s.train.max_epochs = j.at("max_epochs").get<int>();
  s.train.n_restarts = j.at("restarts").get<int>();
  s.train.lm_lambda0 = j.at("lambda0").get<double>();
  s.train.lm_factor = j.at("lm_factor").get<double>();
  s.max_factors = j.at("max_factors").get<Index>();
  s.folds = j.at("folds").get<Index>();
  return s;
}

json to_json(const FittedModel& f) {
  if (const auto* pls = std::get_if<PlsRegModel>(&f.model)) {
    return json{{"type", "pls"},
                {"x_center", to_json(pls->x_center)},
                {"y_center", pls->y_center},
                {"weights", to_json(pls->weights)},
                {"loadings", to_json(pls->loadings)},
                {"y_loadings", to_json(pls->y_loadings)},
                {"coefficients", to_json(pls->coefficients)},
                {"cv_rmse", pls->cv_rmse}};
  }
  const auto& e = std::get<Ensemble>(f.model);
  json features = json::array();
  for (const auto& spec : e.features) {
    features.push_back(to_json(spec));
  }
  json members = json::array();
  for (const auto& m : e.members) {
    members.push_back(to_json(m));
  }
  return json{{"type", "ensemble"},
              {"base", to_string(e.base)},
              {"resample", to_string(e.plan.kind)},
              {"plan_seed", e.plan.seed},
              {"n_train", e.plan.n_train},
              {"member_indices", e.plan.member_indices},
              {"features", features},
              {"members", members}};
}

FittedModel fitted_from_json(const json& j, const std::string& component) {
  const auto type = j.at("type").get<std::string>();
  if (type == "pls") {
    PlsRegModel pls;
    pls.x_center = row_from_json(j.at("x_center"));
    pls.y_center = j.at("y_center").get<double>();
    pls.weights = matrix_from_json(j.at("weights"));
    pls.loadings = matrix_from_json(j.at("loadings"));
    pls.y_loadings = vector_from_json(j.at("y_loadings"));
    pls.coefficients = vector_from_json(j.at("coefficients"));
    // Infinite CV entries are written as null.
    for (const auto& v : j.at("cv_rmse")) {
      pls.cv_rmse.push_back(v.is_null() ? INFINITY : v.get<double>());
    }
    return FittedModel{pls};
  }
  if (type != "ensemble") {
    throw DataError("model file: unknown model type '" + type + "'");
  }
  Ensemble e;
  e.component_name = component;
  e.base = base_learner_from_string(j.at("base").get<std::string>());
  e.plan.kind = resample_kind_from_string(j.at("resample").get<std::string>());
  e.plan.seed = j.at("plan_seed").get<std::uint64_t>();
  e.plan.n_train = j.at("n_train").get<std::size_t>();
  e.plan.member_indices = j.at("member_indices").get<std::vector<IndexList>>();
  for (const auto& f : j.at("features")) {
    e.features.push_back(feature_spec_from_json(f));
  }
  for (const auto& m : j.at("members")) {
    e.members.push_back(member_from_json(m));
  }
  if (e.members.empty() || (e.features.size() != 1 && e.features.size() != e.members.size())) {
    throw DataError("model file: inconsistent ensemble member/feature counts");
  }
  return FittedModel{std::move(e)};
}

}  // namespace

PreprocessConfig PreprocessConfig::from_config(const Config& cfg) {
  PreprocessConfig p;
  p.range_lo = cfg.get_double("range.lo", p.range_lo);
  p.range_hi = cfg.get_double("range.hi", p.range_hi);
  p.baseline_order = static_cast<int>(cfg.get_int("baseline.order", p.baseline_order));
  p.msc_enabled = cfg.get_bool("msc.enabled", p.msc_enabled);
  p.sg_enabled = cfg.get_bool("sg.enabled", p.sg_enabled);
  p.sg_window = static_cast<int>(cfg.get_int("sg.window", p.sg_window));
  p.sg_poly = static_cast<int>(cfg.get_int("sg.poly", p.sg_poly));
  p.sg_deriv = static_cast<int>(cfg.get_int("sg.deriv", p.sg_deriv));
  p.validate();
  return p;
}

void PreprocessConfig::validate() const {
  if (!(range_lo < range_hi)) {
    throw UsageError("range.lo must be below range.hi");
  }
  if (baseline_order < 0 || baseline_order > 2) {
    throw UsageError("baseline.order must be 0, 1 or 2");
  }
  if (sg_enabled) {
    try {
      SgFilter(sg_window, sg_poly, sg_deriv);
    } catch (const UsageError& e) {
      throw UsageError(std::string("sg.window/sg.poly/sg.deriv: ") + e.what());
    }
  }
}

PreprocessModel fit_preprocess(const PreprocessConfig& cfg, const SampleSet& train) {
  cfg.validate();
  const SampleSet ranged = select_range(train, cfg.range_lo, cfg.range_hi);
  PreprocessModel model;
  model.config = cfg;
  model.wavenumbers = ranged.wavenumbers;
  Eigen::MatrixXd X = baseline_correct(ranged.wavenumbers, ranged.absorbance, cfg.baseline_order);
  if (cfg.msc_enabled) {
    model.msc_reference = Eigen::RowVectorXd(X.colwise().mean());
    X = msc(X, model.msc_reference);
  }
  if (cfg.sg_enabled) {
    X = apply_sg(build_sg(cfg.sg_window, cfg.sg_poly, cfg.sg_deriv), ranged.wavenumbers, X);
  }
  model.centering = fit_centering(X);
  return model;
}

Eigen::MatrixXd apply_preprocess(const PreprocessModel& model, const SampleSet& set) {
  const auto& cfg = model.config;
  const SampleSet ranged = select_range(set, cfg.range_lo, cfg.range_hi);
  if (ranged.n_points() != model.wavenumbers.size() ||
      !ranged.wavenumbers.isApprox(model.wavenumbers, 1e-9)) {
    throw DataError("dataset wavenumber grid does not match the model grid (" +
                    std::to_string(ranged.n_points()) + " vs " +
                    std::to_string(model.wavenumbers.size()) + " points in range)");
  }
  Eigen::MatrixXd X = baseline_correct(ranged.wavenumbers, ranged.absorbance, cfg.baseline_order);
  if (cfg.msc_enabled) {
    X = msc(X, model.msc_reference);
  }
  if (cfg.sg_enabled) {
    X = apply_sg(build_sg(cfg.sg_window, cfg.sg_poly, cfg.sg_deriv), ranged.wavenumbers, X);
  }
  return apply_centering(model.centering, X);
}

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::mlp:
      return "mlp";
    case ModelFamily::linear:
      return "linear";
    case ModelFamily::pls_baseline:
      break;
  }
  return "pls_baseline";
}

ModelFamily model_family_from_string(const std::string& text) {
  if (text == "mlp") {
    return ModelFamily::mlp;
  }
  if (text == "linear") {
    return ModelFamily::linear;
  }
  if (text == "pls_baseline") {
    return ModelFamily::pls_baseline;
  }
  throw UsageError("ensemble.base: unknown model family '" + text +
                   "' (expected mlp, linear or pls_baseline)");
}

ModelSpec ModelSpec::from_config(const Config& cfg) {
  ModelSpec s;
  s.family = model_family_from_string(cfg.get_string("ensemble.base", "mlp"));
  s.resample = resample_kind_from_string(cfg.get_string("ensemble.kind", "bootstrap"));
  const auto n_models = cfg.get_int("ensemble.n_models", 70);
  if (n_models < 1) {
    throw UsageError("ensemble.n_models must be at least 1");
  }
  s.n_models = static_cast<std::size_t>(n_models);
  s.holdout = cfg.get_double("ensemble.holdout", s.holdout);
  s.feature_kind = projection_kind_from_string(cfg.get_string("features.kind", "pls_x"));
  s.n_features = cfg.get_int("features.k", s.n_features);
  s.include_temperature = cfg.get_bool("features.temperature", s.include_temperature);
  s.refit_per_member = cfg.get_bool("features.refit_per_member", s.refit_per_member);
  s.n_hidden = cfg.get_int("mlp.hidden", s.n_hidden);
  s.train.max_epochs = static_cast<int>(cfg.get_int("mlp.max_epochs", s.train.max_epochs));
  s.train.n_restarts = static_cast<int>(cfg.get_int("mlp.restarts", s.train.n_restarts));
  s.train.lm_lambda0 = cfg.get_double("mlp.lambda0", s.train.lm_lambda0);
  s.train.lm_factor = cfg.get_double("mlp.lm_factor", s.train.lm_factor);
  s.max_factors = cfg.get_int("baseline_model.max_factors", s.max_factors);
  s.folds = cfg.get_int("baseline_model.folds", s.folds);
  s.name = s.family == ModelFamily::pls_baseline
               ? "pls_baseline"
               : to_string(s.resample) + "_" + to_string(s.feature_kind) + "_" + to_string(s.family);
  s.validate();
  return s;
}

void ModelSpec::validate() const {
  if (n_features < 1) {
    throw UsageError("features.k must be at least 1");
  }
  if (n_hidden < 1) {
    throw UsageError("mlp.hidden must be at least 1");
  }
  if (family == ModelFamily::mlp) {
    train.validate();
  }
  if (!(holdout > 0.0 && holdout < 1.0)) {
    throw UsageError("ensemble.holdout must lie in (0, 1)");
  }
  if (n_models < 1) {
    throw UsageError("ensemble.n_models must be at least 1");
  }
  if (family == ModelFamily::pls_baseline) {
    if (max_factors < 1) {
      throw UsageError("baseline_model.max_factors must be at least 1");
    }
    if (folds < 2) {
      throw UsageError("baseline_model.folds must be at least 2");
    }
  }
}

std::size_t FittedModel::n_members() const {
  if (const auto* e = std::get_if<Ensemble>(&model)) {
    return e->size();
  }
  return 1;
}

Eigen::MatrixXd FittedModel::member_predictions(const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& temperatures) const {
  if (const auto* e = std::get_if<Ensemble>(&model)) {
    return predict_members(*e, X, temperatures);
  }
  return predict_pls(std::get<PlsRegModel>(model), X);
}

FittedModel fit_model(const ModelSpec& spec, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& temperatures, const Eigen::VectorXd& y,
                      const std::string& component, std::uint64_t seed, unsigned threads) {
  spec.validate();
  if (spec.family == ModelFamily::pls_baseline) {
    const Index folds = std::min<Index>(spec.folds, X.rows());
    return FittedModel{fit_pls_cv(X, y, spec.max_factors, folds, derive_seed(seed, 3))};
  }
  const auto n = static_cast<std::size_t>(X.rows());
  ResamplePlan plan;
  switch (spec.resample) {
    case ResampleKind::bootstrap:
      plan = bootstrap_plan(n, spec.n_models, derive_seed(seed, 1));
      break;
    case ResampleKind::cross_validation:
      plan = cv_plan(n, spec.holdout, spec.n_models, derive_seed(seed, 1));
      break;
    case ResampleKind::none:
      plan = identity_plan(n);
      break;
  }
  EnsembleConfig cfg;
  cfg.base = spec.family == ModelFamily::mlp ? BaseLearner::mlp : BaseLearner::linear;
  cfg.feature_kind = spec.feature_kind;
  cfg.n_features = spec.n_features;
  cfg.include_temperature = spec.include_temperature;
  cfg.refit_per_member = spec.refit_per_member;
  cfg.n_hidden = spec.n_hidden;
  cfg.train = spec.train;
  cfg.train.seed = derive_seed(seed, 2);
  cfg.threads = threads;
  return FittedModel{fit_ensemble(X, temperatures, y, component, plan, cfg)};
}

CalibrationModel fit_calibration(const SampleSet& train, const std::string& component,
                                 const PreprocessConfig& pre, const ModelSpec& spec,
                                 std::uint64_t seed, unsigned threads) {
  CalibrationModel model;
  model.component = component;
  model.spec = spec;
  model.preprocess = fit_preprocess(pre, train);
  const Eigen::MatrixXd X = apply_preprocess(model.preprocess, train);
  const Index c = train.component_index(component);
  model.fitted = fit_model(spec, X, train.temperatures, train.concentrations.col(c), component,
                           seed, threads);
  return model;
}

std::vector<PredictionInterval> predict_intervals(const CalibrationModel& model,
                                                  const SampleSet& set, double alpha) {
  const Eigen::MatrixXd X = apply_preprocess(model.preprocess, set);
  return intervals_from_members(model.fitted.member_predictions(X, set.temperatures), alpha);
}

std::string serialize_models(const std::vector<CalibrationModel>& models) {
  json components = json::array();
  for (const auto& m : models) {
    components.push_back(json{{"component", m.component},
                              {"spec", to_json(m.spec)},
                              {"preprocess", to_json(m.preprocess)},
                              {"model", to_json(m.fitted)}});
  }
  const json doc{{"format", kFormat}, {"version", kFormatVersion}, {"components", components}};
  return doc.dump(1) + "\n";
}

std::vector<CalibrationModel> deserialize_models(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kFormat) {
      throw DataError("not a nirens model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kFormatVersion) {
      throw DataError("unsupported model file version " + std::to_string(version));
    }
    std::vector<CalibrationModel> out;
    for (const auto& c : doc.at("components")) {
      CalibrationModel m;
      m.component = c.at("component").get<std::string>();
      m.spec = spec_from_json(c.at("spec"));
      m.preprocess = preprocess_from_json(c.at("preprocess"));
      m.fitted = fitted_from_json(c.at("model"), m.component);
      out.push_back(std::move(m));
    }
    if (out.empty()) {
      throw DataError("model file holds no components");
    }
    return out;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace nirens
