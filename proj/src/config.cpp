#include "vpsgd/config.hpp"

#include "vpsgd/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace vpsgd {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw UsageError("config field \"" + field + "\": " + why);
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

const json& require(const json& j, const char* key, const std::string& where = "") {
  const std::string field = where.empty() ? key : where + "." + key;
  if (!j.is_object() || !j.contains(key)) fail(field, "missing required key");
  return j.at(key);
}

double as_double(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(field, "must be finite");
  return x;
}

std::int64_t as_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "expected an integer");
  return v.get<std::int64_t>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd as_vector(const json& v, const std::string& field) {
  if (!v.is_array()) fail(field, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Index>(i)] = as_double(v[i], field);
  return out;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// Re-throws errors from the typed enum parsers with the field name attached.
template <class F>
auto parse_enum(const json& v, const std::string& field, F&& f) {
  const std::string s = as_string(v, field);
  try {
    return f(s);
  } catch (const UsageError& e) {
    fail(field, e.what());
  }
}

}  // namespace

bool operator==(const ThetaInit& a, const ThetaInit& b) {
  auto same = [](const ParamVec& x, const ParamVec& y) { return x.size() == y.size() && x == y; };
  return a.kind == b.kind && same(a.lower, b.lower) && same(a.upper, b.upper) && same(a.value, b.value);
}

bool operator==(const Target& a, const Target& b) {
  return a.kind == b.kind && a.value.size() == b.value.size() && a.value == b.value;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.name == b.name && a.model == b.model && a.model_options.sigma == b.model_options.sigma &&
         a.model_options.weight == b.model_options.weight && a.n == b.n && a.m == b.m && a.dt == b.dt &&
         a.steps == b.steps && a.truth == b.truth && a.initial_law == b.initial_law && a.theta_init == b.theta_init &&
         a.mask == b.mask && a.variants == b.variants && a.rate == b.rate && a.clock == b.clock &&
         a.index_policy == b.index_policy && a.j == b.j && a.k == b.k && a.projection == b.projection &&
         a.seeds == b.seeds && a.record_stride == b.record_stride && a.output == b.output && a.target == b.target &&
         a.l2_window == b.l2_window && a.sweep == b.sweep;
}

Model ExperimentConfig::make_model() const { return Model::from_name(model, model_options); }

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw UsageError(std::string(source) + ": malformed JSON: " + e.what());
  }
  if (!root.is_object()) throw UsageError(std::string(source) + ": top level must be an object");
  reject_unknown(root, "",
                 {"name", "model", "N", "M", "dt", "steps", "truth", "initial_law", "theta_init", "mask", "variants",
                  "learning_rate", "clock", "index_policy", "indices", "projection", "seeds", "record_stride",
                  "output", "target", "l2_window", "sweep"});

  ExperimentConfig c;
  if (root.contains("name")) c.name = as_string(root["name"], "name");

  const json& model = require(root, "model");
  if (model.is_string()) {
    c.model = model.get<std::string>();
  } else if (model.is_object()) {
    reject_unknown(model, "model", {"name", "sigma", "weight"});
    c.model = as_string(require(model, "name", "model"), "model.name");
    if (model.contains("sigma")) c.model_options.sigma = as_double(model["sigma"], "model.sigma");
    if (model.contains("weight")) {
      c.model_options.weight = parse_enum(model["weight"], "model.weight", weight_mode_from_string);
    }
  } else {
    fail("model", "expected a model name or an object");
  }

  c.n = as_int(require(root, "N"), "N");
  c.m = as_int(require(root, "M"), "M");
  c.dt = as_double(require(root, "dt"), "dt");
  c.steps = as_int(require(root, "steps"), "steps");

  {
    const json& v = require(root, "truth");
    if (!v.is_array() || v.empty()) fail("truth", "expected a parameter vector or a list of {until_step, theta}");
    std::vector<TruthSchedule::Segment> segments;
    if (v[0].is_number()) {
      segments.push_back({std::max<std::int64_t>(c.steps, 1), as_vector(v, "truth")});
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string where = "truth[" + std::to_string(i) + "]";
        if (!v[i].is_object()) fail(where, "expected an object");
        reject_unknown(v[i], where, {"until_step", "theta"});
        segments.push_back({as_int(require(v[i], "until_step", where), where + ".until_step"),
                            as_vector(require(v[i], "theta", where), where + ".theta")});
      }
    }
    try {
      c.truth = TruthSchedule(std::move(segments));
    } catch (const std::exception& e) {
      fail("truth", e.what());
    }
  }

  const Index p = c.truth.segments().front().theta.size();

  if (root.contains("initial_law")) {
    const json& v = root["initial_law"];
    if (!v.is_object()) fail("initial_law", "expected an object");
    const std::string kind = as_string(require(v, "kind", "initial_law"), "initial_law.kind");
    if (kind == "gaussian") {
      reject_unknown(v, "initial_law", {"kind", "mean", "sd"});
      c.initial_law.kind = InitialLaw::Kind::gaussian;
      c.initial_law.a = as_vector(require(v, "mean", "initial_law"), "initial_law.mean");
      c.initial_law.b = as_vector(require(v, "sd", "initial_law"), "initial_law.sd");
    } else if (kind == "uniform") {
      reject_unknown(v, "initial_law", {"kind", "lower", "upper"});
      c.initial_law.kind = InitialLaw::Kind::uniform;
      c.initial_law.a = as_vector(require(v, "lower", "initial_law"), "initial_law.lower");
      c.initial_law.b = as_vector(require(v, "upper", "initial_law"), "initial_law.upper");
    } else if (kind == "explicit") {
      reject_unknown(v, "initial_law", {"kind", "positions"});
      const json& rows = require(v, "positions", "initial_law");
      if (!rows.is_array() || rows.empty()) fail("initial_law.positions", "expected a non-empty list of rows");
      c.initial_law.kind = InitialLaw::Kind::explicit_positions;
      const Index cols = static_cast<Index>(rows[0].is_array() ? rows[0].size() : 0);
      c.initial_law.positions.resize(static_cast<Index>(rows.size()), cols);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const Eigen::VectorXd r = as_vector(rows[i], "initial_law.positions");
        if (r.size() != cols) fail("initial_law.positions", "ragged rows");
        c.initial_law.positions.row(static_cast<Index>(i)) = r.transpose();
      }
    } else {
      fail("initial_law.kind", "expected gaussian, uniform or explicit");
    }
  } else {
    try {
      c.initial_law = InitialLaw::standard_gaussian(c.make_model().state_dim());
    } catch (const UsageError& e) {
      fail("model", e.what());
    }
  }

  if (root.contains("theta_init")) {
    const json& v = root["theta_init"];
    if (v.is_array()) {
      c.theta_init.kind = ThetaInit::Kind::explicit_value;
      c.theta_init.value = as_vector(v, "theta_init");
    } else if (v.is_object()) {
      const std::string kind = as_string(require(v, "kind", "theta_init"), "theta_init.kind");
      if (kind == "uniform") {
        reject_unknown(v, "theta_init", {"kind", "lower", "upper"});
        c.theta_init.kind = ThetaInit::Kind::uniform;
        c.theta_init.lower = as_vector(require(v, "lower", "theta_init"), "theta_init.lower");
        c.theta_init.upper = as_vector(require(v, "upper", "theta_init"), "theta_init.upper");
      } else if (kind == "explicit") {
        reject_unknown(v, "theta_init", {"kind", "value"});
        c.theta_init.kind = ThetaInit::Kind::explicit_value;
        c.theta_init.value = as_vector(require(v, "value", "theta_init"), "theta_init.value");
      } else {
        fail("theta_init.kind", "expected uniform or explicit");
      }
    } else {
      fail("theta_init", "expected a vector or an object");
    }
  } else {
    c.theta_init.kind = ThetaInit::Kind::explicit_value;
    c.theta_init.value = c.truth.at(0);
  }

  if (root.contains("mask")) {
    const json& v = root["mask"];
    if (!v.is_array()) fail("mask", "expected an array of booleans");
    for (const auto& b : v) {
      if (!b.is_boolean()) fail("mask", "expected an array of booleans");
      c.mask.push_back(b.get<bool>());
    }
  } else {
    c.mask.assign(static_cast<std::size_t>(p), true);
  }

  if (root.contains("variants")) {
    const json& v = root["variants"];
    if (!v.is_array() || v.empty()) fail("variants", "expected a non-empty array");
    c.variants.clear();
    for (const auto& s : v) c.variants.push_back(parse_enum(s, "variants", variant_from_string));
  }

  {
    const json& v = require(root, "learning_rate");
    if (!v.is_object()) fail("learning_rate", "expected an object");
    const std::string kind = as_string(require(v, "kind", "learning_rate"), "learning_rate.kind");
    try {
      if (kind == "polynomial") {
        reject_unknown(v, "learning_rate", {"kind", "c", "beta"});
        c.rate = LearningRate::polynomial(as_double(require(v, "c", "learning_rate"), "learning_rate.c"),
                                          as_double(require(v, "beta", "learning_rate"), "learning_rate.beta"));
      } else if (kind == "constant") {
        reject_unknown(v, "learning_rate", {"kind", "c"});
        c.rate = LearningRate::constant(as_double(require(v, "c", "learning_rate"), "learning_rate.c"));
      } else {
        fail("learning_rate.kind", "expected polynomial or constant");
      }
    } catch (const UsageError& e) {
      if (std::string(e.what()).rfind("config field", 0) == 0) throw;
      fail("learning_rate", e.what());
    }
  }

  if (root.contains("clock")) c.clock = parse_enum(root["clock"], "clock", clock_from_string);
  if (root.contains("index_policy")) {
    c.index_policy = parse_enum(root["index_policy"], "index_policy", index_policy_from_string);
  }
  if (root.contains("indices")) {
    const json& v = root["indices"];
    if (!v.is_array() || v.size() != 2) fail("indices", "expected [j, k]");
    c.j = as_int(v[0], "indices");
    c.k = as_int(v[1], "indices");
  }
  if (root.contains("projection")) {
    const json& v = root["projection"];
    if (!v.is_object()) fail("projection", "expected {lower, upper}");
    reject_unknown(v, "projection", {"lower", "upper"});
    c.projection = Box{as_vector(require(v, "lower", "projection"), "projection.lower"),
                       as_vector(require(v, "upper", "projection"), "projection.upper")};
  }
  if (root.contains("seeds")) {
    const json& v = root["seeds"];
    if (!v.is_array()) fail("seeds", "expected an array of non-negative integers");
    c.seeds.clear();
    for (const auto& s : v) {
      if (!s.is_number_unsigned()) fail("seeds", "expected an array of non-negative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  if (root.contains("record_stride")) c.record_stride = as_int(root["record_stride"], "record_stride");
  if (root.contains("output")) c.output = as_string(root["output"], "output");
  if (root.contains("target")) {
    const json& v = root["target"];
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "truth") {
        c.target.kind = Target::Kind::truth;
      } else if (s == "pseudo") {
        c.target.kind = Target::Kind::pseudo;
      } else {
        fail("target", "expected \"truth\", \"pseudo\" or a parameter vector");
      }
    } else {
      c.target.kind = Target::Kind::explicit_value;
      c.target.value = as_vector(v, "target");
    }
  }
  if (root.contains("l2_window")) c.l2_window = as_double(root["l2_window"], "l2_window");
  if (root.contains("sweep")) {
    const json& v = root["sweep"];
    if (!v.is_object()) fail("sweep", "expected {axis, values}");
    reject_unknown(v, "sweep", {"axis", "values"});
    SweepSpec s;
    s.axis = as_string(require(v, "axis", "sweep"), "sweep.axis");
    const json& vals = require(v, "values", "sweep");
    if (!vals.is_array()) fail("sweep.values", "expected an array of integers");
    for (const auto& x : vals) s.values.push_back(as_int(x, "sweep.values"));
    c.sweep = std::move(s);
  }

  validate_config(c);
  return c;
}

void validate_config(const ExperimentConfig& c) {
  Model model = [&] {
    try {
      return c.make_model();
    } catch (const UsageError& e) {
      fail("model", e.what());
    }
  }();
  const Index p = model.param_dim();
  const Index d = model.state_dim();
  if (c.n < 1) fail("N", "must be >= 1");
  if (c.m < 1) fail("M", "must be >= 1");
  if (!(c.dt > 0.0)) fail("dt", "must be > 0");
  if (c.steps < 1) fail("steps", "must be >= 1");
  if (c.truth.empty()) fail("truth", "missing");
  for (const auto& s : c.truth.segments()) {
    if (s.theta.size() != p) fail("truth", "parameter length must be " + std::to_string(p));
  }
  try {
    c.truth.check_covers(c.steps);
  } catch (const UsageError& e) {
    fail("truth", e.what());
  }
  switch (c.initial_law.kind) {
    case InitialLaw::Kind::gaussian:
      if (c.initial_law.a.size() != d || c.initial_law.b.size() != d) fail("initial_law", "mean/sd length must be d");
      if ((c.initial_law.b.array() < 0.0).any()) fail("initial_law.sd", "must be >= 0");
      break;
    case InitialLaw::Kind::uniform:
      if (c.initial_law.a.size() != d || c.initial_law.b.size() != d) fail("initial_law", "bound length must be d");
      if ((c.initial_law.a.array() > c.initial_law.b.array()).any()) fail("initial_law", "bounds must be ordered");
      break;
    case InitialLaw::Kind::explicit_positions:
      if (c.initial_law.positions.cols() != d) fail("initial_law.positions", "rows must have length d");
      if (c.initial_law.positions.rows() < std::max(c.n, c.m)) {
        fail("initial_law.positions", "needs at least max(N, M) rows");
      }
      break;
  }
  if (c.theta_init.kind == ThetaInit::Kind::uniform) {
    if (c.theta_init.lower.size() != p || c.theta_init.upper.size() != p) fail("theta_init", "bound length must be p");
    if ((c.theta_init.lower.array() > c.theta_init.upper.array()).any()) fail("theta_init", "bounds must be ordered");
  } else if (c.theta_init.value.size() != p) {
    fail("theta_init", "length must be " + std::to_string(p));
  }
  if (static_cast<Index>(c.mask.size()) != p) fail("mask", "length must be " + std::to_string(p));
  if (c.variants.empty()) fail("variants", "at least one variant required");
  for (std::size_t a = 0; a < c.variants.size(); ++a)
    for (std::size_t b = a + 1; b < c.variants.size(); ++b)
      if (c.variants[a] == c.variants[b]) fail("variants", "duplicate variant");
  if (c.j < 0 || c.j >= c.m || c.k < 0 || c.k >= c.m) fail("indices", "must lie in [0, M)");
  if (c.projection) {
    if (c.projection->lower.size() != p || c.projection->upper.size() != p) fail("projection", "length must be p");
    if ((c.projection->lower.array() > c.projection->upper.array()).any()) fail("projection", "bounds must be ordered");
  }
  if (c.seeds.empty()) fail("seeds", "at least one seed required");
  if (c.record_stride < 1) fail("record_stride", "must be >= 1");
  if (c.target.kind == Target::Kind::explicit_value && c.target.value.size() != p) fail("target", "length must be p");
  if (c.target.kind == Target::Kind::pseudo && c.model != "quadratic") {
    fail("target", "pseudo targets exist only for the quadratic model");
  }
  if (c.l2_window && !(*c.l2_window > 0.0 && *c.l2_window <= 1.0)) fail("l2_window", "must lie in (0, 1]");
  if (c.sweep) {
    if (c.sweep->axis != "N" && c.sweep->axis != "M") fail("sweep.axis", "must be \"N\" or \"M\"");
    if (c.sweep->values.empty()) fail("sweep.values", "must be non-empty");
    for (auto v : c.sweep->values)
      if (v < 1) fail("sweep.values", "must be positive");
  }
}

std::string serialize_config(const ExperimentConfig& c) {
  json root;
  root["name"] = c.name;
  json model{{"name", c.model}};
  if (c.model_options.sigma) model["sigma"] = *c.model_options.sigma;
  if (c.model_options.weight) model["weight"] = std::string(to_string(*c.model_options.weight));
  root["model"] = model;
  root["N"] = c.n;
  root["M"] = c.m;
  root["dt"] = c.dt;
  root["steps"] = c.steps;
  json truth = json::array();
  for (const auto& s : c.truth.segments()) truth.push_back({{"until_step", s.until_step}, {"theta", vector_json(s.theta)}});
  root["truth"] = truth;
  switch (c.initial_law.kind) {
    case InitialLaw::Kind::gaussian:
      root["initial_law"] = {{"kind", "gaussian"}, {"mean", vector_json(c.initial_law.a)}, {"sd", vector_json(c.initial_law.b)}};
      break;
    case InitialLaw::Kind::uniform:
      root["initial_law"] = {{"kind", "uniform"}, {"lower", vector_json(c.initial_law.a)}, {"upper", vector_json(c.initial_law.b)}};
      break;
    case InitialLaw::Kind::explicit_positions: {
      json rows = json::array();
      for (Index i = 0; i < c.initial_law.positions.rows(); ++i) {
        rows.push_back(vector_json(c.initial_law.positions.row(i).transpose()));
      }
      root["initial_law"] = {{"kind", "explicit"}, {"positions", rows}};
      break;
    }
  }
  if (c.theta_init.kind == ThetaInit::Kind::uniform) {
    root["theta_init"] = {{"kind", "uniform"}, {"lower", vector_json(c.theta_init.lower)}, {"upper", vector_json(c.theta_init.upper)}};
  } else {
    root["theta_init"] = {{"kind", "explicit"}, {"value", vector_json(c.theta_init.value)}};
  }
  json mask = json::array();
  for (bool b : c.mask) mask.push_back(b);
  root["mask"] = mask;
  json variants = json::array();
  for (auto v : c.variants) variants.push_back(std::string(to_string(v)));
  root["variants"] = variants;
  if (c.rate.kind == LearningRate::Kind::polynomial) {
    root["learning_rate"] = {{"kind", "polynomial"}, {"c", c.rate.c}, {"beta", c.rate.beta}};
  } else {
    root["learning_rate"] = {{"kind", "constant"}, {"c", c.rate.c}};
  }
  root["clock"] = std::string(to_string(c.clock));
  root["index_policy"] = std::string(to_string(c.index_policy));
  root["indices"] = {c.j, c.k};
  if (c.projection) {
    root["projection"] = {{"lower", vector_json(c.projection->lower)}, {"upper", vector_json(c.projection->upper)}};
  }
  root["seeds"] = c.seeds;
  root["record_stride"] = c.record_stride;
  root["output"] = c.output;
  switch (c.target.kind) {
    case Target::Kind::truth: root["target"] = "truth"; break;
    case Target::Kind::pseudo: root["target"] = "pseudo"; break;
    case Target::Kind::explicit_value: root["target"] = vector_json(c.target.value); break;
  }
  if (c.l2_window) root["l2_window"] = *c.l2_window;
  if (c.sweep) root["sweep"] = {{"axis", c.sweep->axis}, {"values", c.sweep->values}};
  return root.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

ExperimentConfig scale_config(const ExperimentConfig& config, double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw UsageError("scale must lie in (0, 1]");
  if (scale == 1.0) return config;
  ExperimentConfig c = config;
  const auto shrink = [scale](std::int64_t v) {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(static_cast<double>(v) * scale)));
  };
  c.steps = shrink(config.steps);
  std::vector<TruthSchedule::Segment> segments;
  for (const auto& s : config.truth.segments()) {
    std::int64_t until = shrink(s.until_step);
    if (!segments.empty() && until <= segments.back().until_step) until = segments.back().until_step + 1;
    segments.push_back({until, s.theta});
  }
  if (segments.back().until_step < c.steps) segments.back().until_step = c.steps;
  c.truth = TruthSchedule(std::move(segments));
  const auto keep = static_cast<std::size_t>(std::ceil(static_cast<double>(config.seeds.size()) * scale));
  c.seeds.resize(std::max<std::size_t>(1, keep));
  validate_config(c);
  return c;
}

}  // namespace vpsgd
