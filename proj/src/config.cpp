#include "fairtrain/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace fairtrain {

using nlohmann::json;

namespace {

std::string child_pointer(const std::string& parent, const std::string& key) {
  std::string escaped;
  for (char ch : key) {
    if (ch == '~') {
      escaped += "~0";
    } else if (ch == '/') {
      escaped += "~1";
    } else {
      escaped += ch;
    }
  }
  return parent + "/" + escaped;
}

std::string type_name(const json& j) { return j.type_name(); }

template <typename T>
T convert(const json& j, const std::string& ptr);

template <>
double convert<double>(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw ConfigError(ptr, "expected a number, found " + type_name(j));
  return j.get<double>();
}

template <>
std::size_t convert<std::size_t>(const json& j, const std::string& ptr) {
  if (j.is_number_unsigned()) return j.get<std::size_t>();
  // Integers built in code are stored signed even when non-negative.
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() >= 0) return static_cast<std::size_t>(j.get<std::int64_t>());
    throw ConfigError(ptr, "expected a non-negative integer");
  }
  throw ConfigError(ptr, "expected a non-negative integer, found " + type_name(j));
}

template <>
int convert<int>(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) throw ConfigError(ptr, "expected an integer, found " + type_name(j));
  return j.get<int>();
}

template <>
std::string convert<std::string>(const json& j, const std::string& ptr) {
  if (!j.is_string()) throw ConfigError(ptr, "expected a string, found " + type_name(j));
  return j.get<std::string>();
}

template <typename T>
std::vector<T> convert_list(const json& j, const std::string& ptr) {
  if (!j.is_array()) throw ConfigError(ptr, "expected an array, found " + type_name(j));
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(convert<T>(j[i], ptr + "/" + std::to_string(i)));
  return out;
}

// Reads keys of one JSON object and rejects the ones nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
    if (!j_.is_object()) throw ConfigError(ptr_, "expected an object, found " + type_name(j_));
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return child_pointer(ptr_, key); }
  const std::string& pointer() const { return ptr_; }

  const json& child(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(at(key), "missing required key");
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T require(const std::string& key) {
    return convert<T>(child(key), at(key));
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return require<T>(key);
  }

  template <typename T>
  std::vector<T> get_list(const std::string& key, std::vector<T> fallback) {
    if (!has(key)) return fallback;
    return convert_list<T>(child(key), at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

// Runs a library validator and reports its message at `ptr`.
template <typename F>
void checked(const std::string& ptr, F&& f) {
  try {
    f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ptr, e.what());
  }
}

StGhConfig parse_stgh(ObjectReader& r) {
  StGhConfig c;
  c.p0 = r.get("p0", c.p0);
  c.alpha0 = r.get("alpha0", c.alpha0);
  c.alpha_hat = r.get("alpha_hat", c.alpha_hat);
  c.rho = r.get("rho", c.rho);
  c.tau = r.get("tau", c.tau);
  c.beta = r.get("beta", c.beta);
  c.lambda = r.get("lambda", c.lambda);
  c.iterations = r.get("iterations", c.iterations);
  c.base_batch = r.get("base_batch", c.base_batch);
  c.max_level = r.get("max_level", c.max_level);
  c.max_skip_fraction = r.get("max_skip_fraction", c.max_skip_fraction);
  checked(r.pointer(), [&] { c.validate(); });
  return c;
}

AlmConfig parse_alm(ObjectReader& r, bool plain) {
  AlmConfig c;
  if (plain) c.mu = 0.0;
  c.mu = r.get("mu", c.mu);
  if (plain && c.mu != 0.0) throw ConfigError(r.at("mu"), "alm is the mu = 0 variant; use ssl_alm for mu > 0");
  c.rho = r.get("rho", c.rho);
  c.tau = r.get("tau", c.tau);
  c.eta = r.get("eta", c.eta);
  c.beta = r.get("beta", c.beta);
  c.multiplier_bound = r.get("multiplier_bound", c.multiplier_bound);
  c.iterations = r.get("iterations", c.iterations);
  c.objective_batch = r.get("objective_batch", c.objective_batch);
  c.constraint_batch = r.get("constraint_batch", c.constraint_batch);
  checked(r.pointer(), [&] { c.validate(); });
  return c;
}

SswConfig parse_ssw(ObjectReader& r) {
  SswConfig c;
  c.eta_f = r.get("eta_f", c.eta_f);
  c.eta_c = r.get("eta_c", c.eta_c);
  c.eps0 = r.get("eps0", c.eps0);
  c.switch_iter = r.get("switch_iter", c.switch_iter);
  c.decay = r.get("decay", c.decay);
  c.objective_batch = r.get("objective_batch", c.objective_batch);
  c.constraint_batch = r.get("constraint_batch", c.constraint_batch);
  c.step_batch = r.get("step_batch", c.step_batch);
  c.k0 = r.get("k0", c.k0);
  c.iterations = r.get("iterations", c.iterations);
  checked(r.pointer(), [&] { c.validate(); });
  return c;
}

SgdConfig parse_sgd(ObjectReader& r, double& penalty) {
  SgdConfig c;
  c.lr = r.get("lr", c.lr);
  c.batch = r.get("batch", c.batch);
  c.iterations = r.get("iterations", c.iterations);
  penalty = r.get("penalty", 0.0);
  if (!(penalty >= 0.0)) throw ConfigError(r.at("penalty"), "penalty must be >= 0");
  checked(r.pointer(), [&] { c.validate(); });
  return c;
}

AlgorithmConfig parse_algorithm(const json& j, const std::string& ptr) {
  ObjectReader r(j, ptr);
  AlgorithmConfig a;
  a.name = r.require<std::string>("name");
  static const json empty = json::object();
  const json& params = r.has("params") ? r.child("params") : empty;
  ObjectReader p(params, r.at("params"));
  if (a.name == "stgh") {
    a.params = parse_stgh(p);
  } else if (a.name == "ssl_alm" || a.name == "alm") {
    a.params = parse_alm(p, a.name == "alm");
  } else if (a.name == "ssw") {
    a.params = parse_ssw(p);
  } else if (a.name == "sgd") {
    a.params = parse_sgd(p, a.penalty);
  } else {
    throw ConfigError(r.at("name"), "unknown algorithm '" + a.name + "' (expected stgh, ssl_alm, alm, ssw or sgd)");
  }
  p.finish();
  r.finish();
  return a;
}

json algorithm_to_json(const AlgorithmConfig& a) {
  json p = json::object();
  if (const auto* c = std::get_if<StGhConfig>(&a.params)) {
    p = {{"p0", c->p0},       {"alpha0", c->alpha0}, {"alpha_hat", c->alpha_hat},   {"rho", c->rho},
         {"tau", c->tau},     {"beta", c->beta},     {"lambda", c->lambda},         {"iterations", c->iterations},
         {"base_batch", c->base_batch}, {"max_level", c->max_level}, {"max_skip_fraction", c->max_skip_fraction}};
  } else if (const auto* c = std::get_if<AlmConfig>(&a.params)) {
    p = {{"mu", c->mu},
         {"rho", c->rho},
         {"tau", c->tau},
         {"eta", c->eta},
         {"beta", c->beta},
         {"multiplier_bound", c->multiplier_bound},
         {"iterations", c->iterations},
         {"objective_batch", c->objective_batch},
         {"constraint_batch", c->constraint_batch}};
  } else if (const auto* c = std::get_if<SswConfig>(&a.params)) {
    p = {{"eta_f", c->eta_f},
         {"eta_c", c->eta_c},
         {"eps0", c->eps0},
         {"switch_iter", c->switch_iter},
         {"decay", c->decay},
         {"objective_batch", c->objective_batch},
         {"constraint_batch", c->constraint_batch},
         {"step_batch", c->step_batch},
         {"k0", c->k0},
         {"iterations", c->iterations}};
  } else if (const auto* c = std::get_if<SgdConfig>(&a.params)) {
    p = {{"lr", c->lr}, {"batch", c->batch}, {"iterations", c->iterations}, {"penalty", a.penalty}};
  }
  return {{"name", a.name}, {"params", p}};
}

}  // namespace

std::size_t AlgorithmConfig::iterations() const {
  return std::visit([](const auto& c) { return c.iterations; }, params);
}

SyntheticConfig parse_synthetic(const json& j, const std::string& pointer) {
  ObjectReader r(j, pointer);
  SyntheticConfig c;
  c.n = r.get("n", c.n);
  c.d = r.get("d", c.d);
  c.groups = r.get("groups", c.groups);
  c.group_weights = r.get_list("group_weights", c.group_weights);
  c.label_bias = r.get_list("label_bias", c.label_bias);
  c.seed = r.get("seed", c.seed);
  c.class_separation = r.get("class_separation", c.class_separation);
  c.group_shift = r.get("group_shift", c.group_shift);
  r.finish();
  if (c.group_weights.size() != c.groups) throw ConfigError(r.at("group_weights"), "needs one weight per group");
  if (c.label_bias.size() != c.groups) throw ConfigError(r.at("label_bias"), "needs one positive rate per group");
  double total = 0.0;
  for (double w : c.group_weights) total += w;
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError(r.at("group_weights"), "weights must sum to 1");
  return c;
}

json to_json(const SyntheticConfig& c) {
  return {{"n", c.n},
          {"d", c.d},
          {"groups", c.groups},
          {"group_weights", c.group_weights},
          {"label_bias", c.label_bias},
          {"seed", c.seed},
          {"class_separation", c.class_separation},
          {"group_shift", c.group_shift}};
}

CsvSchema parse_schema(const json& j, const std::string& pointer) {
  ObjectReader r(j, pointer);
  CsvSchema s;
  s.label_column = r.require<std::string>("label_column");
  s.positive_values = r.get_list<std::string>("positive_values", {});
  if (r.has("label_threshold")) s.label_threshold = r.require<double>("label_threshold");
  s.group_column = r.require<std::string>("group_column");
  if (r.has("group_map")) {
    const auto& m = r.child("group_map");
    if (!m.is_object()) throw ConfigError(r.at("group_map"), "expected an object");
    for (auto it = m.begin(); it != m.end(); ++it) {
      s.group_map[it.key()] = convert<std::string>(it.value(), child_pointer(r.at("group_map"), it.key()));
    }
  }
  s.group_names = r.get_list<std::string>("group_names", {});
  s.feature_columns = r.get_list<std::string>("feature_columns", {});
  if (r.has("categorical")) {
    const auto& m = r.child("categorical");
    if (!m.is_object()) throw ConfigError(r.at("categorical"), "expected an object");
    for (auto it = m.begin(); it != m.end(); ++it) {
      s.categorical[it.key()] = convert_list<std::string>(it.value(), child_pointer(r.at("categorical"), it.key()));
    }
  }
  r.finish();
  if (s.positive_values.empty() && !s.label_threshold) {
    throw ConfigError(pointer, "schema needs positive_values or label_threshold");
  }
  if (s.feature_columns.empty()) throw ConfigError(r.at("feature_columns"), "at least one feature column is required");
  return s;
}

json to_json(const CsvSchema& s) {
  json j = {{"label_column", s.label_column},
            {"positive_values", s.positive_values},
            {"group_column", s.group_column},
            {"group_map", s.group_map},
            {"group_names", s.group_names},
            {"feature_columns", s.feature_columns},
            {"categorical", s.categorical}};
  if (s.label_threshold) j["label_threshold"] = *s.label_threshold;
  return j;
}

RunConfig parse_config(const json& j) {
  ObjectReader r(j, "");
  RunConfig cfg;

  {
    ObjectReader d(r.child("data"), r.at("data"));
    const auto source = d.require<std::string>("source");
    if (source == "synthetic") {
      cfg.data.kind = DataSource::Kind::Synthetic;
      static const json empty = json::object();
      cfg.data.synthetic = parse_synthetic(d.has("synthetic") ? d.child("synthetic") : empty, d.at("synthetic"));
    } else if (source == "csv") {
      cfg.data.kind = DataSource::Kind::Csv;
      cfg.data.csv_path = d.require<std::string>("path");
      cfg.data.schema = parse_schema(d.child("schema"), d.at("schema"));
    } else {
      throw ConfigError(d.at("source"), "expected 'synthetic' or 'csv'");
    }
    d.finish();
  }

  if (r.has("split")) {
    ObjectReader s(r.child("split"), r.at("split"));
    cfg.split.train_fraction = s.get("train_fraction", cfg.split.train_fraction);
    cfg.split.seed = s.get("seed", cfg.split.seed);
    s.finish();
    if (!(cfg.split.train_fraction > 0.0 && cfg.split.train_fraction < 1.0)) {
      throw ConfigError(s.at("train_fraction"), "must lie in (0, 1)");
    }
  }

  if (r.has("network")) {
    ObjectReader n(r.child("network"), r.at("network"));
    cfg.network.hidden = n.get_list("hidden", cfg.network.hidden);
    for (std::size_t i = 0; i < cfg.network.hidden.size(); ++i) {
      if (cfg.network.hidden[i] == 0) throw ConfigError(n.at("hidden") + "/" + std::to_string(i), "width must be >= 1");
    }
    if (n.has("activation")) {
      const auto name = n.require<std::string>("activation");
      checked(n.at("activation"), [&] { cfg.network.activation = activation_from_string(name); });
    }
    n.finish();
  }

  {
    ObjectReader c(r.child("constraint"), r.at("constraint"));
    const auto kind = c.get<std::string>("kind", "loss_gap");
    checked(c.at("kind"), [&] { cfg.constraint.kind = constraint_kind_from_string(kind); });
    cfg.constraint.delta = c.require<double>("delta");
    if (!(cfg.constraint.delta >= 0.0)) throw ConfigError(c.at("delta"), "must be >= 0");
    if (c.has("pairs")) {
      const auto& pairs = c.child("pairs");
      const auto ptr = c.at("pairs");
      if (!pairs.is_array()) throw ConfigError(ptr, "expected an array of [A, B] pairs");
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto item = convert_list<int>(pairs[i], ptr + "/" + std::to_string(i));
        if (item.size() != 2 || item[0] == item[1] || item[0] < 0 || item[1] < 0) {
          throw ConfigError(ptr + "/" + std::to_string(i), "expected two distinct group ids");
        }
        cfg.constraint.pairs.emplace_back(item[0], item[1]);
      }
    }
    c.finish();
  }

  cfg.algorithm = parse_algorithm(r.child("algorithm"), r.at("algorithm"));
  cfg.repetitions = r.get("repetitions", cfg.repetitions);
  if (cfg.repetitions == 0) throw ConfigError(r.at("repetitions"), "must be >= 1");
  cfg.base_seed = r.get("base_seed", cfg.base_seed);
  cfg.output_dir = r.get("output_dir", cfg.output_dir);
  cfg.log_every = r.get("log_every", cfg.log_every);
  if (cfg.log_every == 0) throw ConfigError(r.at("log_every"), "must be >= 1");
  r.finish();
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

json to_json(const RunConfig& cfg) {
  json data;
  if (cfg.data.kind == DataSource::Kind::Synthetic) {
    data = {{"source", "synthetic"}, {"synthetic", to_json(cfg.data.synthetic)}};
  } else {
    data = {{"source", "csv"}, {"path", cfg.data.csv_path}, {"schema", to_json(cfg.data.schema)}};
  }
  json pairs = json::array();
  for (const auto& [a, b] : cfg.constraint.pairs) pairs.push_back({a, b});
  return {{"data", data},
          {"split", {{"train_fraction", cfg.split.train_fraction}, {"seed", cfg.split.seed}}},
          {"network", {{"hidden", cfg.network.hidden}, {"activation", to_string(cfg.network.activation)}}},
          {"constraint", {{"kind", to_string(cfg.constraint.kind)}, {"delta", cfg.constraint.delta}, {"pairs", pairs}}},
          {"algorithm", algorithm_to_json(cfg.algorithm)},
          {"repetitions", cfg.repetitions},
          {"base_seed", cfg.base_seed},
          {"output_dir", cfg.output_dir},
          {"log_every", cfg.log_every}};
}

}  // namespace fairtrain
