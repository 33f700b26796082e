#include "nettomo/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "nettomo/error.hpp"

namespace nettomo {

namespace {

// Strict view of one JSON object: every key must be consumed before finish().
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void read(const std::string& key, double& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError(path(key) + ": expected a number");
    out = v.get<double>();
  }
  void read(const std::string& key, int& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(path(key) + ": expected an integer");
    out = v.get<int>();
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_number_unsigned()) throw ConfigError(path(key) + ": expected a nonnegative integer");
    out = v.get<std::uint64_t>();
  }
  void read(const std::string& key, bool& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(path(key) + ": expected true or false");
    out = v.get<bool>();
  }
  void read(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(path(key) + ": expected a string");
    out = v.get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError("unknown config key '" + path(it.key()) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "config " : path_ + ": "; }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_gamma(Section& parent, const std::string& key, GammaParams& out) {
  if (!parent.has(key)) return;
  Section s(parent.raw(key), parent.path(key));
  s.read("shape", out.shape);
  s.read("rate", out.rate);
  s.finish();
}

void read_sim(const Json& j, SimConfig& sim) {
  Section s(j, "sim");
  s.read("n_exterior", sim.n_exterior);
  s.read("n_interior", sim.n_interior);
  s.read("p_edge", sim.p_edge);
  read_gamma(s, "baseline_gamma", sim.baseline_gamma);
  read_gamma(s, "diversion_gamma", sim.diversion_gamma);
  s.read("p_diversion", sim.p_diversion);
  s.read("p_missing_given_diversion", sim.p_missing_given_diversion);
  s.read("p_route", sim.p_route);
  s.read("ticks", sim.ticks);
  s.read("seed", sim.seed);
  s.finish();
}

std::vector<Pair> read_pairs(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of [src, dst] pairs");
  std::vector<Pair> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
      throw ConfigError(path + ": expected an array of [src, dst] pairs");
    out.push_back({p[0].get<int>(), p[1].get<int>()});
  }
  return out;
}

void read_scheme(const Json& j, SchemeConfig& scheme) {
  Section s(j, "scheme");
  s.read("egress", scheme.egress);
  s.read("ingress", scheme.ingress);
  s.read("flows", scheme.flows);
  s.read("observed_fraction", scheme.observed_fraction);
  if (s.has("observed_pairs")) scheme.observed_pairs = read_pairs(s.raw("observed_pairs"), s.path("observed_pairs"));
  s.finish();
  if (!(scheme.observed_fraction >= 0.0 && scheme.observed_fraction <= 1.0))
    throw ConfigError("scheme.observed_fraction must lie in [0, 1]");
}

void read_settings(Section& s, EstimatorSettings& out) {
  s.read("em_tol", out.em_tol);
  s.read("em_max_iter", out.em_max_iter);
  s.read("n_restarts", out.n_restarts);
  if (s.has("init_mode")) {
    std::string name;
    s.read("init_mode", name);
    out.init_mode = init_mode_from_string(name);
  }
  s.read("epsilon_min", out.epsilon_min);
  s.read("epsilon_max", out.epsilon_max);
  s.read("shared_epsilon", out.shared_epsilon);
  if (s.has("estep")) {
    std::string name;
    s.read("estep", name);
    out.estep = estep_engine_from_string(name);
  }
  if (s.has("ipf")) {
    Section ipf(s.raw("ipf"), s.path("ipf"));
    ipf.read("tol", out.ipf.tol);
    ipf.read("max_iter", out.ipf.max_iter);
    ipf.read("rate_floor", out.ipf.rate_floor);
    ipf.read("newton_after", out.ipf.newton_after);
    ipf.finish();
  }
  if (s.has("exact")) {
    Section exact(s.raw("exact"), s.path("exact"));
    std::uint64_t budget = out.exact.budget;
    exact.read("budget", budget);
    out.exact.budget = budget;
    exact.finish();
  }
  if (s.has("lp")) {
    Section lp(s.raw("lp"), s.path("lp"));
    lp.read("tol", out.lp.tol);
    lp.read("max_iter", out.lp.max_iter);
    lp.read("pivot_tol", out.lp.pivot_tol);
    lp.finish();
  }
  s.read("seed", out.seed);
}

void read_estimators(const Json& j, RunConfig& config) {
  Section s(j, "estimators");
  const Json* overrides = nullptr;
  if (s.has("overrides")) overrides = &s.raw("overrides");
  read_settings(s, config.estimators);
  s.finish();
  config.estimators.validate();
  if (!overrides) return;
  Section o(*overrides, "estimators.overrides");
  for (auto it = overrides->begin(); it != overrides->end(); ++it) {
    EstimatorTag tag;
    try {
      tag = estimator_tag_from_string(it.key());
    } catch (const ConfigError&) {
      throw ConfigError("unknown config key '" + o.path(it.key()) + "'");
    }
    Section t(o.raw(it.key()), o.path(it.key()));
    EstimatorSettings settings = config.estimators;
    read_settings(t, settings);
    t.finish();
    settings.validate();
    config.overrides[tag] = settings;
  }
  o.finish();
}

void read_detect(const Json& j, DetectConfig& detect) {
  Section s(j, "detect");
  s.read("target_fpr", detect.target_fpr);
  s.read("edge_tol", detect.edge_tol);
  s.read("null_draws", detect.null_draws);
  s.finish();
  if (!(detect.target_fpr > 0.0 && detect.target_fpr < 1.0)) throw ConfigError("detect.target_fpr must lie in (0, 1)");
  if (!(detect.edge_tol >= 0.0)) throw ConfigError("detect.edge_tol must be nonnegative");
  if (detect.null_draws < 20) throw ConfigError("detect.null_draws must be at least 20");
}

template <class T>
std::vector<T> read_sorted(Section& s, const std::string& key, std::vector<T> fallback) {
  if (!s.has(key)) return fallback;
  const Json& v = s.raw(key);
  std::vector<T> out;
  if (!v.is_array() || v.empty()) throw ConfigError(s.path(key) + ": expected a nonempty array of numbers");
  for (const auto& x : v) {
    if (!(std::is_floating_point_v<T> ? x.is_number() : x.is_number_integer()))
      throw ConfigError(s.path(key) + ": expected an array of " + (std::is_floating_point_v<T> ? "numbers" : "integers"));
    out.push_back(x.get<T>());
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (!(out[i - 1] < out[i])) throw ConfigError(s.path(key) + ": values must be strictly ascending");
  return out;
}

void read_study(const Json& j, StudyConfig& study) {
  Section s(j, "study");
  if (s.has("name")) {
    std::string name;
    s.read("name", name);
    study.study = study_kind_from_string(name);
  }
  study.fractions = read_sorted<double>(s, "fractions", study.fractions);
  study.ticks = read_sorted<int>(s, "ticks", study.ticks);
  if (s.has("estimators")) {
    const Json& v = s.raw("estimators");
    if (!v.is_array() || v.empty()) throw ConfigError("study.estimators: expected a nonempty array of names");
    study.estimators.clear();
    for (const auto& name : v) {
      if (!name.is_string()) throw ConfigError("study.estimators: expected a nonempty array of names");
      study.estimators.push_back(estimator_tag_from_string(name.get<std::string>()));
    }
  }
  s.read("trials", study.trials);
  s.read("inject_new", study.inject_new);
  s.read("inject_missing", study.inject_missing);
  s.read("inject_rate", study.inject_rate);
  s.finish();
  if (study.inject_new < 0 || study.inject_missing < 0) throw ConfigError("study.inject_* counts must be nonnegative");
  if (!(study.inject_rate > 0.0)) throw ConfigError("study.inject_rate must be positive");
  if (study.trials < 1) throw ConfigError("study.trials must be at least 1");
  for (double f : study.fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("study.fractions must lie in [0, 1]");
  for (int t : study.ticks)
    if (t < 1) throw ConfigError("study.ticks must be positive");
}

}  // namespace

std::string to_string(StudyKind kind) {
  switch (kind) {
    case StudyKind::mse_vs_edges: return "mse_vs_edges";
    case StudyKind::em_iterations: return "em_iterations";
    case StudyKind::roc_over_T: return "roc_over_T";
    case StudyKind::single_instance: return "single_instance";
  }
  return "unknown";
}

StudyKind study_kind_from_string(const std::string& name) {
  for (auto k : {StudyKind::mse_vs_edges, StudyKind::em_iterations, StudyKind::roc_over_T, StudyKind::single_instance})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown study '" + name + "'");
}

SimConfig RunConfig::desk_sim() {
  SimConfig sim;
  sim.n_exterior = 6;
  return sim;
}

const EstimatorSettings& RunConfig::settings_for(EstimatorTag tag) const {
  auto it = overrides.find(tag);
  return it == overrides.end() ? estimators : it->second;
}

RunConfig parse_run_config(const Json& doc) {
  RunConfig config;
  Section top(doc, "");
  if (top.has("sim")) read_sim(top.raw("sim"), config.sim);
  if (top.has("scheme")) read_scheme(top.raw("scheme"), config.scheme);
  if (top.has("estimators")) read_estimators(top.raw("estimators"), config);
  if (top.has("detect")) read_detect(top.raw("detect"), config.detect);
  if (top.has("study")) read_study(top.raw("study"), config.study);
  top.finish();
  config.sim.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream probe(path);
  if (!probe) throw IoError("cannot open config " + path.string());
  Json doc;
  try {
    doc = Json::parse(probe);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

void apply_paper_scale(RunConfig& config) {
  config.sim.n_exterior = 10;
  config.study.trials = 200;
}

void override_seed(RunConfig& config, std::uint64_t seed) {
  config.sim.seed = seed;
  config.estimators.seed = seed;
  for (auto& [tag, settings] : config.overrides) settings.seed = seed;
}

Json to_json(const SimConfig& sim) {
  return Json{{"n_exterior", sim.n_exterior},
              {"n_interior", sim.n_interior},
              {"p_edge", sim.p_edge},
              {"baseline_gamma", {{"shape", sim.baseline_gamma.shape}, {"rate", sim.baseline_gamma.rate}}},
              {"diversion_gamma", {{"shape", sim.diversion_gamma.shape}, {"rate", sim.diversion_gamma.rate}}},
              {"p_diversion", sim.p_diversion},
              {"p_missing_given_diversion", sim.p_missing_given_diversion},
              {"p_route", sim.p_route},
              {"ticks", sim.ticks},
              {"seed", sim.seed}};
}

Json to_json(const EstimatorSettings& s) {
  return Json{{"em_tol", s.em_tol},
              {"em_max_iter", s.em_max_iter},
              {"n_restarts", s.n_restarts},
              {"init_mode", to_string(s.init_mode)},
              {"epsilon_min", s.epsilon_min},
              {"epsilon_max", s.epsilon_max},
              {"shared_epsilon", s.shared_epsilon},
              {"estep", to_string(s.estep)},
              {"ipf", {{"tol", s.ipf.tol}, {"max_iter", s.ipf.max_iter}, {"rate_floor", s.ipf.rate_floor},
                      {"newton_after", s.ipf.newton_after}}},
              {"exact", {{"budget", s.exact.budget}}},
              {"lp", {{"tol", s.lp.tol}, {"max_iter", s.lp.max_iter}, {"pivot_tol", s.lp.pivot_tol}}},
              {"seed", s.seed}};
}

Json to_json(const SchemeConfig& scheme) {
  Json pairs = Json::array();
  for (const auto& p : scheme.observed_pairs) pairs.push_back(to_json(p));
  return Json{{"egress", scheme.egress},
              {"ingress", scheme.ingress},
              {"flows", scheme.flows},
              {"observed_fraction", scheme.observed_fraction},
              {"observed_pairs", pairs}};
}

Json to_json(const RunConfig& config) {
  Json estimators = to_json(config.estimators);
  if (!config.overrides.empty()) {
    Json overrides = Json::object();
    for (const auto& [tag, settings] : config.overrides) overrides[to_string(tag)] = to_json(settings);
    estimators["overrides"] = overrides;
  }
  Json study{{"fractions", config.study.fractions}, {"ticks", config.study.ticks}};
  if (config.study.study) study["name"] = to_string(*config.study.study);
  Json tags = Json::array();
  for (auto tag : config.study.estimators) tags.push_back(to_string(tag));
  study["estimators"] = tags;
  study["trials"] = config.study.trials;
  study["inject_new"] = config.study.inject_new;
  study["inject_missing"] = config.study.inject_missing;
  study["inject_rate"] = config.study.inject_rate;
  return Json{{"sim", to_json(config.sim)},
              {"scheme", to_json(config.scheme)},
              {"estimators", estimators},
              {"detect",
               {{"target_fpr", config.detect.target_fpr},
                {"edge_tol", config.detect.edge_tol},
                {"null_draws", config.detect.null_draws}}},
              {"study", study}};
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, CounterRng& rng) {
  std::vector<std::size_t> items(n);
  for (std::size_t i = 0; i < n; ++i) items[i] = i;
  count = std::min(count, n);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - i));
    std::swap(items[i], items[std::min(j, n - 1)]);
  }
  items.resize(count);
  return items;
}

ObservationScheme resolve_scheme(const SchemeConfig& config, const Topology& topology, CounterRng& rng) {
  ObservationScheme scheme;
  scheme.monitor_egress.assign(static_cast<std::size_t>(topology.n_exterior()), config.egress);
  scheme.monitor_ingress.assign(static_cast<std::size_t>(topology.n_exterior()), config.ingress);
  scheme.monitor_flows.assign(static_cast<std::size_t>(topology.n_interior()), config.flows);
  std::set<Pair> observed(config.observed_pairs.begin(), config.observed_pairs.end());
  if (config.observed_fraction > 0.0) {
    const std::size_t n = topology.pair_count();
    const auto count = static_cast<std::size_t>(std::ceil(config.observed_fraction * static_cast<double>(n) - 1e-9));
    for (std::size_t p : sample_without_replacement(n, count, rng)) observed.insert(topology.pair(p));
  }
  scheme.observed_pairs.assign(observed.begin(), observed.end());
  return scheme;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nettomo
