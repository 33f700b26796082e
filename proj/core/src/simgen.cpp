#include "nettomo/simgen.hpp"

#include <cmath>
#include <random>

#include "nettomo/error.hpp"

namespace nettomo {

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

void check_gamma(const GammaParams& g, const char* name) {
  if (!(g.shape > 0.0 && g.rate > 0.0 && std::isfinite(g.shape) && std::isfinite(g.rate)))
    throw ConfigError(std::string(name) + " shape and rate must be positive");
}

}  // namespace

void SimConfig::validate() const {
  if (n_exterior < 2) throw ConfigError("n_exterior must be at least 2");
  if (n_interior < 0) throw ConfigError("n_interior must be nonnegative");
  check_probability(p_edge, "p_edge");
  check_probability(p_diversion, "p_diversion");
  check_probability(p_missing_given_diversion, "p_missing_given_diversion");
  check_probability(p_route, "p_route");
  check_gamma(baseline_gamma, "baseline_gamma");
  check_gamma(diversion_gamma, "diversion_gamma");
  if (ticks < 1) throw ConfigError("T must be at least 1");
}

std::string to_string(DiversionLabel label) {
  switch (label) {
    case DiversionLabel::none: return "none";
    case DiversionLabel::new_edge: return "new_edge";
    case DiversionLabel::increased: return "increased";
    case DiversionLabel::missing: return "missing";
  }
  return "unknown";
}

DiversionLabel diversion_label_from_string(const std::string& name) {
  if (name == "none") return DiversionLabel::none;
  if (name == "new_edge") return DiversionLabel::new_edge;
  if (name == "increased") return DiversionLabel::increased;
  if (name == "missing") return DiversionLabel::missing;
  throw ConfigError("unknown diversion label '" + name + "'");
}

GroundTruth gen_ground_truth(const SimConfig& cfg, std::uint64_t trial) {
  cfg.validate();
  Topology topology = Topology::complete(cfg.n_exterior, 0);
  if (cfg.n_interior > 0) {
    auto route_rng = CounterRng::substream(cfg.seed, Stream::routes, trial);
    topology = assign_routes(topology, cfg.n_interior, route_rng, cfg.p_route);
  }

  auto support_rng = CounterRng::substream(cfg.seed, Stream::topology, trial);
  auto rate_rng = CounterRng::substream(cfg.seed, Stream::rates, trial);
  auto diversion_rng = CounterRng::substream(cfg.seed, Stream::diversions, trial);

  std::gamma_distribution<double> baseline_draw(cfg.baseline_gamma.shape, 1.0 / cfg.baseline_gamma.rate);
  std::gamma_distribution<double> diversion_draw(cfg.diversion_gamma.shape, 1.0 / cfg.diversion_gamma.rate);

  const std::size_t n = topology.pair_count();
  std::vector<double> baseline(n, 0.0);
  std::vector<double> truth(n, 0.0);
  std::vector<DiversionLabel> labels(n, DiversionLabel::none);

  // Every draw is taken for every pair so each component's stream stays
  // aligned with pair order whatever the other components decided.
  for (std::size_t p = 0; p < n; ++p) {
    const bool in_support = support_rng.uniform() < cfg.p_edge;
    const double rate = baseline_draw(rate_rng);
    baseline[p] = in_support ? rate : 0.0;
  }
  for (std::size_t p = 0; p < n; ++p) {
    const bool diverted = diversion_rng.uniform() < cfg.p_diversion;
    const bool removal = diversion_rng.uniform() < cfg.p_missing_given_diversion;
    const double extra = diversion_draw(diversion_rng);
    truth[p] = baseline[p];
    if (!diverted) continue;
    if (baseline[p] > 0.0) {
      if (removal) {
        truth[p] = 0.0;
        labels[p] = DiversionLabel::missing;
      } else {
        truth[p] = baseline[p] + extra;
        labels[p] = DiversionLabel::increased;
      }
    } else {
      truth[p] = extra;
      labels[p] = DiversionLabel::new_edge;
    }
  }
  return GroundTruth{std::move(topology), RateMatrix(std::move(baseline)), RateMatrix(std::move(truth)),
                     std::move(labels)};
}

GroundTruth make_ground_truth(Topology topology, RateMatrix baseline, RateMatrix truth) {
  if (baseline.size() != topology.pair_count() || truth.size() != topology.pair_count())
    throw ContractError("rate matrices must match the topology's pair count");
  std::vector<DiversionLabel> labels(truth.size(), DiversionLabel::none);
  for (std::size_t p = 0; p < truth.size(); ++p) {
    if (baseline[p] == truth[p]) continue;
    if (baseline[p] == 0.0)
      labels[p] = DiversionLabel::new_edge;
    else if (truth[p] == 0.0)
      labels[p] = DiversionLabel::missing;
    else if (truth[p] > baseline[p])
      labels[p] = DiversionLabel::increased;
    else
      throw ContractError("partial rate decreases have no diversion label");
  }
  return GroundTruth{std::move(topology), std::move(baseline), std::move(truth), std::move(labels)};
}

TrafficSeries sample_traffic(const RateMatrix& rates, int ticks, CounterRng& rng) {
  if (ticks < 1) throw ContractError("T must be at least 1");
  const std::size_t n = rates.size();
  std::vector<std::poisson_distribution<TrafficSeries::Count>> draws;
  draws.reserve(n);
  for (std::size_t p = 0; p < n; ++p) draws.emplace_back(rates[p] > 0.0 ? rates[p] : 1.0);

  TrafficSeries traffic(static_cast<std::size_t>(ticks), n);
  for (std::size_t t = 0; t < static_cast<std::size_t>(ticks); ++t)
    for (std::size_t p = 0; p < n; ++p)
      if (rates[p] > 0.0) traffic.set(t, p, draws[p](rng));
  return traffic;
}

Topology assign_routes(const Topology& topology, int n_interior, CounterRng& rng, double p_route) {
  if (n_interior < 0) throw ContractError("n_interior must be nonnegative");
  std::vector<std::vector<int>> routes(topology.pair_count());
  if (n_interior > 0) {
    std::uniform_int_distribution<int> pick(0, n_interior - 1);
    for (auto& route : routes) {
      const bool routed = rng.uniform() < p_route;
      const int node = pick(rng);
      if (routed) route.push_back(node);
    }
  }
  return Topology(topology.n_exterior(), n_interior, {topology.pairs().begin(), topology.pairs().end()},
                  std::move(routes));
}

}  // namespace nettomo
