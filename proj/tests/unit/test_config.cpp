#include <set>

#include <gtest/gtest.h>

#include "nettomo/config.hpp"
#include "nettomo/error.hpp"
#include "nettomo/rng.hpp"

using namespace nettomo;

TEST(Config, DefaultsFromEmptyDocument) {
  const RunConfig c = parse_run_config(Json::object());
  EXPECT_EQ(c.sim.n_exterior, 6);
  EXPECT_EQ(c.study.trials, 50);
  EXPECT_EQ(c.detect.target_fpr, 0.05);
}

TEST(Config, UnknownKeysNamePath) {
  try {
    parse_run_config(Json::parse(R"({"sim": {"bogus": 1}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("sim.bogus"), std::string::npos);
  }
  EXPECT_THROW(parse_run_config(Json::parse(R"({"whatever": {}})")), ConfigError);
  EXPECT_THROW(parse_run_config(Json::parse(R"({"sim": {"n_exterior": "six"}})")), ConfigError);
  EXPECT_THROW(parse_run_config(Json::parse(R"({"sim": {"n_exterior": 1}})")), ConfigError);
  EXPECT_THROW(parse_run_config(Json::parse(R"({"detect": {"null_draws": 5}})")), ConfigError);
  EXPECT_THROW(parse_run_config(Json::parse(R"({"study": {"estimators": ["nope"]}})")), ConfigError);
}

TEST(Config, OverridesAndRoundTrip) {
  const RunConfig c = parse_run_config(Json::parse(R"({
    "sim": {"n_exterior": 5, "seed": 9},
    "estimators": {"em_tol": 1e-6, "overrides": {"hipois": {"n_restarts": 3}}},
    "study": {"name": "roc_over_T", "ticks": [10, 20]}
  })"));
  EXPECT_EQ(c.sim.n_exterior, 5);
  EXPECT_EQ(c.settings_for(EstimatorTag::hipois).n_restarts, 3);
  EXPECT_EQ(c.settings_for(EstimatorTag::hipois).em_tol, 1e-6);
  EXPECT_EQ(c.settings_for(EstimatorTag::poisson_mle).n_restarts, 5);
  EXPECT_EQ(c.study.study, StudyKind::roc_over_T);
  const RunConfig back = parse_run_config(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, SeedOverrideAndFullScale) {
  RunConfig c;
  override_seed(c, 123);
  EXPECT_EQ(c.sim.seed, 123u);
  EXPECT_EQ(c.estimators.seed, 123u);
  apply_paper_scale(c);
  EXPECT_EQ(c.sim.n_exterior, 10);
  EXPECT_EQ(c.study.trials, 200);
}

TEST(Config, SubsetsAreNestedAndUniform) {
  auto rng = CounterRng::substream(1, Stream::observed_edges);
  const auto all = sample_without_replacement(10, 10, rng);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 10u);
  auto r1 = CounterRng::substream(2, Stream::observed_edges);
  auto r2 = CounterRng::substream(2, Stream::observed_edges);
  const auto small = sample_without_replacement(30, 5, r1);
  const auto big = sample_without_replacement(30, 15, r2);
  EXPECT_TRUE(std::equal(small.begin(), small.end(), big.begin()));

  std::vector<int> hits(8, 0);
  for (int i = 0; i < 8000; ++i) {
    auto r = CounterRng::substream(3, Stream::observed_edges, static_cast<std::uint64_t>(i));
    ++hits[sample_without_replacement(8, 1, r)[0]];
  }
  for (int h : hits) EXPECT_NEAR(h, 1000, 3 * std::sqrt(1000 * 7.0 / 8));
}

TEST(Config, ResolveSchemeCount) {
  const Topology top = Topology::complete(4);
  SchemeConfig s;
  s.observed_fraction = 0.25;
  auto rng = CounterRng::substream(1, Stream::observed_edges);
  EXPECT_EQ(resolve_scheme(s, top, rng).observed_pairs.size(), 3u);
  s.observed_fraction = 1.0;
  EXPECT_EQ(resolve_scheme(s, top, rng).observed_pairs.size(), 12u);
}

TEST(Config, Fnv) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}
