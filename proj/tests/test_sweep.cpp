#include <doctest.h>

#include "oracles.hpp"
#include "winlab/analysis.hpp"
#include "winlab/sweep.hpp"

using namespace winlab;

namespace {

SweepConfig basic_config(const Environment& env) {
  SweepConfig config;
  config.h_grid = {HTransform::identity(), HTransform::logit_transform()};
  config.beta_grid = {1.0, 0.1, 0.01, 0.001};
  config.estimates = {{ClassifierEstimate::Kind::oracle, 0.0, 0}};
  config.reference = uniform_policy(env);
  return config;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("oracle closed-form cells: win rate is nonincreasing in beta for identity h") {
  auto env = oracles::random_environment(80, {.max_queries = 3, .bradley_terry = true});
  auto config = basic_config(env);
  config.h_grid = {HTransform::identity()};
  auto result = run_sweep(env, config);
  REQUIRE(result.rows.size() == config.beta_grid.size());
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    CHECK(result.rows[i].status == "ok");
    CHECK(result.rows[i].win_rate >= result.rows[i - 1].win_rate - 1e-12);
  }
}

TEST_CASE("oracle cells approach the best vertex as beta vanishes") {
  auto env = oracles::random_environment(81, {.max_queries = 2, .bradley_terry = true,
                                              .reward_scale = 3.0});
  auto config = basic_config(env);
  config.h_grid = {HTransform::identity()};
  config.beta_grid = {1e-3};
  auto result = run_sweep(env, config);
  const double vertex = best_vertex_win_rate(env, config.reference);
  CHECK(result.rows[0].win_rate >= vertex - 1e-3);
}

TEST_CASE("rows are self-consistent and failures are contained") {
  // A classifier with a deterministic preference breaks h=log cells but the
  // sweep must keep going.
  Mat m{{0.5, 1.0, 0.7}, {0.0, 0.5, 0.4}, {0.3, 0.6, 0.5}};
  auto env = oracles::matrix_env(std::move(m));
  auto config = basic_config(env);
  config.h_grid = {HTransform::identity(), HTransform::log_transform()};
  config.beta_grid = {1.0};
  auto result = run_sweep(env, config);
  REQUIRE(result.rows.size() == 2);
  int ok = 0, failed = 0;
  for (const auto& row : result.rows) {
    if (row.status == "ok")
      ++ok;
    else
      ++failed;
  }
  CHECK(ok == 1);
  CHECK(failed == 1);
}

TEST_CASE("exact-ascent cells agree with closed-form cells") {
  auto env = oracles::random_environment(82, {.max_queries = 2, .max_responses = 4});
  auto config = basic_config(env);
  config.beta_grid = {1.0, 0.3};
  auto closed = run_sweep(env, config);
  config.closed_form = false;
  config.ascent_budget = 30000;
  auto ascended = run_sweep(env, config);
  REQUIRE(closed.rows.size() == ascended.rows.size());
  for (std::size_t i = 0; i < closed.rows.size(); ++i) {
    CHECK(ascended.rows[i].status == "ok");
    CHECK(std::abs(closed.rows[i].win_rate - ascended.rows[i].win_rate) <= 1e-5);
  }
}

TEST_CASE("perturbed estimates degrade the oracle win rate on average") {
  auto env = oracles::random_environment(83, {.max_queries = 2, .min_responses = 4,
                                              .bradley_terry = true});
  SweepConfig config;
  config.h_grid = {HTransform::identity()};
  config.beta_grid = {0.01};
  config.reference = uniform_policy(env);
  config.estimates.push_back({ClassifierEstimate::Kind::oracle, 0.0, 0});
  for (std::uint64_t s = 0; s < 20; ++s)
    config.estimates.push_back({ClassifierEstimate::Kind::perturbed, 1.0, 1000 + s});
  auto result = run_sweep(env, config);
  const double oracle_win = result.rows[0].win_rate;
  double noise_mean = 0.0;
  for (std::size_t i = 1; i < result.rows.size(); ++i) noise_mean += result.rows[i].win_rate;
  noise_mean /= static_cast<double>(result.rows.size() - 1);
  CHECK(oracle_win > noise_mean);
}

TEST_CASE("bt_fit estimate is exact on BT environments") {
  auto env = oracles::random_environment(84, {.max_queries = 2, .bradley_terry = true});
  SweepConfig config = basic_config(env);
  config.estimates = {{ClassifierEstimate::Kind::oracle, 0.0, 0},
                      {ClassifierEstimate::Kind::bt_fit, 0.0, 0}};
  config.h_grid = {HTransform::identity()};
  config.beta_grid = {0.1};
  auto result = run_sweep(env, config);
  REQUIRE(result.rows.size() == 2);
  CHECK(std::abs(result.rows[0].win_rate - result.rows[1].win_rate) <= 1e-5);
}

TEST_CASE("a failing estimate marks its cells and the sweep continues") {
  // Deterministic preferences make the BT fit unbounded; the oracle cells
  // must still come back clean.
  Mat m{{0.5, 1.0, 0.7}, {0.0, 0.5, 0.4}, {0.3, 0.6, 0.5}};
  auto env = oracles::matrix_env(std::move(m));
  auto config = basic_config(env);
  config.h_grid = {HTransform::identity()};
  config.beta_grid = {1.0, 0.1};
  config.estimates = {{ClassifierEstimate::Kind::oracle, 0.0, 0},
                      {ClassifierEstimate::Kind::bt_fit, 0.0, 0}};
  auto result = run_sweep(env, config);
  REQUIRE(result.rows.size() == 4);
  for (const auto& row : result.rows) {
    if (row.estimate == "oracle")
      CHECK(row.status == "ok");
    else
      CHECK(row.status != "ok");
  }
}

TEST_CASE("stored win rates recompute exactly from the stored policies") {
  auto env = oracles::random_environment(86, {.max_queries = 3, .bradley_terry = true});
  auto config = basic_config(env);
  auto result = run_sweep(env, config);
  for (const auto& row : result.rows) {
    REQUIRE(row.status == "ok");
    const double again = h_win_rate(row.tuned, config.reference, env, HTransform::identity());
    CHECK(std::abs(again - row.win_rate) <= 1e-12);
  }
}

TEST_CASE("spearman: exact inverse relation gives rho -1") {
  SweepResult fake;
  for (int i = 0; i < 12; ++i) {
    SweepRow row;
    row.estimate = "oracle";
    row.h = "identity";
    row.beta = 1.0 + i;
    row.train_objective = static_cast<double>(i);
    row.win_rate = -static_cast<double>(i);
    row.kl_to_ref = 0.0;
    row.converged = true;
    row.status = "ok";
    fake.rows.push_back(row);
  }
  auto corrs = rank_correlations(fake, 3, 2000);
  REQUIRE(!corrs.empty());
  CHECK(corrs[0].axis == "train_objective");
  CHECK(corrs[0].defined);
  CHECK(corrs[0].rho == doctest::Approx(-1.0));
  CHECK(corrs[0].p_value < 0.01);
  // h column is constant: correlation undefined, flagged.
  for (const auto& c : corrs)
    if (c.axis == "h") CHECK(!c.defined);
}

TEST_CASE("spearman: independent columns give small rho and large p") {
  SweepResult fake;
  Rng rng(17);
  for (int i = 0; i < 40; ++i) {
    SweepRow row;
    row.estimate = "oracle";
    row.h = "identity";
    row.beta = rng.uniform();
    row.train_objective = rng.uniform();
    row.win_rate = rng.uniform();
    row.status = "ok";
    fake.rows.push_back(row);
  }
  auto corrs = rank_correlations(fake, 11, 2000);
  CHECK(std::abs(corrs[0].rho) < 0.5);
  CHECK(corrs[0].p_value > 0.01);
}

TEST_CASE("full sweep emits a full grid with correlations") {
  auto env = oracles::random_environment(85, {.max_queries = 5, .max_responses = 6,
                                              .min_responses = 6, .bradley_terry = true});
  SweepConfig config;
  config.h_grid = {HTransform::identity(), HTransform::log_transform(),
                   HTransform::logit_transform()};
  config.beta_grid = {1.0, 0.1, 0.01};
  config.estimates = {{ClassifierEstimate::Kind::oracle, 0.0, 0},
                      {ClassifierEstimate::Kind::bt_fit, 0.0, 0},
                      {ClassifierEstimate::Kind::perturbed, 0.25, 7}};
  config.reference = uniform_policy(env);
  auto result = run_sweep(env, config);
  CHECK(result.rows.size() == 27);
  for (const auto& row : result.rows) {
    CHECK(row.status == "ok");
    CHECK(row.win_rate >= 0.0);
    CHECK(row.win_rate <= 1.0);
  }
  auto corrs = rank_correlations(result, 5, 2000);
  for (const auto& c : corrs) {
    CHECK(c.n == 27);
    if (c.defined) {
      CHECK(c.rho >= -1.0 - 1e-12);
      CHECK(c.rho <= 1.0 + 1e-12);
      CHECK(c.p_value > 0.0);
      CHECK(c.p_value <= 1.0);
    }
  }
}

}  // TEST_SUITE
