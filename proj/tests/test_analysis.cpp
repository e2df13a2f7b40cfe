#include <doctest.h>

#include "oracles.hpp"
#include "winlab/analysis.hpp"
#include "winlab/fixtures.hpp"

using namespace winlab;

TEST_SUITE("analysis") {

TEST_CASE("sft closed form: constant classifier gives one half") {
  auto env = oracles::matrix_env({{0.5, 0.5}, {0.5, 0.5}});
  auto init = oracles::single_policy({0.3, 0.7});
  auto report = sft_winrate_closed_form(env, init);
  CHECK(report.closed_form == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(report.abs_diff <= 1e-12);
}

TEST_CASE("sft closed form: deterministic two-response case is 0.625") {
  auto env = oracles::matrix_env({{0.5, 0.0}, {1.0, 0.5}});
  auto init = oracles::single_policy({0.5, 0.5});
  auto report = sft_winrate_closed_form(env, init);
  CHECK(report.closed_form == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(report.brute_force == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(report.abs_diff <= 1e-12);
}

TEST_CASE("sft closed form agrees with brute force on random environments") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto env = oracles::random_environment(2000 + s);
    auto init = oracles::random_policy(env, 40 + s);
    auto report = sft_winrate_closed_form(env, init);
    CHECK(report.abs_diff <= 1e-10);
  }
}

TEST_CASE("filter closed form: constant filter gives one half") {
  auto env = oracles::random_environment(30);
  auto init = oracles::random_policy(env, 41);
  FilterSpec ones;
  ones.accept.resize(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q)
    ones.accept[q].assign(env.num_responses(q),
                          std::vector<std::array<double, 2>>(env.num_responses(q), {1.0, 1.0}));
  auto report = filter_sft_winrate_closed_form(env, init, ones);
  CHECK(report.closed_form == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.abs_diff <= 1e-10);
}

TEST_CASE("filter closed form specializes to the sft closed form") {
  auto env = oracles::random_environment(31);
  auto init = oracles::random_policy(env, 42);
  FilterSpec keep_preferred;
  keep_preferred.accept.resize(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q)
    keep_preferred.accept[q].assign(
        env.num_responses(q),
        std::vector<std::array<double, 2>>(env.num_responses(q), {0.0, 1.0}));
  auto a = filter_sft_winrate_closed_form(env, init, keep_preferred);
  auto b = sft_winrate_closed_form(env, init);
  CHECK(a.closed_form == doctest::Approx(b.closed_form).epsilon(1e-12));
}

TEST_CASE("filter closed form agrees with brute force on random filters") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto env = oracles::random_environment(2100 + s);
    auto init = oracles::random_policy(env, 50 + s);
    auto filter = oracles::random_filter(env, 60 + s);
    auto report = filter_sft_winrate_closed_form(env, init, filter);
    CHECK(report.abs_diff <= 1e-10);
  }
}

TEST_CASE("wro-kl expected win rate: huge beta is self-play") {
  auto env = oracles::random_environment(32);
  auto init = oracles::random_policy(env, 43);
  auto report = wro_kl_target_winrate_closed_form(env, init, HTransform::identity(), 1e9);
  CHECK(report.closed_form == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("wro-kl expected win rate matches the vertex at tiny beta on BT") {
  auto clf = make_bt_classifier({{2.5, 0.0, -1.0}});
  auto env =
      make_environment({"q0"}, {1.0}, {{"a", "b", "c"}}, clf, BTClassifier{{{2.5, 0.0, -1.0}}});
  auto init = oracles::single_policy({0.3, 0.4, 0.3});
  auto report = wro_kl_target_winrate_closed_form(env, init, HTransform::logit_transform(), 1e-3);
  Policy vertex = point_mass_policy(env, {0});
  const double vertex_win = h_win_rate(vertex, init, env, HTransform::identity());
  CHECK(std::abs(report.closed_form - vertex_win) <= 1e-6);
}

TEST_CASE("wro-kl expected win rate agrees with brute force across betas") {
  const Vec betas{1.0, 0.1, 0.01};
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto env = oracles::random_environment(2200 + s);
    auto init = oracles::random_policy(env, 70 + s);
    for (double beta : betas) {
      auto report = wro_kl_target_winrate_closed_form(env, init, HTransform::identity(), beta);
      CHECK(report.abs_diff <= 1e-9);
    }
  }
}

TEST_CASE("variance bound: ties give zero variance and bound 0.25") {
  auto env = oracles::matrix_env({{0.5, 0.5}, {0.5, 0.5}});
  auto init = oracles::single_policy({0.5, 0.5});
  auto bounds = sft_variance_bound(env, init);
  CHECK(bounds[0].mean == doctest::Approx(0.5));
  CHECK(bounds[0].variance == doctest::Approx(0.0));
  CHECK(bounds[0].bound == doctest::Approx(0.25));
}

TEST_CASE("variance bound holds and is strict with three or more responses") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto env = oracles::random_environment(2300 + s, {.min_responses = 3});
    auto init = oracles::random_policy(env, 80 + s);
    auto bounds = sft_variance_bound(env, init);
    auto report = sft_winrate_closed_form(env, init);
    for (const auto& vb : bounds) {
      CHECK(vb.variance <= vb.bound + 1e-15);
      CHECK(vb.bound <= 0.25 + 1e-15);
      CHECK(vb.variance < 0.25);
    }
    CHECK(report.closed_form < 1.0);
  }
}

TEST_CASE("variance approaches 0.25 only in the two-point limit") {
  // AvgPref values {eps, 1-eps} under a fifty-fifty initial model.
  for (double eps : {0.1, 0.01, 0.001}) {
    // Var of {eps, 1-eps} with equal weights.
    const double mu = 0.5;
    const double var = 0.5 * (eps - mu) * (eps - mu) + 0.5 * (1 - eps - mu) * (1 - eps - mu);
    CHECK(var < 0.25);
    CHECK(0.25 - var == doctest::Approx(eps * (1.0 - eps)).epsilon(1e-9));
  }
}

TEST_CASE("bt optimum picks the max reward and reports ties") {
  auto clf = make_bt_classifier({{3.0, 1.0, 0.0}, {2.0, 2.0, 0.0}});
  auto env = make_environment({"q0", "q1"}, {0.5, 0.5}, {{"a", "b", "c"}, {"a", "b", "c"}}, clf,
                              BTClassifier{{{3.0, 1.0, 0.0}, {2.0, 2.0, 0.0}}});
  auto opt = bt_optimum(env);
  REQUIRE(opt.argmax[0].size() == 1);
  CHECK(opt.argmax[0][0] == 0);
  REQUIRE(opt.argmax[1].size() == 2);
  CHECK(opt.any_tie);
}

TEST_CASE("bt optimum equals the exhaustive vertex argmax for every h") {
  const HTransform hs[] = {HTransform::identity(), HTransform::log_transform(),
                           HTransform::logit_transform()};
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto env = oracles::random_environment(2400 + s, {.bradley_terry = true});
    auto anchor = oracles::random_policy(env, 90 + s);
    auto opt = bt_optimum(env);
    for (const auto& h : hs) {
      for (std::size_t q = 0; q < env.num_queries(); ++q) {
        double best = -kInf;
        std::size_t best_y = 0;
        for (std::size_t y = 0; y < env.num_responses(q); ++y) {
          double v = 0.0;
          for (std::size_t y0 = 0; y0 < env.num_responses(q); ++y0)
            v += anchor.probs[q][y0] * h(env.classifier.pref[q][y0][y]);
          if (v > best) {
            best = v;
            best_y = y;
          }
        }
        CHECK(best_y == opt.argmax[q].front());
      }
    }
  }
}

TEST_CASE("sft never reaches the best vertex on spread environments") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto env = oracles::random_environment(2500 + s, {.min_responses = 3});
    auto init = oracles::random_policy(env, 95 + s);
    auto report = sft_winrate_closed_form(env, init);
    const double vertex = best_vertex_win_rate(env, init);
    CHECK(vertex - report.closed_form > 0.0);
  }
}

}  // TEST_SUITE
