#include <doctest.h>

#include "oracles.hpp"
#include "winlab/env.hpp"

using namespace winlab;

TEST_SUITE("env") {

TEST_CASE("bt classifier from equal rewards is all ties") {
  auto clf = make_bt_classifier({{1.3, 1.3, 1.3, 1.3}});
  for (const auto& row : clf.pref[0])
    for (double p : row) CHECK(p == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("bt composition follows the odds product") {
  // p(A>B) = .6 and p(B>C) = .7 force p(A>C) = 7/9.
  auto clf = make_bt_classifier({{logit(0.6) + logit(0.7), logit(0.7), 0.0}});
  CHECK(clf.pref[0][1][0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(clf.pref[0][2][1] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(clf.pref[0][2][0] == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("bt classifier matches the .9/.6 counterexample setting") {
  auto clf = make_bt_classifier({{logit(0.9), 0.0, -logit(0.6)}});
  CHECK(clf.pref[0][1][0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(clf.pref[0][2][1] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(clf.pref[0][2][0] == doctest::Approx(13.5 / 14.5).epsilon(1e-12));
  CHECK(std::abs(clf.pref[0][2][0] - 0.93) < 5e-3);
}

TEST_CASE("bt classifier rejects non-finite rewards") {
  CHECK_THROWS_AS(make_bt_classifier({{0.0, kInf}}), ValidationError);
}

TEST_CASE("validate_classifier accepts exact matrices and cycles") {
  Mat ok{{0.5, 0.9}, {0.1, 0.5}};
  CHECK_NOTHROW(validate_classifier({ok}));
  // Rock-paper-scissors at .9: intransitive but legal.
  Mat cycle{{0.5, 0.9, 0.1}, {0.1, 0.5, 0.9}, {0.9, 0.1, 0.5}};
  CHECK_NOTHROW(validate_classifier({cycle}));
}

TEST_CASE("validate_classifier reports the broken invariant") {
  Mat bad_diag{{0.4, 0.9}, {0.1, 0.5}};
  auto violations = classifier_violations({bad_diag});
  REQUIRE(!violations.empty());
  CHECK(violations[0].find("diagonal") != std::string::npos);

  Mat bad_sym{{0.5, 0.9}, {0.2, 0.5}};
  CHECK_THROWS_AS(validate_classifier({bad_sym}), ValidationError);

  Mat bad_range{{0.5, 1.2}, {-0.2, 0.5}};
  CHECK(!classifier_violations({bad_range}).empty());
}

TEST_CASE("fit_bt reproduces a realizable classifier") {
  auto env = oracles::random_environment(7, {.bradley_terry = true});
  auto fitted = fit_bt(env.classifier);
  auto induced = make_bt_classifier(fitted.rewards);
  for (std::size_t q = 0; q < env.num_queries(); ++q)
    for (std::size_t i = 0; i < env.num_responses(q); ++i)
      for (std::size_t j = 0; j < env.num_responses(q); ++j)
        CHECK(std::abs(induced.pref[q][i][j] - env.classifier.pref[q][i][j]) <= 1e-6);
}

TEST_CASE("fit_bt on a 3-cycle collapses to equal rewards") {
  Mat cycle{{0.5, 0.9, 0.1}, {0.1, 0.5, 0.9}, {0.9, 0.1, 0.5}};
  auto fitted = fit_bt(validate_classifier({cycle}));
  // Symmetry forces equal rewards; verify against a coarse grid search over
  // reward differences minimizing the same cross-entropy.
  auto cycle_loss = [&cycle](double r1, double r2) {
    Vec r{0.0, r1, r2};
    double loss = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        loss += bernoulli_cross_entropy(cycle[i][j], r[j] - r[i]);
      }
    return loss;
  };
  double best_r1 = 0, best_r2 = 0, best = kInf;
  for (double r1 = -2.0; r1 <= 2.0; r1 += 0.01)
    for (double r2 = -2.0; r2 <= 2.0; r2 += 0.01)
      if (double l = cycle_loss(r1, r2); l < best) {
        best = l;
        best_r1 = r1;
        best_r2 = r2;
      }
  CHECK(std::abs(best_r1) < 0.011);
  CHECK(std::abs(best_r2) < 0.011);
  CHECK(fitted.rewards[0][1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  CHECK(fitted.rewards[0][2] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  auto induced = make_bt_classifier(fitted.rewards);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(induced.pref[0][i][j] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("fit_bt interpolates a two-response classifier exactly") {
  Mat m{{0.5, 0.8}, {0.2, 0.5}};
  auto fitted = fit_bt(validate_classifier({m}));
  CHECK(fitted.rewards[0][0] == 0.0);  // gauge
  CHECK(fitted.rewards[0][1] == doctest::Approx(logit(0.8)).epsilon(1e-10));
}

TEST_CASE("fit_bt rejects deterministic entries with positive weight") {
  Mat m{{0.5, 1.0}, {0.0, 0.5}};
  CHECK_THROWS_AS(fit_bt(validate_classifier({m})), ValidationError);
}

TEST_CASE("perturb_classifier endpoints and midpoint") {
  auto env = oracles::random_environment(21);
  const auto& pref = env.classifier.pref;

  auto same = perturb_classifier(env.classifier, 0.0, 99);
  for (std::size_t q = 0; q < pref.size(); ++q)
    for (std::size_t i = 0; i < pref[q].size(); ++i)
      for (std::size_t j = 0; j < pref[q].size(); ++j)
        CHECK(same.pref[q][i][j] == pref[q][i][j]);

  auto noise = perturb_classifier(env.classifier, 1.0, 99);
  auto mixed = perturb_classifier(env.classifier, 0.5, 99);
  for (std::size_t q = 0; q < pref.size(); ++q)
    for (std::size_t i = 0; i < pref[q].size(); ++i)
      for (std::size_t j = i + 1; j < pref[q].size(); ++j)
        CHECK(mixed.pref[q][i][j] ==
              doctest::Approx(0.5 * (pref[q][i][j] + noise.pref[q][i][j])).epsilon(1e-12));
}

TEST_CASE("perturbation output always validates") {
  for (std::uint64_t s = 0; s < 25; ++s) {
    auto env = oracles::random_environment(100 + s);
    Rng rng(s);
    auto noisy = perturb_classifier(env.classifier, rng.uniform(), s);
    CHECK(classifier_violations(noisy.pref).empty());
  }
}

TEST_CASE("antisymmetry closure on random constructions") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto env = oracles::random_environment(300 + s, {.bradley_terry = (s % 2 == 0)});
    for (const auto& m : env.classifier.pref)
      for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m[i][i] == 0.5);
        for (std::size_t j = 0; j < m.size(); ++j)
          CHECK(std::abs(m[i][j] + m[j][i] - 1.0) <= 1e-12);
      }
  }
}

TEST_CASE("environment validation catches shape and mass errors") {
  auto env = oracles::random_environment(5);
  Environment broken = env;
  broken.query_probs[0] += 1e-6;
  CHECK_THROWS_AS(validate_environment(broken), ValidationError);

  Policy p = uniform_policy(env);
  p.probs[0][0] += 1e-6;
  CHECK_THROWS_AS(validate_policy(p, env), ValidationError);
}

}  // TEST_SUITE
