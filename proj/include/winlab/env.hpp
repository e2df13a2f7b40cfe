#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "winlab/common.hpp"

namespace winlab {

// pref[y0][y1] = p(l=1 | x, y0, y1): probability that the generator-side
// response y1 is preferred over the anchor-side response y0. Index convention
// used everywhere in this project. Antisymmetric (pref[a][b] + pref[b][a] = 1)
// with an exact 0.5 diagonal; self-comparison is part of every expectation.
struct PreferenceClassifier {
  std::vector<Mat> pref;  // one square matrix per query
};

// Bradley-Terry rewards in log-odds units. Induced preference probability is
// sigmoid(r[y1] - r[y0]). Rewards are identified per query only up to an
// additive constant; the fitting gauge pins the first response to 0.
struct BTClassifier {
  std::vector<Vec> rewards;
};

struct Environment {
  std::vector<std::string> queries;
  Vec query_probs;
  std::vector<std::vector<std::string>> responses;
  PreferenceClassifier classifier;
  std::optional<BTClassifier> bt;  // present when the classifier came from rewards

  std::size_t num_queries() const { return queries.size(); }
  std::size_t num_responses(std::size_t q) const { return responses[q].size(); }
};

// Per-query probability vector over that query's responses. Plays the
// generator, anchor, reference, or initial-model role depending on context.
struct Policy {
  std::vector<Vec> probs;
};

// accept[q][y1][y0][l] = p(f=1 | x, y1, y0, l): probability a pair with
// preference outcome l is kept for finetuning.
struct FilterSpec {
  std::vector<std::vector<std::vector<std::array<double, 2>>>> accept;
};

inline constexpr double kSimplexTol = 1e-12;
inline constexpr double kAntisymTol = 1e-9;

// sigmoid(r[y1] - r[y0]) per query. Throws ValidationError on non-finite
// rewards.
PreferenceClassifier make_bt_classifier(const std::vector<Vec>& rewards);

// Empty result means the matrices satisfy every classifier invariant.
std::vector<std::string> classifier_violations(const std::vector<Mat>& raw);

// Checked construction; throws ValidationError listing all violations.
PreferenceClassifier validate_classifier(std::vector<Mat> raw);

// Weighted Bradley-Terry maximum likelihood fit of a general classifier.
// weights[q][y0][y1] default to 1 off the diagonal. Entries exactly 0 or 1
// with positive weight make the MLE unbounded and are rejected. Gauge:
// rewards[q][0] = 0. Gradient norm at the solution <= 1e-10.
BTClassifier fit_bt(const PreferenceClassifier& classifier,
                    const std::vector<Mat>* pair_weights = nullptr);

// (1-eta) * pref + eta * U where U is a random valid classifier drawn
// deterministically from the seed (upper triangle uniform in (0,1), mirrored,
// diagonal 0.5).
PreferenceClassifier perturb_classifier(const PreferenceClassifier& classifier, double eta,
                                        std::uint64_t seed);

void validate_environment(const Environment& env);
void validate_policy(const Policy& policy, const Environment& env);

Environment make_environment(std::vector<std::string> queries, Vec query_probs,
                             std::vector<std::vector<std::string>> responses,
                             PreferenceClassifier classifier,
                             std::optional<BTClassifier> bt = std::nullopt);

Policy uniform_policy(const Environment& env);
Policy point_mass_policy(const Environment& env, const std::vector<std::size_t>& response_idx);

}  // namespace winlab
