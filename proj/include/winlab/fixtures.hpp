#pragma once

#include "winlab/optimize.hpp"

// Bundled single-query counterexample settings used by the `--paper-compare`
// report and the acceptance suite. The JSON copies under fixtures/ load to
// exactly these values.

namespace winlab::fixtures {

// Three responses a, b, c with Bradley-Terry preferences: a beats b with .9,
// b beats c with .6, so a beats c with about .93.
Environment counterexample_env();

// Same response set with both gaps at .9 (a beats c with about .99).
Environment counterexample_env_sharp();

// The initial/reference model (.1, .5, .4) for the setting above.
Policy counterexample_reference(const Environment& env);

// Policy pair exhibiting the plain correspondence violation at beta = 1:
// theta has the lower online DPO loss, q the higher win rate.
Policy pair_theta(const Environment& env);  // (.1, .6, .3)
Policy pair_q(const Environment& env);      // (.8, .001, .199)

// Policy pair exhibiting the regularized violation: lower loss with both a
// worse win rate and a larger reverse KL.
Policy reg_pair_theta(const Environment& env);  // (.6, .07, .33)
Policy reg_pair_q(const Environment& env);      // (.56, .43, .01)

struct CompareRow {
  std::string setting;
  std::string metric;
  double reported_a = 0.0;    // published reference values for the two policies
  double reported_b = 0.0;
  double recomputed_a = 0.0;  // values under this implementation's conventions
  double recomputed_b = 0.0;
};

// Recomputes every metric of the two counterexample pairs at beta = 1 next to
// the published reference values. Conventions here: self-comparison included
// at probability 0.5, exact enumeration, beta = 1.
std::vector<CompareRow> reference_comparison();

}  // namespace winlab::fixtures
