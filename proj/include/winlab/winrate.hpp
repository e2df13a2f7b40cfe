#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "winlab/env.hpp"

namespace winlab {

// Strictly increasing transform applied to preference probabilities. log and
// logit reject inputs outside (0,1) rather than clamping; an explicit epsilon
// clamp (default off) is available for users who want the limit behaviour.
struct HTransform {
  enum class Kind { identity, log, logit, custom };

  Kind kind = Kind::identity;
  std::function<double(double)> fn;  // custom only
  double domain_lo = 0.0;            // custom only; open interval (lo, hi)
  double domain_hi = 1.0;
  std::string custom_name = "custom";
  double clamp_eps = 0.0;  // 0 = off

  double operator()(double p) const;
  std::string name() const;

  static HTransform identity();
  static HTransform log_transform();
  static HTransform logit_transform();
  static HTransform custom(std::function<double(double)> fn, double lo, double hi,
                           std::string name = "custom");
  // Accepts "identity", "log", "logit".
  static HTransform parse(const std::string& name);
};

// Exact h-win rate of the generator over the anchor:
//   sum_x p(x) sum_{y1} gen(y1|x) sum_{y0} anc(y0|x) h(pref[y0][y1]).
// Full enumeration, queries evaluated in parallel.
double h_win_rate(const Policy& generator, const Policy& anchor, const Environment& env,
                  const HTransform& h);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo h-win rate over n i.i.d. draws of (x, y1, y0). Samples are
// produced in fixed-size shards whose seeds derive from the root seed, so the
// result is byte-identical for any thread count.
McEstimate mc_win_rate(const Policy& generator, const Policy& anchor, const Environment& env,
                       const HTransform& h, std::uint64_t n_samples, std::uint64_t seed);

namespace serial {
// Reference implementations with the same shard layout; kept for testing and
// benchmarking against the parallel kernels above.
double h_win_rate(const Policy& generator, const Policy& anchor, const Environment& env,
                  const HTransform& h);
McEstimate mc_win_rate(const Policy& generator, const Policy& anchor, const Environment& env,
                       const HTransform& h, std::uint64_t n_samples, std::uint64_t seed);
}  // namespace serial

using Evaluator = std::function<double(const Policy&, const Policy&, const Environment&)>;

struct GroundednessReport {
  // Worst |phi(a p1 + b p2) - a phi(p1) - b phi(p2)| over sampled generator,
  // query, and anchor mixtures.
  double prevalence_residual = 0.0;
  // Whether singleton evaluations are one fixed, strictly increasing image of
  // the preference probability across all singleton triples.
  bool preference_consistent = false;
};

GroundednessReport groundedness_residuals(const Evaluator& evaluator, const Environment& env,
                                          int trials, std::uint64_t seed);

}  // namespace winlab
