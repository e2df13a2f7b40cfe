#pragma once

#include <cstdint>

#include "winlab/objectives.hpp"

namespace winlab {

struct TrajectoryStep {
  int iteration = 0;
  double objective = 0.0;
  double win_rate = 0.0;   // identity-h win rate vs the objective's competitor
  double kl_to_ref = 0.0;  // reverse KL to the objective's reference policy
  double grad_norm = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Policy final_policy;
  int iterations = 0;
  bool converged = false;  // gradient norm reached grad_tol
  bool stalled = false;    // step size collapsed without progress
};

struct AscentOptions {
  double step_size = 0.5;
  int max_steps = 20000;
  double grad_tol = 1e-10;
  int record_every = 1;
};

// Value of the objective together with its analytic gradient with respect to
// per-query softmax logits. For dpo_online the value is the full online loss
// but the gradient treats the pair distribution ref x theta as data
// (stop-gradient), which is how online DPO is trained; its stationary point
// is the shared RLHF/DPO target rather than the minimizer of the raw value.
struct ObjectiveEval {
  double value = 0.0;
  std::vector<Vec> grad;
};

ObjectiveEval objective_value_and_gradient(const ObjectiveSpec& spec, const Environment& env,
                                           const Policy& theta);

// Exact gradient ascent (descent for losses) in per-query logit space.
// Rejected steps halve the step size, accepted steps grow it gently, so the
// objective is monotone along the trajectory.
Trajectory exact_ascent(const ObjectiveSpec& spec, const Environment& env, const Policy& init,
                        const AscentOptions& options = {});

struct ScoreGradient {
  std::vector<Vec> mean;      // REINFORCE estimate of the logit gradient
  std::vector<Vec> variance;  // per-coordinate variance of the single-sample estimator
  std::uint64_t n_samples = 0;
};

// Score-function (REINFORCE) estimator of the policy gradient for wro /
// wro_kl objectives. With subtract_anchor_term (logit h + BT rewards), the
// per-query anchor constant is dropped from the payoff, the RLHF-style
// estimator. Deterministic given (inputs, seed).
ScoreGradient score_gradient(const ObjectiveSpec& spec, const Environment& env,
                             const Policy& theta, std::uint64_t n_samples,
                             bool subtract_anchor_term, std::uint64_t seed);

struct ScanPoint {
  Policy policy;
  double loss = 0.0;      // online DPO loss vs the reference
  double win_rate = 0.0;  // identity-h win rate vs the reference
  double logit_win_rate = 0.0;  // NaN when the classifier leaves logit's domain
  double kl_to_ref = 0.0;
};

struct ScanOptions {
  std::uint64_t n_points = 5000;  // kept points (raw draws when the filter is off)
  double beta = 1.0;
  double dirichlet_alpha = 1.0;
  bool keep_only_improving = true;  // keep only points whose loss beats the reference's
  std::uint64_t seed = 0;
  std::uint64_t max_total_draws = 0;  // 0 = 1000x n_points
};

struct ScanResult {
  std::vector<ScanPoint> points;
  std::uint64_t total_draws = 0;
  std::uint64_t violating_pairs = 0;  // unordered pairs where loss and win rate improve together
  double reference_loss = 0.0;
};

// Dirichlet(alpha) policy scan of the online DPO loss vs win rate plane.
// Pairs of kept points where lower loss coincides with lower win rate are
// counted as win rate-correspondence violations (ties within 1e-12 excluded).
ScanResult dpo_mismatch_scan(const Environment& env, const Policy& reference,
                             const ScanOptions& options);

std::uint64_t count_violating_pairs(const std::vector<ScanPoint>& points);

namespace serial {
ScanResult dpo_mismatch_scan(const Environment& env, const Policy& reference,
                             const ScanOptions& options);
std::uint64_t count_violating_pairs(const std::vector<ScanPoint>& points);
}  // namespace serial

struct CorrespondenceVerdict {
  double loss1 = 0.0, loss2 = 0.0;
  double win1 = 0.0, win2 = 0.0;
  double logit_win1 = 0.0, logit_win2 = 0.0;
  double kl1 = 0.0, kl2 = 0.0;
  bool plain_violation = false;        // loss1 < loss2 and win1 < win2
  bool regularized_violation = false;  // plain violation and kl1 > kl2
};

CorrespondenceVerdict correspondence_check(const Policy& theta1, const Policy& theta2,
                                           const Environment& env, const Policy& reference,
                                           double beta);

}  // namespace winlab
