#include "winlab/optimize.hpp"

#include <cmath>

#include "winlab/rng.hpp"

namespace winlab {

namespace {

std::vector<Vec> logits_from(const Policy& policy) {
  std::vector<Vec> z;
  z.reserve(policy.probs.size());
  for (const Vec& p : policy.probs) {
    Vec row(p.size());
    for (std::size_t y = 0; y < p.size(); ++y) {
      if (!(p[y] > 0.0))
        throw ValidationError("initial policy must have full support for logit parametrization");
      row[y] = std::log(p[y]);
    }
    z.push_back(std::move(row));
  }
  return z;
}

Policy softmax_policy(const std::vector<Vec>& z) {
  Policy p;
  p.probs.reserve(z.size());
  for (const Vec& row : z) {
    double m = -kInf;
    for (double v : row) m = std::max(m, v);
    Vec probs(row.size());
    double sum = 0.0;
    for (std::size_t y = 0; y < row.size(); ++y) {
      probs[y] = std::exp(row[y] - m);
      sum += probs[y];
    }
    for (auto& v : probs) v /= sum;
    p.probs.push_back(std::move(probs));
  }
  return p;
}

// Cached per-family quantities that do not depend on theta.
struct Prepared {
  const ObjectiveSpec* spec = nullptr;
  const Environment* env = nullptr;
  std::vector<Vec> avg_h;      // wro, wro_kl
  std::vector<Vec> sft_target;  // sft
  double sign = 1.0;           // maximize sign * value
};

Prepared prepare(const ObjectiveSpec& spec, const Environment& env) {
  Prepared prep;
  prep.spec = &spec;
  prep.env = &env;
  prep.sign = objective_is_loss(spec.family) ? -1.0 : 1.0;
  switch (spec.family) {
    case ObjectiveFamily::wro:
    case ObjectiveFamily::wro_kl:
      prep.avg_h.reserve(env.num_queries());
      for (std::size_t q = 0; q < env.num_queries(); ++q)
        prep.avg_h.push_back(avg_h(env, q, spec.anchor, spec.h));
      break;
    case ObjectiveFamily::sft:
      prep.sft_target = sft_preferred_target(env, spec.initial).policy.probs;
      break;
    default:
      break;
  }
  return prep;
}

ObjectiveEval eval_prepared(const Prepared& prep, const Policy& theta) {
  const ObjectiveSpec& spec = *prep.spec;
  const Environment& env = *prep.env;
  ObjectiveEval out;
  out.grad.resize(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    const std::size_t n = env.num_responses(q);
    out.grad[q].assign(n, 0.0);
    const double px = env.query_probs[q];
    const Vec& th = theta.probs[q];
    switch (spec.family) {
      case ObjectiveFamily::wro: {
        const Vec& a = prep.avg_h[q];
        double mean = 0.0;
        for (std::size_t y = 0; y < n; ++y) mean += th[y] * a[y];
        out.value += px * mean;
        for (std::size_t y = 0; y < n; ++y) out.grad[q][y] = px * th[y] * (a[y] - mean);
        break;
      }
      case ObjectiveFamily::wro_kl: {
        const Vec& a = prep.avg_h[q];
        const Vec& ref = spec.reference.probs[q];
        Vec score(n);
        double mean = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
          if (!(ref[y] > 0.0))
            throw ValidationError("wro_kl ascent requires a full-support reference");
          const double lr = std::log(th[y]) - std::log(ref[y]);
          score[y] = a[y] - spec.beta * lr;
          mean += th[y] * score[y];
        }
        out.value += px * mean;  // win-rate term minus beta KL, in one sweep
        for (std::size_t y = 0; y < n; ++y) out.grad[q][y] = px * th[y] * (score[y] - mean);
        break;
      }
      case ObjectiveFamily::sft: {
        const Vec& t = prep.sft_target[q];
        double loss = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
          if (t[y] > 0.0) loss -= t[y] * std::log(th[y]);
          out.grad[q][y] = -px * (t[y] - th[y]);
        }
        out.value += px * loss;
        break;
      }
      case ObjectiveFamily::dpo_offline: {
        const Mat& pref = env.classifier.pref[q];
        const Mat& w = spec.pair_dist.q[q];
        const Vec& ref = spec.reference.probs[q];
        Vec lr(n), gl(n, 0.0);
        for (std::size_t y = 0; y < n; ++y) lr[y] = std::log(th[y]) - std::log(ref[y]);
        double loss = 0.0;
        for (std::size_t y0 = 0; y0 < n; ++y0)
          for (std::size_t y1 = 0; y1 < n; ++y1) {
            if (w[y0][y1] == 0.0) continue;
            const double m = spec.beta * (lr[y1] - lr[y0]);
            loss += w[y0][y1] * bernoulli_cross_entropy(pref[y0][y1], m);
            const double d = w[y0][y1] * spec.beta * (sigmoid(m) - pref[y0][y1]);
            gl[y1] += d;
            gl[y0] -= d;
          }
        out.value += px * loss;
        double gsum = 0.0;
        for (double v : gl) gsum += v;
        for (std::size_t y = 0; y < n; ++y) out.grad[q][y] = px * (gl[y] - th[y] * gsum);
        break;
      }
      case ObjectiveFamily::dpo_online: {
        // Value: the full online loss. Gradient: the classifier part only,
        // with the pair distribution ref x theta treated as data
        // (stop-gradient), which is how online DPO is trained. The raw value
        // has a prevalence term that would pull the minimizer away from the
        // shared RLHF/DPO target.
        const Mat& pref = env.classifier.pref[q];
        const Vec& ref = spec.reference.probs[q];
        Vec lr(n);
        for (std::size_t y = 0; y < n; ++y) lr[y] = std::log(th[y]) - std::log(ref[y]);
        Vec gl(n, 0.0);
        double loss = 0.0;
        for (std::size_t y0 = 0; y0 < n; ++y0) {
          if (ref[y0] == 0.0) continue;
          for (std::size_t y1 = 0; y1 < n; ++y1) {
            const double m = spec.beta * (lr[y1] - lr[y0]);
            loss += ref[y0] * th[y1] * bernoulli_cross_entropy(pref[y0][y1], m);
            const double d = ref[y0] * th[y1] * spec.beta * (sigmoid(m) - pref[y0][y1]);
            gl[y1] += d;
            gl[y0] -= d;
          }
        }
        out.value += px * loss;
        for (std::size_t y = 0; y < n; ++y) out.grad[q][y] = px * gl[y];
        break;
      }
    }
  }
  return out;
}

// Competitor used for the trajectory's win-rate column and divergence base
// for its KL column.
void trajectory_baselines(const ObjectiveSpec& spec, const Policy** competitor,
                          const Policy** kl_base) {
  switch (spec.family) {
    case ObjectiveFamily::wro:
      *competitor = &spec.anchor;
      *kl_base = &spec.anchor;
      break;
    case ObjectiveFamily::wro_kl:
      *competitor = &spec.anchor;
      *kl_base = &spec.reference;
      break;
    case ObjectiveFamily::dpo_offline:
    case ObjectiveFamily::dpo_online:
      *competitor = &spec.reference;
      *kl_base = &spec.reference;
      break;
    case ObjectiveFamily::sft:
      *competitor = &spec.initial;
      *kl_base = &spec.initial;
      break;
  }
}

double grad_norm(const std::vector<Vec>& g) {
  double s = 0.0;
  for (const Vec& row : g)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

void recenter(std::vector<Vec>& z) {
  for (Vec& row : z) {
    double m = -kInf;
    for (double v : row) m = std::max(m, v);
    for (double& v : row) v -= m;
  }
}

}  // namespace

ObjectiveEval objective_value_and_gradient(const ObjectiveSpec& spec, const Environment& env,
                                           const Policy& theta) {
  return eval_prepared(prepare(spec, env), theta);
}

Trajectory exact_ascent(const ObjectiveSpec& spec, const Environment& env, const Policy& init,
                        const AscentOptions& options) {
  if (!(options.step_size > 0.0)) throw ValidationError("step size must be positive");
  const Prepared prep = prepare(spec, env);
  const Policy* competitor = nullptr;
  const Policy* kl_base = nullptr;
  trajectory_baselines(spec, &competitor, &kl_base);
  const HTransform identity = HTransform::identity();

  std::vector<Vec> z = logits_from(init);
  Policy theta = softmax_policy(z);
  ObjectiveEval eval = eval_prepared(prep, theta);

  Trajectory traj;
  auto record = [&](int iter) {
    TrajectoryStep step;
    step.iteration = iter;
    step.objective = eval.value;
    step.win_rate = h_win_rate(theta, *competitor, env, identity);
    step.kl_to_ref = reverse_kl(theta, *kl_base, env.query_probs);
    step.grad_norm = grad_norm(eval.grad);
    traj.steps.push_back(step);
  };
  record(0);

  // Online DPO: step acceptance uses the loss with the pair distribution
  // frozen at the current policy, the quantity the stop-gradient direction
  // descends. At the current policy it coincides with the online loss.
  const bool online = spec.family == ObjectiveFamily::dpo_online;
  auto accept_value = [&](const Policy& cur, const Policy& cand) {
    if (!online) return eval_prepared(prep, cand).value;
    return dpo_loss_offline(cand, spec.reference,
                            product_pair_distribution(env, spec.reference, cur), env, spec.beta);
  };

  double alpha = options.step_size;
  const double alpha_cap = options.step_size * 1e6;
  int consecutive_rejects = 0;
  int iter = 0;
  for (; iter < options.max_steps; ++iter) {
    const double gnorm = grad_norm(eval.grad);
    if (gnorm <= options.grad_tol) {
      traj.converged = true;
      break;
    }
    std::vector<Vec> z_next = z;
    for (std::size_t q = 0; q < z.size(); ++q)
      for (std::size_t y = 0; y < z[q].size(); ++y)
        z_next[q][y] += prep.sign * alpha * eval.grad[q][y];
    recenter(z_next);
    Policy theta_next = softmax_policy(z_next);
    ObjectiveEval eval_next;
    double cand_value;
    if (online) {
      cand_value = accept_value(theta, theta_next);
    } else {
      eval_next = eval_prepared(prep, theta_next);
      cand_value = eval_next.value;
    }
    if (prep.sign * cand_value >= prep.sign * eval.value) {
      if (online) eval_next = eval_prepared(prep, theta_next);
      z = std::move(z_next);
      theta = std::move(theta_next);
      eval = std::move(eval_next);
      alpha = std::min(alpha * 1.2, alpha_cap);
      consecutive_rejects = 0;
      if (options.record_every > 0 && (iter + 1) % options.record_every == 0) record(iter + 1);
    } else {
      alpha *= 0.5;
      if (++consecutive_rejects >= 60) {
        traj.stalled = true;
        break;
      }
      --iter;  // a rejected proposal does not consume a step
    }
  }
  traj.iterations = iter;
  if (traj.steps.empty() || traj.steps.back().iteration != iter) record(iter);
  traj.final_policy = std::move(theta);
  return traj;
}

namespace {

struct ScoreShard {
  std::vector<Vec> sum;
  std::vector<Vec> sum_sq;
};

constexpr std::uint64_t kScoreShard = 8192;

}  // namespace

ScoreGradient score_gradient(const ObjectiveSpec& spec, const Environment& env,
                             const Policy& theta, std::uint64_t n_samples,
                             bool subtract_anchor_term, std::uint64_t seed) {
  if (spec.family != ObjectiveFamily::wro && spec.family != ObjectiveFamily::wro_kl)
    throw ValidationError("score_gradient supports wro and wro_kl objectives");
  if (n_samples < 2) throw ValidationError("score_gradient requires n_samples >= 2");
  if (subtract_anchor_term) {
    if (!env.bt) throw ValidationError("subtract_anchor_term requires a Bradley-Terry environment");
    if (spec.h.kind != HTransform::Kind::logit)
      throw ValidationError("subtract_anchor_term requires h = logit");
  }

  const bool regularized = spec.family == ObjectiveFamily::wro_kl;
  std::vector<Vec> log_ratio;
  if (regularized) {
    log_ratio.resize(env.num_queries());
    for (std::size_t q = 0; q < env.num_queries(); ++q) {
      log_ratio[q].resize(env.num_responses(q));
      for (std::size_t y = 0; y < env.num_responses(q); ++y) {
        if (!(spec.reference.probs[q][y] > 0.0) || !(theta.probs[q][y] > 0.0))
          throw ValidationError("score_gradient requires full support for the KL term");
        log_ratio[q][y] = std::log(theta.probs[q][y]) - std::log(spec.reference.probs[q][y]);
      }
    }
  }

  const std::uint64_t n_shards = (n_samples + kScoreShard - 1) / kScoreShard;
  std::vector<ScoreShard> shards(n_shards);
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(n_shards); ++s) {
    try {
      ScoreShard shard;
      shard.sum.resize(env.num_queries());
      shard.sum_sq.resize(env.num_queries());
      for (std::size_t q = 0; q < env.num_queries(); ++q) {
        shard.sum[q].assign(env.num_responses(q), 0.0);
        shard.sum_sq[q].assign(env.num_responses(q), 0.0);
      }
      Rng rng(derive_stream(seed, s));
      const std::uint64_t lo = static_cast<std::uint64_t>(s) * kScoreShard;
      const std::uint64_t count = std::min(kScoreShard, n_samples - lo);
      for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t q = rng.categorical(env.query_probs);
        const std::size_t y1 = rng.categorical(theta.probs[q]);
        double payoff;
        if (subtract_anchor_term) {
          payoff = env.bt->rewards[q][y1];
        } else {
          const std::size_t y0 = rng.categorical(spec.anchor.probs[q]);
          payoff = spec.h(env.classifier.pref[q][y0][y1]);
        }
        if (regularized) payoff -= spec.beta * log_ratio[q][y1];
        const Vec& th = theta.probs[q];
        for (std::size_t y = 0; y < th.size(); ++y) {
          const double g = payoff * ((y == y1 ? 1.0 : 0.0) - th[y]);
          shard.sum[q][y] += g;
          shard.sum_sq[q][y] += g * g;
        }
      }
      shards[s] = std::move(shard);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);

  ScoreGradient out;
  out.n_samples = n_samples;
  out.mean.resize(env.num_queries());
  out.variance.resize(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    out.mean[q].assign(env.num_responses(q), 0.0);
    out.variance[q].assign(env.num_responses(q), 0.0);
  }
  const double n = static_cast<double>(n_samples);
  for (std::size_t q = 0; q < env.num_queries(); ++q)
    for (std::size_t y = 0; y < env.num_responses(q); ++y) {
      double sum = 0.0, sum_sq = 0.0;
      for (const auto& shard : shards) {
        sum += shard.sum[q][y];
        sum_sq += shard.sum_sq[q][y];
      }
      out.mean[q][y] = sum / n;
      out.variance[q][y] = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    }
  return out;
}

namespace {

constexpr double kTieTol = 1e-12;

ScanPoint evaluate_scan_point(Policy policy, const Environment& env, const Policy& reference,
                              double beta) {
  ScanPoint pt;
  pt.loss = dpo_loss_online(policy, reference, env, beta);
  pt.win_rate = h_win_rate(policy, reference, env, HTransform::identity());
  try {
    pt.logit_win_rate = h_win_rate(policy, reference, env, HTransform::logit_transform());
  } catch (const NumericDomainError&) {
    pt.logit_win_rate = std::numeric_limits<double>::quiet_NaN();
  }
  pt.kl_to_ref = reverse_kl(policy, reference, env.query_probs);
  pt.policy = std::move(policy);
  return pt;
}

Policy draw_policy(const Environment& env, double alpha, std::uint64_t seed) {
  Rng rng(seed);
  Policy p;
  p.probs.reserve(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q)
    p.probs.push_back(rng.dirichlet(env.num_responses(q), alpha));
  return p;
}

constexpr std::uint64_t kScanBlock = 1024;

template <bool Parallel>
ScanResult scan_impl(const Environment& env, const Policy& reference, const ScanOptions& options) {
  if (options.n_points < 1) throw ValidationError("scan requires at least one point");
  if (!(options.dirichlet_alpha > 0.0)) throw ValidationError("dirichlet alpha must be positive");
  ScanResult result;
  result.reference_loss = dpo_loss_online(reference, reference, env, options.beta);
  result.points.reserve(options.n_points);
  const std::uint64_t max_draws =
      options.max_total_draws ? options.max_total_draws : options.n_points * 1000;

  std::uint64_t next_draw = 0;
  std::vector<ScanPoint> block(kScanBlock);
  while (result.points.size() < options.n_points && next_draw < max_draws) {
    const std::uint64_t count = std::min<std::uint64_t>(kScanBlock, max_draws - next_draw);
    if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i)
        block[i] = evaluate_scan_point(
            draw_policy(env, options.dirichlet_alpha, derive_stream(options.seed, next_draw + i)),
            env, reference, options.beta);
    } else {
      for (std::uint64_t i = 0; i < count; ++i)
        block[i] = evaluate_scan_point(
            draw_policy(env, options.dirichlet_alpha, derive_stream(options.seed, next_draw + i)),
            env, reference, options.beta);
    }
    for (std::uint64_t i = 0; i < count && result.points.size() < options.n_points; ++i) {
      if (!options.keep_only_improving || block[i].loss < result.reference_loss)
        result.points.push_back(std::move(block[i]));
      ++result.total_draws;
    }
    next_draw += count;
    if (result.points.size() >= options.n_points) break;
  }
  if (result.points.size() < options.n_points)
    throw NumericDomainError("scan exhausted its draw budget before keeping enough points");
  result.violating_pairs = Parallel ? count_violating_pairs(result.points)
                                    : serial::count_violating_pairs(result.points);
  return result;
}

std::uint64_t pair_violations_row(const std::vector<ScanPoint>& points, std::size_t i) {
  std::uint64_t count = 0;
  for (std::size_t j = i + 1; j < points.size(); ++j) {
    const double dl = points[i].loss - points[j].loss;
    const double dw = points[i].win_rate - points[j].win_rate;
    if (std::abs(dl) <= kTieTol || std::abs(dw) <= kTieTol) continue;
    if (dl * dw > 0.0) ++count;
  }
  return count;
}

}  // namespace

std::uint64_t count_violating_pairs(const std::vector<ScanPoint>& points) {
  std::uint64_t total = 0;
  const std::int64_t n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : total)
  for (std::int64_t i = 0; i < n; ++i) total += pair_violations_row(points, i);
  return total;
}

std::uint64_t serial::count_violating_pairs(const std::vector<ScanPoint>& points) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < points.size(); ++i) total += pair_violations_row(points, i);
  return total;
}

ScanResult dpo_mismatch_scan(const Environment& env, const Policy& reference,
                             const ScanOptions& options) {
  return scan_impl<true>(env, reference, options);
}

ScanResult serial::dpo_mismatch_scan(const Environment& env, const Policy& reference,
                                     const ScanOptions& options) {
  return scan_impl<false>(env, reference, options);
}

CorrespondenceVerdict correspondence_check(const Policy& theta1, const Policy& theta2,
                                           const Environment& env, const Policy& reference,
                                           double beta) {
  CorrespondenceVerdict v;
  v.loss1 = dpo_loss_online(theta1, reference, env, beta);
  v.loss2 = dpo_loss_online(theta2, reference, env, beta);
  const HTransform identity = HTransform::identity();
  v.win1 = h_win_rate(theta1, reference, env, identity);
  v.win2 = h_win_rate(theta2, reference, env, identity);
  try {
    const HTransform lg = HTransform::logit_transform();
    v.logit_win1 = h_win_rate(theta1, reference, env, lg);
    v.logit_win2 = h_win_rate(theta2, reference, env, lg);
  } catch (const NumericDomainError&) {
    v.logit_win1 = v.logit_win2 = std::numeric_limits<double>::quiet_NaN();
  }
  v.kl1 = reverse_kl(theta1, reference, env.query_probs);
  v.kl2 = reverse_kl(theta2, reference, env.query_probs);
  v.plain_violation = v.loss1 < v.loss2 && v.win1 < v.win2;
  v.regularized_violation = v.plain_violation && v.kl1 > v.kl2;
  return v;
}

}  // namespace winlab
