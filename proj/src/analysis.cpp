#include "winlab/analysis.hpp"

#include <cmath>

namespace winlab {

namespace {

double mean_of(const Vec& w, const Vec& v) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) m += w[i] * v[i];
  return m;
}

}  // namespace

WinRateReport sft_winrate_closed_form(const Environment& env, const Policy& initial) {
  WinRateReport report;
  double expected_var = 0.0;
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    if (env.query_probs[q] == 0.0) continue;
    const Vec ap = avg_pref(env, q, initial);
    const double mu = mean_of(initial.probs[q], ap);
    double var = 0.0;
    for (std::size_t y = 0; y < ap.size(); ++y)
      var += initial.probs[q][y] * (ap[y] - mu) * (ap[y] - mu);
    expected_var += env.query_probs[q] * var;
  }
  report.closed_form = 0.5 + 2.0 * expected_var;
  const TargetResult target = sft_preferred_target(env, initial);
  report.brute_force = h_win_rate(target.policy, initial, env, HTransform::identity());
  report.abs_diff = std::abs(report.closed_form - report.brute_force);
  report.components.emplace_back("expected_variance", expected_var);
  return report;
}

WinRateReport filter_sft_winrate_closed_form(const Environment& env, const Policy& initial,
                                             const FilterSpec& filter) {
  WinRateReport report;
  double gap = 0.0;
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    if (env.query_probs[q] == 0.0) continue;
    const Vec ap = avg_pref(env, q, initial);
    const Vec af = avg_filter(env, q, initial, filter);
    const double mu_p = mean_of(initial.probs[q], ap);
    const double mu_f = mean_of(initial.probs[q], af);
    if (!(mu_f > 0.0))
      throw ValidationError("filter has zero acceptance mass for query " + env.queries[q]);
    double cov = 0.0;
    for (std::size_t y = 0; y < ap.size(); ++y)
      cov += initial.probs[q][y] * (af[y] - mu_f) * (ap[y] - mu_p);
    gap += env.query_probs[q] * cov / mu_f;
  }
  report.closed_form = 0.5 + gap;
  const TargetResult target = filter_sft_target(env, initial, filter);
  report.brute_force = h_win_rate(target.policy, initial, env, HTransform::identity());
  report.abs_diff = std::abs(report.closed_form - report.brute_force);
  report.components.emplace_back("expected_cov_over_mean", gap);
  return report;
}

WinRateReport wro_kl_target_winrate_closed_form(const Environment& env, const Policy& initial,
                                                const HTransform& h, double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  WinRateReport report;
  double closed = 0.0;
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    if (env.query_probs[q] == 0.0) continue;
    const Vec& init = initial.probs[q];
    const std::size_t n = init.size();
    std::vector<bool> mask(n);
    for (std::size_t y = 0; y < n; ++y) mask[y] = init[y] > 0.0;
    const Vec ap = avg_pref(env, q, initial);
    const Vec ah = avg_h(env, q, initial, h, &mask);
    double shift = -kInf;
    for (std::size_t y = 0; y < n; ++y)
      if (mask[y]) shift = std::max(shift, ah[y] / beta);
    double num = 0.0, den = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (!mask[y]) continue;
      const double w = init[y] * std::exp(ah[y] / beta - shift);
      num += w * ap[y];
      den += w;
    }
    closed += env.query_probs[q] * num / den;
  }
  report.closed_form = closed;
  const TargetResult target = wro_kl_target(env, h, beta, initial, initial);
  report.brute_force = h_win_rate(target.policy, initial, env, HTransform::identity());
  report.abs_diff = std::abs(report.closed_form - report.brute_force);
  return report;
}

std::vector<VarianceBound> sft_variance_bound(const Environment& env, const Policy& initial) {
  std::vector<VarianceBound> out;
  out.reserve(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    const Vec ap = avg_pref(env, q, initial);
    VarianceBound vb;
    vb.mean = mean_of(initial.probs[q], ap);
    for (std::size_t y = 0; y < ap.size(); ++y)
      vb.variance += initial.probs[q][y] * (ap[y] - vb.mean) * (ap[y] - vb.mean);
    vb.bound = vb.mean * (1.0 - vb.mean);
    std::size_t support = 0;
    for (double p : initial.probs[q])
      if (p > 0.0) ++support;
    vb.strict = support >= 3;
    out.push_back(vb);
  }
  return out;
}

BTOptimum bt_optimum(const Environment& env) {
  if (!env.bt) throw ValidationError("bt_optimum requires a Bradley-Terry environment");
  BTOptimum out;
  out.argmax.resize(env.num_queries());
  constexpr double kTieTol = 1e-12;
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    const Vec& r = env.bt->rewards[q];
    double best = -kInf;
    for (double v : r) best = std::max(best, v);
    for (std::size_t y = 0; y < r.size(); ++y)
      if (r[y] >= best - kTieTol) out.argmax[q].push_back(y);
    if (out.argmax[q].size() > 1) out.any_tie = true;
  }
  return out;
}

double best_vertex_win_rate(const Environment& env, const Policy& anchor) {
  double total = 0.0;
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    if (env.query_probs[q] == 0.0) continue;
    const Vec ap = avg_pref(env, q, anchor);
    double best = -kInf;
    for (double v : ap) best = std::max(best, v);
    total += env.query_probs[q] * best;
  }
  return total;
}

}  // namespace winlab
