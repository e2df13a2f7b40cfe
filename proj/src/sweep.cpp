#include "winlab/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "winlab/rng.hpp"

namespace winlab {

std::string ClassifierEstimate::label() const {
  switch (kind) {
    case Kind::oracle: return "oracle";
    case Kind::bt_fit: return "bt_fit";
    case Kind::perturbed: {
      std::ostringstream s;
      s << "perturbed(eta=" << eta << ",seed=" << seed << ")";
      return s.str();
    }
  }
  return "?";
}

namespace {

Environment estimated_environment(const Environment& env, const ClassifierEstimate& est) {
  switch (est.kind) {
    case ClassifierEstimate::Kind::oracle:
      return env;
    case ClassifierEstimate::Kind::bt_fit: {
      Environment out = env;
      BTClassifier bt = fit_bt(env.classifier);
      out.classifier = make_bt_classifier(bt.rewards);
      out.bt = std::move(bt);
      return out;
    }
    case ClassifierEstimate::Kind::perturbed: {
      Environment out = env;
      out.classifier = perturb_classifier(env.classifier, est.eta, est.seed);
      out.bt.reset();
      return out;
    }
  }
  throw ValidationError("unknown classifier estimate");
}

SweepRow run_cell(const Environment& oracle_env, const Environment& est_env,
                  const ClassifierEstimate& est, const HTransform& h, double beta,
                  const SweepConfig& config) {
  SweepRow row;
  row.estimate = est.label();
  row.h = h.name();
  row.beta = beta;
  try {
    Policy tuned;
    bool converged = true;
    if (config.closed_form) {
      tuned = wro_kl_target(est_env, h, beta, config.reference, config.reference).policy;
    } else {
      ObjectiveSpec spec;
      spec.family = ObjectiveFamily::wro_kl;
      spec.h = h;
      spec.beta = beta;
      spec.anchor = config.reference;
      spec.reference = config.reference;
      AscentOptions opts;
      opts.max_steps = config.ascent_budget;
      opts.record_every = 0;
      Trajectory traj = exact_ascent(spec, est_env, config.reference, opts);
      tuned = traj.final_policy;
      converged = traj.converged;
    }
    row.train_objective = wro_kl_objective(tuned, config.reference, config.reference, est_env, h, beta);
    row.win_rate = h_win_rate(tuned, config.reference, oracle_env, HTransform::identity());
    row.kl_to_ref = reverse_kl(tuned, config.reference, oracle_env.query_probs);
    row.converged = converged;
    row.status = "ok";
    row.tuned = std::move(tuned);
  } catch (const std::exception& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.win_rate = row.train_objective = row.kl_to_ref = nan;
    row.converged = false;
    row.status = e.what();
  }
  return row;
}

}  // namespace

SweepResult run_sweep(const Environment& env, const SweepConfig& config) {
  if (config.h_grid.empty() || config.beta_grid.empty() || config.estimates.empty())
    throw ValidationError("sweep grids must be nonempty");
  for (double beta : config.beta_grid)
    if (!(beta > 0.0)) throw ValidationError("sweep betas must be positive");

  // Estimate construction can itself fail (a deterministic preference breaks
  // the BT fit); that marks every cell of the estimate, not the whole sweep.
  std::vector<std::optional<Environment>> est_envs(config.estimates.size());
  std::vector<std::string> est_errors(config.estimates.size());
  for (std::size_t e = 0; e < config.estimates.size(); ++e) {
    try {
      est_envs[e] = estimated_environment(env, config.estimates[e]);
    } catch (const std::exception& ex) {
      est_errors[e] = ex.what();
    }
  }

  const std::size_t cells =
      config.estimates.size() * config.h_grid.size() * config.beta_grid.size();
  SweepResult result;
  result.rows.resize(cells);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(cells); ++c) {
    const std::size_t e = c / (config.h_grid.size() * config.beta_grid.size());
    const std::size_t rem = c % (config.h_grid.size() * config.beta_grid.size());
    const std::size_t hi = rem / config.beta_grid.size();
    const std::size_t bi = rem % config.beta_grid.size();
    if (!est_envs[e]) {
      SweepRow row;
      row.estimate = config.estimates[e].label();
      row.h = config.h_grid[hi].name();
      row.beta = config.beta_grid[bi];
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.win_rate = row.train_objective = row.kl_to_ref = nan;
      row.status = est_errors[e];
      result.rows[c] = std::move(row);
      continue;
    }
    result.rows[c] = run_cell(env, *est_envs[e], config.estimates[e], config.h_grid[hi],
                              config.beta_grid[bi], config);
  }
  return result;
}

namespace {

Vec ranks_with_ties(const Vec& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&values](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  Vec ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const Vec& a, const Vec& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

Correlation spearman_permutation(const std::string& axis, const Vec& x, const Vec& y,
                                 std::uint64_t seed, int n_permutations) {
  Correlation corr;
  corr.axis = axis;
  corr.n = x.size();
  if (x.size() < 3) return corr;
  const Vec rx = ranks_with_ties(x);
  const Vec ry = ranks_with_ties(y);
  const double rho = pearson(rx, ry);
  if (std::isnan(rho)) return corr;  // constant column, correlation undefined
  corr.defined = true;
  corr.rho = rho;
  Rng rng(seed);
  Vec shuffled = ry;
  int hits = 0;
  for (int p = 0; p < n_permutations; ++p) {
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
      std::swap(shuffled[i - 1], shuffled[j]);
    }
    const double r = pearson(rx, shuffled);
    if (!std::isnan(r) && std::abs(r) >= std::abs(rho) - 1e-12) ++hits;
  }
  corr.p_value = (hits + 1.0) / (n_permutations + 1.0);
  return corr;
}

}  // namespace

std::vector<Correlation> rank_correlations(const SweepResult& result, std::uint64_t seed,
                                           int n_permutations) {
  Vec win, train, beta, h_idx, est_idx;
  std::vector<std::string> h_names, est_names;
  for (const auto& row : result.rows) {
    if (row.status != "ok" || !std::isfinite(row.win_rate) || !std::isfinite(row.train_objective))
      continue;
    win.push_back(row.win_rate);
    train.push_back(row.train_objective);
    beta.push_back(row.beta);
    auto idx_of = [](std::vector<std::string>& names, const std::string& v) {
      for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == v) return static_cast<double>(i);
      names.push_back(v);
      return static_cast<double>(names.size() - 1);
    };
    h_idx.push_back(idx_of(h_names, row.h));
    est_idx.push_back(idx_of(est_names, row.estimate));
  }
  std::vector<Correlation> out;
  out.push_back(spearman_permutation("train_objective", train, win, derive_stream(seed, 0),
                                     n_permutations));
  out.push_back(spearman_permutation("beta", beta, win, derive_stream(seed, 1), n_permutations));
  out.push_back(spearman_permutation("h", h_idx, win, derive_stream(seed, 2), n_permutations));
  out.push_back(
      spearman_permutation("estimate", est_idx, win, derive_stream(seed, 3), n_permutations));
  return out;
}

}  // namespace winlab
