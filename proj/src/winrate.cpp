#include "winlab/winrate.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "winlab/rng.hpp"

namespace winlab {

double HTransform::operator()(double p) const {
  if (clamp_eps > 0.0) p = std::min(std::max(p, clamp_eps), 1.0 - clamp_eps);
  switch (kind) {
    case Kind::identity:
      if (!(p >= 0.0 && p <= 1.0)) throw NumericDomainError("identity h: input outside [0,1]");
      return p;
    case Kind::log:
      if (!(p > 0.0 && p < 1.0)) {
        std::ostringstream msg;
        msg << "log h: preference probability " << p << " outside (0,1)";
        throw NumericDomainError(msg.str());
      }
      return std::log(p);
    case Kind::logit:
      if (!(p > 0.0 && p < 1.0)) {
        std::ostringstream msg;
        msg << "logit h: preference probability " << p << " outside (0,1)";
        throw NumericDomainError(msg.str());
      }
      return logit(p);
    case Kind::custom:
      if (!(p > domain_lo && p < domain_hi)) {
        std::ostringstream msg;
        msg << custom_name << " h: preference probability " << p << " outside (" << domain_lo
            << "," << domain_hi << ")";
        throw NumericDomainError(msg.str());
      }
      return fn(p);
  }
  throw NumericDomainError("unknown h transform");
}

std::string HTransform::name() const {
  switch (kind) {
    case Kind::identity: return "identity";
    case Kind::log: return "log";
    case Kind::logit: return "logit";
    case Kind::custom: return custom_name;
  }
  return "?";
}

HTransform HTransform::identity() { return HTransform{}; }

HTransform HTransform::log_transform() {
  HTransform h;
  h.kind = Kind::log;
  return h;
}

HTransform HTransform::logit_transform() {
  HTransform h;
  h.kind = Kind::logit;
  return h;
}

HTransform HTransform::custom(std::function<double(double)> fn, double lo, double hi,
                              std::string name) {
  HTransform h;
  h.kind = Kind::custom;
  h.fn = std::move(fn);
  h.domain_lo = lo;
  h.domain_hi = hi;
  h.custom_name = std::move(name);
  return h;
}

HTransform HTransform::parse(const std::string& name) {
  if (name == "identity") return identity();
  if (name == "log") return log_transform();
  if (name == "logit") return logit_transform();
  throw ValidationError("unknown h transform: " + name);
}

namespace {

// Conditional h-win rate for one query. Loop order (y1 outer, y0 inner) is
// fixed so serial and parallel totals are bit-identical.
double query_win_rate(const Vec& gen, const Vec& anc, const Mat& pref, const HTransform& h) {
  double total = 0.0;
  for (std::size_t y1 = 0; y1 < gen.size(); ++y1) {
    if (gen[y1] == 0.0) continue;
    double inner = 0.0;
    for (std::size_t y0 = 0; y0 < anc.size(); ++y0) {
      if (anc[y0] == 0.0) continue;
      inner += anc[y0] * h(pref[y0][y1]);
    }
    total += gen[y1] * inner;
  }
  return total;
}

constexpr std::uint64_t kMcShard = 8192;

struct ShardMoments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

ShardMoments mc_shard(const Policy& generator, const Policy& anchor, const Environment& env,
                      const HTransform& h, std::uint64_t count, std::uint64_t shard_seed) {
  Rng rng(shard_seed);
  ShardMoments m;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t q = rng.categorical(env.query_probs);
    const std::size_t y1 = rng.categorical(generator.probs[q]);
    const std::size_t y0 = rng.categorical(anchor.probs[q]);
    const double v = h(env.classifier.pref[q][y0][y1]);
    m.sum += v;
    m.sum_sq += v * v;
  }
  return m;
}

McEstimate reduce_moments(const std::vector<ShardMoments>& shards, std::uint64_t n) {
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& s : shards) {
    sum += s.sum;
    sum_sq += s.sum_sq;
  }
  McEstimate est;
  est.estimate = sum / static_cast<double>(n);
  if (n > 1) {
    const double var =
        std::max(0.0, (sum_sq - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1));
    est.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return est;
}

}  // namespace

double h_win_rate(const Policy& generator, const Policy& anchor, const Environment& env,
                  const HTransform& h) {
  const std::size_t nq = env.num_queries();
  Vec partial(nq, 0.0);
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (std::int64_t q = 0; q < static_cast<std::int64_t>(nq); ++q) {
    try {
      if (env.query_probs[q] != 0.0)
        partial[q] = query_win_rate(generator.probs[q], anchor.probs[q], env.classifier.pref[q], h);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  double total = 0.0;
  for (std::size_t q = 0; q < nq; ++q) total += env.query_probs[q] * partial[q];
  return total;
}

double serial::h_win_rate(const Policy& generator, const Policy& anchor, const Environment& env,
                          const HTransform& h) {
  double total = 0.0;
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    if (env.query_probs[q] == 0.0) continue;
    total += env.query_probs[q] *
             query_win_rate(generator.probs[q], anchor.probs[q], env.classifier.pref[q], h);
  }
  return total;
}

McEstimate mc_win_rate(const Policy& generator, const Policy& anchor, const Environment& env,
                       const HTransform& h, std::uint64_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ValidationError("mc_win_rate requires n_samples >= 1");
  const std::uint64_t n_shards = (n_samples + kMcShard - 1) / kMcShard;
  std::vector<ShardMoments> shards(n_shards);
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(n_shards); ++s) {
    try {
      const std::uint64_t lo = static_cast<std::uint64_t>(s) * kMcShard;
      const std::uint64_t count = std::min(kMcShard, n_samples - lo);
      shards[s] = mc_shard(generator, anchor, env, h, count, derive_stream(seed, s));
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return reduce_moments(shards, n_samples);
}

McEstimate serial::mc_win_rate(const Policy& generator, const Policy& anchor,
                               const Environment& env, const HTransform& h,
                               std::uint64_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ValidationError("mc_win_rate requires n_samples >= 1");
  const std::uint64_t n_shards = (n_samples + kMcShard - 1) / kMcShard;
  std::vector<ShardMoments> shards(n_shards);
  for (std::uint64_t s = 0; s < n_shards; ++s) {
    const std::uint64_t lo = s * kMcShard;
    const std::uint64_t count = std::min(kMcShard, n_samples - lo);
    shards[s] = mc_shard(generator, anchor, env, h, count, derive_stream(seed, s));
  }
  return reduce_moments(shards, n_samples);
}

namespace {

Policy random_policy(const Environment& env, Rng& rng) {
  Policy p;
  p.probs.reserve(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q)
    p.probs.push_back(rng.dirichlet(env.num_responses(q), 1.0));
  return p;
}

Policy singleton(const Environment& env, std::size_t q, std::size_t y) {
  Policy p;
  p.probs.reserve(env.num_queries());
  for (std::size_t i = 0; i < env.num_queries(); ++i) {
    Vec v(env.num_responses(i), 0.0);
    v[i == q ? y : 0] = 1.0;
    p.probs.push_back(std::move(v));
  }
  return p;
}

Environment with_query_probs(const Environment& env, Vec probs) {
  Environment out = env;
  out.query_probs = std::move(probs);
  return out;
}

}  // namespace

GroundednessReport groundedness_residuals(const Evaluator& evaluator, const Environment& env,
                                          int trials, std::uint64_t seed) {
  GroundednessReport report;
  const Vec mix_weights = {0.0, 0.25, 0.5, 1.0};

  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(t)));
    const Policy gen1 = random_policy(env, rng);
    const Policy gen2 = random_policy(env, rng);
    const Policy anc1 = random_policy(env, rng);
    const Policy anc2 = random_policy(env, rng);
    const double a = mix_weights[t % mix_weights.size()];
    const double b = 1.0 - a;

    // Generator mixture.
    Policy gen_mix = gen1;
    for (std::size_t q = 0; q < gen_mix.probs.size(); ++q)
      for (std::size_t y = 0; y < gen_mix.probs[q].size(); ++y)
        gen_mix.probs[q][y] = a * gen1.probs[q][y] + b * gen2.probs[q][y];
    double r = std::abs(evaluator(gen_mix, anc1, env) - a * evaluator(gen1, anc1, env) -
                        b * evaluator(gen2, anc1, env));
    report.prevalence_residual = std::max(report.prevalence_residual, r);

    // Anchor mixture.
    Policy anc_mix = anc1;
    for (std::size_t q = 0; q < anc_mix.probs.size(); ++q)
      for (std::size_t y = 0; y < anc_mix.probs[q].size(); ++y)
        anc_mix.probs[q][y] = a * anc1.probs[q][y] + b * anc2.probs[q][y];
    r = std::abs(evaluator(gen1, anc_mix, env) - a * evaluator(gen1, anc1, env) -
                 b * evaluator(gen1, anc2, env));
    report.prevalence_residual = std::max(report.prevalence_residual, r);

    // Query mixture: two random query distributions mixed with weight a.
    const std::size_t nq = env.num_queries();
    const Vec q1 = rng.dirichlet(nq, 1.0);
    const Vec q2 = rng.dirichlet(nq, 1.0);
    Vec qmix(nq);
    for (std::size_t i = 0; i < nq; ++i) qmix[i] = a * q1[i] + b * q2[i];
    r = std::abs(evaluator(gen1, anc1, with_query_probs(env, qmix)) -
                 a * evaluator(gen1, anc1, with_query_probs(env, q1)) -
                 b * evaluator(gen1, anc1, with_query_probs(env, q2)));
    report.prevalence_residual = std::max(report.prevalence_residual, r);
  }

  // Preference probe: evaluate every singleton (query, anchor, generator)
  // triple and require the values to be one strictly increasing image of the
  // preference probability.
  std::map<double, double> image;  // pref -> value
  bool consistent = true;
  for (std::size_t q = 0; q < env.num_queries() && consistent; ++q) {
    Vec qprobs(env.num_queries(), 0.0);
    qprobs[q] = 1.0;
    const Environment env_q = with_query_probs(env, qprobs);
    const std::size_t n = env.num_responses(q);
    for (std::size_t y0 = 0; y0 < n && consistent; ++y0)
      for (std::size_t y1 = 0; y1 < n && consistent; ++y1) {
        const double pref = env.classifier.pref[q][y0][y1];
        double value;
        try {
          value = evaluator(singleton(env_q, q, y1), singleton(env_q, q, y0), env_q);
        } catch (const NumericDomainError&) {
          consistent = false;
          break;
        }
        auto [it, inserted] = image.emplace(pref, value);
        if (!inserted && std::abs(it->second - value) > 1e-9) consistent = false;
      }
  }
  if (consistent) {
    double prev = -kInf;
    bool first = true;
    for (const auto& [pref, value] : image) {
      (void)pref;
      if (!first && !(value > prev)) {
        consistent = false;
        break;
      }
      prev = value;
      first = false;
    }
  }
  report.preference_consistent = consistent;
  return report;
}

}  // namespace winlab
