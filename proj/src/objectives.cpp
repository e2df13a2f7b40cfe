#include "winlab/objectives.hpp"

#include <cmath>

namespace winlab {

ObjectiveFamily parse_objective_family(const std::string& name) {
  if (name == "wro") return ObjectiveFamily::wro;
  if (name == "wro_kl") return ObjectiveFamily::wro_kl;
  if (name == "dpo_offline") return ObjectiveFamily::dpo_offline;
  if (name == "dpo_online") return ObjectiveFamily::dpo_online;
  if (name == "sft") return ObjectiveFamily::sft;
  throw ValidationError("unknown objective family: " + name);
}

std::string objective_family_name(ObjectiveFamily family) {
  switch (family) {
    case ObjectiveFamily::wro: return "wro";
    case ObjectiveFamily::wro_kl: return "wro_kl";
    case ObjectiveFamily::dpo_offline: return "dpo_offline";
    case ObjectiveFamily::dpo_online: return "dpo_online";
    case ObjectiveFamily::sft: return "sft";
  }
  return "?";
}

bool objective_is_loss(ObjectiveFamily family) {
  return family == ObjectiveFamily::dpo_offline || family == ObjectiveFamily::dpo_online ||
         family == ObjectiveFamily::sft;
}

namespace {

// log(theta(y)/ref(y)) with the conventions log(0/q) = -inf, log(p/0) = +inf.
double log_ratio(double theta, double ref) {
  if (theta == 0.0) return -kInf;
  if (ref == 0.0) return kInf;
  return std::log(theta) - std::log(ref);
}

}  // namespace

double dpo_implicit_classifier(const Policy& theta, const Policy& reference, double beta,
                               std::size_t q, std::size_t y0, std::size_t y1) {
  const double l1 = log_ratio(theta.probs[q][y1], reference.probs[q][y1]);
  const double l0 = log_ratio(theta.probs[q][y0], reference.probs[q][y0]);
  if (!std::isfinite(l1) || !std::isfinite(l0))
    throw NumericDomainError("dpo_implicit_classifier: zero-probability log-ratio");
  return sigmoid(beta * (l1 - l0));
}

double dpo_loss_offline(const Policy& theta, const Policy& reference, const PairDistribution& pairs,
                        const Environment& env, double beta) {
  if (!(beta > 0.0)) throw ValidationError("DPO loss requires beta > 0");
  double total = 0.0;
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    if (env.query_probs[q] == 0.0) continue;
    const Mat& pref = env.classifier.pref[q];
    const Mat& w = pairs.q[q];
    const std::size_t n = pref.size();
    Vec lr(n);
    for (std::size_t y = 0; y < n; ++y) lr[y] = log_ratio(theta.probs[q][y], reference.probs[q][y]);
    double query_loss = 0.0;
    for (std::size_t y0 = 0; y0 < n; ++y0)
      for (std::size_t y1 = 0; y1 < n; ++y1) {
        if (w[y0][y1] == 0.0) continue;
        const double m = beta * (lr[y1] - lr[y0]);
        if (std::isnan(m)) return kInf;  // 0/0 log-ratio pair: support violation
        query_loss += w[y0][y1] * bernoulli_cross_entropy(pref[y0][y1], m);
      }
    total += env.query_probs[q] * query_loss;
  }
  return total;
}

double dpo_loss_online(const Policy& theta, const Policy& reference, const Environment& env,
                       double beta) {
  if (!(beta > 0.0)) throw ValidationError("DPO loss requires beta > 0");
  double total = 0.0;
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    if (env.query_probs[q] == 0.0) continue;
    const Mat& pref = env.classifier.pref[q];
    const std::size_t n = pref.size();
    Vec lr(n);
    for (std::size_t y = 0; y < n; ++y) lr[y] = log_ratio(theta.probs[q][y], reference.probs[q][y]);
    double query_loss = 0.0;
    for (std::size_t y0 = 0; y0 < n; ++y0) {
      if (reference.probs[q][y0] == 0.0) continue;
      for (std::size_t y1 = 0; y1 < n; ++y1) {
        if (theta.probs[q][y1] == 0.0) continue;
        const double m = beta * (lr[y1] - lr[y0]);
        if (std::isnan(m)) return kInf;  // 0/0 log-ratio pair: support violation
        query_loss += reference.probs[q][y0] * theta.probs[q][y1] *
                      bernoulli_cross_entropy(pref[y0][y1], m);
      }
    }
    total += env.query_probs[q] * query_loss;
  }
  return total;
}

double sft_nll(const Policy& theta, const Environment& env, const Policy& initial) {
  const TargetResult target = sft_preferred_target(env, initial);
  double total = 0.0;
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    if (env.query_probs[q] == 0.0) continue;
    double query_loss = 0.0;
    for (std::size_t y = 0; y < env.num_responses(q); ++y) {
      const double t = target.policy.probs[q][y];
      if (t == 0.0) continue;
      const double p = theta.probs[q][y];
      if (p == 0.0) return kInf;  // support violation: infinite loss, reported
      query_loss -= t * std::log(p);
    }
    total += env.query_probs[q] * query_loss;
  }
  return total;
}

double reverse_kl(const Policy& p, const Policy& q, const Vec& query_probs) {
  double total = 0.0;
  for (std::size_t x = 0; x < query_probs.size(); ++x) {
    if (query_probs[x] == 0.0) continue;
    double kl = 0.0;
    for (std::size_t y = 0; y < p.probs[x].size(); ++y) {
      const double pi = p.probs[x][y];
      if (pi == 0.0) continue;
      const double qi = q.probs[x][y];
      if (qi == 0.0) return kInf;
      kl += pi * (std::log(pi) - std::log(qi));
    }
    total += query_probs[x] * kl;
  }
  return total;
}

double wro_kl_objective(const Policy& theta, const Policy& anchor, const Policy& reference,
                        const Environment& env, const HTransform& h, double beta) {
  if (!(beta > 0.0)) throw ValidationError("wro_kl_objective requires beta > 0");
  const double kl = reverse_kl(theta, reference, env.query_probs);
  if (kl == kInf) return -kInf;  // infinite penalty, reported as a value
  return h_win_rate(theta, anchor, env, h) - beta * kl;
}

double objective_value(const ObjectiveSpec& spec, const Environment& env, const Policy& theta) {
  switch (spec.family) {
    case ObjectiveFamily::wro:
      return h_win_rate(theta, spec.anchor, env, spec.h);
    case ObjectiveFamily::wro_kl:
      return wro_kl_objective(theta, spec.anchor, spec.reference, env, spec.h, spec.beta);
    case ObjectiveFamily::dpo_offline:
      return dpo_loss_offline(theta, spec.reference, spec.pair_dist, env, spec.beta);
    case ObjectiveFamily::dpo_online:
      return dpo_loss_online(theta, spec.reference, env, spec.beta);
    case ObjectiveFamily::sft:
      return sft_nll(theta, env, spec.initial);
  }
  throw ValidationError("unknown objective family");
}

PairDistribution product_pair_distribution(const Environment& env, const Policy& y0_side,
                                           const Policy& y1_side) {
  PairDistribution out;
  out.q.resize(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    const std::size_t n = env.num_responses(q);
    out.q[q].assign(n, Vec(n, 0.0));
    for (std::size_t y0 = 0; y0 < n; ++y0)
      for (std::size_t y1 = 0; y1 < n; ++y1)
        out.q[q][y0][y1] = y0_side.probs[q][y0] * y1_side.probs[q][y1];
  }
  return out;
}

}  // namespace winlab
