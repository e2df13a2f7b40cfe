#include "winlab/targets.hpp"

#include <cmath>

namespace winlab {

TargetFamily parse_target_family(const std::string& name) {
  if (name == "wro_kl") return TargetFamily::wro_kl;
  if (name == "rlhf_dpo") return TargetFamily::rlhf_dpo;
  if (name == "sft" || name == "sft_preferred") return TargetFamily::sft_preferred;
  if (name == "filter_sft") return TargetFamily::filter_sft;
  throw ValidationError("unknown target family: " + name);
}

std::string target_family_name(TargetFamily family) {
  switch (family) {
    case TargetFamily::wro_kl: return "wro_kl";
    case TargetFamily::rlhf_dpo: return "rlhf_dpo";
    case TargetFamily::sft_preferred: return "sft_preferred";
    case TargetFamily::filter_sft: return "filter_sft";
  }
  return "?";
}

Vec avg_pref(const Environment& env, std::size_t q, const Policy& anchor) {
  const Mat& pref = env.classifier.pref[q];
  const Vec& anc = anchor.probs[q];
  const std::size_t n = pref.size();
  Vec out(n, 0.0);
  for (std::size_t y1 = 0; y1 < n; ++y1) {
    double s = 0.0;
    for (std::size_t y0 = 0; y0 < n; ++y0) s += anc[y0] * pref[y0][y1];
    out[y1] = s;
  }
  return out;
}

Vec avg_h(const Environment& env, std::size_t q, const Policy& anchor, const HTransform& h,
          const std::vector<bool>* mask) {
  const Mat& pref = env.classifier.pref[q];
  const Vec& anc = anchor.probs[q];
  const std::size_t n = pref.size();
  Vec out(n, 0.0);
  for (std::size_t y1 = 0; y1 < n; ++y1) {
    if (mask && !(*mask)[y1]) continue;
    double s = 0.0;
    for (std::size_t y0 = 0; y0 < n; ++y0) {
      if (anc[y0] == 0.0) continue;
      s += anc[y0] * h(pref[y0][y1]);
    }
    out[y1] = s;
  }
  return out;
}

Vec avg_filter(const Environment& env, std::size_t q, const Policy& initial,
               const FilterSpec& filter) {
  const Mat& pref = env.classifier.pref[q];
  const Vec& init = initial.probs[q];
  const auto& acc = filter.accept[q];
  const std::size_t n = pref.size();
  Vec out(n, 0.0);
  for (std::size_t y1 = 0; y1 < n; ++y1) {
    double s = 0.0;
    for (std::size_t y0 = 0; y0 < n; ++y0) {
      const double p1 = pref[y0][y1];  // p(l=1 | x, y0, y1)
      s += init[y0] * (p1 * acc[y1][y0][1] + (1.0 - p1) * acc[y1][y0][0]);
    }
    out[y1] = s;
  }
  return out;
}

TargetResult wro_kl_target(const Environment& env, const HTransform& h, double beta,
                           const Policy& anchor, const Policy& reference) {
  if (!(beta > 0.0)) throw ValidationError("wro_kl_target requires beta > 0");
  TargetResult out;
  out.policy.probs.resize(env.num_queries());
  out.tilt.resize(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    const Vec& ref = reference.probs[q];
    const std::size_t n = ref.size();
    std::vector<bool> mask(n);
    for (std::size_t y = 0; y < n; ++y) mask[y] = ref[y] > 0.0;
    const Vec ah = avg_h(env, q, anchor, h, &mask);
    Vec logw(n, -kInf);
    double max_exponent = -kInf;
    for (std::size_t y = 0; y < n; ++y) {
      if (!mask[y]) continue;
      logw[y] = std::log(ref[y]) + ah[y] / beta;
      max_exponent = std::max(max_exponent, ah[y] / beta);
    }
    const double lz = log_sum_exp(logw);
    Vec probs(n, 0.0);
    Vec tilt(n, 0.0);
    for (std::size_t y = 0; y < n; ++y) {
      if (!mask[y]) continue;
      probs[y] = std::exp(logw[y] - lz);
      tilt[y] = std::exp(ah[y] / beta - max_exponent);
    }
    out.policy.probs[q] = std::move(probs);
    out.tilt[q] = std::move(tilt);
  }
  return out;
}

TargetResult rlhf_dpo_target(const Environment& env, double beta, const Policy& anchor,
                             const Policy& reference) {
  return wro_kl_target(env, HTransform::logit_transform(), beta, anchor, reference);
}

TargetResult sft_preferred_target(const Environment& env, const Policy& initial) {
  TargetResult out;
  out.policy.probs.resize(env.num_queries());
  out.tilt.resize(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    const Vec& init = initial.probs[q];
    const Vec ap = avg_pref(env, q, initial);
    const std::size_t n = init.size();
    Vec probs(n, 0.0);
    double z = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      probs[y] = init[y] * ap[y];
      z += probs[y];
    }
    // z = 0 would need a response losing with probability 1 to everything
    // including itself, which the 0.5 diagonal rules out.
    if (!(z > 0.0)) throw NumericDomainError("sft_preferred_target: zero normalizer");
    for (auto& p : probs) p /= z;
    out.policy.probs[q] = std::move(probs);
    out.tilt[q] = ap;
  }
  return out;
}

TargetResult filter_sft_target(const Environment& env, const Policy& initial,
                               const FilterSpec& filter) {
  TargetResult out;
  out.policy.probs.resize(env.num_queries());
  out.tilt.resize(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    const Vec& init = initial.probs[q];
    const Vec af = avg_filter(env, q, initial, filter);
    const std::size_t n = init.size();
    Vec probs(n, 0.0);
    double z = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      probs[y] = init[y] * af[y];
      z += probs[y];
    }
    if (!(z > 0.0))
      throw ValidationError("filter_sft_target: filter accepts nothing for query " +
                            env.queries[q]);
    for (auto& p : probs) p /= z;
    out.policy.probs[q] = std::move(probs);
    out.tilt[q] = af;
  }
  return out;
}

TargetResult compute_target(const Environment& env, const TargetSpec& spec) {
  switch (spec.family) {
    case TargetFamily::wro_kl:
      return wro_kl_target(env, spec.h, spec.beta, spec.anchor, spec.reference);
    case TargetFamily::rlhf_dpo:
      return rlhf_dpo_target(env, spec.beta, spec.anchor, spec.reference);
    case TargetFamily::sft_preferred:
      return sft_preferred_target(env, spec.reference);
    case TargetFamily::filter_sft:
      if (!spec.filter) throw ValidationError("filter_sft target requires a filter");
      return filter_sft_target(env, spec.reference, *spec.filter);
  }
  throw ValidationError("unknown target family");
}

}  // namespace winlab
