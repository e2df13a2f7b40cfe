#pragma once

#include "winlab/winrate.hpp"

namespace winlab {

enum class TargetFamily { wro_kl, rlhf_dpo, sft_preferred, filter_sft };

TargetFamily parse_target_family(const std::string& name);
std::string target_family_name(TargetFamily family);

struct TargetSpec {
  TargetFamily family = TargetFamily::wro_kl;
  HTransform h;        // wro_kl only
  double beta = 1.0;   // wro_kl, rlhf_dpo
  Policy anchor;       // wro_kl, rlhf_dpo; the initial model for the sft families
  Policy reference;    // wro_kl, rlhf_dpo; the initial model for the sft families
  const FilterSpec* filter = nullptr;  // filter_sft only
};

struct TargetResult {
  Policy policy;
  // Per-response multiplicative tilt applied to the reference. For the
  // exponential families this is max-shifted per query (exp((T - max T)/beta))
  // so the emitted values stay finite at small beta; for the SFT families it
  // is AvgPref / AvgFilter unshifted.
  std::vector<Vec> tilt;
};

// AvgPref(x, y) = sum_{y0} anchor(y0|x) pref[y0][y], self-comparison included.
Vec avg_pref(const Environment& env, std::size_t q, const Policy& anchor);

// AvgH(x, y) = sum_{y0} anchor(y0|x) h(pref[y0][y]), evaluated only where the
// anchor has mass. `mask` restricts evaluation to responses that need a value
// (others come back as 0 without touching h's domain).
Vec avg_h(const Environment& env, std::size_t q, const Policy& anchor, const HTransform& h,
          const std::vector<bool>* mask = nullptr);

// AvgFilter(x, y1) = sum_{y0} initial(y0|x) sum_l p(l|x,y0,y1) accept[y1][y0][l].
Vec avg_filter(const Environment& env, std::size_t q, const Policy& initial,
               const FilterSpec& filter);

// target(y|x) proportional to ref(y|x) exp((1/beta) AvgH(x,y)); normalized per
// query with log-sum-exp. Responses with zero reference mass get exactly zero
// target mass.
TargetResult wro_kl_target(const Environment& env, const HTransform& h, double beta,
                           const Policy& anchor, const Policy& reference);

// Identical to wro_kl_target with h = logit.
TargetResult rlhf_dpo_target(const Environment& env, double beta, const Policy& anchor,
                             const Policy& reference);

// target(y|x) proportional to initial(y|x) AvgPref(x,y).
TargetResult sft_preferred_target(const Environment& env, const Policy& initial);

// target(y1|x) proportional to initial(y1|x) AvgFilter(x,y1). Rejects filters
// with zero total acceptance mass on some query.
TargetResult filter_sft_target(const Environment& env, const Policy& initial,
                               const FilterSpec& filter);

TargetResult compute_target(const Environment& env, const TargetSpec& spec);

}  // namespace winlab
