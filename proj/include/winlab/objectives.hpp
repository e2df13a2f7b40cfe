#pragma once

#include "winlab/targets.hpp"

namespace winlab {

enum class ObjectiveFamily { wro, wro_kl, dpo_offline, dpo_online, sft };

ObjectiveFamily parse_objective_family(const std::string& name);
std::string objective_family_name(ObjectiveFamily family);
// True for families phrased as losses (minimized); wro / wro_kl are maximized.
bool objective_is_loss(ObjectiveFamily family);

// q[query][y0][y1], sums to 1 per query. Offline DPO pair distribution.
struct PairDistribution {
  std::vector<Mat> q;
};

struct ObjectiveSpec {
  ObjectiveFamily family = ObjectiveFamily::wro;
  HTransform h;              // wro, wro_kl
  double beta = 1.0;         // wro_kl, dpo_offline, dpo_online
  Policy anchor;             // wro, wro_kl
  Policy reference;          // wro_kl, dpo_offline, dpo_online
  PairDistribution pair_dist;  // dpo_offline
  Policy initial;            // sft
};

// sigmoid(beta [log theta(y1)/ref(y1) - log theta(y0)/ref(y0)]) for one pair.
// Zero-probability log-ratios are a domain error here; the loss functions
// below instead report the resulting infinite losses as values.
double dpo_implicit_classifier(const Policy& theta, const Policy& reference, double beta,
                               std::size_t q, std::size_t y0, std::size_t y1);

// Cross-entropy of the implicit classifier against the environment's
// preference probabilities under the pair distribution, with soft labels
// (the expectation over l taken analytically). +inf is a reported value.
double dpo_loss_offline(const Policy& theta, const Policy& reference, const PairDistribution& pairs,
                        const Environment& env, double beta);

// Same loss with the online pair distribution q(y0,y1|x) = ref(y0) theta(y1).
double dpo_loss_online(const Policy& theta, const Policy& reference, const Environment& env,
                       double beta);

// Cross-entropy against the SFT-on-preferred target distribution.
double sft_nll(const Policy& theta, const Environment& env, const Policy& initial);

// h_win_rate(theta, anchor) - beta * E_x KL(theta || reference). -inf when
// theta has mass outside the reference support.
double wro_kl_objective(const Policy& theta, const Policy& anchor, const Policy& reference,
                        const Environment& env, const HTransform& h, double beta);

// sum_x w(x) KL(p(.|x) || q(.|x)); +inf on support violation.
double reverse_kl(const Policy& p, const Policy& q, const Vec& query_probs);

double objective_value(const ObjectiveSpec& spec, const Environment& env, const Policy& theta);

// Uniform pair distribution q(y0,y1|x) = a(y0) b(y1) as offline data.
PairDistribution product_pair_distribution(const Environment& env, const Policy& y0_side,
                                           const Policy& y1_side);

}  // namespace winlab
