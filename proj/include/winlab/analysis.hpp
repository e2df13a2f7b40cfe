#pragma once

#include "winlab/targets.hpp"

namespace winlab {

struct WinRateReport {
  double closed_form = 0.0;
  double brute_force = 0.0;
  double abs_diff = 0.0;
  std::vector<std::pair<std::string, double>> components;
};

// Closed form 0.5 + 2 E_x Var_initial[AvgPref(x,.)], checked against the
// identity-h win rate of the SFT-on-preferred target over the initial model.
WinRateReport sft_winrate_closed_form(const Environment& env, const Policy& initial);

// Closed form 0.5 + E_x Cov_initial(AvgFilter, AvgPref) / E_initial[AvgFilter],
// checked against the filter+SFT target's win rate.
WinRateReport filter_sft_winrate_closed_form(const Environment& env, const Policy& initial,
                                             const FilterSpec& filter);

// Expected win rate of the WRO-KL target over the initial model in the
// anchor = reference = initial setting:
//   E_x [ E_{y1}[AvgPref exp(AvgH/beta)] / E_{y1'}[exp(AvgH/beta)] ],
// computed with per-query max-shifted exponents. Checked against
// wro_kl_target followed by h_win_rate(identity).
WinRateReport wro_kl_target_winrate_closed_form(const Environment& env, const Policy& initial,
                                                const HTransform& h, double beta);

struct VarianceBound {
  double mean = 0.0;      // E_initial[AvgPref], always 0.5 up to rounding
  double variance = 0.0;  // Var_initial[AvgPref]
  double bound = 0.0;     // mean (1 - mean) <= 0.25
  bool strict = false;    // initial support has >= 3 responses
};

// Per-query variance of AvgPref with its mean(1-mean) bound; strict marks
// queries where the SFT win rate is provably below 1.
std::vector<VarianceBound> sft_variance_bound(const Environment& env, const Policy& initial);

struct BTOptimum {
  std::vector<std::vector<std::size_t>> argmax;  // per query, all tied maximizers
  bool any_tie = false;
};

// argmax_y r(x,y) per query for a BT environment. Maximizes the h-win rate
// against every anchor for every strictly increasing h. Ties are returned,
// not broken.
BTOptimum bt_optimum(const Environment& env);

// Identity-h win rate of the best point-mass policy (per-query vertex max
// of AvgPref against the anchor).
double best_vertex_win_rate(const Environment& env, const Policy& anchor);

}  // namespace winlab
