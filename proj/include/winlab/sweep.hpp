#pragma once

#include <cstdint>

#include "winlab/optimize.hpp"

namespace winlab {

struct ClassifierEstimate {
  enum class Kind { oracle, bt_fit, perturbed };
  Kind kind = Kind::oracle;
  double eta = 0.0;        // perturbed only
  std::uint64_t seed = 0;  // perturbed only
  std::string label() const;
};

struct SweepConfig {
  std::vector<HTransform> h_grid;
  Vec beta_grid;
  std::vector<ClassifierEstimate> estimates;
  bool closed_form = true;  // otherwise exact ascent with the budget below
  int ascent_budget = 20000;
  Policy reference;  // initial = anchor = reference, the self-improvement setting
};

struct SweepRow {
  std::string estimate;
  std::string h;
  double beta = 0.0;
  double win_rate = 0.0;         // identity win rate under the oracle classifier
  double train_objective = 0.0;  // WRO-KL objective under the estimated classifier
  double kl_to_ref = 0.0;
  bool converged = false;
  std::string status;  // "ok" or the per-cell failure message
  Policy tuned;        // the cell's policy, kept so rows can be recomputed
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

// For each (estimate, h, beta) cell: build or optimize the WRO-KL target
// under the estimated classifier, then score its identity-h win rate over the
// reference under the oracle classifier. Cells run independently; failures
// are recorded per row and the sweep continues.
SweepResult run_sweep(const Environment& env, const SweepConfig& config);

struct Correlation {
  std::string axis;
  double rho = 0.0;
  double p_value = 1.0;
  bool defined = false;  // false when a column is constant
  std::size_t n = 0;
};

// Spearman rank correlation of the train objective and of each design axis
// against the true win rate, with permutation p-values (two-sided).
std::vector<Correlation> rank_correlations(const SweepResult& result, std::uint64_t seed,
                                           int n_permutations = 10000);

}  // namespace winlab
