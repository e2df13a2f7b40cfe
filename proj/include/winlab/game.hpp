#pragma once

#include "winlab/analysis.hpp"

namespace winlab {

struct GameState {
  Policy policy_a;
  Policy policy_b;
  double payoff_a = 0.0;  // h-win rate of A's policy over B's
  double payoff_b = 0.0;  // h-win rate of B's policy over A's
  double exploitability = 0.0;
};

struct BestResponseResult {
  Policy policy;  // per-query point mass, ties broken to the lowest index
  std::vector<std::vector<std::size_t>> ties;  // tied argmax sets per query
  bool any_tie = false;
};

// Vertex best response: point mass per query on argmax_y of
// sum_{y0} opponent(y0) h(pref[y0][y]).
BestResponseResult best_response(const Policy& opponent, const Environment& env,
                                 const HTransform& h);

// Max over both players of (best-response identity-h win rate vs the current
// opponent) minus (current identity-h win rate vs the current opponent).
double exploitability(const GameState& state, const Environment& env);

GameState make_game_state(Policy policy_a, Policy policy_b, const Environment& env,
                          const HTransform& h);

struct FictitiousPlayOptions {
  int max_iters = 10000;
  double exploit_tol = 1e-2;
  int record_every = 1;
  // Optional KL regularization of both players' payoffs; best responses then
  // come from the closed-form Gibbs tilt instead of vertex selection.
  double beta = 0.0;
  const Policy* reference = nullptr;
  // Starting play for each side (uniform when unset).
  const Policy* init_a = nullptr;
  const Policy* init_b = nullptr;
};

struct FictitiousPlayTrace {
  std::vector<GameState> states;  // states of the averaged policies
  Policy avg_a;
  Policy avg_b;
  int iterations = 0;
  bool converged = false;
};

// Iterated best responses against the opponent's empirical average, both
// players updating simultaneously from uniform initial play.
FictitiousPlayTrace fictitious_play(const Environment& env, const HTransform& h,
                                    const FictitiousPlayOptions& options = {});

}  // namespace winlab
