#include "winlab/game.hpp"

#include <cmath>

namespace winlab {

BestResponseResult best_response(const Policy& opponent, const Environment& env,
                                 const HTransform& h) {
  constexpr double kTieTol = 1e-12;
  BestResponseResult out;
  out.policy.probs.resize(env.num_queries());
  out.ties.resize(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    const Vec a = avg_h(env, q, opponent, h);
    double best = -kInf;
    for (double v : a) best = std::max(best, v);
    for (std::size_t y = 0; y < a.size(); ++y)
      if (a[y] >= best - kTieTol) out.ties[q].push_back(y);
    if (out.ties[q].size() > 1) out.any_tie = true;
    Vec probs(a.size(), 0.0);
    probs[out.ties[q].front()] = 1.0;
    out.policy.probs[q] = std::move(probs);
  }
  return out;
}

double exploitability(const GameState& state, const Environment& env) {
  const HTransform identity = HTransform::identity();
  const double br_vs_b = best_vertex_win_rate(env, state.policy_b);
  const double br_vs_a = best_vertex_win_rate(env, state.policy_a);
  const double cur_a = h_win_rate(state.policy_a, state.policy_b, env, identity);
  const double cur_b = h_win_rate(state.policy_b, state.policy_a, env, identity);
  return std::max(br_vs_b - cur_a, br_vs_a - cur_b);
}

GameState make_game_state(Policy policy_a, Policy policy_b, const Environment& env,
                          const HTransform& h) {
  GameState state;
  state.policy_a = std::move(policy_a);
  state.policy_b = std::move(policy_b);
  state.payoff_a = h_win_rate(state.policy_a, state.policy_b, env, h);
  state.payoff_b = h_win_rate(state.policy_b, state.policy_a, env, h);
  state.exploitability = exploitability(state, env);
  return state;
}

namespace {

void mix_into_average(Policy& avg, const Policy& played, int t) {
  // avg <- ((t-1) avg + played) / t
  const double w = 1.0 / static_cast<double>(t);
  for (std::size_t q = 0; q < avg.probs.size(); ++q)
    for (std::size_t y = 0; y < avg.probs[q].size(); ++y)
      avg.probs[q][y] += w * (played.probs[q][y] - avg.probs[q][y]);
}

}  // namespace

FictitiousPlayTrace fictitious_play(const Environment& env, const HTransform& h,
                                    const FictitiousPlayOptions& options) {
  FictitiousPlayTrace trace;
  Policy avg_a = options.init_a ? *options.init_a : uniform_policy(env);
  Policy avg_b = options.init_b ? *options.init_b : uniform_policy(env);

  GameState state = make_game_state(avg_a, avg_b, env, h);
  trace.states.push_back(state);

  int t = 1;  // uniform initial play counts as round one
  for (; t < options.max_iters; ++t) {
    if (state.exploitability <= options.exploit_tol) {
      trace.converged = true;
      break;
    }
    Policy br_a, br_b;
    if (options.beta > 0.0) {
      if (!options.reference)
        throw ValidationError("regularized fictitious play needs a reference policy");
      br_a = wro_kl_target(env, h, options.beta, avg_b, *options.reference).policy;
      br_b = wro_kl_target(env, h, options.beta, avg_a, *options.reference).policy;
    } else {
      br_a = best_response(avg_b, env, h).policy;
      br_b = best_response(avg_a, env, h).policy;
    }
    mix_into_average(avg_a, br_a, t + 1);
    mix_into_average(avg_b, br_b, t + 1);
    state = make_game_state(avg_a, avg_b, env, h);
    if (options.record_every > 0 && t % options.record_every == 0) trace.states.push_back(state);
  }
  if (!trace.converged && state.exploitability <= options.exploit_tol) trace.converged = true;
  if (trace.states.empty() || trace.states.back().exploitability != state.exploitability)
    trace.states.push_back(state);
  trace.avg_a = std::move(avg_a);
  trace.avg_b = std::move(avg_b);
  trace.iterations = t;
  return trace;
}

}  // namespace winlab
