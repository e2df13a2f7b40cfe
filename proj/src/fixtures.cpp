#include "winlab/fixtures.hpp"

namespace winlab::fixtures {

namespace {

Environment bt_env(Vec rewards) {
  std::vector<Vec> table{std::move(rewards)};
  PreferenceClassifier classifier = make_bt_classifier(table);
  return make_environment({"q0"}, {1.0}, {{"a", "b", "c"}}, std::move(classifier),
                          BTClassifier{std::move(table)});
}

Policy single(Vec probs) {
  Policy p;
  p.probs.push_back(std::move(probs));
  return p;
}

}  // namespace

Environment counterexample_env() {
  const double gap_ab = logit(0.9);
  const double gap_bc = logit(0.6);
  return bt_env({gap_ab, 0.0, -gap_bc});
}

Environment counterexample_env_sharp() {
  const double gap = logit(0.9);
  return bt_env({2.0 * gap, gap, 0.0});
}

Policy counterexample_reference(const Environment& env) {
  Policy p = single({0.1, 0.5, 0.4});
  validate_policy(p, env);
  return p;
}

Policy pair_theta(const Environment& env) {
  Policy p = single({0.1, 0.6, 0.3});
  validate_policy(p, env);
  return p;
}

Policy pair_q(const Environment& env) {
  Policy p = single({0.8, 0.001, 0.199});
  validate_policy(p, env);
  return p;
}

Policy reg_pair_theta(const Environment& env) {
  Policy p = single({0.6, 0.07, 0.33});
  validate_policy(p, env);
  return p;
}

Policy reg_pair_q(const Environment& env) {
  Policy p = single({0.56, 0.43, 0.01});
  validate_policy(p, env);
  return p;
}

std::vector<CompareRow> reference_comparison() {
  const Environment env = counterexample_env();
  const Policy ref = counterexample_reference(env);

  std::vector<CompareRow> rows;
  auto add_pair = [&rows, &env, &ref](const std::string& setting, const Policy& a,
                                      const Policy& b, double rep_loss_a, double rep_loss_b,
                                      double rep_win_a, double rep_win_b, double rep_lwin_a,
                                      double rep_lwin_b, double rep_kl_a, double rep_kl_b,
                                      bool with_kl) {
    const CorrespondenceVerdict v = correspondence_check(a, b, env, ref, 1.0);
    rows.push_back({setting, "online_dpo_loss", rep_loss_a, rep_loss_b, v.loss1, v.loss2});
    rows.push_back({setting, "win_rate", rep_win_a, rep_win_b, v.win1, v.win2});
    rows.push_back({setting, "logit_win_rate", rep_lwin_a, rep_lwin_b, v.logit_win1, v.logit_win2});
    if (with_kl) rows.push_back({setting, "reverse_kl", rep_kl_a, rep_kl_b, v.kl1, v.kl2});
  };

  add_pair("plain_pair", pair_theta(env), pair_q(env),
           0.51, 0.78,   // reported online DPO losses
           0.54, 0.67,   // reported win rates
           0.26, 1.7,    // reported logit win rates
           0.0, 0.0, false);
  add_pair("regularized_pair", reg_pair_theta(env), reg_pair_q(env),
           0.59, 0.64,   // reported online DPO losses
           0.69, 0.70,   // reported win rates
           1.2, 1.3,     // reported logit win rates
           0.87, 0.86, true);
  return rows;
}

}  // namespace winlab::fixtures
