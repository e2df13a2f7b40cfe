// winlab: exact desk-scale laboratory for pairwise preference learning.
// Subcommands wrap the library operations; every randomized command takes an
// explicit --seed and all CSV output is byte-stable across reruns.

#include <cstdio>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "winlab/analysis.hpp"
#include "winlab/fixtures.hpp"
#include "winlab/game.hpp"
#include "winlab/io.hpp"
#include "winlab/optimize.hpp"
#include "winlab/sweep.hpp"

using namespace winlab;

namespace {

struct ManifestBuilder {
  RunManifest manifest;
  explicit ManifestBuilder(std::string command) {
    manifest.command = std::move(command);
    manifest.version = kToolVersion;
  }
  void seed(std::uint64_t s) {
    manifest.has_seed = true;
    manifest.seed = s;
  }
  void config(const std::string& key, const std::string& value) { manifest.config[key] = value; }
  void config(const std::string& key, double value) { manifest.config[key] = CsvWriter::fmt(value); }
  void config(const std::string& key, std::uint64_t value) {
    manifest.config[key] = std::to_string(value);
  }
  void input(const std::string& role, const std::string& path) {
    manifest.input_digests[role + ":" + path] = file_digest(path);
  }
  void write_for(const std::string& out_path) {
    manifest.outputs.push_back(out_path);
    atomic_write_text(out_path + ".manifest.json", manifest.to_json_text());
  }
};

// "uniform" or a policy file path.
Policy policy_arg(const std::string& value, const Environment& env, ManifestBuilder& mb,
                  const std::string& role) {
  mb.config(role, value);
  if (value == "uniform") return uniform_policy(env);
  mb.input(role, value);
  return load_policy(value, env);
}

Environment env_arg(const std::string& path, ManifestBuilder& mb) {
  mb.config("env", path);
  mb.input("env", path);
  return load_environment(path);
}

Environment slice_query(const Environment& env, std::size_t q) {
  Environment out;
  out.queries = {env.queries[q]};
  out.query_probs = {1.0};
  out.responses = {env.responses[q]};
  out.classifier.pref = {env.classifier.pref[q]};
  if (env.bt) out.bt = BTClassifier{{env.bt->rewards[q]}};
  return out;
}

Policy slice_policy(const Policy& p, std::size_t q) {
  Policy out;
  out.probs = {p.probs[q]};
  return out;
}

void print_reference_comparison() {
  const auto rows = fixtures::reference_comparison();
  std::printf("reference comparison for the bundled counterexample setting\n");
  std::printf("(beta = 1, exact enumeration, self-comparison at probability 0.5)\n");
  std::printf("%-18s %-17s %12s %12s %16s %16s\n", "setting", "metric", "reported_a",
              "reported_b", "recomputed_a", "recomputed_b");
  for (const auto& row : rows)
    std::printf("%-18s %-17s %12g %12g %16.10g %16.10g\n", row.setting.c_str(),
                row.metric.c_str(), row.reported_a, row.reported_b, row.recomputed_a,
                row.recomputed_b);
  const auto env = fixtures::counterexample_env();
  const auto ref = fixtures::counterexample_reference(env);
  const auto plain = correspondence_check(fixtures::pair_theta(env), fixtures::pair_q(env), env,
                                          ref, 1.0);
  const auto reg = correspondence_check(fixtures::reg_pair_theta(env), fixtures::reg_pair_q(env),
                                        env, ref, 1.0);
  std::printf("plain_pair: correspondence violation (lower loss, lower win rate): %s\n",
              plain.plain_violation ? "yes" : "no");
  std::printf("regularized_pair: regularized violation (lower loss, lower win rate, higher KL): %s\n",
              reg.regularized_violation ? "yes" : "no");
  std::printf("deviations of recomputed values from the reported ones come from the\n"
              "self-comparison and beta conventions above; orderings are what matters.\n");
}

std::string h_flag_help() { return "h transform: identity, log, or logit"; }

int run(int argc, char** argv) {
  CLI::App app{"winlab: exact win-rate laboratory for finite preference environments"};
  app.require_subcommand(1);
  // Long-form help only: the subcommands use --h for the transform.
  app.set_help_flag("--help", "print help");

  // ---- eval ----------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "h-win rate of a generator over an anchor");
  std::string eval_env, eval_gen, eval_anc = "uniform", eval_h = "identity", eval_out;
  std::uint64_t eval_mc = 0, eval_seed = 0;
  double eval_clamp = 0.0;
  bool eval_paper = false, eval_seed_set = false;
  eval->add_option("--env", eval_env, "environment file")->required();
  eval->add_option("--generator", eval_gen, "generator policy file or 'uniform'")->required();
  eval->add_option("--anchor", eval_anc, "anchor policy file or 'uniform'");
  eval->add_option("--h", eval_h, h_flag_help());
  eval->add_option("--mc", eval_mc, "Monte-Carlo sample count (0 = exact)");
  eval->add_option("--seed", eval_seed, "root seed for --mc")->each([&](const std::string&) {
    eval_seed_set = true;
  });
  eval->add_option("--clamp-eps", eval_clamp, "optional epsilon clamp for log/logit (default off)");
  eval->add_option("--out", eval_out, "per-query CSV output path");
  eval->add_flag("--paper-compare", eval_paper,
                 "print previously reported values for the bundled counterexample "
                 "setting next to recomputed ones");

  // ---- target --------------------------------------------------------------
  auto* target = app.add_subcommand("target", "closed-form target distribution of an objective");
  std::string tgt_env, tgt_family = "wro_kl", tgt_h = "identity";
  std::string tgt_anchor = "uniform", tgt_reference = "uniform", tgt_initial, tgt_filter, tgt_out,
      tgt_save;
  double tgt_beta = 1.0;
  target->add_option("--env", tgt_env)->required();
  target->add_option("--family", tgt_family, "wro_kl, rlhf_dpo, sft, or filter_sft");
  target->add_option("--h", tgt_h, h_flag_help());
  target->add_option("--beta", tgt_beta, "regularization strength (> 0)");
  target->add_option("--anchor", tgt_anchor, "anchor policy file or 'uniform'");
  target->add_option("--reference", tgt_reference, "reference policy file or 'uniform'");
  target->add_option("--initial", tgt_initial,
                     "initial model for the sft families (file or 'uniform')");
  target->add_option("--filter", tgt_filter, "filter file (filter_sft only)");
  target->add_option("--out", tgt_out, "CSV output path")->required();
  target->add_option("--save-policy", tgt_save, "also write the target as a policy file");

  // ---- analyze -------------------------------------------------------------
  auto* analyze = app.add_subcommand("analyze", "closed-form win-rate reports with oracles");
  std::string ana_env, ana_theorem = "sft", ana_initial = "uniform", ana_filter, ana_h = "identity",
      ana_out;
  double ana_beta = 1.0;
  analyze->add_option("--env", ana_env)->required();
  analyze->add_option("--theorem", ana_theorem, "sft, filter_sft, or wro_kl");
  analyze->add_option("--initial", ana_initial, "initial model (file or 'uniform')");
  analyze->add_option("--filter", ana_filter, "filter file (filter_sft)");
  analyze->add_option("--h", ana_h, h_flag_help());
  analyze->add_option("--beta", ana_beta, "beta (wro_kl)");
  analyze->add_option("--out", ana_out, "CSV output path");

  // ---- loss ----------------------------------------------------------------
  auto* loss = app.add_subcommand("loss", "exact value of a training objective");
  std::string loss_env, loss_family = "dpo_online", loss_policy, loss_anchor = "uniform",
      loss_reference = "uniform", loss_initial = "uniform", loss_pairs, loss_h = "identity",
      loss_out;
  double loss_beta = 1.0;
  bool loss_paper = false;
  loss->add_option("--env", loss_env)->required();
  loss->add_option("--family", loss_family, "wro, wro_kl, dpo_offline, dpo_online, or sft");
  loss->add_option("--policy", loss_policy, "policy to evaluate (file or 'uniform')")->required();
  loss->add_option("--anchor", loss_anchor, "anchor policy (wro, wro_kl)");
  loss->add_option("--reference", loss_reference, "reference policy (wro_kl, dpo)");
  loss->add_option("--initial", loss_initial, "initial model (sft)");
  loss->add_option("--pairs", loss_pairs, "pair-distribution policy file for dpo_offline "
                                          "(defaults to reference x reference)");
  loss->add_option("--h", loss_h, h_flag_help());
  loss->add_option("--beta", loss_beta, "beta (wro_kl, dpo)");
  loss->add_option("--out", loss_out, "per-query CSV output path");
  loss->add_flag("--paper-compare", loss_paper,
                 "print previously reported values for the bundled counterexample "
                 "setting next to recomputed ones");

  // ---- optimize ------------------------------------------------------------
  auto* optimize = app.add_subcommand("optimize", "exact-gradient optimization of an objective");
  std::string opt_env, opt_family = "wro_kl", opt_h = "identity", opt_init = "uniform";
  std::string opt_anchor = "uniform", opt_reference = "uniform", opt_initial = "uniform",
      opt_pairs, opt_out, opt_save;
  double opt_beta = 1.0, opt_step = 0.5, opt_grad_tol = 1e-10;
  int opt_max_steps = 20000, opt_record = 1;
  optimize->add_option("--env", opt_env)->required();
  optimize->add_option("--family", opt_family, "wro, wro_kl, dpo_offline, dpo_online, or sft");
  optimize->add_option("--h", opt_h, h_flag_help());
  optimize->add_option("--beta", opt_beta);
  optimize->add_option("--anchor", opt_anchor);
  optimize->add_option("--reference", opt_reference);
  optimize->add_option("--initial", opt_initial, "initial model (sft)");
  optimize->add_option("--pairs", opt_pairs, "pair policy for dpo_offline");
  optimize->add_option("--init", opt_init, "starting policy (file or 'uniform')");
  optimize->add_option("--step", opt_step, "initial step size");
  optimize->add_option("--max-steps", opt_max_steps);
  optimize->add_option("--grad-tol", opt_grad_tol);
  optimize->add_option("--record-every", opt_record, "trajectory thinning (0 = endpoints only)");
  optimize->add_option("--out", opt_out, "trajectory CSV output path")->required();
  optimize->add_option("--save-policy", opt_save, "write the final policy as a policy file");

  // ---- scan ----------------------------------------------------------------
  auto* scan = app.add_subcommand("scan", "Dirichlet scan of online DPO loss vs win rate");
  std::string scan_env, scan_reference = "uniform", scan_out;
  std::uint64_t scan_draws = 5000, scan_seed = 0;
  double scan_alpha = 1.0, scan_beta = 1.0;
  bool scan_keep_all = false, scan_seed_set = false, scan_paper = false;
  scan->add_option("--env", scan_env)->required();
  scan->add_option("--reference", scan_reference, "reference policy (file or 'uniform')");
  scan->add_option("--draws", scan_draws, "number of kept points");
  scan->add_option("--alpha", scan_alpha, "Dirichlet concentration");
  scan->add_option("--beta", scan_beta, "DPO beta");
  scan->add_option("--seed", scan_seed, "root seed")->each([&](const std::string&) {
    scan_seed_set = true;
  });
  scan->add_flag("--keep-all", scan_keep_all,
                 "keep every draw instead of only loss-improving ones");
  scan->add_option("--out", scan_out, "CSV output path")->required();
  scan->add_flag("--paper-compare", scan_paper,
                 "print previously reported values for the bundled counterexample "
                 "setting next to recomputed ones");

  // ---- game ----------------------------------------------------------------
  auto* game = app.add_subcommand("game", "fictitious play for the two-player win-rate game");
  std::string game_env, game_h = "identity", game_reference, game_out;
  int game_iters = 10000, game_record = 1;
  double game_tol = 1e-2, game_beta = 0.0;
  game->add_option("--env", game_env)->required();
  game->add_option("--h", game_h, h_flag_help());
  game->add_option("--iters", game_iters, "maximum iterations");
  game->add_option("--tol", game_tol, "exploitability tolerance");
  game->add_option("--record-every", game_record);
  game->add_option("--beta", game_beta, "KL regularization of both payoffs (0 = off)");
  game->add_option("--reference", game_reference, "reference policy for --beta > 0");
  game->add_option("--out", game_out, "CSV output path")->required();

  // ---- sweep ---------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "design-axis sweep with oracle evaluation");
  std::string sweep_env, sweep_config, sweep_reference = "uniform", sweep_out, sweep_corr;
  std::uint64_t sweep_seed = 0;
  bool sweep_seed_set = false;
  int sweep_perms = 10000;
  sweep->add_option("--env", sweep_env)->required();
  sweep->add_option("--config", sweep_config, "sweep configuration file")->required();
  sweep->add_option("--reference", sweep_reference, "reference policy (file or 'uniform')");
  sweep->add_option("--seed", sweep_seed, "root seed for the correlation permutations")
      ->each([&](const std::string&) { sweep_seed_set = true; });
  sweep->add_option("--permutations", sweep_perms, "permutation count for p-values");
  sweep->add_option("--out", sweep_out, "rows CSV output path")->required();
  sweep->add_option("--corr-out", sweep_corr, "correlation report CSV output path");

  // ---- fit-bt --------------------------------------------------------------
  auto* fitbt = app.add_subcommand("fit-bt", "Bradley-Terry fit of a preference classifier");
  std::string fit_env, fit_out, fit_save;
  fitbt->add_option("--env", fit_env)->required();
  fitbt->add_option("--out", fit_out, "rewards CSV output path")->required();
  fitbt->add_option("--save-env", fit_save, "write the fitted environment file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are input validation errors
  }

  if (*eval) {
    ManifestBuilder mb("eval");
    const Environment env = env_arg(eval_env, mb);
    const Policy gen = policy_arg(eval_gen, env, mb, "generator");
    const Policy anc = policy_arg(eval_anc, env, mb, "anchor");
    HTransform h = HTransform::parse(eval_h);
    h.clamp_eps = eval_clamp;
    mb.config("h", eval_h);
    mb.config("clamp_eps", eval_clamp);
    if (eval_mc > 0) {
      if (!eval_seed_set) throw ValidationError("--mc requires --seed");
      mb.seed(eval_seed);
      mb.config("mc", eval_mc);
      const McEstimate est = mc_win_rate(gen, anc, env, h, eval_mc, eval_seed);
      std::printf("mc_win_rate = %.17g (std_error %.17g, n %llu)\n", est.estimate, est.std_error,
                  static_cast<unsigned long long>(eval_mc));
    } else {
      const double v = h_win_rate(gen, anc, env, h);
      std::printf("h_win_rate = %.17g\n", v);
    }
    if (!eval_out.empty()) {
      CsvWriter csv({"query", "query_prob", "win_rate"});
      for (std::size_t q = 0; q < env.num_queries(); ++q) {
        const double v =
            h_win_rate(slice_policy(gen, q), slice_policy(anc, q), slice_query(env, q), h);
        csv.add_row({env.queries[q], CsvWriter::fmt(env.query_probs[q]), CsvWriter::fmt(v)});
      }
      csv.write(eval_out);
      mb.write_for(eval_out);
    }
    if (eval_paper) print_reference_comparison();
    return 0;
  }

  if (*target) {
    ManifestBuilder mb("target");
    const Environment env = env_arg(tgt_env, mb);
    TargetSpec spec;
    spec.family = parse_target_family(tgt_family);
    spec.h = HTransform::parse(tgt_h);
    spec.beta = tgt_beta;
    mb.config("family", tgt_family);
    mb.config("h", tgt_h);
    mb.config("beta", tgt_beta);
    FilterSpec filter;
    if (spec.family == TargetFamily::sft_preferred || spec.family == TargetFamily::filter_sft) {
      if (tgt_initial.empty()) tgt_initial = "uniform";
      const Policy initial = policy_arg(tgt_initial, env, mb, "initial");
      spec.anchor = initial;
      spec.reference = initial;
      if (spec.family == TargetFamily::filter_sft) {
        if (tgt_filter.empty()) throw ValidationError("filter_sft requires --filter");
        mb.input("filter", tgt_filter);
        filter = load_filter(tgt_filter, env);
        spec.filter = &filter;
      }
    } else {
      spec.anchor = policy_arg(tgt_anchor, env, mb, "anchor");
      spec.reference = policy_arg(tgt_reference, env, mb, "reference");
    }
    const TargetResult result = compute_target(env, spec);
    CsvWriter csv({"query", "response", "reference_prob", "tilt", "target_prob"});
    for (std::size_t q = 0; q < env.num_queries(); ++q)
      for (std::size_t y = 0; y < env.num_responses(q); ++y)
        csv.add_row({env.queries[q], env.responses[q][y],
                     CsvWriter::fmt(spec.reference.probs[q][y]), CsvWriter::fmt(result.tilt[q][y]),
                     CsvWriter::fmt(result.policy.probs[q][y])});
    csv.write(tgt_out);
    mb.write_for(tgt_out);
    if (!tgt_save.empty()) save_policy(result.policy, env, tgt_save);
    std::printf("target written: %s (%llu queries)\n", tgt_out.c_str(),
                static_cast<unsigned long long>(env.num_queries()));
    return 0;
  }

  if (*analyze) {
    ManifestBuilder mb("analyze");
    const Environment env = env_arg(ana_env, mb);
    const Policy initial = policy_arg(ana_initial, env, mb, "initial");
    mb.config("theorem", ana_theorem);
    WinRateReport report;
    if (ana_theorem == "sft") {
      report = sft_winrate_closed_form(env, initial);
    } else if (ana_theorem == "filter_sft") {
      if (ana_filter.empty()) throw ValidationError("filter_sft requires --filter");
      mb.input("filter", ana_filter);
      const FilterSpec filter = load_filter(ana_filter, env);
      report = filter_sft_winrate_closed_form(env, initial, filter);
    } else if (ana_theorem == "wro_kl") {
      mb.config("h", ana_h);
      mb.config("beta", ana_beta);
      report = wro_kl_target_winrate_closed_form(env, initial, HTransform::parse(ana_h), ana_beta);
    } else {
      throw ValidationError("unknown --theorem: " + ana_theorem);
    }
    std::printf("%-14s %.17g\n", "closed_form", report.closed_form);
    std::printf("%-14s %.17g\n", "brute_force", report.brute_force);
    std::printf("%-14s %.17g\n", "abs_diff", report.abs_diff);
    for (const auto& [name, value] : report.components)
      std::printf("%-14s %.17g\n", name.c_str(), value);
    if (!ana_out.empty()) {
      CsvWriter csv({"metric", "value"});
      csv.add_row({"closed_form", CsvWriter::fmt(report.closed_form)});
      csv.add_row({"brute_force", CsvWriter::fmt(report.brute_force)});
      csv.add_row({"abs_diff", CsvWriter::fmt(report.abs_diff)});
      for (const auto& [name, value] : report.components)
        csv.add_row({name, CsvWriter::fmt(value)});
      csv.write(ana_out);
      mb.write_for(ana_out);
    }
    return 0;
  }

  if (*loss) {
    ManifestBuilder mb("loss");
    const Environment env = env_arg(loss_env, mb);
    ObjectiveSpec spec;
    spec.family = parse_objective_family(loss_family);
    spec.h = HTransform::parse(loss_h);
    spec.beta = loss_beta;
    mb.config("family", loss_family);
    mb.config("h", loss_h);
    mb.config("beta", loss_beta);
    const Policy theta = policy_arg(loss_policy, env, mb, "policy");
    spec.anchor = policy_arg(loss_anchor, env, mb, "anchor");
    spec.reference = policy_arg(loss_reference, env, mb, "reference");
    spec.initial = policy_arg(loss_initial, env, mb, "initial");
    if (spec.family == ObjectiveFamily::dpo_offline) {
      const Policy y0_side =
          loss_pairs.empty() ? spec.reference : policy_arg(loss_pairs, env, mb, "pairs");
      spec.pair_dist = product_pair_distribution(env, y0_side, spec.reference);
    }
    const double value = objective_value(spec, env, theta);
    std::printf("%s = %.17g\n", loss_family.c_str(), value);
    if (!loss_out.empty()) {
      CsvWriter csv({"query", "query_prob", "value"});
      for (std::size_t q = 0; q < env.num_queries(); ++q) {
        ObjectiveSpec qspec = spec;
        qspec.anchor = slice_policy(spec.anchor, q);
        qspec.reference = slice_policy(spec.reference, q);
        qspec.initial = slice_policy(spec.initial, q);
        if (spec.family == ObjectiveFamily::dpo_offline)
          qspec.pair_dist.q = {spec.pair_dist.q[q]};
        const double qv = objective_value(qspec, slice_query(env, q), slice_policy(theta, q));
        csv.add_row({env.queries[q], CsvWriter::fmt(env.query_probs[q]), CsvWriter::fmt(qv)});
      }
      csv.write(loss_out);
      mb.write_for(loss_out);
    }
    if (loss_paper) print_reference_comparison();
    return 0;
  }

  if (*optimize) {
    ManifestBuilder mb("optimize");
    const Environment env = env_arg(opt_env, mb);
    ObjectiveSpec spec;
    spec.family = parse_objective_family(opt_family);
    spec.h = HTransform::parse(opt_h);
    spec.beta = opt_beta;
    spec.anchor = policy_arg(opt_anchor, env, mb, "anchor");
    spec.reference = policy_arg(opt_reference, env, mb, "reference");
    spec.initial = policy_arg(opt_initial, env, mb, "initial");
    if (spec.family == ObjectiveFamily::dpo_offline) {
      const Policy y0_side =
          opt_pairs.empty() ? spec.reference : policy_arg(opt_pairs, env, mb, "pairs");
      spec.pair_dist = product_pair_distribution(env, y0_side, spec.reference);
    }
    mb.config("family", opt_family);
    mb.config("h", opt_h);
    mb.config("beta", opt_beta);
    mb.config("step", opt_step);
    mb.config("max_steps", static_cast<std::uint64_t>(opt_max_steps));
    mb.config("grad_tol", opt_grad_tol);
    const Policy init = policy_arg(opt_init, env, mb, "init");
    AscentOptions options;
    options.step_size = opt_step;
    options.max_steps = opt_max_steps;
    options.grad_tol = opt_grad_tol;
    options.record_every = opt_record;
    const Trajectory traj = exact_ascent(spec, env, init, options);
    CsvWriter csv({"iteration", "objective", "win_rate", "kl_to_ref", "grad_norm"});
    for (const auto& step : traj.steps)
      csv.add_row({std::to_string(step.iteration), CsvWriter::fmt(step.objective),
                   CsvWriter::fmt(step.win_rate), CsvWriter::fmt(step.kl_to_ref),
                   CsvWriter::fmt(step.grad_norm)});
    csv.write(opt_out);
    mb.write_for(opt_out);
    if (!opt_save.empty()) save_policy(traj.final_policy, env, opt_save);
    std::printf("optimize: %d steps, converged=%s, final objective %.17g\n", traj.iterations,
                traj.converged ? "yes" : "no", traj.steps.back().objective);
    return 0;
  }

  if (*scan) {
    if (!scan_seed_set) throw ValidationError("scan requires --seed");
    ManifestBuilder mb("scan");
    const Environment env = env_arg(scan_env, mb);
    const Policy reference = policy_arg(scan_reference, env, mb, "reference");
    ScanOptions options;
    options.n_points = scan_draws;
    options.beta = scan_beta;
    options.dirichlet_alpha = scan_alpha;
    options.keep_only_improving = !scan_keep_all;
    options.seed = scan_seed;
    mb.seed(scan_seed);
    mb.config("draws", scan_draws);
    mb.config("alpha", scan_alpha);
    mb.config("beta", scan_beta);
    mb.config("keep_only_improving", options.keep_only_improving ? "true" : "false");
    const ScanResult result = dpo_mismatch_scan(env, reference, options);
    std::vector<std::string> columns;
    for (std::size_t q = 0; q < env.num_queries(); ++q)
      for (std::size_t y = 0; y < env.num_responses(q); ++y)
        columns.push_back("p:" + env.queries[q] + ":" + env.responses[q][y]);
    columns.insert(columns.end(), {"loss", "win_rate", "logit_win_rate", "kl_to_ref"});
    CsvWriter csv(columns);
    for (const auto& pt : result.points) {
      std::vector<std::string> row;
      for (const auto& probs : pt.policy.probs)
        for (double v : probs) row.push_back(CsvWriter::fmt(v));
      row.push_back(CsvWriter::fmt(pt.loss));
      row.push_back(CsvWriter::fmt(pt.win_rate));
      row.push_back(CsvWriter::fmt(pt.logit_win_rate));
      row.push_back(CsvWriter::fmt(pt.kl_to_ref));
      csv.add_row(std::move(row));
    }
    csv.write(scan_out);
    mb.write_for(scan_out);
    std::printf("scan: kept %llu of %llu draws, reference loss %.17g, violating pairs %llu\n",
                static_cast<unsigned long long>(result.points.size()),
                static_cast<unsigned long long>(result.total_draws), result.reference_loss,
                static_cast<unsigned long long>(result.violating_pairs));
    if (scan_paper) print_reference_comparison();
    return 0;
  }

  if (*game) {
    ManifestBuilder mb("game");
    const Environment env = env_arg(game_env, mb);
    FictitiousPlayOptions options;
    options.max_iters = game_iters;
    options.exploit_tol = game_tol;
    options.record_every = game_record;
    options.beta = game_beta;
    Policy reference;
    if (game_beta > 0.0) {
      if (game_reference.empty()) throw ValidationError("--beta > 0 requires --reference");
      reference = policy_arg(game_reference, env, mb, "reference");
      options.reference = &reference;
    }
    mb.config("h", game_h);
    mb.config("iters", static_cast<std::uint64_t>(game_iters));
    mb.config("tol", game_tol);
    mb.config("beta", game_beta);
    const FictitiousPlayTrace trace = fictitious_play(env, HTransform::parse(game_h), options);
    std::vector<std::string> columns{"iteration", "exploitability", "payoff_a", "payoff_b"};
    for (std::size_t q = 0; q < env.num_queries(); ++q)
      for (std::size_t y = 0; y < env.num_responses(q); ++y) {
        columns.push_back("a:" + env.queries[q] + ":" + env.responses[q][y]);
        columns.push_back("b:" + env.queries[q] + ":" + env.responses[q][y]);
      }
    CsvWriter csv(columns);
    for (std::size_t i = 0; i < trace.states.size(); ++i) {
      const GameState& st = trace.states[i];
      std::vector<std::string> row{std::to_string(i), CsvWriter::fmt(st.exploitability),
                                   CsvWriter::fmt(st.payoff_a), CsvWriter::fmt(st.payoff_b)};
      for (std::size_t q = 0; q < env.num_queries(); ++q)
        for (std::size_t y = 0; y < env.num_responses(q); ++y) {
          row.push_back(CsvWriter::fmt(st.policy_a.probs[q][y]));
          row.push_back(CsvWriter::fmt(st.policy_b.probs[q][y]));
        }
      csv.add_row(std::move(row));
    }
    csv.write(game_out);
    mb.write_for(game_out);
    std::printf("game: %d iterations, converged=%s, final exploitability %.17g\n",
                trace.iterations, trace.converged ? "yes" : "no",
                trace.states.back().exploitability);
    return 0;
  }

  if (*sweep) {
    if (!sweep_seed_set) throw ValidationError("sweep requires --seed");
    ManifestBuilder mb("sweep");
    const Environment env = env_arg(sweep_env, mb);
    mb.input("config", sweep_config);
    SweepConfig config = load_sweep_config(sweep_config);
    config.reference = policy_arg(sweep_reference, env, mb, "reference");
    mb.seed(sweep_seed);
    mb.config("permutations", static_cast<std::uint64_t>(sweep_perms));
    const SweepResult result = run_sweep(env, config);
    CsvWriter csv({"estimate", "h", "beta", "win_rate", "train_objective", "kl_to_ref",
                   "converged", "status"});
    for (const auto& row : result.rows)
      csv.add_row({row.estimate, row.h, CsvWriter::fmt(row.beta), CsvWriter::fmt(row.win_rate),
                   CsvWriter::fmt(row.train_objective), CsvWriter::fmt(row.kl_to_ref),
                   row.converged ? "true" : "false", row.status});
    csv.write(sweep_out);
    mb.write_for(sweep_out);
    const auto corrs = rank_correlations(result, sweep_seed, sweep_perms);
    for (const auto& c : corrs) {
      if (c.defined)
        std::printf("spearman %-16s rho %+.4f  p %.6f  (n=%llu)\n", c.axis.c_str(), c.rho,
                    c.p_value, static_cast<unsigned long long>(c.n));
      else
        std::printf("spearman %-16s undefined (constant column, n=%llu)\n", c.axis.c_str(),
                    static_cast<unsigned long long>(c.n));
    }
    if (!sweep_corr.empty()) {
      CsvWriter corr_csv({"axis", "rho", "p_value", "defined", "n", "permutations"});
      for (const auto& c : corrs)
        corr_csv.add_row({c.axis, CsvWriter::fmt(c.rho), CsvWriter::fmt(c.p_value),
                          c.defined ? "true" : "false", std::to_string(c.n),
                          std::to_string(sweep_perms)});
      corr_csv.write(sweep_corr);
      mb.write_for(sweep_corr);
    }
    std::printf("sweep: %llu rows written to %s\n",
                static_cast<unsigned long long>(result.rows.size()), sweep_out.c_str());
    return 0;
  }

  if (*fitbt) {
    ManifestBuilder mb("fit-bt");
    const Environment env = env_arg(fit_env, mb);
    const BTClassifier fitted = fit_bt(env.classifier);
    CsvWriter csv({"query", "response", "reward"});
    for (std::size_t q = 0; q < env.num_queries(); ++q)
      for (std::size_t y = 0; y < env.num_responses(q); ++y)
        csv.add_row({env.queries[q], env.responses[q][y], CsvWriter::fmt(fitted.rewards[q][y])});
    csv.write(fit_out);
    mb.write_for(fit_out);
    if (!fit_save.empty()) {
      Environment out = env;
      out.classifier = make_bt_classifier(fitted.rewards);
      out.bt = fitted;
      save_environment(out, fit_save);
    }
    std::printf("fit-bt: rewards written to %s\n", fit_out.c_str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericDomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
