// Benchmark of the OpenMP kernels against their serial references on a
// larger synthetic environment. Results must agree exactly; the point of the
// table is the timing.

#include <chrono>
#include <cstdio>
#include <string>

#include <omp.h>

#include "winlab/optimize.hpp"
#include "winlab/rng.hpp"
#include "winlab/sweep.hpp"

using namespace winlab;

namespace {

Environment synthetic_env(std::size_t n_queries, std::size_t n_responses, std::uint64_t seed) {
  std::vector<std::string> queries;
  std::vector<std::vector<std::string>> responses;
  std::vector<Vec> rewards;
  Rng rng(seed);
  for (std::size_t q = 0; q < n_queries; ++q) {
    queries.push_back("q" + std::to_string(q));
    std::vector<std::string> ids;
    Vec r;
    for (std::size_t y = 0; y < n_responses; ++y) {
      ids.push_back("r" + std::to_string(y));
      r.push_back(rng.normal());
    }
    responses.push_back(std::move(ids));
    rewards.push_back(std::move(r));
  }
  Vec probs(n_queries, 1.0 / static_cast<double>(n_queries));
  auto classifier = make_bt_classifier(rewards);
  return make_environment(std::move(queries), std::move(probs), std::move(responses),
                          std::move(classifier), BTClassifier{std::move(rewards)});
}

Policy random_policy(const Environment& env, std::uint64_t seed) {
  Rng rng(seed);
  Policy p;
  for (std::size_t q = 0; q < env.num_queries(); ++q)
    p.probs.push_back(rng.dirichlet(env.num_responses(q), 1.0));
  return p;
}

template <typename F>
double time_ms(const F& fn, int reps) {
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() /
         static_cast<double>(reps);
}

void report(const char* kernel, double serial_ms, double parallel_ms, double max_abs_diff) {
  std::printf("%-22s %12.2f %12.2f %9.2fx %12.3g\n", kernel, serial_ms, parallel_ms,
              serial_ms / parallel_ms, max_abs_diff);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-22s %12s %12s %10s %12s\n", "kernel", "serial_ms", "parallel_ms", "speedup",
              "max_diff");

  // Exact enumeration on a wide environment.
  {
    auto env = synthetic_env(64, 256, 1);
    auto gen = random_policy(env, 2);
    auto anc = random_policy(env, 3);
    const auto h = HTransform::identity();
    double serial_value = 0.0, parallel_value = 0.0;
    const double s = time_ms([&] { serial_value = serial::h_win_rate(gen, anc, env, h); }, 20);
    const double p = time_ms([&] { parallel_value = h_win_rate(gen, anc, env, h); }, 20);
    report("h_win_rate 64x256", s, p, std::abs(serial_value - parallel_value));
  }

  // Monte-Carlo estimation.
  {
    auto env = synthetic_env(16, 32, 4);
    auto gen = random_policy(env, 5);
    auto anc = random_policy(env, 6);
    const auto h = HTransform::identity();
    McEstimate se{}, pe{};
    const double s =
        time_ms([&] { se = serial::mc_win_rate(gen, anc, env, h, 2000000, 7); }, 3);
    const double p = time_ms([&] { pe = mc_win_rate(gen, anc, env, h, 2000000, 7); }, 3);
    report("mc_win_rate 2e6", s, p, std::abs(se.estimate - pe.estimate));
  }

  // Dirichlet scan including the pair count.
  {
    auto env = synthetic_env(1, 8, 8);
    auto ref = uniform_policy(env);
    ScanOptions opts;
    opts.n_points = 4000;
    opts.seed = 9;
    ScanResult sr, pr;
    const double s = time_ms([&] { sr = serial::dpo_mismatch_scan(env, ref, opts); }, 3);
    const double p = time_ms([&] { pr = dpo_mismatch_scan(env, ref, opts); }, 3);
    report("scan 4000 pts", s, p,
           std::abs(static_cast<double>(sr.violating_pairs) -
                    static_cast<double>(pr.violating_pairs)));
  }

  // Violating-pair count alone.
  {
    auto env = synthetic_env(1, 6, 10);
    auto ref = uniform_policy(env);
    ScanOptions opts;
    opts.n_points = 20000;
    opts.seed = 11;
    auto scan = dpo_mismatch_scan(env, ref, opts);
    std::uint64_t cs = 0, cp = 0;
    const double s = time_ms([&] { cs = serial::count_violating_pairs(scan.points); }, 3);
    const double p = time_ms([&] { cp = count_violating_pairs(scan.points); }, 3);
    report("pair count 2e4", s, p, std::abs(static_cast<double>(cs) - static_cast<double>(cp)));
  }

  return 0;
}
