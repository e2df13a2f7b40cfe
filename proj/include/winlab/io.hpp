#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "winlab/sweep.hpp"

namespace winlab {

// Environment files:
//   {"queries": [{"id": "q0", "prob": 1.0, "responses": ["a","b"]}],
//    "classifier": {"kind": "bt" | "matrix", "data": [...per query...]}}
// "bt" data is one reward vector per query; "matrix" data is one full
// pref[y0][y1] matrix per query. Loaders re-validate every invariant.
Environment load_environment(const std::string& path);
Environment environment_from_json_text(const std::string& text, const std::string& origin);
void save_environment(const Environment& env, const std::string& path);

// Policy files: {"policy": [{"query": "q0", "probs": [...]}]}
Policy load_policy(const std::string& path, const Environment& env);
void save_policy(const Policy& policy, const Environment& env, const std::string& path);

// Filter files: {"filter": [{"query": "q0", "accept": [[[f0,f1], ...y0], ...y1]}]}
// accept[y1][y0] = [p(f=1|l=0), p(f=1|l=1)].
FilterSpec load_filter(const std::string& path, const Environment& env);

// Sweep configuration files:
//   {"h_grid": [...], "beta_grid": [...], "estimates": [{"kind": ...}, ...],
//    "optimizer": {"kind": "closed_form" | "exact_ascent", "budget": n}}
// The reference policy is supplied separately (file or uniform).
SweepConfig load_sweep_config(const std::string& path);

// Fixed column order, 17-significant-digit decimals, atomic replace on write.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void add_row(std::vector<std::string> cells);
  const std::string& text();
  void write(const std::string& path);
  static std::string fmt(double v);
  static std::string fmt(std::uint64_t v);
 private:
  std::vector<std::string> columns_;
  std::string body_;
  std::string rendered_;
};

void atomic_write_text(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);
std::string file_digest(const std::string& path);

// Run manifest: command, resolved configuration, root seed, tool version, and
// input digests. Identical manifests imply byte-identical outputs.
struct RunManifest {
  std::string command;
  std::string version;
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;            // resolved flags
  std::map<std::string, std::string> input_digests;     // path -> digest
  std::vector<std::string> outputs;
  std::string to_json_text() const;
};

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace winlab
