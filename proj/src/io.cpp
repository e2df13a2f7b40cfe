#include "winlab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace winlab {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ValidationError(origin + ": not valid JSON");
  return j;
}

json load_json_file(const std::string& path) {
  return parse_json(read_text_file(path), path);
}

Vec to_vec(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + ": expected an array of numbers");
  Vec v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw ValidationError(what + ": expected an array of numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Environment environment_from_json_text(const std::string& text, const std::string& origin) {
  const json j = parse_json(text, origin);
  if (!j.contains("queries") || !j["queries"].is_array() || j["queries"].empty())
    throw ValidationError(origin + ": missing or empty \"queries\"");
  if (!j.contains("classifier") || !j["classifier"].is_object())
    throw ValidationError(origin + ": missing \"classifier\"");

  std::vector<std::string> queries;
  Vec query_probs;
  std::vector<std::vector<std::string>> responses;
  for (const auto& q : j["queries"]) {
    if (!q.contains("id") || !q.contains("prob") || !q.contains("responses"))
      throw ValidationError(origin + ": each query needs id, prob, responses");
    queries.push_back(q["id"].get<std::string>());
    query_probs.push_back(q["prob"].get<double>());
    std::vector<std::string> resp;
    for (const auto& r : q["responses"]) resp.push_back(r.get<std::string>());
    responses.push_back(std::move(resp));
  }

  const json& clf = j["classifier"];
  const std::string kind = clf.value("kind", "");
  if (!clf.contains("data") || !clf["data"].is_array() || clf["data"].size() != queries.size())
    throw ValidationError(origin + ": classifier data must give one entry per query");

  PreferenceClassifier classifier;
  std::optional<BTClassifier> bt;
  if (kind == "bt") {
    BTClassifier rewards;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      Vec r = to_vec(clf["data"][q], origin + ": reward vector");
      if (r.size() != responses[q].size())
        throw ValidationError(origin + ": reward vector size mismatch for query " + queries[q]);
      rewards.rewards.push_back(std::move(r));
    }
    classifier = make_bt_classifier(rewards.rewards);
    bt = std::move(rewards);
  } else if (kind == "matrix") {
    std::vector<Mat> raw;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const json& m = clf["data"][q];
      if (!m.is_array() || m.size() != responses[q].size())
        throw ValidationError(origin + ": classifier matrix size mismatch for query " + queries[q]);
      Mat mat;
      for (const auto& row : m) mat.push_back(to_vec(row, origin + ": classifier row"));
      raw.push_back(std::move(mat));
    }
    classifier = validate_classifier(std::move(raw));
  } else {
    throw ValidationError(origin + ": classifier kind must be \"bt\" or \"matrix\"");
  }

  return make_environment(std::move(queries), std::move(query_probs), std::move(responses),
                          std::move(classifier), std::move(bt));
}

Environment load_environment(const std::string& path) {
  return environment_from_json_text(read_text_file(path), path);
}

void save_environment(const Environment& env, const std::string& path) {
  json j;
  j["queries"] = json::array();
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    json e;
    e["id"] = env.queries[q];
    e["prob"] = env.query_probs[q];
    e["responses"] = env.responses[q];
    j["queries"].push_back(std::move(e));
  }
  if (env.bt) {
    j["classifier"]["kind"] = "bt";
    j["classifier"]["data"] = env.bt->rewards;
  } else {
    j["classifier"]["kind"] = "matrix";
    j["classifier"]["data"] = env.classifier.pref;
  }
  atomic_write_text(path, j.dump(2) + "\n");
}

Policy load_policy(const std::string& path, const Environment& env) {
  const json j = load_json_file(path);
  if (!j.contains("policy") || !j["policy"].is_array())
    throw ValidationError(path + ": missing \"policy\" array");
  if (j["policy"].size() != env.num_queries())
    throw ValidationError(path + ": policy must list every query");
  Policy p;
  p.probs.resize(env.num_queries());
  std::vector<bool> seen(env.num_queries(), false);
  for (const auto& entry : j["policy"]) {
    const std::string id = entry.value("query", "");
    std::size_t q = env.num_queries();
    for (std::size_t i = 0; i < env.num_queries(); ++i)
      if (env.queries[i] == id) q = i;
    if (q == env.num_queries()) throw ValidationError(path + ": unknown query id " + id);
    if (seen[q]) throw ValidationError(path + ": duplicate query id " + id);
    seen[q] = true;
    p.probs[q] = to_vec(entry["probs"], path + ": probs");
  }
  validate_policy(p, env);
  return p;
}

void save_policy(const Policy& policy, const Environment& env, const std::string& path) {
  json j;
  j["policy"] = json::array();
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    json e;
    e["query"] = env.queries[q];
    e["probs"] = policy.probs[q];
    j["policy"].push_back(std::move(e));
  }
  atomic_write_text(path, j.dump(2) + "\n");
}

FilterSpec load_filter(const std::string& path, const Environment& env) {
  const json j = load_json_file(path);
  if (!j.contains("filter") || !j["filter"].is_array() || j["filter"].size() != env.num_queries())
    throw ValidationError(path + ": filter must list every query");
  FilterSpec f;
  f.accept.resize(env.num_queries());
  for (const auto& entry : j["filter"]) {
    const std::string id = entry.value("query", "");
    std::size_t q = env.num_queries();
    for (std::size_t i = 0; i < env.num_queries(); ++i)
      if (env.queries[i] == id) q = i;
    if (q == env.num_queries()) throw ValidationError(path + ": unknown query id " + id);
    const json& acc = entry["accept"];
    const std::size_t n = env.num_responses(q);
    if (!acc.is_array() || acc.size() != n)
      throw ValidationError(path + ": accept tensor must be [y1][y0][2]");
    auto& fq = f.accept[q];
    fq.resize(n);
    for (std::size_t y1 = 0; y1 < n; ++y1) {
      if (!acc[y1].is_array() || acc[y1].size() != n)
        throw ValidationError(path + ": accept tensor must be [y1][y0][2]");
      fq[y1].resize(n);
      for (std::size_t y0 = 0; y0 < n; ++y0) {
        const Vec pair = to_vec(acc[y1][y0], path + ": accept cell");
        if (pair.size() != 2) throw ValidationError(path + ": accept cell must hold [f|l=0, f|l=1]");
        for (double v : pair)
          if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError(path + ": filter probabilities must lie in [0,1]");
        fq[y1][y0] = {pair[0], pair[1]};
      }
    }
  }
  return f;
}

SweepConfig load_sweep_config(const std::string& path) {
  const json j = load_json_file(path);
  SweepConfig config;
  for (const auto& name : j.value("h_grid", json::array()))
    config.h_grid.push_back(HTransform::parse(name.get<std::string>()));
  config.beta_grid = to_vec(j.value("beta_grid", json::array()), path + ": beta_grid");
  for (const auto& e : j.value("estimates", json::array())) {
    ClassifierEstimate est;
    const std::string kind = e.value("kind", "");
    if (kind == "oracle") {
      est.kind = ClassifierEstimate::Kind::oracle;
    } else if (kind == "bt_fit") {
      est.kind = ClassifierEstimate::Kind::bt_fit;
    } else if (kind == "perturbed") {
      est.kind = ClassifierEstimate::Kind::perturbed;
      est.eta = e.value("eta", 0.0);
      est.seed = e.value("seed", std::uint64_t{0});
    } else {
      throw ValidationError(path + ": estimate kind must be oracle, bt_fit, or perturbed");
    }
    config.estimates.push_back(est);
  }
  if (j.contains("optimizer")) {
    const std::string kind = j["optimizer"].value("kind", "closed_form");
    if (kind == "closed_form") {
      config.closed_form = true;
    } else if (kind == "exact_ascent") {
      config.closed_form = false;
      config.ascent_budget = j["optimizer"].value("budget", 20000);
    } else {
      throw ValidationError(path + ": optimizer kind must be closed_form or exact_ascent");
    }
  }
  return config;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) throw ValidationError("CSV row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) body_ += ',';
    body_ += cells[i];
  }
  body_ += '\n';
}

const std::string& CsvWriter::text() {
  rendered_.clear();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) rendered_ += ',';
    rendered_ += columns_[i];
  }
  rendered_ += '\n';
  rendered_ += body_;
  return rendered_;
}

void CsvWriter::write(const std::string& path) { atomic_write_text(path, text()); }

std::string CsvWriter::fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string CsvWriter::fmt(std::uint64_t v) { return std::to_string(v); }

void atomic_write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + tmp);
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_digest(const std::string& path) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(read_text_file(path))));
  return buf;
}

std::string RunManifest::to_json_text() const {
  json j;
  j["command"] = command;
  j["version"] = version;
  if (has_seed)
    j["seed"] = seed;
  else
    j["seed"] = nullptr;
  j["config"] = config;
  j["inputs"] = input_digests;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

}  // namespace winlab
