#include "winlab/env.hpp"

#include <cmath>
#include <sstream>

#include "winlab/rng.hpp"

namespace winlab {

PreferenceClassifier make_bt_classifier(const std::vector<Vec>& rewards) {
  PreferenceClassifier out;
  out.pref.reserve(rewards.size());
  for (std::size_t q = 0; q < rewards.size(); ++q) {
    const Vec& r = rewards[q];
    for (double v : r) {
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "non-finite reward in query " << q;
        throw ValidationError(msg.str());
      }
    }
    const std::size_t n = r.size();
    Mat m(n, Vec(n));
    for (std::size_t i = 0; i < n; ++i) {
      m[i][i] = 0.5;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double p = sigmoid(r[j] - r[i]);
        m[i][j] = p;
        m[j][i] = 1.0 - p;
      }
    }
    out.pref.push_back(std::move(m));
  }
  return out;
}

std::vector<std::string> classifier_violations(const std::vector<Mat>& raw) {
  std::vector<std::string> violations;
  auto add = [&violations](std::size_t q, std::size_t i, std::size_t j, const char* what) {
    std::ostringstream msg;
    msg << what << " at (q" << q << ", " << i << ", " << j << ")";
    violations.push_back(msg.str());
  };
  for (std::size_t q = 0; q < raw.size(); ++q) {
    const Mat& m = raw[q];
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (m[i].size() != n) {
        add(q, i, 0, "non-square classifier matrix");
        return violations;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (m[i][i] != 0.5) add(q, i, i, "diagonal entry != 0.5");
      for (std::size_t j = 0; j < n; ++j) {
        if (!(m[i][j] >= 0.0 && m[i][j] <= 1.0)) add(q, i, j, "entry outside [0,1]");
        if (j > i && std::abs(m[i][j] + m[j][i] - 1.0) > kAntisymTol)
          add(q, i, j, "antisymmetry violated");
      }
    }
  }
  return violations;
}

PreferenceClassifier validate_classifier(std::vector<Mat> raw) {
  auto violations = classifier_violations(raw);
  if (!violations.empty()) {
    std::string msg = "invalid preference classifier:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
  return PreferenceClassifier{std::move(raw)};
}

namespace {

// Solve A x = b in place with partial pivoting. A is small and dense.
Vec solve_dense(Mat a, Vec b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-300) throw NumericDomainError("singular system in BT fit");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * x[c];
    x[ri] = s / a[ri][ri];
  }
  return x;
}

double bt_fit_loss(const Mat& pref, const Mat& w, const Vec& r) {
  const std::size_t n = r.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (w[i][j] <= 0.0) continue;
      loss += w[i][j] * bernoulli_cross_entropy(pref[i][j], r[j] - r[i]);
    }
  return loss;
}

// Gradient of the weighted cross-entropy with respect to rewards.
Vec bt_fit_grad(const Mat& pref, const Mat& w, const Vec& r) {
  const std::size_t n = r.size();
  Vec g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (w[i][j] <= 0.0) continue;
      const double d = sigmoid(r[j] - r[i]) - pref[i][j];
      g[j] += w[i][j] * d;
      g[i] -= w[i][j] * d;
    }
  return g;
}

Vec fit_bt_query(const Mat& pref, const Mat& w, std::size_t q) {
  const std::size_t n = pref.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || w[i][j] <= 0.0) continue;
      if (pref[i][j] <= 0.0 || pref[i][j] >= 1.0) {
        std::ostringstream msg;
        msg << "BT fit rejected: deterministic preference with positive weight at (q" << q << ", "
            << i << ", " << j << ")";
        throw ValidationError(msg.str());
      }
    }
  Vec r(n, 0.0);
  if (n <= 1) return r;
  // Damped Newton on the free coordinates r[1..n-1]; r[0] is the gauge.
  double loss = bt_fit_loss(pref, w, r);
  for (int iter = 0; iter < 200; ++iter) {
    const Vec g = bt_fit_grad(pref, w, r);
    double gnorm = 0.0;
    for (std::size_t k = 1; k < n; ++k) gnorm += g[k] * g[k];
    gnorm = std::sqrt(gnorm);
    if (gnorm <= 1e-12) break;
    Mat h(n - 1, Vec(n - 1, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (w[i][j] <= 0.0) continue;
        const double s = sigmoid(r[j] - r[i]);
        const double c = w[i][j] * s * (1.0 - s);
        if (j > 0) h[j - 1][j - 1] += c;
        if (i > 0) h[i - 1][i - 1] += c;
        if (i > 0 && j > 0) {
          h[j - 1][i - 1] -= c;
          h[i - 1][j - 1] -= c;
        }
      }
    for (std::size_t k = 0; k + 1 < n; ++k) h[k][k] += 1e-12;
    Vec rhs(n - 1);
    for (std::size_t k = 1; k < n; ++k) rhs[k - 1] = -g[k];
    Vec step = solve_dense(std::move(h), std::move(rhs));
    double t = 1.0;
    for (int halvings = 0; halvings < 60; ++halvings) {
      Vec cand = r;
      for (std::size_t k = 1; k < n; ++k) cand[k] += t * step[k - 1];
      const double cand_loss = bt_fit_loss(pref, w, cand);
      if (cand_loss <= loss) {
        r = std::move(cand);
        loss = cand_loss;
        break;
      }
      t *= 0.5;
    }
  }
  const Vec g = bt_fit_grad(pref, w, r);
  double gnorm = 0.0;
  for (std::size_t k = 1; k < n; ++k) gnorm += g[k] * g[k];
  if (std::sqrt(gnorm) > 1e-10) throw NumericDomainError("BT fit failed to reach gradient tolerance");
  return r;
}

}  // namespace

BTClassifier fit_bt(const PreferenceClassifier& classifier, const std::vector<Mat>* pair_weights) {
  BTClassifier out;
  out.rewards.reserve(classifier.pref.size());
  for (std::size_t q = 0; q < classifier.pref.size(); ++q) {
    const Mat& pref = classifier.pref[q];
    const std::size_t n = pref.size();
    Mat w;
    if (pair_weights) {
      w = (*pair_weights)[q];
    } else {
      w.assign(n, Vec(n, 1.0));
      for (std::size_t i = 0; i < n; ++i) w[i][i] = 0.0;
    }
    out.rewards.push_back(fit_bt_query(pref, w, q));
  }
  return out;
}

PreferenceClassifier perturb_classifier(const PreferenceClassifier& classifier, double eta,
                                        std::uint64_t seed) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("perturbation weight eta must be in [0,1]");
  PreferenceClassifier out = classifier;
  for (std::size_t q = 0; q < out.pref.size(); ++q) {
    Rng rng(derive_stream(seed, q));
    Mat& m = out.pref[q];
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i][i] = 0.5;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double u = rng.uniform_open();
        m[i][j] = (1.0 - eta) * m[i][j] + eta * u;
        m[j][i] = 1.0 - m[i][j];
      }
    }
  }
  return out;
}

void validate_environment(const Environment& env) {
  const std::size_t nq = env.queries.size();
  if (nq == 0) throw ValidationError("environment has no queries");
  if (env.query_probs.size() != nq || env.responses.size() != nq ||
      env.classifier.pref.size() != nq)
    throw ValidationError("environment field sizes disagree");
  double sum = 0.0;
  for (double p : env.query_probs) {
    if (!(p >= 0.0)) throw ValidationError("negative query probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTol) throw ValidationError("query probabilities do not sum to 1");
  for (std::size_t q = 0; q < nq; ++q) {
    if (env.responses[q].empty()) throw ValidationError("query with no responses: " + env.queries[q]);
    if (env.classifier.pref[q].size() != env.responses[q].size())
      throw ValidationError("classifier dimensions do not match response count for query " +
                            env.queries[q]);
  }
  auto violations = classifier_violations(env.classifier.pref);
  if (!violations.empty()) {
    std::string msg = "invalid preference classifier:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
  if (env.bt) {
    if (env.bt->rewards.size() != nq) throw ValidationError("BT reward table size mismatch");
    for (std::size_t q = 0; q < nq; ++q) {
      if (env.bt->rewards[q].size() != env.responses[q].size())
        throw ValidationError("BT reward vector size mismatch for query " + env.queries[q]);
      for (double r : env.bt->rewards[q])
        if (!std::isfinite(r)) throw ValidationError("non-finite BT reward");
    }
  }
}

void validate_policy(const Policy& policy, const Environment& env) {
  if (policy.probs.size() != env.num_queries())
    throw ValidationError("policy query count does not match environment");
  for (std::size_t q = 0; q < policy.probs.size(); ++q) {
    if (policy.probs[q].size() != env.num_responses(q))
      throw ValidationError("policy response count mismatch for query " + env.queries[q]);
    double sum = 0.0;
    for (double p : policy.probs[q]) {
      if (!(p >= 0.0)) throw ValidationError("negative policy probability in query " + env.queries[q]);
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
      throw ValidationError("policy does not sum to 1 for query " + env.queries[q]);
  }
}

Environment make_environment(std::vector<std::string> queries, Vec query_probs,
                             std::vector<std::vector<std::string>> responses,
                             PreferenceClassifier classifier, std::optional<BTClassifier> bt) {
  Environment env{std::move(queries), std::move(query_probs), std::move(responses),
                  std::move(classifier), std::move(bt)};
  validate_environment(env);
  return env;
}

Policy uniform_policy(const Environment& env) {
  Policy p;
  p.probs.reserve(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q)
    p.probs.emplace_back(env.num_responses(q), 1.0 / static_cast<double>(env.num_responses(q)));
  return p;
}

Policy point_mass_policy(const Environment& env, const std::vector<std::size_t>& response_idx) {
  Policy p;
  p.probs.reserve(env.num_queries());
  for (std::size_t q = 0; q < env.num_queries(); ++q) {
    Vec v(env.num_responses(q), 0.0);
    v.at(response_idx[q]) = 1.0;
    p.probs.push_back(std::move(v));
  }
  return p;
}

}  // namespace winlab
