#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace winlab {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Structural input problem (bad file, broken invariant). CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical domain violation (e.g. logit of a deterministic preference).
// CLI exit code 1.
class NumericDomainError : public std::runtime_error {
 public:
  explicit NumericDomainError(const std::string& what) : std::runtime_error(what) {}
};

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// log(1 + e^x) without overflow for large |x|.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log sum_i exp(v[i]); tolerates -inf entries (zero mass). All entries -inf
// yields -inf.
inline double log_sum_exp(const Vec& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// -[p log sigmoid(m) + (1-p) log(1 - sigmoid(m))] for a soft label p and a
// predicted logit m. Stable for large |m|; +inf only when the label places
// mass on an impossible side (m = +-inf).
inline double bernoulli_cross_entropy(double p, double m) {
  double out = 0.0;
  if (p > 0.0) out += p * softplus(-m);
  if (p < 1.0) out += (1.0 - p) * softplus(m);
  return out;
}

inline double total_variation(const Vec& p, const Vec& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

inline bool approx_eq(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace winlab
