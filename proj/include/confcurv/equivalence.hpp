#pragma once

// Numeric equivalence testing on sampled domain points.
//
// Two expressions are accepted as equivalent when they agree at every sampled
// point to within an absolute+relative mixed tolerance. Sampling is seeded and
// deterministic; points where either side fails to evaluate (outside a factor's
// domain of definition) are redrawn, up to an attempt budget.

#include <confcurv/calculus.hpp>
#include <confcurv/expr.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace confcurv {

struct Interval {
  double lo = 0;
  double hi = 0;
};

class SamplerExhaustion : public Error {
 public:
  using Error::Error;
};

// Draws bindings uniformly from per-symbol intervals, in a fixed variable
// order, from a seeded engine. Degenerate intervals pin a symbol to a value.
class DomainSampler {
 public:
  DomainSampler(std::vector<std::pair<std::string, Interval>> vars, std::uint64_t seed)
      : vars_(std::move(vars)), seed_(seed), rng_(seed) {}

  std::uint64_t seed() const { return seed_; }
  const std::vector<std::pair<std::string, Interval>>& variables() const { return vars_; }

  Bindings sample() {
    Bindings b;
    for (const auto& [name, iv] : vars_) {
      if (iv.lo == iv.hi) {
        b[name] = iv.lo;
      } else {
        std::uniform_real_distribution<double> dist(iv.lo, iv.hi);
        b[name] = dist(rng_);
      }
    }
    return b;
  }

  // Draws until `ok` accepts a point. Throws SamplerExhaustion after
  // max_attempts rejections.
  Bindings sample_where(const std::function<bool(const Bindings&)>& ok,
                        int max_attempts = 1000) {
    for (int i = 0; i < max_attempts; ++i) {
      Bindings b = sample();
      if (ok(b)) return b;
    }
    throw SamplerExhaustion(
        "sampler exhausted: no valid domain point found in " +
        std::to_string(max_attempts) + " attempts");
  }

 private:
  std::vector<std::pair<std::string, Interval>> vars_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
};

inline bool values_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * (1.0 + std::abs(a) + std::abs(b));
}

// Samples `trials` points where both sides evaluate and compares values.
// Points with evaluation errors (domain holes) are redrawn.
inline bool equivalent(Expr a, Expr b, DomainSampler& sampler, int trials = 16,
                       double tol = 1e-9) {
  if (a == b) return true;
  for (int t = 0; t < trials; ++t) {
    double va = 0, vb = 0;
    Bindings point = sampler.sample_where([&](const Bindings& p) {
      try {
        va = evaluate(a, p);
        vb = evaluate(b, p);
        return true;
      } catch (const EvalError&) {
        return false;
      }
    });
    (void)point;
    if (!values_close(va, vb, tol)) return false;
  }
  return true;
}

}  // namespace confcurv
