#pragma once

// Shared helpers for the test suites: a deterministic random expression
// generator and small numeric utilities. Framework-free so both the Catch2
// suites and the standalone acceptance runner can use it.

#include <confcurv/confcurv.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using confcurv::Expr;

// Random canonical expressions over the symbols {x, y, z}. With smooth=true
// the trees stay differentiable and tame on (0.2, 1.8)^3: only sin/cos/exp,
// integer powers, small coefficients. With smooth=false every node kind the
// grammar knows may appear (abs, sign, log, sqrt, tan, fractional powers),
// which is what the print/parse round-trip wants to chew on.
inline Expr random_expr(std::mt19937_64& rng, int depth, bool smooth) {
  using namespace confcurv;
  auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
  if (depth <= 0) {
    switch (pick(smooth ? 3 : 4)) {
      case 0: {
        long long num = pick(9) - 4;
        long long den = 1 + pick(3);
        return number(num, den);
      }
      case 1: return symbol("x");
      case 2: return symbol(pick(2) ? "y" : "z");
      default: return pi_constant();
    }
  }
  switch (pick(smooth ? 5 : 7)) {
    case 0: {
      std::vector<Expr> kids;
      int n = 2 + pick(2);
      for (int i = 0; i < n; ++i) kids.push_back(random_expr(rng, depth - 1, smooth));
      return add(kids);
    }
    case 1: {
      std::vector<Expr> kids;
      int n = 2 + pick(2);
      for (int i = 0; i < n; ++i) kids.push_back(random_expr(rng, depth - 1, smooth));
      return mul(kids);
    }
    case 2: {
      Expr base = random_expr(rng, depth - 1, smooth);
      if (smooth) return pow(base, number(1 + pick(3)));
      switch (pick(3)) {
        case 0: return pow(base, number(pick(7) - 3));
        case 1: return pow(base, number(1 + pick(3), 2 + pick(3)));
        default: return pow(base, random_expr(rng, 0, smooth));
      }
    }
    case 3: {
      Expr u = random_expr(rng, depth - 1, smooth);
      switch (pick(smooth ? 3 : 6)) {
        case 0: return sin(u);
        case 1: return cos(u);
        case 2: return exp(u);
        case 3: return tan(u);
        case 4: return sqrt(u);
        default: return log(u);
      }
    }
    case 4: return neg(random_expr(rng, depth - 1, smooth));
    case 5: {
      Expr u = random_expr(rng, depth - 1, smooth);
      return pick(2) ? abs(u) : sign(u);
    }
    default: {
      Expr a = random_expr(rng, depth - 1, smooth);
      Expr b = random_expr(rng, depth - 1, smooth);
      return div(a, b);
    }
  }
}

inline double rel_dev(double got, double want) {
  return std::abs(got - want) / (1.0 + std::abs(got) + std::abs(want));
}

}  // namespace testsupport
