#pragma once

// Symbolic differentiation and numeric evaluation of expression trees.
//
// differentiate() is memoized process-wide on (node, variable) pairs: curvature
// pipelines differentiate the same shared subtrees thousands of times.
//
// evaluate_as<F>() runs the tree in any float-like scalar type F (double by
// default; the finite-difference oracle instantiates it with a quad-precision
// type). Domain violations (log of a nonpositive value, fractional power of a
// negative value, division by zero, unbound symbols, non-finite intermediate
// results) raise EvalError naming the offending subexpression.

#include <confcurv/expr.hpp>

#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>

namespace confcurv {

template <class F>
using BindingsOf = std::map<std::string, F>;

using Bindings = BindingsOf<double>;

class EvalError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Differentiation.

namespace detail {

struct DiffKey {
  const ExprNode* node;
  const ExprNode* var;
  bool operator==(const DiffKey&) const = default;
};

struct DiffKeyHash {
  std::size_t operator()(const DiffKey& k) const {
    std::size_t h = reinterpret_cast<std::size_t>(k.node);
    boost::hash_combine(h, reinterpret_cast<std::size_t>(k.var));
    return h;
  }
};

Expr differentiate_impl(Expr e, Expr var);

inline Expr differentiate_cached(Expr e, Expr var) {
  static std::unordered_map<DiffKey, Expr, DiffKeyHash> cache;
  static std::mutex mu;
  DiffKey key{e.get(), var.get()};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  Expr d = differentiate_impl(e, var);
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, d).first->second;
}

inline Expr differentiate_impl(Expr e, Expr var) {
  if (!depends_on(e, var->name)) return zero();
  switch (e.kind()) {
    case Kind::Number:
    case Kind::Pi:
      return zero();
    case Kind::Symbol:
      return e == var ? one() : zero();
    case Kind::Add: {
      std::vector<Expr> parts;
      parts.reserve(e->kids.size());
      for (Expr k : e->kids) parts.push_back(differentiate_cached(k, var));
      return add(std::move(parts));
    }
    case Kind::Mul: {
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < e->kids.size(); ++i) {
        Expr di = differentiate_cached(e->kids[i], var);
        if (di.is_zero()) continue;
        std::vector<Expr> factors;
        factors.reserve(e->kids.size());
        for (std::size_t j = 0; j < e->kids.size(); ++j)
          factors.push_back(j == i ? di : e->kids[j]);
        terms.push_back(mul(std::move(factors)));
      }
      return add(std::move(terms));
    }
    case Kind::Pow: {
      Expr b = e->kids[0], x = e->kids[1];
      Expr db = differentiate_cached(b, var);
      Expr dx = differentiate_cached(x, var);
      if (dx.is_zero())  // b^c with constant c: c * b^(c-1) * b'
        return mul({x, pow(b, sub(x, one())), db});
      // General case: b^x * (x' log b + x b'/b).
      Expr t1 = mul(dx, log(b));
      Expr t2 = mul({x, db, inverse(b)});
      return mul(e, add(t1, t2));
    }
    case Kind::Func: {
      Expr u = e->kids[0];
      Expr du = differentiate_cached(u, var);
      switch (e->fn) {
        case Fn::Sin: return mul(cos(u), du);
        case Fn::Cos: return mul(neg(sin(u)), du);
        case Fn::Tan: return mul(add(one(), pow(tan(u), number(2))), du);
        case Fn::Exp: return mul(e, du);
        case Fn::Log: return mul(inverse(u), du);
        case Fn::Abs: return mul(sign(u), du);
        case Fn::Sign: return zero();  // piecewise constant away from the zero set
      }
      return zero();
    }
  }
  return zero();
}

}  // namespace detail

inline Expr differentiate(Expr e, Expr var) {
  if (var.kind() != Kind::Symbol)
    throw Error("differentiate: second argument must be a symbol");
  return detail::differentiate_cached(e, var);
}

inline Expr differentiate(Expr e, const std::string& var) {
  return differentiate(e, symbol(var));
}

// ---------------------------------------------------------------------------
// Evaluation.

namespace detail {

template <class F>
bool finite_value(const F& x) {
  using std::isfinite;
  return static_cast<bool>(isfinite(x));
}

template <class F>
F pi_value() {
  return boost::math::constants::pi<F>();
}

template <>
inline double pi_value<double>() {
  return 3.141592653589793238462643383279502884;
}

[[noreturn]] inline void eval_fail(const std::string& reason, Expr at) {
  std::string ctx = to_string(at);
  if (ctx.size() > 120) ctx = ctx.substr(0, 117) + "...";
  throw EvalError(reason + " in '" + ctx + "'");
}

template <class F>
class Evaluator {
 public:
  explicit Evaluator(const BindingsOf<F>& b) : bindings_(b) {}

  F run(Expr e) {
    auto it = cache_.find(e.get());
    if (it != cache_.end()) return it->second;
    F v = compute(e);
    if (!finite_value(v)) eval_fail("non-finite value", e);
    cache_.emplace(e.get(), v);
    return v;
  }

 private:
  const BindingsOf<F>& bindings_;
  std::unordered_map<const ExprNode*, F> cache_;

  F compute(Expr e) {
    using std::abs;
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    using std::tan;
    switch (e.kind()) {
      case Kind::Number:
        return static_cast<F>(numerator(e->value)) / static_cast<F>(denominator(e->value));
      case Kind::Pi:
        return pi_value<F>();
      case Kind::Symbol: {
        auto it = bindings_.find(e->name);
        if (it == bindings_.end()) eval_fail("unbound symbol '" + e->name + "'", e);
        return it->second;
      }
      case Kind::Add: {
        F s = 0;
        for (Expr k : e->kids) s += run(k);
        return s;
      }
      case Kind::Mul: {
        F p = 1;
        for (Expr k : e->kids) p *= run(k);
        return p;
      }
      case Kind::Pow: {
        F b = run(e->kids[0]);
        Expr x = e->kids[1];
        if (x.is_number() && is_integer(x->value) && abs(numerator(x->value)) <= 256) {
          long n = numerator(x->value).convert_to<long>();
          if (b == F(0) && n < 0) eval_fail("division by zero", e);
          F acc = 1;
          F base = n < 0 ? F(1) / b : b;
          for (long i = 0; i < (n < 0 ? -n : n); ++i) acc *= base;
          return acc;
        }
        F xv = run(x);
        if (b == F(0) && xv < F(0)) eval_fail("division by zero", e);
        if (b < F(0)) {
          // Non-integer powers of negative values leave the reals.
          F r = xv - static_cast<F>(std::llround(static_cast<double>(xv)));
          if (r != F(0)) eval_fail("fractional power of negative value", e);
        }
        return pow(b, xv);
      }
      case Kind::Func: {
        F u = run(e->kids[0]);
        switch (e->fn) {
          case Fn::Sin: return sin(u);
          case Fn::Cos: return cos(u);
          case Fn::Tan: return tan(u);
          case Fn::Exp: return exp(u);
          case Fn::Log:
            if (u <= F(0)) eval_fail("log of a nonpositive value", e);
            return log(u);
          case Fn::Abs: return abs(u);
          case Fn::Sign: return u == F(0) ? F(0) : (u > F(0) ? F(1) : F(-1));
        }
        eval_fail("unsupported function", e);
      }
    }
    eval_fail("unsupported node", e);
  }
};

}  // namespace detail

template <class F>
F evaluate_as(Expr e, const BindingsOf<F>& bindings) {
  return detail::Evaluator<F>(bindings).run(e);
}

inline double evaluate(Expr e, const Bindings& bindings) {
  return evaluate_as<double>(e, bindings);
}

}  // namespace confcurv
