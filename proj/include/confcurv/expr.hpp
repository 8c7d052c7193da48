#pragma once

// Immutable symbolic expression trees with hash-consing.
//
// Every node is interned in a process-wide pool, so structurally identical
// subtrees share one node and structural equality is pointer equality. All
// constructors below are "smart": they flatten, sort, fold constants and merge
// like terms/factors, so an Expr is always in canonical form by construction.
//
// Canonical shape:
//   - negation is (-1)*e, division is a*b^(-1), sqrt(u) is u^(1/2);
//   - Add/Mul children are flattened, canonically ordered, at least two;
//   - a Mul holds at most one Number child, first, never 0 or 1;
//   - an Add holds at most one Number child and no zero terms;
//   - a Pow never has exponent 0 or 1; a Number base carries its exponent's
//     integer part folded out and perfect roots extracted (sqrt(48) = 4*sqrt(3)).
//
// The pool is guarded by a mutex, so building expressions from several threads
// is safe; individual Expr values are immutable and freely shareable.

#include <confcurv/rational.hpp>

#include <boost/functional/hash.hpp>

#include <algorithm>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace confcurv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind : std::uint8_t { Number, Pi, Symbol, Func, Pow, Mul, Add };

enum class Fn : std::uint8_t { Sin, Cos, Tan, Exp, Log, Abs, Sign };

inline const char* fn_name(Fn f) {
  switch (f) {
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Tan: return "tan";
    case Fn::Exp: return "exp";
    case Fn::Log: return "log";
    case Fn::Abs: return "abs";
    case Fn::Sign: return "sign";
  }
  return "?";
}

class ExprNode;

// Value handle to an interned node. Pointer-sized, cheap to copy; equality is
// structural because structurally equal trees are the same node.
class Expr {
 public:
  Expr() = default;
  explicit Expr(const ExprNode* n) : node_(n) {}

  const ExprNode* get() const { return node_; }
  const ExprNode& operator*() const { return *node_; }
  const ExprNode* operator->() const { return node_; }
  explicit operator bool() const { return node_ != nullptr; }

  friend bool operator==(Expr a, Expr b) { return a.node_ == b.node_; }
  friend bool operator!=(Expr a, Expr b) { return a.node_ != b.node_; }

  // Convenience accessors (defined after ExprNode).
  Kind kind() const;
  bool is_number() const;
  bool is_zero() const;
  bool is_one() const;
  const Rational& value() const;

 private:
  const ExprNode* node_ = nullptr;
};

class ExprNode {
 public:
  Kind kind;
  Fn fn = Fn::Sin;             // meaningful for Func only
  Rational value;              // Number only
  std::string name;            // Symbol only
  std::vector<Expr> kids;      // Add/Mul: >= 2, Pow: {base, exponent}, Func: {arg}
  std::size_t hash = 0;

  void rehash() {
    std::size_t h = static_cast<std::size_t>(kind) * 0x9e3779b97f4a7c15ull;
    switch (kind) {
      case Kind::Number: boost::hash_combine(h, hash_rational(value)); break;
      case Kind::Symbol: boost::hash_combine(h, std::hash<std::string>{}(name)); break;
      case Kind::Func: boost::hash_combine(h, static_cast<std::size_t>(fn)); break;
      default: break;
    }
    for (Expr k : kids) boost::hash_combine(h, reinterpret_cast<std::size_t>(k.get()));
    hash = h;
  }
};

inline Kind Expr::kind() const { return node_->kind; }
inline bool Expr::is_number() const { return node_->kind == Kind::Number; }
inline bool Expr::is_zero() const { return is_number() && node_->value == 0; }
inline bool Expr::is_one() const { return is_number() && node_->value == 1; }
inline const Rational& Expr::value() const { return node_->value; }

namespace detail {

struct NodePtrHash {
  std::size_t operator()(const ExprNode* n) const { return n->hash; }
};

struct NodePtrEq {
  bool operator()(const ExprNode* a, const ExprNode* b) const {
    if (a->kind != b->kind || a->hash != b->hash) return false;
    switch (a->kind) {
      case Kind::Number: return a->value == b->value;
      case Kind::Symbol: return a->name == b->name;
      case Kind::Func:
        if (a->fn != b->fn) return false;
        break;
      default: break;
    }
    return a->kids == b->kids;  // children are interned: pointer comparison
  }
};

class ExprPool {
 public:
  static ExprPool& instance() {
    static ExprPool pool;
    return pool;
  }

  Expr intern(ExprNode&& n) {
    n.rehash();
    std::lock_guard<std::mutex> lock(mu_);
    auto it = set_.find(&n);
    if (it != set_.end()) return Expr(*it);
    store_.push_back(std::move(n));
    const ExprNode* p = &store_.back();
    set_.insert(p);
    return Expr(p);
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return store_.size();
  }

 private:
  ExprPool() = default;
  std::deque<ExprNode> store_;
  std::unordered_set<const ExprNode*, NodePtrHash, NodePtrEq> set_;
  mutable std::mutex mu_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Structural (canonical) total order. Used for child ordering and as the map
// key order in the constructors below. Distinct interned nodes never compare
// equal, so this is a strict total order on canonical expressions.

inline int compare(Expr a, Expr b) {
  if (a == b) return 0;
  auto rank = [](Kind k) { return static_cast<int>(k); };
  if (rank(a.kind()) != rank(b.kind())) return rank(a.kind()) < rank(b.kind()) ? -1 : 1;
  switch (a.kind()) {
    case Kind::Number:
      return a->value < b->value ? -1 : 1;
    case Kind::Pi:
      return 0;
    case Kind::Symbol:
      return a->name < b->name ? -1 : 1;
    case Kind::Func: {
      if (a->fn != b->fn) return a->fn < b->fn ? -1 : 1;
      return compare(a->kids[0], b->kids[0]);
    }
    default: {
      const auto& x = a->kids;
      const auto& y = b->kids;
      const std::size_t m = std::min(x.size(), y.size());
      for (std::size_t i = 0; i < m; ++i)
        if (int c = compare(x[i], y[i]); c != 0) return c;
      if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
      return 0;
    }
  }
}

struct ExprLess {
  bool operator()(Expr a, Expr b) const { return compare(a, b) < 0; }
};

// ---------------------------------------------------------------------------
// Leaf constructors.

inline Expr number(Rational v) {
  ExprNode n;
  n.kind = Kind::Number;
  n.value = std::move(v);
  return detail::ExprPool::instance().intern(std::move(n));
}

inline Expr number(long long v) { return number(Rational(v)); }

inline Expr number(long long num, long long den) { return number(Rational(num, den)); }

inline Expr zero() { return number(0); }
inline Expr one() { return number(1); }

inline Expr symbol(std::string_view name) {
  ExprNode n;
  n.kind = Kind::Symbol;
  n.name = std::string(name);
  return detail::ExprPool::instance().intern(std::move(n));
}

inline Expr pi_constant() {
  ExprNode n;
  n.kind = Kind::Pi;
  return detail::ExprPool::instance().intern(std::move(n));
}

Expr add(std::vector<Expr> ops);
Expr mul(std::vector<Expr> ops);
Expr pow(Expr base, Expr exponent);
Expr apply(Fn f, Expr arg);

inline Expr add(Expr a, Expr b) { return add(std::vector<Expr>{a, b}); }
inline Expr mul(Expr a, Expr b) { return mul(std::vector<Expr>{a, b}); }

// ---------------------------------------------------------------------------
// Conservative positivity analysis. Only ever answers "yes" when positivity
// (resp. nonnegativity) holds at every real point of the expression's domain
// of definition; "no" means unknown. This licenses the value-safe extraction
// of factors from fractional powers in `pow` below.

inline bool provably_positive(Expr e);

inline bool provably_nonneg(Expr e) {
  switch (e.kind()) {
    case Kind::Number: return e->value >= 0;
    case Kind::Pi: return true;
    case Kind::Symbol: return false;
    case Kind::Add: {
      for (Expr k : e->kids)
        if (!provably_nonneg(k)) return false;
      return true;
    }
    case Kind::Mul: {
      for (Expr k : e->kids)
        if (!provably_nonneg(k)) return false;
      return true;
    }
    case Kind::Pow: {
      if (provably_positive(e->kids[0])) return true;
      Expr ex = e->kids[1];
      if (ex.is_number()) {
        // Even integer exponents give b^n >= 0; non-integer exponents are only
        // defined (over the reals) for b >= 0, so the value is nonnegative
        // wherever it exists at all.
        if (is_integer(ex->value)) return numerator(ex->value) % 2 == 0;
        return true;
      }
      return provably_nonneg(e->kids[0]);
    }
    case Kind::Func:
      return e->fn == Fn::Exp || e->fn == Fn::Abs;
  }
  return false;
}

inline bool provably_positive(Expr e) {
  switch (e.kind()) {
    case Kind::Number: return e->value > 0;
    case Kind::Pi: return true;
    case Kind::Symbol: return false;
    case Kind::Add: {
      bool some_positive = false;
      for (Expr k : e->kids) {
        if (provably_positive(k))
          some_positive = true;
        else if (!provably_nonneg(k))
          return false;
      }
      return some_positive;
    }
    case Kind::Mul: {
      for (Expr k : e->kids)
        if (!provably_positive(k)) return false;
      return true;
    }
    case Kind::Pow:
      return provably_positive(e->kids[0]);
    case Kind::Func:
      return e->fn == Fn::Exp;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Canonicalizing constructors.

namespace detail {

inline Expr intern_node(Kind k, std::vector<Expr> kids) {
  ExprNode n;
  n.kind = k;
  n.kids = std::move(kids);
  return ExprPool::instance().intern(std::move(n));
}

inline Expr raw_pow(Expr b, Expr e) { return intern_node(Kind::Pow, {b, e}); }

// Splits a canonical term into (numeric coefficient, remaining factor).
// The remaining factor for a pure Number is 1.
inline std::pair<Rational, Expr> coeff_split(Expr t) {
  if (t.is_number()) return {t->value, one()};
  if (t.kind() == Kind::Mul && t->kids.front().is_number()) {
    const auto& kids = t->kids;
    if (kids.size() == 2) return {kids[0]->value, kids[1]};
    std::vector<Expr> rest(kids.begin() + 1, kids.end());
    return {kids[0]->value, intern_node(Kind::Mul, std::move(rest))};
  }
  return {Rational(1), t};
}

}  // namespace detail

inline Expr add(std::vector<Expr> ops) {
  std::map<Expr, Rational, ExprLess> coeffs;
  std::vector<Expr> work(std::move(ops));
  while (!work.empty()) {
    Expr t = work.back();
    work.pop_back();
    if (t.kind() == Kind::Add) {
      work.insert(work.end(), t->kids.begin(), t->kids.end());
      continue;
    }
    auto [c, core] = detail::coeff_split(t);
    coeffs[core] += c;
  }
  std::vector<Expr> terms;
  terms.reserve(coeffs.size());
  for (const auto& [core, c] : coeffs) {
    if (c == 0) continue;
    if (core.is_one()) {
      terms.push_back(number(c));
    } else if (c == 1) {
      terms.push_back(core);
    } else if (core.kind() == Kind::Mul) {
      std::vector<Expr> kids;
      kids.reserve(core->kids.size() + 1);
      kids.push_back(number(c));
      kids.insert(kids.end(), core->kids.begin(), core->kids.end());
      terms.push_back(detail::intern_node(Kind::Mul, std::move(kids)));
    } else {
      terms.push_back(detail::intern_node(Kind::Mul, {number(c), core}));
    }
  }
  if (terms.empty()) return zero();
  if (terms.size() == 1) return terms.front();
  std::sort(terms.begin(), terms.end(), ExprLess{});
  return detail::intern_node(Kind::Add, std::move(terms));
}

inline Expr mul(std::vector<Expr> ops) {
  Rational coeff(1);
  std::map<Expr, Rational, ExprLess> exps;  // base -> accumulated rational exponent
  std::vector<Expr> work(std::move(ops));
  while (!work.empty()) {
    Expr f = work.back();
    work.pop_back();
    switch (f.kind()) {
      case Kind::Mul:
        work.insert(work.end(), f->kids.begin(), f->kids.end());
        break;
      case Kind::Number:
        coeff *= f->value;
        break;
      case Kind::Pow:
        if (f->kids[1].is_number()) {
          exps[f->kids[0]] += f->kids[1]->value;
          break;
        }
        [[fallthrough]];
      default:
        exps[f] += 1;
        break;
    }
  }
  if (coeff == 0) return zero();

  std::vector<Expr> factors;
  bool changed = false;  // a rebuilt power collapsed into something mergeable
  for (const auto& [base, e] : exps) {
    if (e == 0) continue;
    Expr p = pow(base, number(e));
    if (p.is_number()) {
      coeff *= p->value;
    } else if (p.kind() == Kind::Mul) {
      changed = true;
      factors.push_back(p);
    } else {
      factors.push_back(p);
    }
  }
  if (changed) {
    factors.push_back(number(coeff));
    return mul(std::move(factors));
  }

  if (factors.empty()) return number(coeff);
  if (coeff == 1 && factors.size() == 1) return factors.front();
  // The coefficient stays a standalone factor even next to a sum: folding it
  // into the sum's terms would make the normal form depend on how the product
  // was associated, and products of sums only ever expand inside simplify().
  std::sort(factors.begin(), factors.end(), ExprLess{});
  if (coeff != 1) factors.insert(factors.begin(), number(coeff));
  return detail::intern_node(Kind::Mul, std::move(factors));
}

namespace detail {

// number(b) ^ (p/q) with b > 0 and 0 < p/q < 1: extract the perfect q-th-power
// part of numerator and denominator. Returns the expression in the form
// coeff * rest^(p/q) with rest having no rational q-th root parts.
inline Expr pow_positive_number_fraction(const Rational& b, const Rational& e) {
  const unsigned q = static_cast<unsigned>(denominator(e));
  const long p = numerator(e).convert_to<long>();
  BigInt rest_n, rest_d;
  BigInt root_n = extract_kth_power_part(numerator(b), q, rest_n);
  BigInt root_d = extract_kth_power_part(denominator(b), q, rest_d);
  Rational outside = rational_pow(Rational(root_n, root_d), p);
  Rational rest(rest_n, rest_d);
  if (rest == 1) return number(outside);
  Expr atom = raw_pow(number(rest), number(e));
  if (outside == 1) return atom;
  return intern_node(Kind::Mul, {number(outside), atom});
}

}  // namespace detail

inline Expr pow(Expr base, Expr exponent) {
  if (exponent.is_number()) {
    const Rational& r = exponent->value;
    if (r == 0) return one();  // includes 0^0 -> 1
    if (r == 1) return base;

    if (base.is_number()) {
      const Rational& b = base->value;
      if (is_integer(r)) {
        if (b == 0 && r < 0) return detail::raw_pow(base, exponent);  // defer 1/0
        if (!fits_long(numerator(r))) return detail::raw_pow(base, exponent);
        return number(rational_pow(b, numerator(r).convert_to<long>()));
      }
      if (b == 0) return r > 0 ? zero() : detail::raw_pow(base, exponent);
      if (b < 0) return detail::raw_pow(base, exponent);  // complex; rejected at eval
      if (!fits_long(denominator(r)) || denominator(r) > 64)
        return detail::raw_pow(base, exponent);
      BigInt m = rational_floor(r);
      Rational frac = r - Rational(m);
      Expr frac_part = detail::pow_positive_number_fraction(b, frac);
      if (m == 0) return frac_part;
      Rational int_part = rational_pow(b, m.convert_to<long>());
      return mul(number(int_part), frac_part);
    }

    if (base.kind() == Kind::Pow) {
      // (x^a)^n for integer n is x^(a*n); for fractional outer exponents this
      // needs x > 0.
      if (is_integer(r) || provably_positive(base->kids[0]))
        return pow(base->kids[0], mul(base->kids[1], exponent));
      return detail::raw_pow(base, exponent);
    }

    if (base.kind() == Kind::Mul) {
      if (is_integer(r)) {
        std::vector<Expr> parts;
        parts.reserve(base->kids.size());
        for (Expr k : base->kids) parts.push_back(pow(k, exponent));
        return mul(std::move(parts));
      }
      // Fractional power of a product: pull out provably positive factors.
      // (a*X)^r = a^r * X^r is only used with a > 0, which is value-safe.
      std::vector<Expr> outside, inside;
      for (Expr k : base->kids) {
        if (k.is_number()) {
          if (k->value > 0)
            outside.push_back(pow(k, exponent));
          else
            inside.push_back(k);
        } else if (k.kind() == Kind::Pow && provably_positive(k->kids[0])) {
          outside.push_back(pow(k->kids[0], mul(k->kids[1], exponent)));
        } else if (provably_positive(k)) {
          outside.push_back(pow(k, exponent));
        } else {
          inside.push_back(k);
        }
      }
      if (outside.empty()) return detail::raw_pow(base, exponent);
      if (!inside.empty()) outside.push_back(detail::raw_pow(mul(std::move(inside)), exponent));
      return mul(std::move(outside));
    }

    return detail::raw_pow(base, exponent);
  }

  // Symbolic exponent.
  if (base.is_one()) return one();
  if (base.kind() == Kind::Pow && provably_positive(base->kids[0]))
    return pow(base->kids[0], mul(base->kids[1], exponent));
  return detail::raw_pow(base, exponent);
}

inline Expr apply(Fn f, Expr arg) {
  switch (f) {
    case Fn::Sin:
    case Fn::Tan:
      if (arg.is_zero()) return zero();
      break;
    case Fn::Cos:
      if (arg.is_zero()) return one();
      break;
    case Fn::Exp:
      if (arg.is_zero()) return one();
      break;
    case Fn::Log:
      if (arg.is_one()) return zero();
      break;
    case Fn::Abs: {
      if (arg.is_number()) return number(abs(arg->value));
      if (provably_nonneg(arg)) return arg;
      if (arg.kind() == Kind::Func && arg->fn == Fn::Abs) return arg;
      if (arg.kind() == Kind::Mul) {  // |x*y| = |x|*|y|
        std::vector<Expr> parts;
        parts.reserve(arg->kids.size());
        for (Expr k : arg->kids) parts.push_back(apply(Fn::Abs, k));
        return mul(std::move(parts));
      }
      if (arg.kind() == Kind::Pow && arg->kids[1].is_number() &&
          is_integer(arg->kids[1]->value))
        return pow(apply(Fn::Abs, arg->kids[0]), arg->kids[1]);  // |b^n| = |b|^n
      break;
    }
    case Fn::Sign: {
      if (arg.is_number()) return number(arg->value == 0 ? 0 : (arg->value > 0 ? 1 : -1));
      if (provably_positive(arg)) return one();
      if (arg.kind() == Kind::Mul) {  // sign(x*y) = sign(x)*sign(y)
        std::vector<Expr> parts;
        parts.reserve(arg->kids.size());
        for (Expr k : arg->kids) parts.push_back(apply(Fn::Sign, k));
        return mul(std::move(parts));
      }
      if (arg.kind() == Kind::Pow && arg->kids[1].is_number() &&
          is_integer(arg->kids[1]->value) && numerator(arg->kids[1]->value) % 2 != 0)
        return apply(Fn::Sign, arg->kids[0]);  // sign(b^odd) = sign(b)
      break;
    }
  }
  ExprNode n;
  n.kind = Kind::Func;
  n.fn = f;
  n.kids = {arg};
  return detail::ExprPool::instance().intern(std::move(n));
}

// ---------------------------------------------------------------------------
// Derived constructors and operators.

inline Expr neg(Expr e) { return mul(number(-1), e); }
inline Expr sub(Expr a, Expr b) { return add(a, neg(b)); }
inline Expr div(Expr a, Expr b) { return mul(a, pow(b, number(-1))); }
inline Expr inverse(Expr e) { return pow(e, number(-1)); }
inline Expr sqrt(Expr e) { return pow(e, number(1, 2)); }

inline Expr sin(Expr e) { return apply(Fn::Sin, e); }
inline Expr cos(Expr e) { return apply(Fn::Cos, e); }
inline Expr tan(Expr e) { return apply(Fn::Tan, e); }
inline Expr exp(Expr e) { return apply(Fn::Exp, e); }
inline Expr log(Expr e) { return apply(Fn::Log, e); }
inline Expr abs(Expr e) { return apply(Fn::Abs, e); }
inline Expr sign(Expr e) { return apply(Fn::Sign, e); }

inline Expr operator+(Expr a, Expr b) { return add(a, b); }
inline Expr operator-(Expr a, Expr b) { return sub(a, b); }
inline Expr operator*(Expr a, Expr b) { return mul(a, b); }
inline Expr operator/(Expr a, Expr b) { return div(a, b); }
inline Expr operator-(Expr a) { return neg(a); }

inline Expr operator+(Expr a, long long b) { return add(a, number(b)); }
inline Expr operator+(long long a, Expr b) { return add(number(a), b); }
inline Expr operator-(Expr a, long long b) { return sub(a, number(b)); }
inline Expr operator-(long long a, Expr b) { return sub(number(a), b); }
inline Expr operator*(Expr a, long long b) { return mul(a, number(b)); }
inline Expr operator*(long long a, Expr b) { return mul(number(a), b); }
inline Expr operator/(Expr a, long long b) { return div(a, number(b)); }
inline Expr operator/(long long a, Expr b) { return div(number(a), b); }

// ---------------------------------------------------------------------------
// Printing. The output re-parses to the same interned node (round trip).

namespace detail {

void print_expr(std::ostream& os, Expr e);

inline bool factor_needs_parens(Expr e) {
  // Within a '*' / '/' chain: sums need parens; canonical factors are never
  // Mul or plain Number, but guard anyway for raw prints.
  return e.kind() == Kind::Add || e.kind() == Kind::Mul ||
         (e.is_number() && (e->value < 0 || !is_integer(e->value)));
}

inline void print_factor(std::ostream& os, Expr e) {
  if (factor_needs_parens(e)) {
    os << '(';
    print_expr(os, e);
    os << ')';
  } else {
    print_expr(os, e);
  }
}

inline bool base_needs_parens(Expr e) {
  switch (e.kind()) {
    case Kind::Add:
    case Kind::Mul:
    case Kind::Pow:
      return true;
    case Kind::Number:
      return e->value < 0 || !is_integer(e->value);
    default:
      return false;
  }
}

inline void print_pow(std::ostream& os, Expr base, const Rational& e) {
  // Positive exponent only; sign handled by the caller.
  if (e == Rational(1, 2)) {
    os << "sqrt(";
    print_expr(os, base);
    os << ')';
    return;
  }
  if (base_needs_parens(base)) {
    os << '(';
    print_expr(os, base);
    os << ')';
  } else {
    print_expr(os, base);
  }
  if (e == 1) return;
  os << '^';
  if (is_integer(e) && e > 0)
    os << e;
  else
    os << '(' << e << ')';
}

// Prints a canonical Mul (or a single factor) as numerator/denominator parts.
// strip_sign: print |coefficient| and report the sign to the caller.
inline bool print_product(std::ostream& os, Expr e, bool strip_sign) {
  Rational coeff(1);
  std::vector<std::pair<Expr, Rational>> num_parts, den_parts;  // base, positive exp
  auto classify = [&](Expr f) {
    if (f.is_number()) {
      coeff *= f->value;
    } else if (f.kind() == Kind::Pow && f->kids[1].is_number() && f->kids[1]->value < 0) {
      if (f->kids[0].is_zero() && f->kids[1]->value != Rational(-1)) {
        num_parts.emplace_back(f, Rational(1));  // /0^k reads back as /0
      } else {
        den_parts.emplace_back(f->kids[0], -f->kids[1]->value);
      }
    } else if (f.kind() == Kind::Pow && f->kids[1].is_number()) {
      num_parts.emplace_back(f->kids[0], f->kids[1]->value);
    } else {
      num_parts.emplace_back(f, Rational(1));
    }
  };
  if (e.kind() == Kind::Mul)
    for (Expr k : e->kids) classify(k);
  else
    classify(e);

  bool negative = coeff < 0;
  if (negative) coeff = -coeff;
  if (!strip_sign && negative) os << '-';

  const BigInt cn = numerator(coeff), cd = denominator(coeff);
  bool first = true;
  auto sep = [&]() {
    if (!first) os << '*';
    first = false;
  };
  if (cn != 1 || num_parts.empty()) {
    sep();
    os << cn;
  }
  for (const auto& [b, ex] : num_parts) {
    sep();
    if (ex == 1)
      print_factor(os, b);
    else
      print_pow(os, b, ex);
  }
  std::size_t den_count = den_parts.size() + (cd != 1 ? 1 : 0);
  if (den_count == 0) return negative;
  // A grouped denominator like /(0*(pi + x)) would fold to /0 when read back,
  // so a literal-zero base forces one '/' per factor instead of one group.
  bool zero_base = std::any_of(den_parts.begin(), den_parts.end(),
                               [](const auto& p) { return p.first.is_zero(); });
  if (zero_base) {
    if (cd != 1) os << '/' << cd;
    for (const auto& [b, ex] : den_parts) {
      os << '/';
      if (ex == 1)
        print_factor(os, b);
      else
        print_pow(os, b, ex);
    }
    return negative;
  }
  os << '/';
  if (den_count > 1) os << '(';
  first = true;
  if (cd != 1) {
    sep();
    os << cd;
  }
  for (const auto& [b, ex] : den_parts) {
    sep();
    if (ex == 1)
      print_factor(os, b);
    else
      print_pow(os, b, ex);
  }
  if (den_count > 1) os << ')';
  return negative;
}

inline void print_expr(std::ostream& os, Expr e) {
  switch (e.kind()) {
    case Kind::Number: {
      os << e->value;
      return;
    }
    case Kind::Pi:
      os << "pi";
      return;
    case Kind::Symbol:
      os << e->name;
      return;
    case Kind::Func:
      os << fn_name(e->fn) << '(';
      print_expr(os, e->kids[0]);
      os << ')';
      return;
    case Kind::Pow: {
      Expr b = e->kids[0], x = e->kids[1];
      if (x.is_number()) {
        if (x->value < 0) {
          if (b.is_zero() && x->value != Rational(-1)) {
            // 1/0^k reads back as 1/0; keep the exponent on the base instead.
            os << "0^(" << x->value << ')';
            return;
          }
          os << "1/";
          if (x->value == Rational(-1, 2)) {
            os << "sqrt(";
            print_expr(os, b);
            os << ')';
          } else {
            print_pow(os, b, -x->value);
          }
          return;
        }
        print_pow(os, b, x->value);
        return;
      }
      if (base_needs_parens(b)) {
        os << '(';
        print_expr(os, b);
        os << ')';
      } else {
        print_expr(os, b);
      }
      os << '^';
      if (x.kind() == Kind::Symbol || x.kind() == Kind::Pi || x.kind() == Kind::Func) {
        print_expr(os, x);
      } else {
        os << '(';
        print_expr(os, x);
        os << ')';
      }
      return;
    }
    case Kind::Mul:
      print_product(os, e, /*strip_sign=*/false);
      return;
    case Kind::Add: {
      bool first = true;
      for (Expr t : e->kids) {
        if (first) {
          print_product(os, t, false) /* sign already printed */;
          first = false;
          continue;
        }
        std::ostringstream piece;
        bool negative = print_product(piece, t, /*strip_sign=*/true);
        os << (negative ? " - " : " + ") << piece.str();
      }
      return;
    }
  }
}

}  // namespace detail

inline std::string to_string(Expr e) {
  std::ostringstream os;
  detail::print_expr(os, e);
  return os.str();
}

inline std::ostream& operator<<(std::ostream& os, Expr e) {
  detail::print_expr(os, e);
  return os;
}

// ---------------------------------------------------------------------------
// Free symbols (memoized across the process; expressions are interned).

inline const std::set<std::string>& free_symbols(Expr e) {
  static std::unordered_map<const ExprNode*, std::set<std::string>> cache;
  static std::mutex mu;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(e.get());
    if (it != cache.end()) return it->second;
  }
  std::set<std::string> out;
  if (e.kind() == Kind::Symbol) {
    out.insert(e->name);
  } else {
    for (Expr k : e->kids) {
      const auto& sub = free_symbols(k);
      out.insert(sub.begin(), sub.end());
    }
  }
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(e.get(), std::move(out)).first->second;
}

inline bool depends_on(Expr e, const std::string& name) {
  return free_symbols(e).count(name) > 0;
}

}  // namespace confcurv
