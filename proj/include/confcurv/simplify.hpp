#pragma once

// Rational-function normalization.
//
// simplify() rewrites an expression as
//
//     (expanded Laurent polynomial) / (product of irreducible-as-given factors)
//
// over a set of multiplicative atoms ("units"): symbols, pi, function
// applications, powers with symbolic exponents, and fractional powers
// base^(1/q) of non-numeric bases. Monomials carry integer (possibly negative)
// unit exponents, so x/x-style cancellation is automatic; denominator factors
// are kept factored and cancelled against the numerator by exact multivariate
// division. Fractional powers of one base combine exactly
// (H^(1/2) * H^(-1/2) -> 1), which is what keeps mixed-root curvature
// expressions from swelling.
//
// Everything is exact (rational coefficients). A term-count budget guards the
// expansion; if exceeded, simplify() returns its input unchanged (the input is
// already canonical by construction, just not normalized).

#include <confcurv/calculus.hpp>
#include <confcurv/expr.hpp>

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace confcurv {

inline Expr simplify(Expr e);

namespace detail {

constexpr std::size_t kMaxPolyTerms = 100000;
constexpr int kMaxNormDepth = 128;

struct BudgetExceeded {};

// --- Monomials --------------------------------------------------------------

using UnitExp = std::pair<Expr, long>;  // unit, nonzero integer exponent

struct Monomial {
  std::vector<UnitExp> units;  // sorted by structural order of the unit

  bool operator==(const Monomial& o) const { return units == o.units; }
  long total_degree() const {
    long d = 0;
    for (const auto& [u, e] : units) d += e;
    return d;
  }
};

inline int mono_compare(const Monomial& a, const Monomial& b) {
  // Graded order first, then lexicographic on the sparse exponent vectors.
  long da = a.total_degree(), db = b.total_degree();
  if (da != db) return da < db ? -1 : 1;
  std::size_t i = 0, j = 0;
  while (i < a.units.size() && j < b.units.size()) {
    int c = compare(a.units[i].first, b.units[j].first);
    long ea, eb;
    if (c == 0) {
      ea = a.units[i].second;
      eb = b.units[j].second;
      ++i, ++j;
    } else if (c < 0) {
      ea = a.units[i].second;
      eb = 0;
      ++i;
    } else {
      ea = 0;
      eb = b.units[j].second;
      ++j;
    }
    if (ea != eb) return ea > eb ? 1 : -1;
  }
  while (i < a.units.size()) {
    if (a.units[i].second != 0) return a.units[i].second > 0 ? 1 : -1;
    ++i;
  }
  while (j < b.units.size()) {
    if (b.units[j].second != 0) return b.units[j].second > 0 ? -1 : 1;
    ++j;
  }
  return 0;
}

struct MonoLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    return mono_compare(a, b) < 0;
  }
};

inline bool is_fractional_power_unit(Expr u) {
  return u.kind() == Kind::Pow && u->kids[1].is_number() &&
         !is_integer(u->kids[1]->value);
}

// Accumulates a product of powers into canonical monomial form: a rational
// coefficient, unit exponents, and leftover expressions ("extras") that need
// full rational-form multiplication (integer powers of sums/products produced
// when fractional exponents combine to whole numbers).
struct MonoBuilder {
  Rational coeff{1};
  std::map<Expr, long, ExprLess> units;
  std::vector<Expr> extras;

  void add_unit(Expr u, long k) {
    if (k == 0) return;
    if (is_fractional_power_unit(u)) {
      add_power(u->kids[0], u->kids[1]->value * k);
      return;
    }
    long& e = units[u];
    e += k;
    if (e == 0) units.erase(u);
  }

  // Multiplies in base^f for rational f.
  void add_power(Expr base, const Rational& f) {
    if (f == 0) return;
    if (is_integer(f)) {
      long m = numerator(f).convert_to<long>();
      switch (base.kind()) {
        case Kind::Number:
          coeff *= rational_pow(base->value, m);
          return;
        case Kind::Add:
        case Kind::Mul:
          extras.push_back(pow(base, number(f)));
          return;
        case Kind::Pow:
          if (base->kids[1].is_number() && !is_integer(base->kids[1]->value)) {
            add_power(base->kids[0], base->kids[1]->value * m);
            return;
          }
          [[fallthrough]];
        default:
          add_unit(base, m);
          return;
      }
    }
    // Fold through fractional-power bases: (x^(a/b))^f = x^(a*f/b) is
    // value-safe because the inner power is only defined for x >= 0.
    if (base.kind() == Kind::Pow && base->kids[1].is_number() &&
        !is_integer(base->kids[1]->value)) {
      add_power(base->kids[0], base->kids[1]->value * f);
      return;
    }
    BigInt m = rational_floor(f);
    Rational frac = f - Rational(m);  // in (0, 1)
    if (m != 0) add_power(base, Rational(m));
    const BigInt q = denominator(frac);
    const BigInt p = numerator(frac);
    if (!fits_long(p) || !fits_long(q)) {
      extras.push_back(pow(base, number(frac)));
      return;
    }
    Expr u = pow(base, number(Rational(1, q)));
    if (u.kind() == Kind::Pow && u->kids[0] == base && u->kids[1].is_number() &&
        u->kids[1]->value == Rational(1, q)) {
      const long ql = q.convert_to<long>();
      long& e = units[u];
      e += p.convert_to<long>();
      // Keep root exponents inside (0, q): whole powers of the base peel off
      // right where exponents merge, so no monomial ever hides a collapsed
      // root.
      if (e >= ql) {
        long whole = e / ql;
        e -= whole * ql;
        extras.push_back(pow(base, number(whole)));
      }
      if (e == 0) units.erase(u);
    } else {
      // The constructor transformed the root (numeric/positive-factor
      // extraction); route the result through the generic path.
      extras.push_back(pow(u, number(p)));
    }
  }

  Monomial finish() const {
    Monomial m;
    m.units.assign(units.begin(), units.end());
    return m;
  }
};

// --- Polynomials ------------------------------------------------------------

struct Term {
  Rational coeff;
  Monomial mono;
  bool operator==(const Term& o) const { return coeff == o.coeff && mono == o.mono; }
};

struct Poly {
  std::vector<Term> terms;  // sorted descending by mono_compare, nonzero coeffs

  bool operator==(const Poly& o) const { return terms == o.terms; }
  bool is_zero() const { return terms.empty(); }
  bool is_constant() const {
    return terms.empty() || (terms.size() == 1 && terms[0].mono.units.empty());
  }
  bool is_monomial() const { return terms.size() == 1; }
};

inline int poly_compare(const Poly& a, const Poly& b) {
  if (a.terms.size() != b.terms.size()) return a.terms.size() < b.terms.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    if (int c = mono_compare(a.terms[i].mono, b.terms[i].mono); c != 0) return c;
    if (a.terms[i].coeff != b.terms[i].coeff)
      return a.terms[i].coeff < b.terms[i].coeff ? -1 : 1;
  }
  return 0;
}

inline Poly poly_from_map(std::map<Monomial, Rational, MonoLess>&& acc) {
  Poly p;
  p.terms.reserve(acc.size());
  for (auto it = acc.rbegin(); it != acc.rend(); ++it)  // descending order
    if (it->second != 0) p.terms.push_back(Term{it->second, it->first});
  return p;
}

inline Poly poly_constant(const Rational& c) {
  Poly p;
  if (c != 0) p.terms.push_back(Term{c, Monomial{}});
  return p;
}

inline Poly poly_unit(Expr u) {
  Poly p;
  p.terms.push_back(Term{Rational(1), Monomial{{{u, 1}}}});
  return p;
}

inline Poly poly_add(const Poly& a, const Poly& b) {
  std::map<Monomial, Rational, MonoLess> acc;
  for (const auto& t : a.terms) acc[t.mono] += t.coeff;
  for (const auto& t : b.terms) acc[t.mono] += t.coeff;
  return poly_from_map(std::move(acc));
}

inline Poly poly_scale(const Poly& a, const Rational& c) {
  Poly p;
  if (c == 0) return p;
  p.terms.reserve(a.terms.size());
  for (const auto& t : a.terms) p.terms.push_back(Term{t.coeff * c, t.mono});
  return p;
}

inline bool poly_has_fractional_units(const Poly& p) {
  for (const auto& t : p.terms)
    for (const auto& [u, e] : t.mono.units)
      if (is_fractional_power_unit(u)) return true;
  return false;
}

// Product of two terms. Fills `extras` with expressions that must be folded in
// via full rational-form multiplication (rare: roots combining to whole
// powers of sums).
inline Term term_mul(const Term& a, const Term& b, std::vector<Expr>& extras) {
  MonoBuilder mb;
  mb.coeff = a.coeff * b.coeff;
  for (const auto& [u, e] : a.mono.units) mb.add_unit(u, e);
  for (const auto& [u, e] : b.mono.units) mb.add_unit(u, e);
  extras.insert(extras.end(), mb.extras.begin(), mb.extras.end());
  return Term{mb.coeff, mb.finish()};
}

// Strict product: fails (returns nullopt) if any term pair needs rational-form
// recursion. Succeeds always on fraction-free polynomials.
inline std::optional<Poly> poly_mul_raw(const Poly& a, const Poly& b) {
  if (a.terms.size() * b.terms.size() > kMaxPolyTerms) throw BudgetExceeded{};
  std::map<Monomial, Rational, MonoLess> acc;
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) {
      std::vector<Expr> extras;
      Term t = term_mul(ta, tb, extras);
      if (!extras.empty()) return std::nullopt;
      acc[t.mono] += t.coeff;
      if (acc.size() > kMaxPolyTerms) throw BudgetExceeded{};
    }
  return poly_from_map(std::move(acc));
}

inline Poly poly_pow_raw(const Poly& p, int n) {
  Poly r = poly_constant(Rational(1));
  for (int i = 0; i < n; ++i) {
    auto q = poly_mul_raw(r, p);
    if (!q) throw BudgetExceeded{};  // only reachable with fractional units
    r = std::move(*q);
  }
  return r;
}

// --- Exact division ---------------------------------------------------------

inline bool mono_divides(const Monomial& d, const Monomial& m) {
  std::size_t i = 0;
  for (const auto& [u, e] : d.units) {
    while (i < m.units.size() && compare(m.units[i].first, u) < 0) ++i;
    if (i == m.units.size() || m.units[i].first != u || m.units[i].second < e) return false;
  }
  return true;
}

inline Monomial mono_quotient(const Monomial& m, const Monomial& d) {
  std::map<Expr, long, ExprLess> acc;
  for (const auto& [u, e] : m.units) acc[u] += e;
  for (const auto& [u, e] : d.units) {
    acc[u] -= e;
    if (acc[u] == 0) acc.erase(u);
  }
  Monomial r;
  r.units.assign(acc.begin(), acc.end());
  return r;
}

// Extracts the monomial content (componentwise minimum exponents, including
// the implicit zero for absent units) so that every exponent becomes >= 0 and
// at least one term touches zero in every unit.
inline Monomial mono_content(const Poly& p) {
  std::map<Expr, long, ExprLess> mins;
  std::map<Expr, long, ExprLess> seen_count;
  for (const auto& t : p.terms)
    for (const auto& [u, e] : t.mono.units) seen_count[u] += 1;
  for (const auto& t : p.terms) {
    for (const auto& [u, e] : t.mono.units) {
      auto it = mins.find(u);
      if (it == mins.end())
        mins.emplace(u, e);
      else
        it->second = std::min(it->second, e);
    }
  }
  // A unit absent from some term has implicit exponent 0 there.
  for (auto& [u, e] : mins)
    if (seen_count[u] < static_cast<long>(p.terms.size())) e = std::min(e, 0L);
  Monomial m;
  for (const auto& [u, e] : mins)
    if (e != 0) m.units.push_back({u, e});
  return m;
}

inline Poly poly_divide_mono(const Poly& p, const Monomial& d, const Rational& c) {
  Poly r;
  r.terms.reserve(p.terms.size());
  for (const auto& t : p.terms)
    r.terms.push_back(Term{t.coeff / c, mono_quotient(t.mono, d)});
  return r;
}

// Rational content: c with p/c having coprime integer coefficients and a
// positive leading coefficient.
inline Rational poly_rational_content(const Poly& p) {
  if (p.terms.empty()) return Rational(1);
  BigInt g = 0, l = 1;
  for (const auto& t : p.terms) {
    g = gcd(g, abs(numerator(t.coeff)));
    l = lcm(l, denominator(t.coeff));
  }
  Rational c(g, l);
  if (p.terms.front().coeff < 0) c = -c;
  return c == 0 ? Rational(1) : c;
}

// Exact multivariate division of Laurent polynomials; nullopt if not exact.
// The divisor must be free of fractional-power units (the dividend need not).
inline std::optional<Poly> poly_divide_exact(const Poly& a, const Poly& b) {
  if (b.is_zero()) return std::nullopt;
  if (a.is_zero()) return a;
  if (poly_has_fractional_units(b)) return std::nullopt;

  Monomial ca = mono_content(a), cb = mono_content(b);
  Poly A = poly_divide_mono(a, ca, Rational(1));
  Poly B = poly_divide_mono(b, cb, Rational(1));
  // Quotient carries ca/cb as a monomial factor.
  Monomial shift = mono_quotient(ca, cb);

  std::map<Monomial, Rational, MonoLess> quot;
  std::size_t steps = 0;
  while (!A.is_zero()) {
    if (++steps > kMaxPolyTerms) throw BudgetExceeded{};
    const Term& la = A.terms.front();
    const Term& lb = B.terms.front();
    if (!mono_divides(lb.mono, la.mono)) return std::nullopt;
    Rational qc = la.coeff / lb.coeff;
    Monomial qm = mono_quotient(la.mono, lb.mono);
    quot[qm] += qc;
    // A -= q * B
    std::map<Monomial, Rational, MonoLess> acc;
    for (const auto& t : A.terms) acc[t.mono] += t.coeff;
    std::vector<Expr> extras;
    for (const auto& t : B.terms) {
      Term prod = term_mul(Term{qc, qm}, t, extras);
      if (!extras.empty()) return std::nullopt;  // roots collided; bail out
      acc[prod.mono] -= prod.coeff;
    }
    A = poly_from_map(std::move(acc));
  }
  Poly q = poly_from_map(std::move(quot));
  std::vector<Expr> extras;
  // Apply the content shift (pure monomial: no reductions possible on the
  // divisor side, but the dividend may carry fractional units into qm).
  std::map<Monomial, Rational, MonoLess> acc;
  for (const auto& t : q.terms) {
    Term prod = term_mul(t, Term{Rational(1), shift}, extras);
    if (!extras.empty()) return std::nullopt;
    acc[prod.mono] += prod.coeff;
  }
  return poly_from_map(std::move(acc));
}

// --- Rational forms ---------------------------------------------------------

struct RatForm {
  Poly num;
  std::vector<std::pair<Poly, int>> dens;  // normalized factor -> positive power
};

RatForm ratnorm(Expr e, int depth);

inline RatForm rf_constant(const Rational& c) { return RatForm{poly_constant(c), {}}; }

inline RatForm rf_from_poly(Poly p) { return RatForm{std::move(p), {}}; }

RatForm rf_mul(const RatForm& a, const RatForm& b, int depth);
RatForm rf_add(const RatForm& a, const RatForm& b, int depth);
void rf_push_den(RatForm& rf, const Poly& P, int k, int depth);

// Multiplies `rf`'s numerator by a bare monomial term. Any per-term root
// collapse (the term's roots meeting a term's own) is folded back through the
// full machinery for that term alone.
inline void rf_scale_term(RatForm& rf, const Term& t, int depth) {
  std::map<Monomial, Rational, MonoLess> acc;
  std::vector<RatForm> pending;
  for (const auto& tt : rf.num.terms) {
    std::vector<Expr> extras;
    Term prod = term_mul(tt, t, extras);
    if (extras.empty()) {
      acc[prod.mono] += prod.coeff;
    } else {
      RatForm part{Poly{{prod}}, {}};
      for (Expr x : extras) part = rf_mul(part, ratnorm(x, depth + 1), depth + 1);
      pending.push_back(std::move(part));
    }
  }
  if (pending.empty()) {
    rf.num = poly_from_map(std::move(acc));
    return;
  }
  RatForm sum{poly_from_map(std::move(acc)), {}};
  for (auto& part : pending) sum = rf_add(sum, part, depth + 1);
  rf.num = std::move(sum.num);
  for (const auto& [f, k] : sum.dens) rf_push_den(rf, f, k, depth + 1);
}

// Normalizes P and multiplies it into the denominator of rf with exponent k;
// the extracted contents go into the numerator. Single-term factors are
// absorbed entirely.
inline void rf_push_den(RatForm& rf, const Poly& P, int k, int depth) {
  if (k == 0 || P.is_zero()) return;  // zero denominators are caught upstream
  if (depth > kMaxNormDepth) throw BudgetExceeded{};
  Monomial mc = mono_content(P);
  Poly prim = poly_divide_mono(P, mc, Rational(1));
  Rational rc = poly_rational_content(prim);
  prim = poly_scale(prim, Rational(1) / rc);

  // num /= (rc * mc)^k  -- a pure monomial multiply; whole-power leftovers
  // from the content's roots apply to the form as a whole.
  MonoBuilder mb;
  mb.coeff = rational_pow(rc, -k);
  for (const auto& [u, e] : mc.units) mb.add_unit(u, -static_cast<long>(k) * e);
  rf_scale_term(rf, Term{mb.coeff, mb.finish()}, depth);
  for (Expr x : mb.extras) rf = rf_mul(rf, ratnorm(x, depth + 1), depth + 1);

  if (prim.is_constant()) return;  // fully absorbed (prim == 1 by construction)
  for (auto& [f, e] : rf.dens)
    if (f == prim) {
      e += k;
      return;
    }
  rf.dens.push_back({prim, k});
  std::sort(rf.dens.begin(), rf.dens.end(),
            [](const auto& x, const auto& y) { return poly_compare(x.first, y.first) < 0; });
}

inline void rf_reduce(RatForm& rf) {
  if (rf.num.is_zero()) {
    rf.dens.clear();
    return;
  }
  for (auto& [f, k] : rf.dens) {
    while (k > 0) {
      auto q = poly_divide_exact(rf.num, f);
      if (!q) break;
      rf.num = std::move(*q);
      --k;
    }
  }
  std::erase_if(rf.dens, [](const auto& fk) { return fk.second == 0; });
}

RatForm rf_add(const RatForm& a, const RatForm& b, int depth);

// General product; handles term pairs whose roots collapse by recursing
// through ratnorm on the leftover integer powers.
inline RatForm rf_mul(const RatForm& a, const RatForm& b, int depth) {
  if (depth > kMaxNormDepth) throw BudgetExceeded{};
  if (a.num.terms.size() * b.num.terms.size() > kMaxPolyTerms) throw BudgetExceeded{};

  RatForm out;
  std::map<Monomial, Rational, MonoLess> acc;
  std::vector<RatForm> pending;
  for (const auto& ta : a.num.terms)
    for (const auto& tb : b.num.terms) {
      std::vector<Expr> extras;
      Term t = term_mul(ta, tb, extras);
      if (extras.empty()) {
        acc[t.mono] += t.coeff;
        if (acc.size() > kMaxPolyTerms) throw BudgetExceeded{};
      } else {
        // Roots collided (e.g. sqrt(H)*sqrt(H)); fold the leftover whole
        // powers in through the full machinery.
        RatForm part{Poly{{t}}, {}};
        for (Expr x : extras) part = rf_mul(part, ratnorm(x, depth + 1), depth + 1);
        pending.push_back(std::move(part));
      }
    }
  out.num = poly_from_map(std::move(acc));
  for (auto& part : pending) out = rf_add(out, part, depth + 1);

  // Attach both source denominators (they apply to the whole product).
  for (const auto& [f, k] : a.dens) rf_push_den(out, f, k, depth);
  for (const auto& [f, k] : b.dens) rf_push_den(out, f, k, depth);

  rf_reduce(out);
  return out;
}

inline RatForm rf_add(const RatForm& a, const RatForm& b, int depth) {
  if (depth > kMaxNormDepth) throw BudgetExceeded{};
  // Union denominator.
  std::vector<std::pair<Poly, int>> united = a.dens;
  for (const auto& [f, k] : b.dens) {
    bool found = false;
    for (auto& [g, m] : united)
      if (g == f) {
        m = std::max(m, k);
        found = true;
        break;
      }
    if (!found) united.push_back({f, k});
  }
  auto exponent_of = [](const std::vector<std::pair<Poly, int>>& dens, const Poly& f) {
    for (const auto& [g, m] : dens)
      if (g == f) return m;
    return 0;
  };
  auto lift = [&](const RatForm& r) {
    Poly n = r.num;
    for (const auto& [f, k] : united) {
      int need = k - exponent_of(r.dens, f);
      if (need > 0) {
        auto prod = poly_mul_raw(n, poly_pow_raw(f, need));
        if (!prod) throw BudgetExceeded{};  // root-bearing denominator factor
        n = std::move(*prod);
      }
    }
    return n;
  };
  RatForm out;
  out.num = poly_add(lift(a), lift(b));
  out.dens = std::move(united);
  rf_reduce(out);
  return out;
}

// Reciprocal: numerator and denominator trade places (the denominator product
// is expanded; the numerator becomes a factor, absorbed inline if monomial).
inline RatForm rf_inv(const RatForm& a, int depth) {
  if (a.num.is_zero()) throw BudgetExceeded{};  // 1/0: bail, keep input form
  RatForm out = rf_constant(Rational(1));
  for (const auto& [f, k] : a.dens) {
    auto prod = poly_mul_raw(out.num, poly_pow_raw(f, k));
    if (!prod) throw BudgetExceeded{};
    out.num = std::move(*prod);
  }
  if (a.num.is_monomial()) {
    const Term& t = a.num.terms.front();
    MonoBuilder mb;
    mb.coeff = Rational(1) / t.coeff;
    for (const auto& [u, e] : t.mono.units) mb.add_unit(u, -e);
    rf_scale_term(out, Term{mb.coeff, mb.finish()}, depth);
    for (Expr x : mb.extras) out = rf_mul(out, ratnorm(x, depth + 1), depth + 1);
  } else {
    rf_push_den(out, a.num, 1, depth);
  }
  rf_reduce(out);
  return out;
}

// Inversion happens before raising so that denominator factors stay factored:
// a^(-2) keeps den = {a: 2} instead of one expanded square.
inline RatForm rf_pow_int(const RatForm& a, long n, int depth) {
  if (n == 0) return rf_constant(Rational(1));
  if (n < 0) return rf_pow_int(rf_inv(a, depth), -n, depth);
  RatForm r = rf_constant(Rational(1));
  for (long i = 0; i < n; ++i) r = rf_mul(r, a, depth + 1);
  return r;
}

// --- Expression <-> rational form -------------------------------------------

inline Expr mono_to_expr(const Rational& coeff, const Monomial& m) {
  std::vector<Expr> factors;
  factors.reserve(m.units.size() + 1);
  if (coeff != 1 || m.units.empty()) factors.push_back(number(coeff));
  for (const auto& [u, e] : m.units) factors.push_back(pow(u, number(e)));
  return mul(std::move(factors));
}

inline Expr poly_to_expr(const Poly& p) {
  std::vector<Expr> terms;
  terms.reserve(p.terms.size());
  for (const auto& t : p.terms) terms.push_back(mono_to_expr(t.coeff, t.mono));
  return add(std::move(terms));
}

inline Expr rf_to_expr(const RatForm& rf) {
  std::vector<Expr> factors;
  factors.push_back(poly_to_expr(rf.num));
  for (const auto& [f, k] : rf.dens) factors.push_back(pow(poly_to_expr(f), number(-k)));
  return mul(std::move(factors));
}

inline RatForm ratnorm(Expr e, int depth) {
  if (depth > kMaxNormDepth) throw BudgetExceeded{};
  switch (e.kind()) {
    case Kind::Number:
      return rf_constant(e->value);
    case Kind::Pi:
    case Kind::Symbol:
      return rf_from_poly(poly_unit(e));
    case Kind::Func: {
      Expr arg = simplify(e->kids[0]);
      Expr u = apply(e->fn, arg);
      if (u.kind() != Kind::Func || u->kids[0] != arg) return ratnorm(u, depth + 1);
      return rf_from_poly(poly_unit(u));
    }
    case Kind::Add: {
      RatForm r = rf_constant(Rational(0));
      for (Expr k : e->kids) r = rf_add(r, ratnorm(k, depth + 1), depth + 1);
      return r;
    }
    case Kind::Mul: {
      RatForm r = rf_constant(Rational(1));
      for (Expr k : e->kids) r = rf_mul(r, ratnorm(k, depth + 1), depth + 1);
      return r;
    }
    case Kind::Pow: {
      Expr b = e->kids[0], x = e->kids[1];
      if (x.is_number()) {
        const Rational& r = x->value;
        if (is_integer(r)) {
          if (!fits_long(numerator(r))) throw BudgetExceeded{};
          return rf_pow_int(ratnorm(b, depth + 1), numerator(r).convert_to<long>(),
                            depth);
        }
        Expr bs = simplify(b);
        MonoBuilder mb;
        mb.add_power(bs, r);
        RatForm out = rf_from_poly(Poly{{Term{mb.coeff, mb.finish()}}});
        for (Expr ex : mb.extras) out = rf_mul(out, ratnorm(ex, depth + 1), depth + 1);
        rf_reduce(out);
        return out;
      }
      Expr u = pow(simplify(b), simplify(x));
      if (u.kind() != Kind::Pow || u->kids[1].is_number()) return ratnorm(u, depth + 1);
      return rf_from_poly(poly_unit(u));
    }
  }
  throw BudgetExceeded{};
}

}  // namespace detail

// Normal form: expanded Laurent-polynomial numerator over factored, content-
// free denominators, with exact cancellation of shared factors. Falls back to
// the (already canonical) input if the expansion budget is exceeded.
inline Expr simplify(Expr e) {
  static std::unordered_map<const ExprNode*, Expr> cache;
  static std::mutex mu;
  if (!e) return e;
  switch (e.kind()) {
    case Kind::Number:
    case Kind::Pi:
    case Kind::Symbol:
      return e;
    default:
      break;
  }
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(e.get());
    if (it != cache.end()) return it->second;
  }
  Expr out;
  try {
    out = detail::rf_to_expr(detail::ratnorm(e, 0));
  } catch (const detail::BudgetExceeded&) {
    out = e;
  }
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(e.get(), out);
  cache.emplace(out.get(), out);  // the normal form is its own normal form
  return out;
}

}  // namespace confcurv
