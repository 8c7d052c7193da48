#pragma once

// Finite-difference cross-check for the curvature scalars.
//
// Everything in this header works purely numerically: metric components are
// *evaluated* on a lattice of points around a base point, and every
// derivative in the curvature formulas is replaced by the fourth-order
// five-point central stencil
//
//   f'(x) ~ (f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)) / (12 h).
//
// Mixed and repeated partials arise as tensor products of these per-axis
// stencils because the Christoffel stage is differenced again by the
// curvature stage. No symbolic differentiation is involved anywhere, so the
// results are an independent check of the symbolic pipeline.
//
// Supported scalars (Pipeline): R (Ricci scalar), K (Kretschmann),
// H (Weyl square), J = |H|^(1/2), and S, the Ricci scalar of the rescaled
// metric J*g. For S the factor J is itself produced by an inner lattice run
// at every outer lattice node. Stacking two second-derivative stencils
// amplifies rounding noise by roughly 1/h^4, which double precision cannot
// absorb at h ~ 1e-3, so the S pipeline runs in quad precision.
//
// Every oracle call evaluates at step h and h/2 and reports the step-h/2
// value, flagging the result as ill-conditioned when the two differ by more
// than 1e-3 * (1 + |value|).
//
// Stencil reach: the outermost derivative probes +-2h, and the Christoffel
// symbols it differences probe a further +-2h, so R/K/H/J read the metric up
// to 4h away from the base point; S adds an inner run at each outer node and
// reaches 8h. The base point must keep the whole stencil inside the region
// where the metric evaluates to a finite, invertible matrix: evaluation
// failures and singular component matrices at stencil nodes are reported as
// the stencil leaving the metric's domain, and a coordinate the components
// depend on may not be pinned to a single value. Near-singular base points
// that survive evaluation are caught by the step-halving flag instead.

#include <confcurv/calculus.hpp>
#include <confcurv/metric.hpp>

#include <boost/multiprecision/float128.hpp>

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace confcurv {

class OracleError : public Error {
 public:
  using Error::Error;
};

enum class Pipeline { R, K, H, J, S };

inline const char* pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::R: return "R";
    case Pipeline::K: return "K";
    case Pipeline::H: return "H";
    case Pipeline::J: return "J";
    case Pipeline::S: return "S";
  }
  return "?";
}

inline Pipeline pipeline_from_name(const std::string& s) {
  if (s == "R") return Pipeline::R;
  if (s == "K") return Pipeline::K;
  if (s == "H") return Pipeline::H;
  if (s == "J") return Pipeline::J;
  if (s == "S") return Pipeline::S;
  throw OracleError("unknown scalar '" + s + "' (expected one of R, K, H, J, S)");
}

struct OracleResult {
  double value;             // evaluation at step h/2
  double coarse;            // evaluation at step h
  double richardson_delta;  // |coarse - value|
  bool flagged;             // true when the two steps disagree badly
};

namespace detail {

// Offset-indexed numeric geometry around one base point. All tensors are
// flattened row-major over indices 0..n-1; lattice nodes are integer offset
// vectors (one entry per coordinate) scaled by the step.
template <class F>
class Lattice {
 public:
  // metric_at maps coordinate values (chart order) to the flattened n x n
  // component matrix.
  using Fn = std::function<std::vector<F>(const std::vector<F>&)>;

  Lattice(Fn metric_at, std::vector<F> center, F step)
      : f_(std::move(metric_at)), center_(std::move(center)), h_(step),
        n_(center_.size()) {}

  std::size_t dim() const { return n_; }

  const std::vector<F>& metric(const std::vector<int>& off) {
    auto it = g_.find(off);
    if (it != g_.end()) return it->second;
    std::vector<F> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = center_[i] + F(off[i]) * h_;
    return g_.emplace(off, f_(x)).first->second;
  }

  const std::vector<F>& inverse(const std::vector<int>& off) {
    auto it = inv_.find(off);
    if (it != inv_.end()) return it->second;
    std::vector<F> value = invert(metric(off));
    return inv_.emplace(off, std::move(value)).first->second;
  }

  // Gamma^i_{jk}, flattened (i*n + j)*n + k.
  const std::vector<F>& christoffel(const std::vector<int>& off) {
    auto it = ch_.find(off);
    if (it != ch_.end()) return it->second;
    const std::size_t n = n_;
    // dg[c] holds the per-axis first derivatives of the components at off.
    std::vector<std::vector<F>> dg(n, std::vector<F>(n * n));
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < n; ++b) {
          F v = stencil([&](const std::vector<int>& o) -> F {
            return metric(o)[a * n + b];
          }, off, c);
          dg[c][a * n + b] = v;
          dg[c][b * n + a] = v;
        }
    const std::vector<F>& gi = inverse(off);
    std::vector<F> ch(n * n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j; k < n; ++k) {
          F s = 0;
          for (std::size_t m = 0; m < n; ++m)
            s += gi[i * n + m] * (dg[j][m * n + k] + dg[k][m * n + j] - dg[m][j * n + k]);
          s /= F(2);
          ch[(i * n + j) * n + k] = s;
          ch[(i * n + k) * n + j] = s;
        }
    return ch_.emplace(off, std::move(ch)).first->second;
  }

  // R^i_{jkl} at the lattice center, flattened ((i*n + j)*n + k)*n + l.
  std::vector<F> riemann_up() {
    const std::size_t n = n_;
    const std::vector<int> origin(n, 0);
    const std::vector<F> g0 = christoffel(origin);
    // dG[c] = per-axis derivative of Gamma at the center.
    std::vector<std::vector<F>> dG(n);
    for (std::size_t c = 0; c < n; ++c) {
      dG[c].resize(n * n * n);
      for (std::size_t e = 0; e < n * n * n; ++e)
        dG[c][e] = stencil([&](const std::vector<int>& o) -> F {
          return christoffel(o)[e];
        }, origin, c);
    }
    std::vector<F> R(n * n * n * n, F(0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t l = k + 1; l < n; ++l) {
            F v = dG[k][(i * n + l) * n + j] - dG[l][(i * n + k) * n + j];
            for (std::size_t m = 0; m < n; ++m)
              v += g0[(i * n + k) * n + m] * g0[(m * n + l) * n + j] -
                   g0[(i * n + l) * n + m] * g0[(m * n + k) * n + j];
            R[((i * n + j) * n + k) * n + l] = v;
            R[((i * n + j) * n + l) * n + k] = -v;
          }
    return R;
  }

  F ricci_scalar() {
    const std::size_t n = n_;
    const std::vector<int> origin(n, 0);
    std::vector<F> ric = ricci(riemann_up());
    const std::vector<F>& gi = inverse(origin);
    F s = 0;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < n; ++l) s += gi[j * n + l] * ric[j * n + l];
    return s;
  }

  F kretschmann() {
    std::vector<F> low = lower_first(riemann_up());
    return full_contraction(low);
  }

  F weyl_square() {
    const std::size_t n = n_;
    if (n < 3)
      throw OracleError("the Weyl tensor needs at least three dimensions");
    const std::vector<int> origin(n, 0);
    std::vector<F> up = riemann_up();
    std::vector<F> low = lower_first(up);
    std::vector<F> ric = ricci(up);
    const std::vector<F>& g0 = metric(origin);
    const std::vector<F>& gi = inverse(origin);
    F rs = 0;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < n; ++l) rs += gi[j * n + l] * ric[j * n + l];
    const F cn2 = F(1) / F(static_cast<int>(n) - 2);
    const F cn12 = rs / (F(static_cast<int>(n) - 1) * F(static_cast<int>(n) - 2));
    std::vector<F> c(n * n * n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          for (std::size_t l = 0; l < n; ++l) {
            F v = low[((i * n + j) * n + k) * n + l];
            v -= cn2 * (g0[i * n + k] * ric[j * n + l] - g0[i * n + l] * ric[j * n + k] -
                        g0[j * n + k] * ric[i * n + l] + g0[j * n + l] * ric[i * n + k]);
            v += cn12 * (g0[i * n + k] * g0[j * n + l] - g0[i * n + l] * g0[j * n + k]);
            c[((i * n + j) * n + k) * n + l] = v;
          }
    return full_contraction(c);
  }

 private:
  Fn f_;
  std::vector<F> center_;
  F h_;
  std::size_t n_;
  std::map<std::vector<int>, std::vector<F>> g_, inv_, ch_;

  // Five-point fourth-order central derivative of an offset-indexed value
  // along one axis.
  template <class G>
  F stencil(G&& value_at, const std::vector<int>& off, std::size_t axis) {
    std::vector<int> p = off;
    p[axis] = off[axis] - 2;
    F fm2 = value_at(p);
    p[axis] = off[axis] - 1;
    F fm1 = value_at(p);
    p[axis] = off[axis] + 1;
    F fp1 = value_at(p);
    p[axis] = off[axis] + 2;
    F fp2 = value_at(p);
    return (fm2 - F(8) * fm1 + F(8) * fp1 - fp2) / (F(12) * h_);
  }

  std::vector<F> invert(const std::vector<F>& m) const {
    using std::abs;
    const std::size_t n = n_;
    std::vector<F> a = m;
    std::vector<F> inv(n * n, F(0));
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1;
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < n; ++r)
        if (abs(a[r * n + col]) > abs(a[piv * n + col])) piv = r;
      if (a[piv * n + col] == F(0))
        throw OracleError("metric is singular at a stencil point");
      if (piv != col)
        for (std::size_t c = 0; c < n; ++c) {
          std::swap(a[piv * n + c], a[col * n + c]);
          std::swap(inv[piv * n + c], inv[col * n + c]);
        }
      const F d = a[col * n + col];
      for (std::size_t c = 0; c < n; ++c) {
        a[col * n + c] /= d;
        inv[col * n + c] /= d;
      }
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col) continue;
        const F f = a[r * n + col];
        if (f == F(0)) continue;
        for (std::size_t c = 0; c < n; ++c) {
          a[r * n + c] -= f * a[col * n + c];
          inv[r * n + c] -= f * inv[col * n + c];
        }
      }
    }
    return inv;
  }

  std::vector<F> ricci(const std::vector<F>& up) const {
    const std::size_t n = n_;
    std::vector<F> ric(n * n, F(0));
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < n; ++l) {
        F s = 0;
        for (std::size_t i = 0; i < n; ++i) s += up[((i * n + j) * n + i) * n + l];
        ric[j * n + l] = s;
      }
    return ric;
  }

  std::vector<F> lower_first(const std::vector<F>& up) {
    const std::size_t n = n_;
    const std::vector<int> origin(n, 0);
    const std::vector<F>& g0 = metric(origin);
    std::vector<F> low(n * n * n * n, F(0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t rest = 0; rest < n * n * n; ++rest) {
        F s = 0;
        for (std::size_t a = 0; a < n; ++a) s += g0[i * n + a] * up[a * n * n * n + rest];
        low[i * n * n * n + rest] = s;
      }
    return low;
  }

  // T_{ijkl} T^{ijkl} for a fully lowered rank-4 tensor: raise the slots one
  // at a time with the inverse metric, then contract against the original.
  F full_contraction(const std::vector<F>& low) {
    const std::size_t n = n_;
    const std::vector<int> origin(n, 0);
    const std::vector<F>& gi = inverse(origin);
    std::vector<F> cur = low;
    std::size_t stride = n * n * n;  // stride of the slot being raised
    for (int slot = 0; slot < 4; ++slot) {
      std::vector<F> next(n * n * n * n, F(0));
      for (std::size_t flat = 0; flat < n * n * n * n; ++flat) {
        const std::size_t idx = (flat / stride) % n;
        const std::size_t base = flat - idx * stride;
        F s = 0;
        for (std::size_t a = 0; a < n; ++a) s += gi[idx * n + a] * cur[base + a * stride];
        next[flat] = s;
      }
      cur = std::move(next);
      stride /= n;
    }
    F total = 0;
    for (std::size_t flat = 0; flat < n * n * n * n; ++flat) total += low[flat] * cur[flat];
    return total;
  }
};

// Evaluates one scalar pipeline entirely on lattices of the given step.
template <class F>
F fd_scalar(const MetricSpec& m, Pipeline p, const BindingsOf<F>& full, F h) {
  using std::abs;
  using std::sqrt;
  const std::size_t n = m.dim();
  std::vector<F> center(n);
  for (std::size_t i = 0; i < n; ++i) center[i] = full.at(m.coords[i]);
  BindingsOf<F> extra;  // everything that is not a coordinate stays fixed
  for (const auto& [k, v] : full) {
    bool is_coord = false;
    for (const auto& c : m.coords) is_coord = is_coord || c == k;
    if (!is_coord) extra.emplace(k, v);
  }
  auto metric_at = [&m, extra, n](const std::vector<F>& x) -> std::vector<F> {
    BindingsOf<F> b = extra;
    for (std::size_t i = 0; i < n; ++i) b[m.coords[i]] = x[i];
    std::vector<F> out(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        F v = evaluate_as<F>(m.g[i][j], b);
        out[i * n + j] = v;
        out[j * n + i] = v;
      }
    return out;
  };
  switch (p) {
    case Pipeline::R: return Lattice<F>(metric_at, center, h).ricci_scalar();
    case Pipeline::K: return Lattice<F>(metric_at, center, h).kretschmann();
    case Pipeline::H: return Lattice<F>(metric_at, center, h).weyl_square();
    case Pipeline::J: {
      F v = Lattice<F>(metric_at, center, h).weyl_square();
      return sqrt(abs(v));
    }
    case Pipeline::S: {
      // The rescaled metric J*g, with J computed by an inner lattice run at
      // every node the outer run asks for.
      auto scaled_at = [&metric_at, h](const std::vector<F>& x) -> std::vector<F> {
        F hsq = Lattice<F>(metric_at, x, h).weyl_square();
        F j = sqrt(abs(hsq));
        std::vector<F> g = metric_at(x);
        for (F& v : g) v *= j;
        return g;
      };
      return Lattice<F>(scaled_at, center, h).ricci_scalar();
    }
  }
  throw OracleError("unsupported pipeline");
}

}  // namespace detail

// Numeric evaluation of one scalar at one point, sharing nothing with the
// symbolic differentiation path. `at` must bind every coordinate; parameters
// may be bound in `at` or fall back to the metric's defaults. The result
// carries both the step-h and step-h/2 evaluations plus an ill-conditioning
// flag based on their disagreement.
inline OracleResult fd_oracle(const MetricSpec& m, Pipeline p, const Bindings& at,
                              double h = 1e-3) {
  m.validate();
  if (!(h > 0)) throw OracleError("step size must be positive");
  Bindings full;
  for (const auto& c : m.coords) {
    auto it = at.find(c);
    if (it == at.end())
      throw OracleError("missing coordinate '" + c + "' in the evaluation point");
    full[c] = it->second;
  }
  for (const auto& prm : m.params) {
    auto it = at.find(prm);
    if (it != at.end()) {
      full[prm] = it->second;
      continue;
    }
    auto dv = m.defaults.find(prm);
    if (dv == m.defaults.end())
      throw OracleError("parameter '" + prm + "' is neither bound nor defaulted");
    full[prm] = dv->second;
  }
  for (const auto& [k, v] : at)
    if (!full.count(k))
      throw OracleError("'" + k + "' is neither a coordinate nor a parameter of metric '" +
                        m.name + "'");

  // The lattice shifts every coordinate the components depend on, so such a
  // coordinate pinned to a single value cannot host a stencil.
  const std::set<std::string> active = m.used_symbols();
  for (const auto& c : m.coords) {
    if (!active.count(c)) continue;
    auto it = m.domain.find(c);
    if (it != m.domain.end() && it->second.lo == it->second.hi)
      throw OracleError("stencil leaves domain: coordinate '" + c +
                        "' is pinned to a single value but the metric depends on it");
  }

  double coarse, fine;
  try {
    if (p == Pipeline::S) {
      using Q = boost::multiprecision::float128;
      BindingsOf<Q> fullq;
      for (const auto& [k, v] : full) fullq.emplace(k, Q(v));
      coarse = static_cast<double>(detail::fd_scalar<Q>(m, p, fullq, Q(h)));
      fine = static_cast<double>(detail::fd_scalar<Q>(m, p, fullq, Q(h) / 2));
    } else {
      coarse = detail::fd_scalar<double>(m, p, full, h);
      fine = detail::fd_scalar<double>(m, p, full, h / 2);
    }
  } catch (const EvalError& e) {
    throw OracleError(std::string("stencil leaves domain: ") + e.what());
  }
  OracleResult r;
  r.value = fine;
  r.coarse = coarse;
  r.richardson_delta = std::abs(coarse - fine);
  r.flagged = r.richardson_delta > 1e-3 * (1.0 + std::abs(fine));
  return r;
}

}  // namespace confcurv
