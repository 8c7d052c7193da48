#pragma once

// Symbolic pseudo-Riemannian geometry: determinant, inverse metric,
// connection coefficients, curvature tensors and scalar invariants.
//
// Conventions:
//   Gamma^i_{jk} = (1/2) g^{im} (d_j g_{mk} + d_k g_{mj} - d_m g_{jk})
//   R^i_{jkl}    = d_k Gamma^i_{lj} - d_l Gamma^i_{kj}
//                  + Gamma^i_{km} Gamma^m_{lj} - Gamma^i_{lm} Gamma^m_{kj}
//   R_{jl}       = R^i_{jil}
//   R            = g^{jl} R_{jl}
//
// Every produced component is passed through simplify(); intermediate stages
// are cached per metric so later stages reuse earlier ones.

#include <confcurv/calculus.hpp>
#include <confcurv/metric.hpp>
#include <confcurv/simplify.hpp>
#include <confcurv/tensor.hpp>

#include <string>
#include <vector>

namespace confcurv {

class DegenerateMetricError : public MetricError {
 public:
  using MetricError::MetricError;
};

namespace detail {

// Determinant of a symbolic matrix by cofactor expansion along the first row,
// simplifying at each level to keep minors small.
inline Expr matrix_det(const std::vector<std::vector<Expr>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  if (n == 2) return simplify(sub(mul(m[0][0], m[1][1]), mul(m[0][1], m[1][0])));
  std::vector<Expr> terms;
  for (std::size_t j = 0; j < n; ++j) {
    if (m[0][j].is_zero()) continue;
    std::vector<std::vector<Expr>> minor(n - 1, std::vector<Expr>(n - 1));
    for (std::size_t r = 1; r < n; ++r) {
      std::size_t cc = 0;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == j) continue;
        minor[r - 1][cc++] = m[r][c];
      }
    }
    Expr t = mul(m[0][j], matrix_det(minor));
    terms.push_back(j % 2 == 0 ? t : neg(t));
  }
  return simplify(add(std::move(terms)));
}

inline std::vector<std::vector<Expr>> delete_row_col(
    const std::vector<std::vector<Expr>>& m, std::size_t row, std::size_t col) {
  std::vector<std::vector<Expr>> out;
  out.reserve(m.size() - 1);
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (r == row) continue;
    std::vector<Expr> line;
    line.reserve(m.size() - 1);
    for (std::size_t c = 0; c < m.size(); ++c) {
      if (c == col) continue;
      line.push_back(m[r][c]);
    }
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace detail

inline Expr metric_det(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (!cache.det) cache.det = detail::matrix_det(spec.g);
  return *cache.det;
}

// Checks nondegeneracy and the declared signature numerically: at sampled
// domain points det(g) must be nonzero with sign (-1)^q, q = count of '-'.
inline void verify_signature(const MetricSpec& spec, std::uint64_t seed = 20240801,
                             int points = 8) {
  Expr det = metric_det(spec);
  const int expected_sign = spec.negative_count() % 2 == 0 ? 1 : -1;
  DomainSampler sampler = spec.sampler(seed);
  for (int i = 0; i < points; ++i) {
    double v = 0;
    sampler.sample_where([&](const Bindings& p) {
      try {
        v = evaluate(det, p);
        return true;
      } catch (const EvalError&) {
        return false;
      }
    });
    if (v == 0 || (v > 0 ? 1 : -1) != expected_sign)
      throw DegenerateMetricError(
          "metric '" + spec.name + "': det(g) = " + std::to_string(v) +
          " violates declared signature '" + spec.signature + "'");
  }
}

// Inverse by adjugate over determinant; exactness preferred over speed at
// these dimensions.
inline const ComponentTensor& inverse_metric(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (cache.inverse) return *cache.inverse;
  const std::size_t n = spec.dim();
  Expr det = metric_det(spec);
  if (det.is_zero())
    throw DegenerateMetricError("metric '" + spec.name + "' is degenerate: det(g) = 0");
  Expr inv_det = inverse(det);
  ComponentTensor out(spec.coords, {Variance::Upper, Variance::Upper});
  out.jet_order = spec.jet_order;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      Expr cof = detail::matrix_det(detail::delete_row_col(spec.g, i, j));
      if ((i + j) % 2 != 0) cof = neg(cof);
      Expr entry = simplify(mul(cof, inv_det));  // adjugate is symmetric here
      out.set({i, j}, entry);
      out.set({j, i}, entry);
    }
  cache.inverse = std::move(out);
  return *cache.inverse;
}

inline const ComponentTensor& christoffel(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (cache.christoffel) return *cache.christoffel;
  const std::size_t n = spec.dim();
  const ComponentTensor& ginv = inverse_metric(spec);
  ComponentTensor out(spec.coords, {Variance::Upper, Variance::Lower, Variance::Lower});
  out.jet_order = spec.jet_order + 1;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = j; k < n; ++k) {
      // d_j g_{mk} + d_k g_{mj} - d_m g_{jk}, contracted with g^{im}/2.
      std::vector<Expr> bracket(n);
      for (std::size_t m = 0; m < n; ++m)
        bracket[m] = add({differentiate(spec.g[m][k], spec.coords[j]),
                          differentiate(spec.g[m][j], spec.coords[k]),
                          neg(differentiate(spec.g[j][k], spec.coords[m]))});
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<Expr> terms;
        terms.reserve(n);
        for (std::size_t m = 0; m < n; ++m) {
          if (ginv(i, m).is_zero() || bracket[m].is_zero()) continue;
          terms.push_back(mul(ginv(i, m), bracket[m]));
        }
        Expr entry = simplify(mul(number(1, 2), add(std::move(terms))));
        out.set({i, j, k}, entry);
        out.set({i, k, j}, entry);
      }
    }
  cache.christoffel = std::move(out);
  return *cache.christoffel;
}

// R^i_{jkl}; antisymmetric in (k, l), so only k < l is computed.
inline const ComponentTensor& riemann(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (cache.riemann) return *cache.riemann;
  const std::size_t n = spec.dim();
  const ComponentTensor& gam = christoffel(spec);
  ComponentTensor out(spec.coords,
                      {Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower});
  out.jet_order = spec.jet_order + 2;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
          std::vector<Expr> terms;
          terms.push_back(differentiate(gam(i, l, j), spec.coords[k]));
          terms.push_back(neg(differentiate(gam(i, k, j), spec.coords[l])));
          for (std::size_t m = 0; m < n; ++m) {
            if (!gam(i, k, m).is_zero() && !gam(m, l, j).is_zero())
              terms.push_back(mul(gam(i, k, m), gam(m, l, j)));
            if (!gam(i, l, m).is_zero() && !gam(m, k, j).is_zero())
              terms.push_back(neg(mul(gam(i, l, m), gam(m, k, j))));
          }
          Expr entry = simplify(add(std::move(terms)));
          out.set({i, j, k, l}, entry);
          out.set({i, j, l, k}, neg(entry));
        }
  cache.riemann = std::move(out);
  return *cache.riemann;
}

inline const ComponentTensor& ricci_tensor(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (cache.ricci) return *cache.ricci;
  const std::size_t n = spec.dim();
  const ComponentTensor& riem = riemann(spec);
  ComponentTensor out(spec.coords, {Variance::Lower, Variance::Lower});
  out.jet_order = spec.jet_order + 2;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = j; l < n; ++l) {
      std::vector<Expr> terms;
      terms.reserve(n);
      for (std::size_t i = 0; i < n; ++i) terms.push_back(riem(i, j, i, l));
      Expr entry = simplify(add(std::move(terms)));
      out.set({j, l}, entry);
      out.set({l, j}, entry);
    }
  cache.ricci = std::move(out);
  return *cache.ricci;
}

inline Expr ricci_scalar(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (cache.ricci_scalar) return *cache.ricci_scalar;
  const std::size_t n = spec.dim();
  const ComponentTensor& ric = ricci_tensor(spec);
  const ComponentTensor& ginv = inverse_metric(spec);
  std::vector<Expr> terms;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t l = 0; l < n; ++l)
      if (!ginv(j, l).is_zero() && !ric(j, l).is_zero())
        terms.push_back(mul(ginv(j, l), ric(j, l)));
  cache.ricci_scalar = simplify(add(std::move(terms)));
  return *cache.ricci_scalar;
}

// Moves one slot up (contract with g^{..}) or down (with g_{..}).
inline ComponentTensor raise_index(const ComponentTensor& t, std::size_t slot,
                                   const MetricSpec& spec) {
  if (slot >= t.rank() || t.variance()[slot] != Variance::Lower)
    throw TensorError("raise_index: slot is not a lower index");
  const ComponentTensor& ginv = inverse_metric(spec);
  const std::size_t n = t.dim();
  std::vector<Variance> var = t.variance();
  var[slot] = Variance::Upper;
  ComponentTensor out(t.coords(), var);
  out.jet_order = t.jet_order;
  for_each_index(n, t.rank(), [&](const std::vector<std::size_t>& idx) {
    std::vector<Expr> terms;
    std::vector<std::size_t> src = idx;
    for (std::size_t m = 0; m < n; ++m) {
      if (ginv(idx[slot], m).is_zero()) continue;
      src[slot] = m;
      if (t.at(src).is_zero()) continue;
      terms.push_back(mul(ginv(idx[slot], m), t.at(src)));
    }
    out.set(idx, simplify(add(std::move(terms))));
  });
  return out;
}

inline ComponentTensor lower_index(const ComponentTensor& t, std::size_t slot,
                                   const MetricSpec& spec) {
  if (slot >= t.rank() || t.variance()[slot] != Variance::Upper)
    throw TensorError("lower_index: slot is not an upper index");
  const std::size_t n = t.dim();
  std::vector<Variance> var = t.variance();
  var[slot] = Variance::Lower;
  ComponentTensor out(t.coords(), var);
  out.jet_order = t.jet_order;
  for_each_index(n, t.rank(), [&](const std::vector<std::size_t>& idx) {
    std::vector<Expr> terms;
    std::vector<std::size_t> src = idx;
    for (std::size_t m = 0; m < n; ++m) {
      if (spec.g[idx[slot]][m].is_zero()) continue;
      src[slot] = m;
      if (t.at(src).is_zero()) continue;
      terms.push_back(mul(spec.g[idx[slot]][m], t.at(src)));
    }
    out.set(idx, simplify(add(std::move(terms))));
  });
  return out;
}

inline const ComponentTensor& riemann_lowered(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (cache.riemann_low) return *cache.riemann_low;
  cache.riemann_low = lower_index(riemann(spec), 0, spec);
  return *cache.riemann_low;
}

inline Expr kretschmann_scalar(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (cache.kretschmann) return *cache.kretschmann;
  const ComponentTensor& low = riemann_lowered(spec);
  ComponentTensor up = riemann(spec);  // R^i_{jkl}: raise the last three slots
  up = raise_index(up, 1, spec);
  up = raise_index(up, 2, spec);
  up = raise_index(up, 3, spec);
  std::vector<Expr> terms;
  for_each_index(spec.dim(), 4, [&](const std::vector<std::size_t>& idx) {
    if (low.at(idx).is_zero() || up.at(idx).is_zero()) return;
    terms.push_back(mul(low.at(idx), up.at(idx)));
  });
  cache.kretschmann = simplify(add(std::move(terms)));
  return *cache.kretschmann;
}

// Fully lowered Weyl tensor (dimension >= 4):
//   C_{ijkl} = R_{ijkl} - (g_{ik} R_{jl} - g_{il} R_{jk} - g_{jk} R_{il}
//              + g_{jl} R_{ik}) / (n-2)
//              + R (g_{ik} g_{jl} - g_{il} g_{jk}) / ((n-1)(n-2))
inline const ComponentTensor& weyl_tensor(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (cache.weyl_low) return *cache.weyl_low;
  const std::size_t n = spec.dim();
  if (n < 4)
    throw TensorError("weyl_tensor: defined here for dimension >= 4, got " +
                      std::to_string(n));
  const ComponentTensor& rl = riemann_lowered(spec);
  const ComponentTensor& ric = ricci_tensor(spec);
  Expr rs = ricci_scalar(spec);
  const Expr c1 = number(1, static_cast<long long>(n) - 2);
  const Expr c2 =
      number(1, static_cast<long long>((n - 1) * (n - 2)));
  ComponentTensor out(spec.coords,
                      {Variance::Lower, Variance::Lower, Variance::Lower, Variance::Lower});
  out.jet_order = spec.jet_order + 2;
  auto G = [&](std::size_t a, std::size_t b) { return spec.g[a][b]; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = k + 1; l < n; ++l) {
          Expr ricci_block =
              add({mul(G(i, k), ric(j, l)), neg(mul(G(i, l), ric(j, k))),
                   neg(mul(G(j, k), ric(i, l))), mul(G(j, l), ric(i, k))});
          Expr scalar_block =
              mul(rs, sub(mul(G(i, k), G(j, l)), mul(G(i, l), G(j, k))));
          Expr entry = simplify(add({rl(i, j, k, l), neg(mul(c1, ricci_block)),
                                     mul(c2, scalar_block)}));
          out.set({i, j, k, l}, entry);
          out.set({i, j, l, k}, neg(entry));
        }
  cache.weyl_low = std::move(out);
  return *cache.weyl_low;
}

}  // namespace confcurv
