#pragma once

// Conformal pipeline built on the Weyl tensor:
//
//   H  = C_{ijkl} C^{ijkl}            (quartic contraction; weight -2 under
//                                      g -> alpha*g)
//   J  = |H|^(1/2)                    (weight -1)
//   g' = J * g                        (weight  0: a preferred representative
//                                      of the conformal class, defined where
//                                      H != 0)
//   S  = scalar curvature of g'       (conformally invariant scalar)
//
// Genericity: the construction needs H != 0 of constant sign on the chart;
// this is checked numerically over the declared domain before J is formed.

#include <confcurv/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace confcurv {

inline Expr weyl_square(const MetricSpec& spec) {
  GeometryCache& cache = cache_of(spec);
  if (cache.weyl_square) return *cache.weyl_square;
  const ComponentTensor& low = weyl_tensor(spec);
  ComponentTensor up = low;
  for (std::size_t s = 0; s < 4; ++s) up = raise_index(up, s, spec);
  std::vector<Expr> terms;
  for_each_index(spec.dim(), 4, [&](const std::vector<std::size_t>& idx) {
    if (low.at(idx).is_zero() || up.at(idx).is_zero()) return;
    terms.push_back(mul(low.at(idx), up.at(idx)));
  });
  cache.weyl_square = simplify(add(std::move(terms)));
  return *cache.weyl_square;
}

struct GenericityReport {
  bool generic = false;
  int sign = 0;  // +1 / -1 when generic, 0 otherwise
  std::vector<Bindings> failing_points;
  double min_abs = 0.0;
  double max_abs = 0.0;

  std::string verdict() const {
    if (!generic) return "non-generic";
    return sign > 0 ? "generic(+)" : "generic(-)";
  }
};

class NonGenericError : public Error {
 public:
  NonGenericError(std::string what, GenericityReport report)
      : Error(std::move(what)), report_(std::move(report)) {}
  const GenericityReport& report() const { return report_; }

 private:
  GenericityReport report_;
};

// Samples |weyl|^2 over the declared domain. Generic means: every sampled
// value is bounded away from zero (relative to the largest magnitude seen)
// and all values share one sign.
inline GenericityReport genericity_check(const MetricSpec& spec,
                                         std::uint64_t seed = 20240801,
                                         int points = 32) {
  Expr h = weyl_square(spec);
  GenericityReport rep;
  if (h.is_zero()) return rep;  // identically conformally flat
  DomainSampler sampler = spec.sampler(seed);
  std::vector<std::pair<Bindings, double>> samples;
  samples.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    double v = 0;
    Bindings at;
    sampler.sample_where([&](const Bindings& p) {
      try {
        v = evaluate(h, p);
        at = p;
        return true;
      } catch (const EvalError&) {
        return false;
      }
    });
    samples.emplace_back(std::move(at), v);
  }
  rep.min_abs = std::abs(samples.front().second);
  rep.max_abs = rep.min_abs;
  for (const auto& [p, v] : samples) {
    rep.min_abs = std::min(rep.min_abs, std::abs(v));
    rep.max_abs = std::max(rep.max_abs, std::abs(v));
  }
  const double floor = 1e-10 * (1.0 + rep.max_abs);
  int pos = 0, neg = 0;
  for (const auto& [p, v] : samples) {
    if (std::abs(v) <= floor)
      rep.failing_points.push_back(p);
    else
      (v > 0 ? pos : neg)++;
  }
  if (rep.failing_points.empty() && pos > 0 && neg > 0) {
    // mixed sign: report the minority-sign points as witnesses
    const int minority = pos < neg ? 1 : -1;
    for (const auto& [p, v] : samples)
      if ((v > 0 ? 1 : -1) == minority) rep.failing_points.push_back(p);
  }
  if (rep.failing_points.empty()) {
    rep.generic = true;
    rep.sign = pos > 0 ? 1 : -1;
  }
  return rep;
}

namespace detail {

inline std::string describe_failure(const MetricSpec& spec, const GenericityReport& rep) {
  std::ostringstream os;
  os << "metric '" << spec.name << "' is not generic: |weyl|^2 ";
  if (rep.max_abs == 0.0 && rep.min_abs == 0.0 && rep.failing_points.empty())
    os << "vanishes identically";
  else if (!rep.failing_points.empty() && rep.min_abs <= 1e-10 * (1.0 + rep.max_abs))
    os << "vanishes (or nearly so) at " << rep.failing_points.size() << " sampled point(s)";
  else
    os << "changes sign across the sampled domain";
  return os.str();
}

}  // namespace detail

// J = |H|^(1/2), with the absolute value resolved through the sampled sign so
// the argument of the square root is the provably relevant sign-corrected H.
inline Expr einstein_factor(const MetricSpec& spec, std::uint64_t seed = 20240801) {
  GeometryCache& cache = cache_of(spec);
  if (cache.einstein_factor) return *cache.einstein_factor;
  GenericityReport rep = genericity_check(spec, seed);
  if (!rep.generic) throw NonGenericError(detail::describe_failure(spec, rep), rep);
  Expr h = weyl_square(spec);
  Expr signed_h = rep.sign > 0 ? h : simplify(neg(h));
  cache.weyl_square_sign = rep.sign;
  cache.einstein_factor = simplify(sqrt(signed_h));
  return *cache.einstein_factor;
}

// Returns a metric with every component multiplied by the (symbolic) factor.
inline MetricSpec scale_metric(const MetricSpec& spec, Expr factor,
                               const std::string& name_suffix = "_scaled") {
  MetricSpec out = spec;
  out.name = spec.name + name_suffix;
  out.cache.reset();
  const std::size_t n = spec.dim();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.g[i][j] = spec.g[i][j].is_zero() ? spec.g[i][j]
                                           : simplify(mul(factor, spec.g[i][j]));
  return out;
}

// g' = J * g. The scale factor is strictly positive on the generic domain, so
// the signature is unchanged.
inline const MetricSpec& preferred_metric(const MetricSpec& spec,
                                          std::uint64_t seed = 20240801) {
  GeometryCache& cache = cache_of(spec);
  if (cache.preferred) return *cache.preferred;
  Expr j = einstein_factor(spec, seed);
  auto scaled = std::make_shared<MetricSpec>(scale_metric(spec, j, "_preferred"));
  scaled->jet_order = spec.jet_order + 2;
  cache.preferred = std::move(scaled);
  return *cache.preferred;
}

// S: the scalar curvature of the preferred representative. Invariant under
// g -> alpha*g for any positive conformal factor alpha.
inline Expr conformal_scalar(const MetricSpec& spec, std::uint64_t seed = 20240801) {
  GeometryCache& cache = cache_of(spec);
  if (cache.conformal_scalar) return *cache.conformal_scalar;
  cache.conformal_scalar = ricci_scalar(preferred_metric(spec, seed));
  return *cache.conformal_scalar;
}

// Unimodular-style representative |det g|^(-1/n) * g (determinant +-1).
// Useful as an alternative normalization for cross-checks.
inline MetricSpec conformal_representative(const MetricSpec& spec) {
  Expr det = metric_det(spec);
  const int sign = spec.negative_count() % 2 == 0 ? 1 : -1;
  Expr abs_det = sign > 0 ? det : simplify(neg(det));
  Expr factor = simplify(pow(abs_det, number(-1, static_cast<long long>(spec.dim()))));
  return scale_metric(spec, factor, "_unimodular");
}

struct InvarianceDeviation {
  std::string quantity;  // which identity was probed
  double max_rel = 0.0;  // worst relative deviation over the sampled points
};

struct InvarianceReport {
  bool ok = true;
  double tol = 0.0;
  std::vector<InvarianceDeviation> deviations;
};

// Checks the scaling laws for a conformal factor alpha > 0:
//   H(alpha g) = alpha^-2 H(g)
//   J(alpha g) = alpha^-1 J(g)
//   S(alpha g) = S(g)
// at randomly sampled domain points, in relative terms.
inline InvarianceReport verify_invariance(const MetricSpec& spec, Expr alpha,
                                          int points = 8, std::uint64_t seed = 20240801,
                                          double tol = 1e-6) {
  InvarianceReport report;
  report.tol = tol;

  MetricSpec scaled = scale_metric(spec, alpha);
  Expr h = weyl_square(spec);
  Expr h_scaled = weyl_square(scaled);
  Expr j = einstein_factor(spec, seed);
  Expr j_scaled = einstein_factor(scaled, seed);
  Expr s = conformal_scalar(spec, seed);
  Expr s_scaled = conformal_scalar(scaled, seed);

  DomainSampler sampler = spec.sampler(seed + 1);
  auto rel = [](double got, double want) {
    return std::abs(got - want) / (1.0 + std::abs(got) + std::abs(want));
  };
  InvarianceDeviation dev_h{"weyl_square_scaling", 0.0};
  InvarianceDeviation dev_j{"einstein_factor_scaling", 0.0};
  InvarianceDeviation dev_s{"conformal_scalar_invariance", 0.0};
  for (int i = 0; i < points; ++i) {
    double a = 0;
    Bindings p;
    sampler.sample_where([&](const Bindings& cand) {
      try {
        a = evaluate(alpha, cand);
        if (!(a > 0)) return false;  // alpha must be a positive factor
        (void)evaluate(h, cand);
        (void)evaluate(h_scaled, cand);
        (void)evaluate(j, cand);
        (void)evaluate(j_scaled, cand);
        (void)evaluate(s, cand);
        (void)evaluate(s_scaled, cand);
        p = cand;
        return true;
      } catch (const EvalError&) {
        return false;
      }
    });
    dev_h.max_rel = std::max(dev_h.max_rel,
                             rel(evaluate(h_scaled, p), evaluate(h, p) / (a * a)));
    dev_j.max_rel =
        std::max(dev_j.max_rel, rel(evaluate(j_scaled, p), evaluate(j, p) / a));
    dev_s.max_rel = std::max(dev_s.max_rel, rel(evaluate(s_scaled, p), evaluate(s, p)));
  }
  report.deviations = {dev_h, dev_j, dev_s};
  for (const auto& d : report.deviations)
    if (!(d.max_rel <= tol)) report.ok = false;
  return report;
}

}  // namespace confcurv
