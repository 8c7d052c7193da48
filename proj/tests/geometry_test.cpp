#include <catch2/catch_amalgamated.hpp>

#include <confcurv/catalog.hpp>
#include <confcurv/fd.hpp>
#include <confcurv/geometry.hpp>
#include <confcurv/parse.hpp>

#include <cmath>
#include <vector>

#include "support.hpp"

using namespace confcurv;
using testsupport::rel_dev;

namespace {

MetricSpec unit_sphere() {
  MetricSpec m = make_metric("sphere", {"theta", "phi"}, {}, "++");
  m.set_component(0, 0, one());
  m.set_component(1, 1, parse("sin(theta)^2"));
  m.domain["theta"] = {0.3, 2.8};
  m.domain["phi"] = {0.1, 6.0};
  return m;
}

// Evaluates every entry of a tensor at one point.
std::vector<double> eval_tensor(const ComponentTensor& t, const Bindings& p) {
  std::vector<double> out;
  out.reserve(t.data().size());
  for (Expr e : t.data()) out.push_back(e.is_zero() ? 0.0 : evaluate(e, p));
  return out;
}

}  // namespace

TEST_CASE("unit sphere curvature in closed form") {
  MetricSpec m = unit_sphere();
  DomainSampler s = m.sampler(17);

  const ComponentTensor& gamma = christoffel(m);
  CHECK(equivalent(gamma(0, 1, 1), parse("-sin(theta)*cos(theta)"), s));
  CHECK(equivalent(gamma(1, 0, 1), parse("cos(theta)/sin(theta)"), s));
  CHECK(gamma(0, 0, 0).is_zero());
  CHECK(gamma(1, 0, 0).is_zero());

  CHECK(equivalent(ricci_scalar(m), number(2), s));
  CHECK(equivalent(kretschmann_scalar(m), number(4), s));
}

TEST_CASE("flat metric has identically zero curvature") {
  MetricSpec m = builtin("minkowski");
  CHECK(riemann(m).structurally_zero());
  CHECK(ricci_scalar(m).is_zero());
  CHECK(kretschmann_scalar(m).is_zero());
}

TEST_CASE("schwarzschild curvature") {
  MetricSpec m = builtin("schwarzschild");
  DomainSampler s = m.sampler(5);

  CHECK(ricci_tensor(m).structurally_zero());
  CHECK(ricci_scalar(m).is_zero());
  CHECK(equivalent(kretschmann_scalar(m), parse("48*M^2/r^6"), s));
}

TEST_CASE("reissner-nordstrom curvature") {
  MetricSpec m = builtin("reissner-nordstrom");
  DomainSampler s = m.sampler(5);

  CHECK(equivalent(ricci_scalar(m), zero(), s));
  CHECK(!ricci_tensor(m).structurally_zero());  // charged source curves directions
  CHECK(equivalent(kretschmann_scalar(m),
                   parse("8*(7*q^4 - 12*M*q^2*r + 6*M^2*r^2)/r^8"), s));
}

TEST_CASE("godel curvature") {
  MetricSpec m = builtin("godel");
  DomainSampler s = m.sampler(5);

  CHECK(equivalent(ricci_scalar(m), parse("-1/a^2"), s));
  CHECK(equivalent(kretschmann_scalar(m), parse("3/a^4"), s));
}

TEST_CASE("barriola-vilenkin curvature") {
  MetricSpec m = builtin("barriola-vilenkin");
  DomainSampler s = m.sampler(5);

  CHECK(equivalent(ricci_scalar(m), parse("2*(1 - k^2)/(k^2*r^2)"), s));
  CHECK(equivalent(kretschmann_scalar(m), parse("4*(1 - k^2)^2/(k^4*r^4)"), s));
}

TEST_CASE("riemann symmetries hold numerically on every builtin") {
  constexpr double tol = 1e-8;
  for (const std::string& name : builtin_names()) {
    INFO("metric " << name);
    MetricSpec m = builtin(name);
    const std::size_t n = m.dim();
    const ComponentTensor& rl = riemann_lowered(m);
    const ComponentTensor& cw = weyl_tensor(m);
    const ComponentTensor& ginv = inverse_metric(m);

    DomainSampler s = m.sampler(311);
    for (int trial = 0; trial < 3; ++trial) {
      Bindings p = s.sample_where([&](const Bindings& b) {
        try {
          eval_tensor(rl, b);
          return true;
        } catch (const EvalError&) {
          return false;
        }
      });
      std::vector<double> r = eval_tensor(rl, p);
      std::vector<double> c = eval_tensor(cw, p);
      std::vector<double> gi = eval_tensor(ginv, p);
      double scale = 0;
      for (double v : r) scale = std::max(scale, std::abs(v));
      const double bound = tol * (1.0 + scale);
      auto at = [n](const std::vector<double>& d, std::size_t i, std::size_t j,
                    std::size_t k, std::size_t l) {
        return d[((i * n + j) * n + k) * n + l];
      };

      double worst_anti = 0, worst_pair = 0, worst_bianchi = 0, worst_trace = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) {
              double v = at(r, i, j, k, l);
              worst_anti = std::max(worst_anti, std::abs(v + at(r, j, i, k, l)));
              worst_anti = std::max(worst_anti, std::abs(v + at(r, i, j, l, k)));
              worst_pair = std::max(worst_pair, std::abs(v - at(r, k, l, i, j)));
              worst_bianchi = std::max(
                  worst_bianchi,
                  std::abs(v + at(r, i, k, l, j) + at(r, i, l, j, k)));
            }
      // Weyl is trace-free in every index pair; the first suffices by symmetry.
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < n; ++l) {
          double tr = 0;
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
              tr += gi[i * n + k] * at(c, i, j, k, l);
          worst_trace = std::max(worst_trace, std::abs(tr));
        }

      CHECK(worst_anti <= bound);
      CHECK(worst_pair <= bound);
      CHECK(worst_bianchi <= bound);
      CHECK(worst_trace <= bound);
    }
  }
}

TEST_CASE("inverse metric contracts to the identity") {
  for (const char* name : {"schwarzschild", "godel"}) {
    INFO("metric " << name);
    MetricSpec m = builtin(name);
    const std::size_t n = m.dim();
    const ComponentTensor& ginv = inverse_metric(m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<Expr> terms;
        for (std::size_t k = 0; k < n; ++k) terms.push_back(mul(ginv(i, k), m.component(k, j)));
        Expr entry = simplify(add(std::move(terms)));
        if (i == j)
          CHECK(entry.is_one());
        else
          CHECK(entry.is_zero());
      }
  }
}

TEST_CASE("signature verification") {
  for (const std::string& name : builtin_names()) CHECK_NOTHROW(verify_signature(builtin(name)));

  MetricSpec degenerate = make_metric("deg", {"x", "y"}, {}, "++");
  degenerate.set_component(0, 0, one());
  // second row/column left zero -> det(g) = 0 everywhere
  degenerate.domain["x"] = {0.1, 1.0};
  degenerate.domain["y"] = {0.1, 1.0};
  CHECK_THROWS_AS(verify_signature(degenerate), DegenerateMetricError);

  MetricSpec mismatched = make_metric("mis", {"x", "y"}, {}, "-+");
  mismatched.set_component(0, 0, one());
  mismatched.set_component(1, 1, one());
  mismatched.domain["x"] = {0.1, 1.0};
  mismatched.domain["y"] = {0.1, 1.0};
  CHECK_THROWS_AS(verify_signature(mismatched), DegenerateMetricError);
}

TEST_CASE("finite-difference oracle agrees with symbolic curvature") {
  for (const std::string& name : builtin_names()) {
    INFO("metric " << name);
    MetricSpec m = builtin(name);
    Expr r_sym = ricci_scalar(m);
    Expr k_sym = kretschmann_scalar(m);

    DomainSampler s = m.sampler(1234);
    Bindings p = s.sample_where([&](const Bindings& b) {
      try {
        if (!r_sym.is_zero()) evaluate(r_sym, b);
        if (!k_sym.is_zero()) evaluate(k_sym, b);
        return true;
      } catch (const EvalError&) {
        return false;
      }
    });

    double r_want = r_sym.is_zero() ? 0.0 : evaluate(r_sym, p);
    double k_want = k_sym.is_zero() ? 0.0 : evaluate(k_sym, p);
    OracleResult r_got = fd_oracle(m, Pipeline::R, p);
    OracleResult k_got = fd_oracle(m, Pipeline::K, p);
    CHECK(rel_dev(r_got.value, r_want) < 1e-4);
    CHECK(rel_dev(k_got.value, k_want) < 1e-4);
    CHECK(!r_got.flagged);
    CHECK(!k_got.flagged);
  }
}

TEST_CASE("oracle pinned examples") {
  MetricSpec schw = builtin("schwarzschild");
  OracleResult k = fd_oracle(schw, Pipeline::K, {{"t", 0.0}, {"r", 3.0}, {"theta", 1.0}, {"phi", 1.0}});
  CHECK(std::abs(k.value - 48.0 / 729.0) / (48.0 / 729.0) < 1e-4);

  MetricSpec flat = builtin("minkowski");
  OracleResult r = fd_oracle(flat, Pipeline::R, {{"t", 0.0}, {"x", 0.0}, {"y", 0.0}, {"z", 0.0}});
  CHECK(r.value == 0.0);
  CHECK(!r.flagged);
}

TEST_CASE("oracle rejects unusable evaluation points") {
  MetricSpec schw = builtin("schwarzschild");

  // missing coordinate
  CHECK_THROWS_AS(fd_oracle(schw, Pipeline::R, {{"t", 0.0}, {"r", 4.0}, {"theta", 1.0}}),
                  OracleError);
  // unknown key
  CHECK_THROWS_AS(fd_oracle(schw, Pipeline::R, {{"t", 0.0}, {"r", 4.0}, {"theta", 1.0},
                                                {"phi", 1.0}, {"bogus", 1.0}}),
                  OracleError);
  // horizon crossing: metric components blow up inside the stencil
  CHECK_THROWS_AS(fd_oracle(schw, Pipeline::K, {{"t", 0.0}, {"r", 2.0}, {"theta", 1.0}, {"phi", 1.0}}),
                  OracleError);

  // a coordinate the metric depends on pinned to a single value
  MetricSpec pinned = make_metric("pinned", {"x", "y"}, {}, "++");
  pinned.set_component(0, 0, one());
  pinned.set_component(1, 1, parse("1 + x^2"));
  pinned.domain["x"] = {2.0, 2.0};
  pinned.domain["y"] = {0.1, 1.0};
  CHECK_THROWS_AS(fd_oracle(pinned, Pipeline::R, {{"x", 2.0}, {"y", 0.5}}), OracleError);

  // near the horizon the two step sizes disagree wildly: flagged, not silent
  OracleResult near = fd_oracle(schw, Pipeline::K,
                                {{"t", 0.0}, {"r", 2.002}, {"theta", 1.0}, {"phi", 1.0}});
  CHECK(near.flagged);
}
