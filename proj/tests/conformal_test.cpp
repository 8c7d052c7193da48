#include <catch2/catch_amalgamated.hpp>

#include <confcurv/catalog.hpp>
#include <confcurv/conformal.hpp>
#include <confcurv/fd.hpp>
#include <confcurv/parse.hpp>

#include <cmath>

#include "support.hpp"

using namespace confcurv;
using testsupport::rel_dev;

TEST_CASE("weyl square closed forms") {
  {
    MetricSpec m = builtin("schwarzschild");
    DomainSampler s = m.sampler(3);
    CHECK(equivalent(weyl_square(m), parse("48*M^2/r^6"), s));
  }
  {
    MetricSpec m = builtin("reissner-nordstrom");
    DomainSampler s = m.sampler(3);
    CHECK(equivalent(weyl_square(m), parse("48*(M*r - q^2)^2/r^8"), s));
  }
  {
    MetricSpec m = builtin("godel");
    DomainSampler s = m.sampler(3);
    CHECK(equivalent(weyl_square(m), parse("4/(3*a^4)"), s));
  }
  {
    MetricSpec m = builtin("barriola-vilenkin");
    DomainSampler s = m.sampler(3);
    CHECK(equivalent(weyl_square(m), parse("(4/3)*(1 - k^2)^2/(k^4*r^4)"), s));
  }
}

TEST_CASE("weyl square of the preferred metric is a unit") {
  for (const char* name : {"schwarzschild", "reissner-nordstrom", "godel",
                           "barriola-vilenkin"}) {
    INFO("metric " << name);
    MetricSpec m = builtin(name);
    GenericityReport rep = genericity_check(m);
    REQUIRE(rep.generic);
    const MetricSpec& pm = preferred_metric(m);
    Expr unit = rep.sign > 0 ? one() : number(-1);
    DomainSampler s = m.sampler(29);
    CHECK(equivalent(weyl_square(pm), unit, s, 16, 1e-6));
  }
}

TEST_CASE("genericity verdicts") {
  CHECK(genericity_check(builtin("schwarzschild")).verdict() == "generic(+)");
  CHECK(genericity_check(builtin("godel")).verdict() == "generic(+)");

  GenericityReport flat = genericity_check(builtin("minkowski"));
  CHECK(flat.verdict() == "non-generic");
  CHECK(flat.max_abs == 0.0);

  MetricSpec cone = builtin("barriola-vilenkin");
  cone.set_default("k", 1.0);  // the deficit closes and the space flattens
  CHECK(genericity_check(cone).verdict() == "non-generic");
}

TEST_CASE("einstein factor closed forms and failures") {
  {
    MetricSpec m = builtin("schwarzschild");
    DomainSampler s = m.sampler(3);
    CHECK(equivalent(einstein_factor(m), parse("sqrt(48)*M/r^3"), s));
  }
  {
    MetricSpec m = builtin("godel");
    DomainSampler s = m.sampler(3);
    CHECK(equivalent(einstein_factor(m), parse("sqrt(4/3)/a^2"), s));
  }

  MetricSpec flat = builtin("minkowski");
  try {
    einstein_factor(flat);
    FAIL("expected a non-generic failure");
  } catch (const NonGenericError& e) {
    CHECK_FALSE(e.report().generic);
    CHECK(std::string(e.what()).find("minkowski") != std::string::npos);
  }
  CHECK_THROWS_AS(conformal_scalar(flat), NonGenericError);

  MetricSpec cone = builtin("barriola-vilenkin");
  cone.set_default("k", 1.0);
  CHECK_THROWS_AS(einstein_factor(cone), NonGenericError);
}

TEST_CASE("conformal scalar closed forms") {
  {
    MetricSpec m = builtin("schwarzschild");
    DomainSampler s = m.sampler(3);
    CHECK(equivalent(conformal_scalar(m), parse("(9*sqrt(3)/4)*(1 - r/(6*M))"), s));
  }
  {
    MetricSpec m = builtin("godel");
    DomainSampler s = m.sampler(3);
    CHECK(equivalent(conformal_scalar(m), parse("-sqrt(3)/2"), s));
  }
  {
    MetricSpec m = builtin("barriola-vilenkin");
    DomainSampler s = m.sampler(3);
    CHECK(equivalent(conformal_scalar(m), parse("sqrt(3)"), s));
  }
}

TEST_CASE("charged metric reduces to the uncharged one as q -> 0") {
  MetricSpec rn = builtin("reissner-nordstrom");
  Expr s_rn = conformal_scalar(rn);
  Bindings p{{"t", 0.0}, {"r", 4.0}, {"theta", 1.0}, {"phi", 1.0}, {"M", 1.0}, {"q", 1e-6}};
  double got = evaluate(s_rn, p);
  double want = 9.0 * std::sqrt(3.0) / 4.0 * (1.0 - 4.0 / 6.0);
  CHECK(rel_dev(got, want) < 1e-6);
}

TEST_CASE("scaling laws for conformal factors") {
  struct Probe {
    const char* metric;
    const char* factor;
  };
  const Probe probes[] = {
      {"schwarzschild", "2"},
      {"schwarzschild", "1 + r^2/100"},
      {"schwarzschild", "exp(theta/10)"},
      {"godel", "2"},
      {"godel", "exp(z/10)"},
      {"reissner-nordstrom", "2"},
      {"barriola-vilenkin", "1 + r^2/100"},
  };
  for (const Probe& probe : probes) {
    INFO("metric " << probe.metric << ", factor " << probe.factor);
    MetricSpec m = builtin(probe.metric);
    InvarianceReport rep = verify_invariance(m, parse(probe.factor));
    CHECK(rep.ok);
    for (const InvarianceDeviation& d : rep.deviations) {
      INFO(d.quantity);
      CHECK(d.max_rel <= rep.tol);
    }
  }
}

TEST_CASE("oracle agreement for the conformal pipeline") {
  for (const char* name : {"schwarzschild", "reissner-nordstrom", "godel",
                           "barriola-vilenkin"}) {
    INFO("metric " << name);
    MetricSpec m = builtin(name);
    Expr h = weyl_square(m);
    Expr j = einstein_factor(m);
    Expr s = conformal_scalar(m);

    DomainSampler sampler = m.sampler(4321);
    Bindings p = sampler.sample_where([&](const Bindings& b) {
      try {
        evaluate(h, b);
        evaluate(j, b);
        evaluate(s, b);
        return true;
      } catch (const EvalError&) {
        return false;
      }
    });
    CHECK(rel_dev(fd_oracle(m, Pipeline::H, p).value, evaluate(h, p)) < 1e-4);
    CHECK(rel_dev(fd_oracle(m, Pipeline::J, p).value, evaluate(j, p)) < 1e-4);
    CHECK(rel_dev(fd_oracle(m, Pipeline::S, p).value, evaluate(s, p)) < 1e-4);
  }
}

TEST_CASE("unimodular representative has unit determinant") {
  for (const char* name : {"schwarzschild", "godel"}) {
    INFO("metric " << name);
    MetricSpec m = builtin(name);
    MetricSpec rep = conformal_representative(m);
    // Lorentzian signature: det(g) < 0, so det of the representative is -1.
    DomainSampler s = m.sampler(7);
    CHECK(equivalent(metric_det(rep), number(-1), s));
  }
}

TEST_CASE("low dimensions are rejected") {
  MetricSpec sphere = make_metric("sphere", {"theta", "phi"}, {}, "++");
  sphere.set_component(0, 0, one());
  sphere.set_component(1, 1, parse("sin(theta)^2"));
  sphere.domain["theta"] = {0.3, 2.8};
  sphere.domain["phi"] = {0.1, 6.0};
  CHECK_THROWS_AS(weyl_square(sphere), TensorError);
  CHECK_THROWS_AS(conformal_scalar(sphere), TensorError);
}
