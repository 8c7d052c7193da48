#pragma once

// Invariant reports: one metric, the requested scalars in symbolic form, a
// genericity verdict, and numeric values at deterministically sampled points.
// JSON serialization keeps a stable field order and renders every floating
// point number as a decimal string with 15 significant digits, so exported
// documents are diffable and parse back to identical values.

#include <confcurv/catalog.hpp>
#include <confcurv/conformal.hpp>
#include <confcurv/fd.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace confcurv {

inline const std::vector<std::string>& scalar_names() {
  static const std::vector<std::string> names{"R", "K", "H", "J", "S"};
  return names;
}

struct SampleRow {
  Bindings bindings;
  std::map<std::string, double> values;  // keyed by scalar name
};

struct InvariantReport {
  std::string name;
  std::vector<std::string> requested;               // scalar names, given order
  std::map<std::string, std::optional<Expr>> scalars;  // all five keys
  std::string genericity;
  std::vector<SampleRow> samples;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
};

inline std::string format_sig15(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// Computes the report. In strict mode a non-generic metric aborts the run
// with NonGenericError as soon as H, J or S is requested; otherwise the
// unavailable scalars stay null and the verdict records why.
inline InvariantReport build_report(const MetricSpec& m,
                                    const std::vector<std::string>& requested,
                                    int points, std::uint64_t seed, double tol,
                                    bool strict,
                                    const std::optional<Bindings>& at = std::nullopt) {
  InvariantReport rep;
  rep.name = m.name;
  rep.seed = seed;
  rep.tolerance = tol;
  for (const auto& s : requested) {
    (void)pipeline_from_name(s);  // validates the name
    if (std::find(rep.requested.begin(), rep.requested.end(), s) == rep.requested.end())
      rep.requested.push_back(s);
  }
  for (const auto& s : scalar_names()) rep.scalars[s] = std::nullopt;

  bool conformal_requested = false;
  for (const auto& s : rep.requested)
    conformal_requested = conformal_requested || s == "H" || s == "J" || s == "S";

  GenericityReport gen;
  bool gen_known = false;
  try {
    gen = genericity_check(m, seed);
    rep.genericity = gen.verdict();
    gen_known = true;
  } catch (const Error& e) {
    rep.genericity = std::string("unavailable (") + e.what() + ")";
    if (conformal_requested) throw;
  }
  if (strict && conformal_requested && gen_known && !gen.generic)
    throw NonGenericError(detail::describe_failure(m, gen), gen);

  for (const auto& s : rep.requested) {
    try {
      if (s == "R") rep.scalars[s] = ricci_scalar(m);
      else if (s == "K") rep.scalars[s] = kretschmann_scalar(m);
      else if (s == "H") rep.scalars[s] = weyl_square(m);
      else if (s == "J") rep.scalars[s] = einstein_factor(m, seed);
      else rep.scalars[s] = conformal_scalar(m, seed);
    } catch (const NonGenericError&) {
      if (strict) throw;  // lenient runs leave the scalar null
    }
  }

  // Numeric spot checks: either the caller's explicit point or sampled ones.
  std::vector<Bindings> pts;
  if (at) {
    Bindings full = *at;
    for (const auto& [k, v] : full)
      if (std::find(m.coords.begin(), m.coords.end(), k) == m.coords.end() &&
          std::find(m.params.begin(), m.params.end(), k) == m.params.end())
        throw MetricError("'" + k + "' is neither a coordinate nor a parameter of metric '" +
                          m.name + "'");
    for (const auto& c : m.coords)
      if (!full.count(c))
        throw MetricError("evaluation point is missing coordinate '" + c + "'");
    for (const auto& p : m.params) {
      if (full.count(p)) continue;
      auto dv = m.defaults.find(p);
      if (dv == m.defaults.end())
        throw MetricError("parameter '" + p + "' is neither bound nor defaulted");
      full[p] = dv->second;
    }
    pts.push_back(std::move(full));
  } else if (points > 0) {
    DomainSampler sampler = m.sampler(seed);
    std::vector<Expr> exprs;
    for (const auto& s : rep.requested)
      if (rep.scalars[s]) exprs.push_back(*rep.scalars[s]);
    for (int i = 0; i < points; ++i) {
      Bindings p;
      sampler.sample_where([&](const Bindings& cand) {
        try {
          for (const Expr& e : exprs) (void)evaluate(e, cand);
          p = cand;
          return true;
        } catch (const EvalError&) {
          return false;
        }
      });
      pts.push_back(std::move(p));
    }
  }
  for (const auto& p : pts) {
    SampleRow row;
    row.bindings = p;
    for (const auto& s : rep.requested)
      if (rep.scalars[s]) row.values[s] = evaluate(*rep.scalars[s], p);
    rep.samples.push_back(std::move(row));
  }
  return rep;
}

inline nlohmann::ordered_json report_to_json(const InvariantReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  nlohmann::ordered_json sc;
  for (const auto& s : scalar_names()) {
    auto it = r.scalars.find(s);
    if (it != r.scalars.end() && it->second)
      sc[s] = to_string(*it->second);
    else
      sc[s] = nullptr;
  }
  j["scalars"] = sc;
  j["genericity"] = r.genericity;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.samples) {
    nlohmann::ordered_json b, v;
    for (const auto& [k, x] : row.bindings) b[k] = format_sig15(x);
    for (const auto& s : r.requested) {
      auto it = row.values.find(s);
      if (it != row.values.end()) v[s] = format_sig15(it->second);
    }
    rows.push_back({{"bindings", b}, {"values", v}});
  }
  j["samples"] = rows;
  j["seed"] = r.seed;
  j["tolerances"] = {{"value", format_sig15(r.tolerance)}};
  return j;
}

}  // namespace confcurv
