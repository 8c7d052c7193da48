#pragma once

// Command-line front end.
//
// Subcommands:
//   invariants  symbolic scalars plus numeric values at sampled points
//   table       the four-metric comparison table (symbolic + spot values)
//   check       conformal rescaling laws for a user-supplied factor
//   export      the invariants report as JSON
//
// Exit codes: 0 success, 1 a check failed, 2 the metric is not generic,
// 3 input or domain error. These are a stable contract.

#include <confcurv/report.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace confcurv::cli {

inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kNonGeneric = 2;
inline constexpr int kInputError = 3;

class CliError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string command;
  std::string builtin_name;
  std::string file;
  std::vector<std::string> scalars;
  int points = 8;
  double tol = 1e-6;
  std::string format = "text";
  std::string factor;
  std::optional<Bindings> at;
  Bindings overrides;
  std::uint64_t seed = 20240801;
  std::string out;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = confcurv::detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline Bindings parse_assignments(const std::string& text, const std::string& flag) {
  Bindings out;
  for (const auto& item : split_csv(text)) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw CliError(flag + ": expected name=value, got '" + item + "'");
    std::string key = confcurv::detail::trim(item.substr(0, eq));
    std::string val = confcurv::detail::trim(item.substr(eq + 1));
    if (key.empty()) throw CliError(flag + ": empty name in '" + item + "'");
    try {
      std::size_t pos = 0;
      double v = std::stod(val, &pos);
      if (pos != val.size()) throw std::invalid_argument(val);
      if (!out.emplace(key, v).second)
        throw CliError(flag + ": '" + key + "' assigned twice");
    } catch (const CliError&) {
      throw;
    } catch (const std::exception&) {
      throw CliError(flag + ": expected a number for '" + key + "', got '" + val + "'");
    }
  }
  return out;
}

inline MetricSpec resolve_metric(const RunConfig& cfg) {
  if (cfg.builtin_name.empty() == cfg.file.empty())
    throw CliError("pass exactly one of --builtin or --file");
  MetricSpec m =
      cfg.builtin_name.empty() ? load_metric(cfg.file) : builtin(cfg.builtin_name);
  for (const auto& [k, v] : cfg.overrides) m.set_default(k, v);
  return m;
}

inline void render_text(const InvariantReport& r, std::ostream& os) {
  os << "metric: " << r.name << "\n";
  os << "genericity: " << r.genericity << "\n";
  for (const auto& s : r.requested) {
    auto it = r.scalars.find(s);
    os << "  " << s << " = "
       << (it != r.scalars.end() && it->second ? to_string(*it->second) : "(unavailable)")
       << "\n";
  }
  if (r.samples.empty()) return;
  os << "samples (seed " << r.seed << "):\n";
  for (const auto& row : r.samples) {
    os << "  at ";
    bool first = true;
    for (const auto& [k, v] : row.bindings) {
      os << (first ? "" : ", ") << k << "=" << format_sig15(v);
      first = false;
    }
    os << "\n";
    for (const auto& s : r.requested) {
      auto it = row.values.find(s);
      if (it != row.values.end())
        os << "      " << s << " = " << format_sig15(it->second) << "\n";
    }
  }
}

}  // namespace detail

inline int cmd_invariants(const RunConfig& cfg) {
  MetricSpec m = detail::resolve_metric(cfg);
  int points = cfg.at ? 0 : cfg.points;
  InvariantReport rep = build_report(m, cfg.scalars, points, cfg.seed, cfg.tol,
                                     /*strict=*/true, cfg.at);
  if (cfg.format == "json")
    std::cout << report_to_json(rep).dump(2) << "\n";
  else
    detail::render_text(rep, std::cout);
  return kOk;
}

inline int cmd_table(const RunConfig& cfg) {
  const std::vector<std::string> rows{"schwarzschild", "reissner-nordstrom", "godel",
                                      "barriola-vilenkin"};
  const std::vector<std::string> cols{"R", "K", "S"};
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& name : rows) {
    MetricSpec m = builtin(name);
    for (const auto& [k, v] : cfg.overrides) m.set_default(k, v);
    InvariantReport rep =
        build_report(m, cols, cfg.points, cfg.seed, cfg.tol, /*strict=*/true);
    if (cfg.format == "json") {
      arr.push_back(report_to_json(rep));
    } else {
      detail::render_text(rep, std::cout);
      std::cout << "\n";
    }
  }
  if (cfg.format == "json") std::cout << arr.dump(2) << "\n";
  return kOk;
}

inline int cmd_check(const RunConfig& cfg) {
  MetricSpec m = detail::resolve_metric(cfg);
  if (cfg.factor.empty()) throw CliError("check needs --factor");
  Expr alpha = parse(cfg.factor);
  // The factor must be a positive function of the metric's own symbols.
  std::set<std::string> known(m.coords.begin(), m.coords.end());
  known.insert(m.params.begin(), m.params.end());
  for (const auto& s : free_symbols(alpha))
    if (!known.count(s))
      throw CliError("factor uses '" + s + "', which is not a symbol of metric '" +
                     m.name + "'");
  DomainSampler sampler = m.sampler(cfg.seed + 7);
  for (int i = 0; i < 32; ++i) {
    Bindings p = sampler.sample();
    double a;
    try {
      a = evaluate(alpha, p);
    } catch (const EvalError& e) {
      throw CliError(std::string("factor failed to evaluate on the domain: ") + e.what());
    }
    if (!(a > 0))
      throw CliError("factor is not positive on the domain (value " + format_sig15(a) +
                     " at a sampled point)");
  }
  InvarianceReport rep = verify_invariance(m, alpha, cfg.points, cfg.seed, cfg.tol);
  std::cout << "metric: " << m.name << "\n";
  std::cout << "factor: " << to_string(alpha) << "\n";
  for (const auto& d : rep.deviations)
    std::cout << "  " << d.quantity << ": max rel deviation " << format_sig15(d.max_rel)
              << (d.max_rel <= rep.tol ? "  ok" : "  FAIL") << "\n";
  std::cout << (rep.ok ? "pass" : "fail") << " (tol " << format_sig15(rep.tol) << ")\n";
  return rep.ok ? kOk : kCheckFailed;
}

inline int cmd_export(const RunConfig& cfg) {
  MetricSpec m = detail::resolve_metric(cfg);
  int points = cfg.at ? 0 : cfg.points;
  InvariantReport rep = build_report(m, cfg.scalars, points, cfg.seed, cfg.tol,
                                     /*strict=*/false, cfg.at);
  std::string doc = report_to_json(rep).dump(2) + "\n";
  if (cfg.out.empty()) {
    std::cout << doc;
  } else {
    std::ofstream f(cfg.out);
    if (!f) throw CliError("cannot write '" + cfg.out + "'");
    f << doc;
  }
  return kOk;
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"curvature invariants and conformal rescalings of symbolic metrics"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string scalars_csv, at_csv, set_csv;

  auto add_source = [&](CLI::App* sub) {
    sub->add_option("--builtin", cfg.builtin_name, "builtin metric name");
    sub->add_option("--file", cfg.file, "metric definition file");
    sub->add_option("--set", set_csv, "parameter overrides, e.g. k=1,M=2");
    sub->add_option("--seed", cfg.seed, "sampling seed");
    sub->add_option("--points", cfg.points, "number of sample points")
        ->check(CLI::Range(1, 100000));
    sub->add_option("--tol", cfg.tol, "tolerance")->check(CLI::PositiveNumber);
  };

  CLI::App* inv = app.add_subcommand("invariants", "compute curvature scalars");
  add_source(inv);
  inv->add_option("--scalars", scalars_csv, "subset of R,K,H,J,S (default R,K,S)");
  inv->add_option("--at", at_csv, "explicit evaluation point, e.g. r=4,theta=1.1");
  inv->add_option("--format", cfg.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  CLI::App* tab = app.add_subcommand("table", "the four-metric comparison table");
  tab->add_option("--set", set_csv, "parameter overrides");
  tab->add_option("--seed", cfg.seed, "sampling seed");
  tab->add_option("--points", cfg.points, "sample points per row")
      ->check(CLI::Range(1, 100000));
  tab->add_option("--tol", cfg.tol, "tolerance recorded in the report")
      ->check(CLI::PositiveNumber);
  tab->add_option("--format", cfg.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  CLI::App* chk = app.add_subcommand("check", "verify conformal rescaling laws");
  add_source(chk);
  chk->add_option("--factor", cfg.factor, "conformal factor expression")->required();

  CLI::App* exp = app.add_subcommand("export", "write the invariants report as JSON");
  add_source(exp);
  exp->add_option("--scalars", scalars_csv, "subset of R,K,H,J,S (default all)");
  exp->add_option("--at", at_csv, "explicit evaluation point");
  exp->add_option("--out", cfg.out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (!set_csv.empty()) cfg.overrides = detail::parse_assignments(set_csv, "--set");
    if (!at_csv.empty()) cfg.at = detail::parse_assignments(at_csv, "--at");
    if (inv->parsed()) {
      cfg.scalars = scalars_csv.empty() ? std::vector<std::string>{"R", "K", "S"}
                                        : detail::split_csv(scalars_csv);
      return cmd_invariants(cfg);
    }
    if (tab->parsed()) {
      cfg.points = tab->count("--points") ? cfg.points : 1;
      return cmd_table(cfg);
    }
    if (chk->parsed()) return cmd_check(cfg);
    cfg.scalars = scalars_csv.empty() ? scalar_names() : detail::split_csv(scalars_csv);
    return cmd_export(cfg);
  } catch (const NonGenericError& e) {
    std::cout << "non-generic: " << e.what() << "\n";
    return kNonGeneric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace confcurv::cli
