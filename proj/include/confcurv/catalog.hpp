#pragma once

// Built-in metric catalog and the line-oriented metric file format.
//
// Builtins ship with sampling domains and parameter defaults chosen so that
// every derived scalar stays finite and the Weyl square keeps one sign across
// the sampling box. Line elements with cross terms are converted to symmetric
// components by halving: a term c * dx dy contributes g_xy = g_yx = c/2.
//
// File format (one item per line, '#' starts a comment):
//
//   name = <free text>
//   coords = t, r, theta, phi
//   params = M, q
//   signature = -+++
//   g[0][0] = -(1 - 2*M/r)
//   domain r = 3 .. 10
//   default M = 1
//
// Components are sparse: unassigned entries are zero, assigning g[i][j] also
// assigns g[j][i], and assigning a component twice (directly or through the
// symmetric completion) is an error. Errors carry 1-based line numbers.

#include <confcurv/geometry.hpp>
#include <confcurv/metric.hpp>
#include <confcurv/parse.hpp>

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace confcurv {

class CatalogError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Builtins.

inline std::vector<std::string> builtin_names() {
  return {"schwarzschild", "reissner-nordstrom", "godel", "barriola-vilenkin",
          "minkowski"};
}

namespace detail {

inline MetricSpec builtin_schwarzschild() {
  MetricSpec m = make_metric("schwarzschild", {"t", "r", "theta", "phi"}, {"M"}, "-+++");
  m.set_component(0, 0, parse("-(1-2*M/r)"));
  m.set_component(1, 1, parse("1/(1-2*M/r)"));
  m.set_component(2, 2, parse("r^2"));
  m.set_component(3, 3, parse("r^2*sin(theta)^2"));
  m.domain["t"] = {0.0, 0.0};
  m.domain["r"] = {3.0, 10.0};
  m.domain["theta"] = {0.3, 2.8};
  m.domain["phi"] = {0.1, 6.0};
  m.defaults["M"] = 1.0;
  m.domain["M"] = {1.0, 1.0};
  return m;
}

inline MetricSpec builtin_reissner_nordstrom() {
  MetricSpec m =
      make_metric("reissner-nordstrom", {"t", "r", "theta", "phi"}, {"M", "q"}, "-+++");
  m.set_component(0, 0, parse("-(1-2*M/r+q^2/r^2)"));
  m.set_component(1, 1, parse("1/(1-2*M/r+q^2/r^2)"));
  m.set_component(2, 2, parse("r^2"));
  m.set_component(3, 3, parse("r^2*sin(theta)^2"));
  m.domain["t"] = {0.0, 0.0};
  m.domain["r"] = {3.0, 10.0};
  m.domain["theta"] = {0.3, 2.8};
  m.domain["phi"] = {0.1, 6.0};
  m.defaults["M"] = 1.0;
  m.defaults["q"] = 0.5;
  m.domain["M"] = {1.0, 1.0};
  m.domain["q"] = {0.5, 0.5};
  return m;
}

inline MetricSpec builtin_godel() {
  MetricSpec m = make_metric("godel", {"t", "r", "phi", "z"}, {"a"}, "-+++");
  m.set_component(0, 0, number(-1));
  m.set_component(1, 1, parse("1/(1+r^2/(4*a^2))"));
  m.set_component(2, 2, parse("r^2*(1-r^2/(4*a^2))"));
  m.set_component(3, 3, number(1));
  // Line element cross term -(sqrt(2) r^2 / a) dt dphi, halved.
  m.set_component(0, 2, parse("-sqrt(2)*r^2/(2*a)"));
  m.domain["t"] = {0.1, 1.0};
  m.domain["r"] = {0.2, 1.5};
  m.domain["phi"] = {0.1, 1.0};
  m.domain["z"] = {0.1, 1.0};
  m.defaults["a"] = 1.0;
  m.domain["a"] = {1.0, 1.0};
  return m;
}

inline MetricSpec builtin_barriola_vilenkin() {
  MetricSpec m = make_metric("barriola-vilenkin", {"t", "r", "theta", "phi"}, {"k"}, "-+++");
  m.set_component(0, 0, number(-1));
  m.set_component(1, 1, number(1));
  m.set_component(2, 2, parse("k^2*r^2"));
  m.set_component(3, 3, parse("k^2*r^2*sin(theta)^2"));
  m.domain["t"] = {0.0, 0.0};
  m.domain["r"] = {1.0, 5.0};
  m.domain["theta"] = {0.3, 2.8};
  m.domain["phi"] = {0.1, 6.0};
  m.defaults["k"] = 0.5;
  m.domain["k"] = {0.5, 0.5};
  return m;
}

inline MetricSpec builtin_minkowski() {
  MetricSpec m = make_metric("minkowski", {"t", "x", "y", "z"}, {}, "-+++");
  m.set_component(0, 0, number(-1));
  m.set_component(1, 1, number(1));
  m.set_component(2, 2, number(1));
  m.set_component(3, 3, number(1));
  for (const char* c : {"t", "x", "y", "z"}) m.domain[c] = {-1.0, 1.0};
  return m;
}

}  // namespace detail

inline MetricSpec builtin(const std::string& name) {
  MetricSpec m;
  if (name == "schwarzschild") {
    m = detail::builtin_schwarzschild();
  } else if (name == "reissner-nordstrom") {
    m = detail::builtin_reissner_nordstrom();
  } else if (name == "godel") {
    m = detail::builtin_godel();
  } else if (name == "barriola-vilenkin") {
    m = detail::builtin_barriola_vilenkin();
  } else if (name == "minkowski") {
    m = detail::builtin_minkowski();
  } else {
    std::string known;
    for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
    throw CatalogError("unknown builtin metric '" + name + "' (known: " + known + ")");
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Metric files.

namespace detail {

inline std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_idents(const std::string& s, int line) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw CatalogError("line " + std::to_string(line) + ": empty name in list");
    out.push_back(item);
  }
  if (out.empty())
    throw CatalogError("line " + std::to_string(line) + ": empty list");
  return out;
}

inline double parse_real(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size())
      throw CatalogError("line " + std::to_string(line) + ": trailing characters after number '" + s + "'");
    return v;
  } catch (const CatalogError&) {
    throw;
  } catch (const std::exception&) {
    throw CatalogError("line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  }
}

inline std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace detail

inline MetricSpec load_metric_stream(std::istream& in, const std::string& origin) {
  using detail::trim;
  static const std::regex g_re(R"(^g\s*\[\s*(\d+)\s*\]\s*\[\s*(\d+)\s*\]\s*=\s*(.*)$)");
  static const std::regex domain_re(R"(^domain\s+([A-Za-z_]\w*)\s*=\s*(\S+)\s*\.\.\s*(\S+)\s*$)");
  static const std::regex default_re(R"(^default\s+([A-Za-z_]\w*)\s*=\s*(\S+)\s*$)");
  static const std::regex kv_re(R"(^(name|coords|params|signature)\s*=\s*(.*)$)");

  std::string name;
  std::vector<std::string> coords, params;
  std::string signature;
  bool saw_name = false, saw_coords = false, saw_params = false, saw_sig = false;
  std::vector<std::tuple<std::size_t, std::size_t, Expr, int>> comps;
  std::vector<std::tuple<std::string, double, double, int>> domains;
  std::vector<std::tuple<std::string, double, int>> defaults;

  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::smatch mt;
    if (std::regex_match(line, mt, g_re)) {
      std::size_t i = std::stoul(mt[1]);
      std::size_t j = std::stoul(mt[2]);
      std::string body = trim(mt[3]);
      if (body.empty())
        throw CatalogError("line " + std::to_string(lineno) + ": empty component expression");
      Expr e;
      try {
        e = parse(body);
      } catch (const Error& err) {
        throw CatalogError("line " + std::to_string(lineno) + ": " + err.what());
      }
      comps.emplace_back(i, j, e, lineno);
    } else if (std::regex_match(line, mt, domain_re)) {
      domains.emplace_back(mt[1], detail::parse_real(mt[2], lineno),
                           detail::parse_real(mt[3], lineno), lineno);
    } else if (std::regex_match(line, mt, default_re)) {
      defaults.emplace_back(mt[1], detail::parse_real(mt[2], lineno), lineno);
    } else if (std::regex_match(line, mt, kv_re)) {
      const std::string key = mt[1];
      const std::string value = trim(mt[2]);
      auto once = [&](bool& seen) {
        if (seen)
          throw CatalogError("line " + std::to_string(lineno) + ": duplicate '" + key + "' line");
        seen = true;
      };
      if (key == "name") {
        once(saw_name);
        name = value;
      } else if (key == "coords") {
        once(saw_coords);
        coords = detail::split_idents(value, lineno);
      } else if (key == "params") {
        once(saw_params);
        params = detail::split_idents(value, lineno);
      } else {
        once(saw_sig);
        signature = value;
      }
    } else {
      throw CatalogError("line " + std::to_string(lineno) + ": unrecognized line '" + line + "'");
    }
  }

  if (!saw_coords)
    throw CatalogError(origin + ": missing 'coords' line");
  if (!saw_sig)
    throw CatalogError(origin + ": missing 'signature' line");
  if (!saw_name || name.empty()) name = origin;

  MetricSpec m = make_metric(name, coords, params, signature);
  const std::size_t n = m.dim();

  std::set<std::pair<std::size_t, std::size_t>> assigned;
  for (const auto& [i, j, e, ln] : comps) {
    if (i >= n || j >= n)
      throw CatalogError("line " + std::to_string(ln) + ": component index g[" +
                         std::to_string(i) + "][" + std::to_string(j) +
                         "] out of range for dimension " + std::to_string(n));
    auto key = std::minmax(i, j);
    if (!assigned.insert(key).second)
      throw CatalogError("line " + std::to_string(ln) + ": component g[" + std::to_string(i) +
                         "][" + std::to_string(j) +
                         "] already assigned (directly or via symmetry)");
    m.set_component(i, j, e);
  }
  std::set<std::string> known(coords.begin(), coords.end());
  known.insert(params.begin(), params.end());
  for (const auto& [sym, lo, hi, ln] : domains) {
    if (!known.count(sym))
      throw CatalogError("line " + std::to_string(ln) + ": domain for unknown symbol '" + sym + "'");
    if (!(lo <= hi))
      throw CatalogError("line " + std::to_string(ln) + ": empty interval " +
                         detail::format_real(lo) + " .. " + detail::format_real(hi));
    m.domain[sym] = {lo, hi};
  }
  for (const auto& [sym, v, ln] : defaults) {
    if (std::find(params.begin(), params.end(), sym) == params.end())
      throw CatalogError("line " + std::to_string(ln) + ": default for unknown parameter '" + sym + "'");
    m.defaults[sym] = v;
  }

  try {
    m.validate();
  } catch (const Error& err) {
    throw CatalogError(origin + ": " + err.what());
  }
  // When the file carries enough sampling data, confirm the declared
  // signature against the sign pattern of the component matrix.
  bool sampleable = true;
  try {
    m.sampler(0);
  } catch (const Error&) {
    sampleable = false;
  }
  if (sampleable) verify_signature(m);
  return m;
}

inline MetricSpec load_metric(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CatalogError("cannot open metric file '" + path + "'");
  return load_metric_stream(in, path);
}

inline void save_metric_stream(const MetricSpec& m, std::ostream& out) {
  out << "name = " << m.name << "\n";
  out << "coords = ";
  for (std::size_t i = 0; i < m.coords.size(); ++i)
    out << (i ? ", " : "") << m.coords[i];
  out << "\n";
  if (!m.params.empty()) {
    out << "params = ";
    for (std::size_t i = 0; i < m.params.size(); ++i)
      out << (i ? ", " : "") << m.params[i];
    out << "\n";
  }
  out << "signature = " << m.signature << "\n\n";
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = i; j < m.dim(); ++j)
      if (m.g[i][j] != zero())
        out << "g[" << i << "][" << j << "] = " << to_string(m.g[i][j]) << "\n";
  out << "\n";
  auto dump_domain = [&](const std::string& sym) {
    auto it = m.domain.find(sym);
    if (it == m.domain.end()) return;
    out << "domain " << sym << " = " << detail::format_real(it->second.lo) << " .. "
        << detail::format_real(it->second.hi) << "\n";
  };
  for (const auto& c : m.coords) dump_domain(c);
  for (const auto& p : m.params) dump_domain(p);
  for (const auto& p : m.params) {
    auto it = m.defaults.find(p);
    if (it != m.defaults.end())
      out << "default " << p << " = " << detail::format_real(it->second) << "\n";
  }
}

inline void save_metric(const MetricSpec& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CatalogError("cannot write metric file '" + path + "'");
  save_metric_stream(m, out);
  if (!out) throw CatalogError("failed while writing metric file '" + path + "'");
}

}  // namespace confcurv
