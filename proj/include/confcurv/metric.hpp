#pragma once

// Metric description: chart, parameters, signature, symmetric component
// matrix, sampling domain and parameter defaults.
//
// A MetricSpec owns a lazily filled geometry cache (shared across copies) so
// that the inverse metric, curvature tensors and derived scalars are computed
// once per metric instance. Mutating helpers reset the cache.

#include <confcurv/equivalence.hpp>
#include <confcurv/expr.hpp>
#include <confcurv/tensor.hpp>

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace confcurv {

class MetricError : public Error {
 public:
  using Error::Error;
};

struct GeometryCache;
struct MetricSpec;

struct MetricSpec {
  std::string name;
  std::vector<std::string> coords;  // chart order fixes component indices
  std::vector<std::string> params;
  std::string signature;  // one '-' or '+' per dimension
  std::vector<std::vector<Expr>> g;  // n x n, structurally symmetric
  std::map<std::string, Interval> domain;   // sampling interval per symbol
  std::map<std::string, double> defaults;   // parameter values
  int jet_order = 0;  // metric-derivative order already baked into g

  mutable std::shared_ptr<GeometryCache> cache;

  std::size_t dim() const { return coords.size(); }

  Expr component(std::size_t i, std::size_t j) const { return g.at(i).at(j); }

  void set_component(std::size_t i, std::size_t j, Expr e) {
    g.at(i).at(j) = e;
    g.at(j).at(i) = e;
    cache.reset();
  }

  void set_default(const std::string& param, double value) {
    if (std::find(params.begin(), params.end(), param) == params.end())
      throw MetricError("unknown parameter '" + param + "' for metric '" + name + "'");
    defaults[param] = value;
    domain[param] = Interval{value, value};
    cache.reset();
  }

  int negative_count() const {
    return static_cast<int>(std::count(signature.begin(), signature.end(), '-'));
  }

  // All symbols appearing in any component.
  std::set<std::string> used_symbols() const {
    std::set<std::string> out;
    for (const auto& row : g)
      for (Expr e : row) {
        const auto& s = free_symbols(e);
        out.insert(s.begin(), s.end());
      }
    return out;
  }

  void validate() const {
    const std::size_t n = dim();
    if (n == 0) throw MetricError("metric '" + name + "' has no coordinates");
    if (signature.size() != n)
      throw MetricError("metric '" + name + "': signature length " +
                        std::to_string(signature.size()) + " != dimension " +
                        std::to_string(n));
    for (char c : signature)
      if (c != '+' && c != '-')
        throw MetricError("metric '" + name + "': signature must consist of '+'/'-'");
    if (g.size() != n) throw MetricError("metric '" + name + "': component matrix size");
    for (const auto& row : g)
      if (row.size() != n)
        throw MetricError("metric '" + name + "': component matrix not square");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (g[i][j] != g[j][i])
          throw MetricError("metric '" + name + "': components not symmetric at (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
    std::set<std::string> known(coords.begin(), coords.end());
    if (known.size() != coords.size())
      throw MetricError("metric '" + name + "': duplicate coordinate names");
    for (const auto& p : params) {
      if (known.count(p))
        throw MetricError("metric '" + name + "': parameter '" + p +
                          "' collides with a coordinate");
      known.insert(p);
    }
    for (const auto& s : used_symbols())
      if (!known.count(s))
        throw MetricError("metric '" + name + "': component uses unknown symbol '" + s +
                          "'");
  }

  // Sampling order: coordinates in chart order, then parameters in declared
  // order. Parameters without an explicit interval are pinned to their default.
  DomainSampler sampler(std::uint64_t seed) const {
    std::vector<std::pair<std::string, Interval>> vars;
    for (const auto& c : coords) {
      auto it = domain.find(c);
      if (it == domain.end())
        throw MetricError("metric '" + name + "': no sampling interval for coordinate '" +
                          c + "'");
      vars.push_back({c, it->second});
    }
    for (const auto& p : params) {
      auto it = domain.find(p);
      if (it != domain.end()) {
        vars.push_back({p, it->second});
        continue;
      }
      auto dv = defaults.find(p);
      if (dv == defaults.end())
        throw MetricError("metric '" + name + "': parameter '" + p +
                          "' has neither interval nor default");
      vars.push_back({p, Interval{dv->second, dv->second}});
    }
    return DomainSampler(std::move(vars), seed);
  }

  // The metric as a rank-2 lower tensor.
  ComponentTensor as_tensor() const {
    ComponentTensor t(coords, {Variance::Lower, Variance::Lower});
    t.jet_order = jet_order;
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = 0; j < dim(); ++j) t.set({i, j}, g[i][j]);
    return t;
  }
};

inline MetricSpec make_metric(std::string name, std::vector<std::string> coords,
                              std::vector<std::string> params, std::string signature) {
  MetricSpec m;
  m.name = std::move(name);
  m.coords = std::move(coords);
  m.params = std::move(params);
  m.signature = std::move(signature);
  m.g.assign(m.dim(), std::vector<Expr>(m.dim(), zero()));
  return m;
}

// Lazily filled by the geometry/conformal layers; shared by copies of the
// owning MetricSpec. Not thread-safe: drive one metric from one thread.
struct GeometryCache {
  std::optional<Expr> det;
  std::optional<ComponentTensor> inverse;
  std::optional<ComponentTensor> christoffel;
  std::optional<ComponentTensor> riemann;       // R^i_{jkl}
  std::optional<ComponentTensor> riemann_low;   // R_{ijkl}
  std::optional<ComponentTensor> ricci;         // R_{jl}
  std::optional<Expr> ricci_scalar;
  std::optional<Expr> kretschmann;
  std::optional<ComponentTensor> weyl_low;      // C_{ijkl}
  std::optional<Expr> weyl_square;
  std::optional<int> weyl_square_sign;          // +1 / -1 over the domain
  std::optional<Expr> einstein_factor;
  std::shared_ptr<MetricSpec> preferred;        // rescaled representative
  std::optional<Expr> conformal_scalar;
};

inline GeometryCache& cache_of(const MetricSpec& m) {
  if (!m.cache) m.cache = std::make_shared<GeometryCache>();
  return *m.cache;
}

}  // namespace confcurv
