#pragma once

// Dense coordinate-component tensors over symbolic entries.
//
// A ComponentTensor stores one Expr per index tuple, plus the chart (coordinate
// names, fixing the dimension) and the variance of each slot. Contraction and
// index raising/lowering live in geometry.hpp where the metric is available;
// here only variance-checked contraction against another tensor's slots is
// provided in the generic form.

#include <confcurv/expr.hpp>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace confcurv {

enum class Variance : std::uint8_t { Upper, Lower };

class TensorError : public Error {
 public:
  using Error::Error;
};

class ComponentTensor {
 public:
  ComponentTensor(std::vector<std::string> coords, std::vector<Variance> variance)
      : coords_(std::move(coords)), variance_(std::move(variance)) {
    std::size_t size = 1;
    for (std::size_t s = 0; s < variance_.size(); ++s) size *= dim();
    data_.assign(size, zero());
  }

  std::size_t dim() const { return coords_.size(); }
  std::size_t rank() const { return variance_.size(); }
  const std::vector<std::string>& coords() const { return coords_; }
  const std::vector<Variance>& variance() const { return variance_; }
  const std::vector<Expr>& data() const { return data_; }

  int jet_order = 0;  // highest metric-derivative order entering the entries

  Expr at(const std::vector<std::size_t>& idx) const { return data_[flatten(idx)]; }
  void set(const std::vector<std::size_t>& idx, Expr e) { data_[flatten(idx)] = e; }

  template <class... I>
  Expr operator()(I... i) const {
    return at({static_cast<std::size_t>(i)...});
  }

  bool structurally_zero() const {
    for (Expr e : data_)
      if (!e.is_zero()) return false;
    return true;
  }

  std::size_t flatten(const std::vector<std::size_t>& idx) const {
    if (idx.size() != rank()) throw TensorError("index rank mismatch");
    std::size_t f = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] >= dim()) throw TensorError("index out of range");
      f = f * dim() + idx[k];
    }
    return f;
  }

 private:
  std::vector<std::string> coords_;
  std::vector<Variance> variance_;
  std::vector<Expr> data_;
};

// Visits every index tuple of the given rank in row-major order.
inline void for_each_index(std::size_t dim, std::size_t rank,
                           const std::function<void(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> idx(rank, 0);
  while (true) {
    f(idx);
    std::size_t k = rank;
    while (k > 0) {
      if (++idx[k - 1] < dim) break;
      idx[k - 1] = 0;
      --k;
    }
    if (k == 0) return;
  }
}

// Contracts slot a (one variance) with slot b (the opposite variance).
inline ComponentTensor contract(const ComponentTensor& t, std::size_t a, std::size_t b) {
  if (a == b || a >= t.rank() || b >= t.rank())
    throw TensorError("contract: invalid slot pair");
  if (t.variance()[a] == t.variance()[b])
    throw TensorError("contract: slots must have opposite variance");
  std::vector<Variance> var;
  for (std::size_t k = 0; k < t.rank(); ++k)
    if (k != a && k != b) var.push_back(t.variance()[k]);
  ComponentTensor out(t.coords(), var);
  out.jet_order = t.jet_order;
  const std::size_t n = t.dim();
  for_each_index(n, out.rank(), [&](const std::vector<std::size_t>& idx) {
    std::vector<Expr> terms;
    terms.reserve(n);
    std::vector<std::size_t> full(t.rank());
    for (std::size_t m = 0; m < n; ++m) {
      std::size_t src = 0;
      for (std::size_t k = 0; k < t.rank(); ++k) {
        if (k == a || k == b)
          full[k] = m;
        else
          full[k] = idx[src++];
      }
      terms.push_back(t.at(full));
    }
    out.set(idx, add(std::move(terms)));
  });
  return out;
}

// Applies f to every entry (used to push simplification over a whole tensor).
inline ComponentTensor map_entries(const ComponentTensor& t,
                                   const std::function<Expr(Expr)>& f) {
  ComponentTensor out(t.coords(), t.variance());
  out.jet_order = t.jet_order;
  for_each_index(t.dim(), t.rank(), [&](const std::vector<std::size_t>& idx) {
    out.set(idx, f(t.at(idx)));
  });
  return out;
}

}  // namespace confcurv
