#pragma once

#include <array>
#include <cstring>

#include "pinnlab/common.hpp"

namespace pinnlab {

/// Number of entries in the packed upper triangle of a d x d symmetric matrix.
inline constexpr int packed_size(int d) { return d * (d + 1) / 2; }

/// Index of (i, j), i <= j, in the row-major packed upper triangle.
inline constexpr int packed_index(int d, int i, int j) {
  return i * d - i * (i - 1) / 2 + (j - i);
}

/// Value, input gradient and input Hessian of a scalar field at one point.
///
/// The Hessian is stored as its packed upper triangle only, so symmetry holds
/// by construction. Dimensions up to kMaxDim (= 4) are supported, which covers
/// every target problem (space dim <= 3 plus time).
struct Jet2 {
  int dim = 0;
  double value = 0.0;
  std::array<double, kMaxDim> grad{};
  std::array<double, packed_size(kMaxDim)> hess{};

  Jet2() = default;
  explicit Jet2(int d) : dim(d) {
    require(d >= 1 && d <= kMaxDim, "Jet2: dim out of range");
  }

  double hess_at(int i, int j) const {
    if (i > j) std::swap(i, j);
    return hess[packed_index(dim, i, j)];
  }
  void set_hess(int i, int j, double v) {
    if (i > j) std::swap(i, j);
    hess[packed_index(dim, i, j)] = v;
  }

  Jet2& operator+=(const Jet2& o) {
    value += o.value;
    for (int i = 0; i < dim; ++i) grad[i] += o.grad[i];
    for (int e = 0; e < packed_size(dim); ++e) hess[e] += o.hess[e];
    return *this;
  }
  Jet2& operator*=(double a) {
    value *= a;
    for (int i = 0; i < dim; ++i) grad[i] *= a;
    for (int e = 0; e < packed_size(dim); ++e) hess[e] *= a;
    return *this;
  }

  friend Jet2 operator*(double a, Jet2 j) {
    j *= a;
    return j;
  }
  friend Jet2 operator+(Jet2 a, const Jet2& b) {
    a += b;
    return a;
  }
};

/// Exact product rule for jets: (g*u, g'u + gu', g''u + g'u' + u'g' + gu'').
inline Jet2 jet_mul(const Jet2& a, const Jet2& b) {
  require(a.dim == b.dim, "jet_mul: dimension mismatch");
  Jet2 r(a.dim);
  r.value = a.value * b.value;
  for (int i = 0; i < a.dim; ++i)
    r.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
  for (int i = 0; i < a.dim; ++i)
    for (int j = i; j < a.dim; ++j) {
      const int e = packed_index(a.dim, i, j);
      r.hess[e] = a.hess[e] * b.value + a.grad[i] * b.grad[j] +
                  a.grad[j] * b.grad[i] + a.value * b.hess[e];
    }
  return r;
}

}  // namespace pinnlab
