#pragma once

#include <Eigen/Dense>
#include <functional>

#include "pinnlab/autodiff.hpp"
#include "pinnlab/time_grid.hpp"

namespace pinnlab {

/// Scalar source/data term evaluated at a (spatial or space-time) point.
using SourceFn = std::function<double(Point)>;

enum class Scheme { Elliptic, ExactTime, IE, EE };

/// Constant-coefficient self-adjoint elliptic operator
///   L u = -sum_ij a_ij u_{x_i x_j} + c u
/// with a symmetric positive definite and c >= 0. For constant a the
/// divergence and non-divergence forms coincide. theta caches the smallest
/// eigenvalue of a (the ellipticity constant).
struct EllipticOperator {
  int dim = 0;
  std::array<double, packed_size(kMaxDim)> a{};  // packed upper triangle
  double c = 0.0;
  double theta = 0.0;

  double a_at(int i, int j) const {
    if (i > j) std::swap(i, j);
    return a[packed_index(dim, i, j)];
  }

  static EllipticOperator make(int d, std::span<const double> a_full,
                               double c) {
    require(d >= 1 && d <= kMaxDim, "EllipticOperator: dim out of range");
    require(static_cast<int>(a_full.size()) == d * d,
            "EllipticOperator: coefficient matrix must be d x d");
    require(c >= 0.0, "EllipticOperator: reaction constant must be >= 0");
    EllipticOperator op;
    op.dim = d;
    op.c = c;
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        m(i, j) = a_full[i * d + j];
        if (j >= i) op.a[packed_index(d, i, j)] = a_full[i * d + j];
      }
    require((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0,
            "EllipticOperator: coefficient matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    op.theta = es.eigenvalues().minCoeff();
    require(op.theta > 0.0,
            "EllipticOperator: coefficient matrix must be positive definite");
    return op;
  }

  /// -Laplacian + c, i.e. a = identity.
  static EllipticOperator laplace(int d, double c = 0.0) {
    std::vector<double> id(d * d, 0.0);
    for (int i = 0; i < d; ++i) id[i * d + i] = 1.0;
    return make(d, id, c);
  }
};

/// L applied to a jet of matching dimension:
/// -sum_ij a_ij hess_ij + c * value.
inline double apply_L(const EllipticOperator& op, const Jet2& jet) {
  require(jet.dim == op.dim, "apply_L: jet dimension mismatch");
  double acc = 0.0;
  int e = 0;
  for (int i = 0; i < op.dim; ++i)
    for (int j = i; j < op.dim; ++j, ++e)
      acc += (i == j ? 1.0 : 2.0) * op.a[e] * jet.hess[e];
  return -acc + op.c * jet.value;
}

/// L acting on the spatial block of a space-time jet (time last coordinate).
inline double apply_L_spatial(const EllipticOperator& op, const Jet2& jet) {
  require(jet.dim == op.dim + 1, "apply_L_spatial: jet must be space-time");
  double acc = 0.0;
  for (int i = 0; i < op.dim; ++i)
    for (int j = i; j < op.dim; ++j)
      acc += (i == j ? 1.0 : 2.0) * op.a_at(i, j) * jet.hess_at(i, j);
  return -acc + op.c * jet.value;
}

/// Pointwise strong-form elliptic residual Lv(x) - f(x).
inline double residual_elliptic(const Field& v, const EllipticOperator& op,
                                const SourceFn& f, Point x) {
  return apply_L(op, v.jet(x)) - f(x);
}

/// Pointwise parabolic residual v_t + Lv - f at a space-time point (x, t).
inline double residual_parabolic_exact(const Field& v,
                                       const EllipticOperator& op,
                                       const SourceFn& f, Point xt) {
  const Jet2 jet = v.jet(xt);
  const double u_t = jet.grad[op.dim];
  return u_t + apply_L_spatial(op, jet) - f(xt);
}

namespace detail {

inline void space_time(Point x, double t, double* xt, int ds) {
  for (int i = 0; i < ds; ++i) xt[i] = x[i];
  xt[ds] = t;
}

}  // namespace detail

/// Time-discrete residual at spatial point x and step n (1 <= n <= N):
///   IE: (v^n - v^{n-1})/k_n + L v^n     - f^n
///   EE: (v^n - v^{n-1})/k_n + L v^{n-1} - f^{n-1}
/// where v^m(.) = v(., t^m). Spatial derivatives enter only through L.
inline double residual_time_discrete(const Field& v,
                                     const EllipticOperator& op,
                                     const SourceFn& f, Point x,
                                     const TimeGrid& grid, int n,
                                     Scheme scheme) {
  require(scheme == Scheme::IE || scheme == Scheme::EE,
          "residual_time_discrete: scheme must be IE or EE");
  require(n >= 1 && n <= grid.steps(),
          "residual_time_discrete: step index out of range");
  const int ds = op.dim;
  require(static_cast<int>(x.size()) == ds,
          "residual_time_discrete: spatial point dimension mismatch");
  const double kn = grid.k(n);
  double xt[kMaxDim];

  detail::space_time(x, grid.t(n), xt, ds);
  const Jet2 jet_n = v.jet(Point(xt, ds + 1));
  detail::space_time(x, grid.t(n - 1), xt, ds);
  const Jet2 jet_nm1 = v.jet(Point(xt, ds + 1));

  const double dq = (jet_n.value - jet_nm1.value) / kn;
  const int s = scheme == Scheme::IE ? n : n - 1;
  const Jet2& jet_s = scheme == Scheme::IE ? jet_n : jet_nm1;
  detail::space_time(x, grid.t(s), xt, ds);
  return dq + apply_L_spatial(op, jet_s) - f(Point(xt, ds + 1));
}

}  // namespace pinnlab
