#pragma once

#include <memory>
#include <string>

#include "pinnlab/operators.hpp"
#include "pinnlab/sampling.hpp"

namespace pinnlab {

/// A complete model problem: Lu = f with u = 0 on the boundary, or
/// u_t + Lu = f with u(0) = u0, plus an optional manufactured solution.
struct ProblemSpec {
  std::string name;
  Domain domain = Domain::Interval;
  EllipticOperator op;
  bool parabolic = false;
  double T = 0.0;
  SourceFn f;
  std::shared_ptr<const Field> u0;     // spatial field; parabolic only
  std::shared_ptr<const Field> exact;  // over x (elliptic) or (x,t)

  int spatial_dim() const { return domain_dim(domain); }
  int field_dim() const { return spatial_dim() + (parabolic ? 1 : 0); }
};

namespace fields {

constexpr double kPi = 3.14159265358979323846;

/// sin(pi x) on the interval.
inline std::shared_ptr<const Field> sin_pi_x() {
  return std::make_shared<AnalyticField>(1, [](Point x) {
    Jet2 j(1);
    j.value = std::sin(kPi * x[0]);
    j.grad[0] = kPi * std::cos(kPi * x[0]);
    j.hess[0] = -kPi * kPi * std::sin(kPi * x[0]);
    return j;
  });
}

/// sin(pi x) sin(pi y) on the square.
inline std::shared_ptr<const Field> sin_pi_xy() {
  return std::make_shared<AnalyticField>(2, [](Point x) {
    const double sx = std::sin(kPi * x[0]), cx = std::cos(kPi * x[0]);
    const double sy = std::sin(kPi * x[1]), cy = std::cos(kPi * x[1]);
    Jet2 j(2);
    j.value = sx * sy;
    j.grad[0] = kPi * cx * sy;
    j.grad[1] = kPi * sx * cy;
    j.set_hess(0, 0, -kPi * kPi * sx * sy);
    j.set_hess(0, 1, kPi * kPi * cx * cy);
    j.set_hess(1, 1, -kPi * kPi * sx * sy);
    return j;
  });
}

/// Decaying heat solution exp(-alpha pi^2 t) sin(pi x) over (x, t); solves
/// u_t - alpha u_xx = 0.
inline std::shared_ptr<const Field> heat_decay(double alpha = 1.0) {
  return std::make_shared<AnalyticField>(2, [alpha](Point xt) {
    const double lam = alpha * kPi * kPi;
    const double e = std::exp(-lam * xt[1]);
    const double s = std::sin(kPi * xt[0]);
    const double c = std::cos(kPi * xt[0]);
    Jet2 j(2);
    j.value = e * s;
    j.grad[0] = kPi * e * c;
    j.grad[1] = -lam * e * s;
    j.set_hess(0, 0, -kPi * kPi * e * s);
    j.set_hess(0, 1, -lam * kPi * e * c);
    j.set_hess(1, 1, lam * lam * e * s);
    return j;
  });
}

/// Wiggly initial profile x(1-x)(1 + 0.9 sin(3 pi x)); vanishes at both
/// endpoints. Stand-in initial datum for the figure presets.
inline std::shared_ptr<const Field> bump_profile() {
  return std::make_shared<AnalyticField>(1, [](Point x) {
    Jet2 g(1), m(1);
    g.value = x[0] * (1.0 - x[0]);
    g.grad[0] = 1.0 - 2.0 * x[0];
    g.hess[0] = -2.0;
    m.value = 1.0 + 0.9 * std::sin(3 * kPi * x[0]);
    m.grad[0] = 2.7 * kPi * std::cos(3 * kPi * x[0]);
    m.hess[0] = -8.1 * kPi * kPi * std::sin(3 * kPi * x[0]);
    return jet_mul(g, m);
  });
}

namespace detail {
// z^alpha on the branch with arg in [0, 3 pi / 2], as (re, im).
inline std::pair<double, double> zpow(double r, double psi, double alpha) {
  const double m = std::pow(r, alpha);
  return {m * std::cos(alpha * psi), m * std::sin(alpha * psi)};
}
}  // namespace detail

/// Harmonic corner singularity r^{2/3} sin(2 psi / 3) about the reentrant
/// corner (1/2, 1/2) of the L-shape, with psi measured from the vertical
/// reentrant edge. Vanishes on both reentrant edges; its Hessian blows up
/// like r^{-4/3} toward the corner.
inline std::shared_ptr<const Field> lshape_singular() {
  return std::make_shared<AnalyticField>(2, [](Point x) {
    const double dx = x[0] - 0.5, dy = x[1] - 0.5;
    const double r = std::hypot(dx, dy);
    require(r > 0.0, "lshape_singular: evaluation at the corner");
    double phi = std::atan2(dy, dx);
    const double psi = phi >= kPi / 2 ? phi - kPi / 2 : phi + 3 * kPi / 2;
    const double a = 2.0 / 3.0;
    const auto z13 = detail::zpow(r, psi, a);        // z^{2/3}
    const auto zm13 = detail::zpow(r, psi, a - 1);   // z^{-1/3}
    const auto zm43 = detail::zpow(r, psi, a - 2);   // z^{-4/3}
    Jet2 j(2);
    j.value = z13.second;
    // d/dx acts as multiplication by -i on z = dy - i dx, d/dy by +1.
    j.grad[0] = a * -zm13.first;
    j.grad[1] = a * zm13.second;
    const double c2 = a * (a - 1.0);
    j.set_hess(0, 0, -c2 * zm43.second);
    j.set_hess(0, 1, -c2 * zm43.first);
    j.set_hess(1, 1, c2 * zm43.second);
    return j;
  });
}

}  // namespace fields

/// -u'' = pi^2 sin(pi x) on (0,1) with exact solution sin(pi x).
inline ProblemSpec make_elliptic_sin() {
  ProblemSpec p;
  p.name = "elliptic-sin";
  p.domain = Domain::Interval;
  p.op = EllipticOperator::laplace(1);
  p.f = [](Point x) {
    return fields::kPi * fields::kPi * std::sin(fields::kPi * x[0]);
  };
  p.exact = fields::sin_pi_x();
  return p;
}

/// -Laplace u = 2 pi^2 sin(pi x) sin(pi y) on the unit square.
inline ProblemSpec make_elliptic_sin2d() {
  ProblemSpec p;
  p.name = "elliptic-sin2d";
  p.domain = Domain::UnitSquare;
  p.op = EllipticOperator::laplace(2);
  p.f = [](Point x) {
    return 2 * fields::kPi * fields::kPi * std::sin(fields::kPi * x[0]) *
           std::sin(fields::kPi * x[1]);
  };
  p.exact = fields::sin_pi_xy();
  return p;
}

/// 1D heat equation u_t - alpha u_xx = 0 with u0 = sin(pi x) and exact
/// decaying solution.
inline ProblemSpec make_heat_sin(double T = 2.0, double alpha = 1.0) {
  ProblemSpec p;
  p.name = alpha == 1.0 ? "heat-sin" : "heat-sin-slow";
  p.domain = Domain::Interval;
  p.op = EllipticOperator::make(1, std::vector<double>{alpha}, 0.0);
  p.parabolic = true;
  p.T = T;
  p.f = [](Point) { return 0.0; };
  p.u0 = fields::sin_pi_x();
  p.exact = fields::heat_decay(alpha);
  return p;
}

/// 1D heat equation with the wiggly initial profile; no closed-form solution
/// (errors are measured against a finite-difference reference).
inline ProblemSpec make_heat_bump(double T = 2.0) {
  ProblemSpec p;
  p.name = "heat-bump";
  p.domain = Domain::Interval;
  p.op = EllipticOperator::laplace(1);
  p.parabolic = true;
  p.T = T;
  p.f = [](Point) { return 0.0; };
  p.u0 = fields::bump_profile();
  return p;
}

inline ProblemSpec problem_by_name(const std::string& name, double T = 2.0) {
  if (name == "elliptic-sin") return make_elliptic_sin();
  if (name == "elliptic-sin2d") return make_elliptic_sin2d();
  if (name == "heat-sin") return make_heat_sin(T);
  if (name == "heat-bump") return make_heat_bump(T);
  throw ContractViolation("unknown problem: " + name);
}

/// Checks that a bundled exact solution actually satisfies the PDE (and the
/// initial condition) at random points. Returns the largest residual seen.
inline double validate_problem(const ProblemSpec& p, int n_points = 100,
                               uint64_t seed = 1234) {
  if (!p.exact) return 0.0;
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < n_points; ++i) {
    double buf[kMaxDim];
    const int ds = p.spatial_dim();
    do {
      for (int d = 0; d < ds; ++d) buf[d] = rng.uniform();
    } while (!domain_contains(p.domain, Point(buf, ds)));
    if (p.parabolic) {
      buf[ds] = p.T * (1.0 - rng.uniform());
      const double r =
          residual_parabolic_exact(*p.exact, p.op, p.f, Point(buf, ds + 1));
      worst = std::max(worst, std::abs(r));
      if (p.u0) {
        buf[ds] = 0.0;
        const double diff = p.exact->jet(Point(buf, ds + 1)).value -
                            p.u0->jet(Point(buf, ds)).value;
        worst = std::max(worst, std::abs(diff));
      }
    } else {
      const double r = residual_elliptic(*p.exact, p.op, p.f, Point(buf, ds));
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

}  // namespace pinnlab
