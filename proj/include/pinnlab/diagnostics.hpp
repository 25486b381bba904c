#pragma once

#include <Eigen/Dense>

#include "pinnlab/energies.hpp"

namespace pinnlab {

// ---------------------------------------------------------------------------
// Quadrature Sobolev norms.
// ---------------------------------------------------------------------------

inline double norm_l2(const Field& v, std::span<const WeightedPoint> quad) {
  require(!quad.empty(), "norm_l2: empty quadrature");
  double acc = 0.0;
  for (const auto& z : quad) {
    const Jet2 j = v.jet(Point(z.x.data(), v.dim()));
    acc += z.w * j.value * j.value;
  }
  return std::sqrt(acc);
}

inline double norm_h1(const Field& v, std::span<const WeightedPoint> quad) {
  require(!quad.empty(), "norm_h1: empty quadrature");
  double acc = 0.0;
  for (const auto& z : quad) {
    const Jet2 j = v.jet(Point(z.x.data(), v.dim()));
    double t = j.value * j.value;
    for (int i = 0; i < j.dim; ++i) t += j.grad[i] * j.grad[i];
    acc += z.w * t;
  }
  return std::sqrt(acc);
}

/// Full H2 quadrature norm; the second-order part is the Frobenius norm of
/// the Hessian.
inline double norm_h2(const Field& v, std::span<const WeightedPoint> quad) {
  require(!quad.empty(), "norm_h2: empty quadrature");
  double acc = 0.0;
  for (const auto& z : quad) {
    const Jet2 j = v.jet(Point(z.x.data(), v.dim()));
    double t = j.value * j.value;
    for (int i = 0; i < j.dim; ++i) t += j.grad[i] * j.grad[i];
    int e = 0;
    for (int i = 0; i < j.dim; ++i)
      for (int jj = i; jj < j.dim; ++jj, ++e)
        t += (i == jj ? 1.0 : 2.0) * j.hess[e] * j.hess[e];
    acc += z.w * t;
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Nodal trajectories and time reconstructions.
// ---------------------------------------------------------------------------

/// Spatial field slices U^0..U^N of a solution at the grid times.
struct NodalTrajectory {
  TimeGrid grid;
  std::vector<std::shared_ptr<const Field>> levels;

  void validate() const {
    grid.validate();
    require(static_cast<int>(levels.size()) == grid.steps() + 1,
            "NodalTrajectory: need N + 1 levels");
  }
};

/// Owning spatial slice v(., t) of a space-time field.
inline std::shared_ptr<const Field> make_slice(
    std::shared_ptr<const Field> spacetime, double t) {
  const int ds = spacetime->dim() - 1;
  require(ds >= 1, "make_slice: inner field must be space-time");
  return std::make_shared<AnalyticField>(
      ds, [spacetime, slice = SliceField(*spacetime, t)](Point x) {
        return slice.jet(x);
      });
}

inline NodalTrajectory nodal_trajectory(
    std::shared_ptr<const Field> spacetime, const TimeGrid& grid) {
  NodalTrajectory traj;
  traj.grid = grid;
  for (int n = 0; n <= grid.steps(); ++n)
    traj.levels.push_back(make_slice(spacetime, grid.t(n)));
  traj.validate();
  return traj;
}

/// Piecewise-linear / piecewise-constant time reconstructions at one spatial
/// point: hat = l0 U^{n-1} + l1 U^n, hat_dt = (U^n - U^{n-1})/k_n on I_n,
/// bar = the level-n jet.
struct Reconstruction {
  double hat_value = 0.0;
  double hat_dt = 0.0;
  Jet2 bar;
};

inline Reconstruction reconstruct(const NodalTrajectory& traj, double t,
                                  Point x) {
  traj.validate();
  const int n = traj.grid.interval_of(t);  // throws outside (0, T]
  const double kn = traj.grid.k(n);
  const double l0 = (traj.grid.t(n) - t) / kn;
  const double l1 = (t - traj.grid.t(n - 1)) / kn;
  const double un = traj.levels[n]->jet(x).value;
  const double um = traj.levels[n - 1]->jet(x).value;
  Reconstruction r;
  r.hat_value = l0 * um + l1 * un;
  r.hat_dt = (un - um) / kn;
  r.bar = traj.levels[n]->jet(x);
  return r;
}

/// The paper-style stability indicators of a nodal trajectory:
///   l2h2_bar^2    = sum_n k_n ||U^n||_{H2, quad}^2       (norm of bar-U)
///   l2l2_hat_dt^2 = sum_n k_n ||(U^n - U^{n-1})/k_n||_{L2, quad}^2
inline std::pair<double, double> parabolic_stability_indicators(
    const NodalTrajectory& traj, std::span<const WeightedPoint> quad) {
  traj.validate();
  double bar2 = 0.0, hat2 = 0.0;
  for (int n = 1; n <= traj.grid.steps(); ++n) {
    const double kn = traj.grid.k(n);
    const double h2 = norm_h2(*traj.levels[n], quad);
    bar2 += kn * h2 * h2;
    double dt2 = 0.0;
    for (const auto& z : quad) {
      const Point x(z.x.data(), traj.levels[n]->dim());
      const double d =
          (traj.levels[n]->jet(x).value - traj.levels[n - 1]->jet(x).value) /
          kn;
      dt2 += z.w * d * d;
    }
    hat2 += kn * dt2;
  }
  return {std::sqrt(bar2), std::sqrt(hat2)};
}

// ---------------------------------------------------------------------------
// Discrete maximal regularity identity on an explicit FD matrix. The test
// runs on nodal vectors and any SPD operator; networks never enter.
// ---------------------------------------------------------------------------

/// 1D Dirichlet second-difference matrix on m interior nodes with mesh h
/// (SPD: tridiag(-1, 2, -1)/h^2).
inline Eigen::MatrixXd dirichlet_laplacian_1d(int m, double h) {
  require(m >= 1 && h > 0, "dirichlet_laplacian_1d: bad size");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    L(i, i) = 2.0 / (h * h);
    if (i > 0) L(i, i - 1) = -1.0 / (h * h);
    if (i + 1 < m) L(i, i + 1) = -1.0 / (h * h);
  }
  return L;
}

struct MrIdentityResult {
  double identity_residual = 0.0;  // |five-term expansion - ||hat_t + L bar||^2|
  double slack = 0.0;              // must be <= 0 up to roundoff
};

/// Exact algebraic identity behind the discrete maximal regularity estimate:
///   ||U_t^||^2 + ||L U-||^2 + <L U^N, U^N> + sum_n <L d_n, d_n> - <L U^0, U^0>
///     = ||U_t^ + L U-||^2,   d_n = U^n - U^{n-1},
/// with time quadrature weights k_n and the h-weighted discrete L2 pairing.
/// The slack ||U_t^||^2 + ||L U-||^2 - ||U_t^ + L U-||^2 - <L U^0, U^0> is
/// nonpositive for SPD L.
inline MrIdentityResult mr_identity_residual(
    const std::vector<Eigen::VectorXd>& levels, const TimeGrid& grid,
    const Eigen::MatrixXd& L, double h_weight = 1.0) {
  grid.validate();
  const int N = grid.steps();
  require(static_cast<int>(levels.size()) == N + 1,
          "mr_identity_residual: need N + 1 nodal vectors");
  const auto m = L.rows();
  require(L.cols() == m && levels[0].size() == m,
          "mr_identity_residual: shape mismatch");
  require((L - L.transpose()).cwiseAbs().maxCoeff() <=
              1e-12 * L.cwiseAbs().maxCoeff(),
          "mr_identity_residual: operator not symmetric");
  {
    Rng rng(0x5bd1);
    for (int probe = 0; probe < 8; ++probe) {
      Eigen::VectorXd v(m);
      for (auto i = 0; i < m; ++i) v[i] = rng.uniform(-1, 1);
      require(v.dot(L * v) >= 0.0,
              "mr_identity_residual: operator not positive definite");
    }
  }
  const auto ip = [h_weight](const Eigen::VectorXd& a,
                             const Eigen::VectorXd& b) {
    return h_weight * a.dot(b);
  };

  double hat_t2 = 0.0, lbar2 = 0.0, cross2 = 0.0, sum_d = 0.0;
  for (int n = 1; n <= N; ++n) {
    const double kn = grid.k(n);
    const Eigen::VectorXd d = levels[n] - levels[n - 1];
    const Eigen::VectorXd dt = d / kn;
    const Eigen::VectorXd lb = L * levels[n];
    hat_t2 += kn * ip(dt, dt);
    lbar2 += kn * ip(lb, lb);
    const Eigen::VectorXd s = dt + lb;
    cross2 += kn * ip(s, s);
    sum_d += ip(L * d, d);
  }
  const double head = ip(L * levels[N], levels[N]);
  const double tail = ip(L * levels[0], levels[0]);
  MrIdentityResult out;
  out.identity_residual =
      std::abs(hat_t2 + lbar2 + head + sum_d - tail - cross2);
  out.slack = hat_t2 + lbar2 - cross2 - tail;
  return out;
}

// ---------------------------------------------------------------------------
// Crank-Nicolson finite-difference reference for the 1D heat problem
// (the oracle, never the subject).
// ---------------------------------------------------------------------------

/// Grid solution on m uniform cells of (0,1) (m+1 nodes including the
/// Dirichlet boundary) at times i T / n_t.
struct FdHeatSolution {
  int m = 0;
  int n_t = 0;
  double T = 0.0;
  std::vector<std::vector<double>> levels;  // (n_t + 1) x (m + 1)

  double h() const { return 1.0 / m; }
  double time(int i) const { return T * i / n_t; }

  /// Bilinear interpolation in (x, t).
  double value_at(double x, double t) const {
    const double sx = std::clamp(x, 0.0, 1.0) * m;
    const double st = std::clamp(t / T, 0.0, 1.0) * n_t;
    const int ix = std::min(static_cast<int>(sx), m - 1);
    const int it = std::min(static_cast<int>(st), n_t - 1);
    const double fx = sx - ix, ft = st - it;
    const auto& a = levels[it];
    const auto& b = levels[it + 1];
    const double va = a[ix] * (1 - fx) + a[ix + 1] * fx;
    const double vb = b[ix] * (1 - fx) + b[ix + 1] * fx;
    return va * (1 - ft) + vb * ft;
  }

  /// Centered-difference spatial gradient at an interior node.
  double grad_at_node(int level, int j) const {
    const auto& u = levels[level];
    if (j == 0) return (u[1] - u[0]) * m;
    if (j == m) return (u[m] - u[m - 1]) * m;
    return (u[j + 1] - u[j - 1]) * (0.5 * m);
  }
};

/// Second-order Crank-Nicolson solve of u_t + (-alpha u_xx + c u) = f on
/// (0,1) with homogeneous Dirichlet data.
inline FdHeatSolution fd_reference_heat(const ProblemSpec& prob, int m,
                                        int n_t) {
  require(prob.parabolic && prob.spatial_dim() == 1,
          "fd_reference_heat: 1D parabolic problems only");
  require(m >= 2 && n_t >= 1, "fd_reference_heat: bad resolution");
  const double alpha = prob.op.a_at(0, 0);
  const double c = prob.op.c;
  const double h = 1.0 / m;
  const double k = prob.T / n_t;

  FdHeatSolution sol;
  sol.m = m;
  sol.n_t = n_t;
  sol.T = prob.T;
  sol.levels.assign(n_t + 1, std::vector<double>(m + 1, 0.0));
  for (int j = 1; j < m; ++j)
    sol.levels[0][j] =
        prob.u0 ? prob.u0->jet(std::vector<double>{j * h}).value : 0.0;

  // Interior operator A = -alpha D2 + c I; (I + k/2 A) u+ = (I - k/2 A) u
  //                      + k/2 (f^n + f^{n+1}).
  const int mi = m - 1;
  const double off = -alpha / (h * h);
  const double dia = 2.0 * alpha / (h * h) + c;
  std::vector<double> lower(mi, k / 2 * off), diag(mi, 1.0 + k / 2 * dia),
      upper(mi, k / 2 * off);
  // Thomas factorization (constant tridiagonal system reused every step).
  std::vector<double> cp(mi);
  cp[0] = upper[0] / diag[0];
  for (int i = 1; i < mi; ++i)
    cp[i] = upper[i] / (diag[i] - lower[i] * cp[i - 1]);

  std::vector<double> rhs(mi), tmp(mi);
  for (int step = 0; step < n_t; ++step) {
    const auto& u = sol.levels[step];
    auto& next = sol.levels[step + 1];
    const double t0 = sol.time(step), t1 = sol.time(step + 1);
    for (int i = 0; i < mi; ++i) {
      const int j = i + 1;
      const double au =
          -alpha * (u[j - 1] - 2 * u[j] + u[j + 1]) / (h * h) + c * u[j];
      const double f0 = prob.f(std::vector<double>{j * h, t0});
      const double f1 = prob.f(std::vector<double>{j * h, t1});
      rhs[i] = u[j] - k / 2 * au + k / 2 * (f0 + f1);
    }
    tmp[0] = rhs[0] / diag[0];
    for (int i = 1; i < mi; ++i)
      tmp[i] = (rhs[i] - lower[i] * tmp[i - 1]) /
               (diag[i] - lower[i] * cp[i - 1]);
    for (int i = mi - 1; i >= 0; --i)
      next[i + 1] = tmp[i] - (i + 1 < mi ? cp[i] * next[i + 2] : 0.0);
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Error norms against exact or FD references.
// ---------------------------------------------------------------------------

/// Quadrature L2 and H1 norms of v - ref over a shared point set.
inline std::pair<double, double> error_norms(
    const Field& v, const Field& ref, std::span<const WeightedPoint> quad) {
  require(!quad.empty(), "error_norms: empty quadrature");
  require(v.dim() == ref.dim(), "error_norms: dimension mismatch");
  double l2 = 0.0, h1 = 0.0;
  for (const auto& z : quad) {
    const Point x(z.x.data(), v.dim());
    const Jet2 a = v.jet(x);
    const Jet2 b = ref.jet(x);
    const double dv = a.value - b.value;
    l2 += z.w * dv * dv;
    double dg = 0.0;
    for (int i = 0; i < a.dim; ++i) {
      const double d = a.grad[i] - b.grad[i];
      dg += d * d;
    }
    h1 += z.w * (dv * dv + dg);
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

/// Space-time errors of a space-time field against the FD reference:
/// sqrt(sum_i k ||diff(t_i)||^2) over the FD grid, trapezoidal in space;
/// reference gradients by centered differences.
inline std::pair<double, double> error_norms_fd(const Field& v,
                                                const FdHeatSolution& ref) {
  require(v.dim() == 2, "error_norms_fd: field must be 1D space-time");
  double l2 = 0.0, h1 = 0.0;
  const double h = ref.h();
  const double k = ref.T / ref.n_t;
  for (int i = 1; i <= ref.n_t; ++i) {
    const double t = ref.time(i);
    double lvl_l2 = 0.0, lvl_h1 = 0.0;
    for (int j = 0; j <= ref.m; ++j) {
      const double w = (j == 0 || j == ref.m) ? h / 2 : h;
      const Jet2 a = v.jet(std::vector<double>{j * h, t});
      const double dv = a.value - ref.levels[i][j];
      const double dg = a.grad[0] - ref.grad_at_node(i, j);
      lvl_l2 += w * dv * dv;
      lvl_h1 += w * (dv * dv + dg * dg);
    }
    l2 += k * lvl_l2;
    h1 += k * lvl_h1;
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

/// Max |v| over an explicit point set.
inline double sup_norm(const Field& v, std::span<const WeightedPoint> pts) {
  require(!pts.empty(), "sup_norm: empty point set");
  double sup = 0.0;
  for (const auto& z : pts)
    sup = std::max(sup, std::abs(v.jet(Point(z.x.data(), v.dim())).value));
  return sup;
}

/// Max |v| over a uniform probe grid on [0,1] (1D space), at the given times
/// for space-time fields; the divergence indicator for training runs.
inline double sup_norm_profile(const Field& v,
                               std::span<const double> times, int n_x) {
  require(n_x >= 2, "sup_norm_profile: need n_x >= 2");
  const bool spacetime = !times.empty();
  require(v.dim() == (spacetime ? 2 : 1),
          "sup_norm_profile: expects a 1D spatial or space-time field");
  double sup = 0.0;
  for (int j = 0; j <= n_x; ++j) {
    const double x = static_cast<double>(j) / n_x;
    if (spacetime) {
      for (double t : times)
        sup = std::max(sup,
                       std::abs(v.jet(std::vector<double>{x, t}).value));
    } else {
      sup = std::max(sup, std::abs(v.jet(std::vector<double>{x}).value));
    }
  }
  return sup;
}

}  // namespace pinnlab
