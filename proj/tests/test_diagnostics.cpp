#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pinnlab/diagnostics.hpp"

using namespace pinnlab;

namespace {

constexpr double kPi = fields::kPi;

MlpParams random_params(const Architecture& arch, uint64_t seed,
                        double range = 0.8) {
  MlpParams p = MlpParams::zeros(arch);
  Rng rng(seed);
  for (double& t : p.theta) t = rng.uniform(-range, range);
  return p;
}

std::shared_ptr<const Field> scaled(std::shared_ptr<const Field> f,
                                    double a) {
  const int d = f->dim();
  return std::make_shared<AnalyticField>(d, [f, a](Point x) {
    Jet2 j = f->jet(x);
    j *= a;
    return j;
  });
}

std::vector<Eigen::VectorXd> random_levels(int n_levels, int m, Rng& rng) {
  std::vector<Eigen::VectorXd> levels(n_levels, Eigen::VectorXd::Zero(m));
  for (auto& u : levels)
    for (int i = 0; i < m; ++i) {
      // Box-Muller normal draws.
      const double u1 = std::max(rng.uniform(), 1e-16);
      const double u2 = rng.uniform();
      u[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * kPi * u2);
    }
  return levels;
}

}  // namespace

TEST_CASE("quadrature Sobolev norms") {
  QuadratureSet grid;
  grid.interior = trapezoid_grid_interval(4096);
  const auto quad = std::span<const WeightedPoint>(grid.interior);

  SECTION("zero field has zero norms") {
    MlpParams p = MlpParams::zeros(Architecture{{1, 4, 1}});
    MlpField zero(p);
    CHECK(norm_h1(zero, quad) == 0.0);
    CHECK(norm_h2(zero, quad) == 0.0);
  }
  SECTION("sin(pi x) closed forms") {
    const auto u = fields::sin_pi_x();
    // ||u||_{H1}^2 = (1 + pi^2)/2, ||u||_{H2}^2 = (1 + pi^2 + pi^4)/2.
    const double want_h1 = std::sqrt((1 + kPi * kPi) / 2);
    const double want_h2 = std::sqrt((1 + kPi * kPi + std::pow(kPi, 4)) / 2);
    CHECK_THAT(norm_h1(*u, quad), Catch::Matchers::WithinRel(want_h1, 1e-5));
    CHECK_THAT(norm_h2(*u, quad), Catch::Matchers::WithinRel(want_h2, 1e-5));
  }
  SECTION("MC estimate of the sin(pi x) H1 norm within a 3-sigma band") {
    Rng rng(3);
    const auto mc = sample_interior(Domain::Interval, 8192, rng);
    const double want_h1 = std::sqrt((1 + kPi * kPi) / 2);
    CHECK_THAT(norm_h1(*fields::sin_pi_x(), mc),
               Catch::Matchers::WithinAbs(want_h1, 0.12));
  }
  SECTION("homogeneity: power-of-two scalings are exact") {
    const auto u = fields::sin_pi_x();
    const double base = norm_h2(*u, quad);
    CHECK(norm_h2(*scaled(u, 2.0), quad) == 2.0 * base);
    CHECK(norm_h2(*scaled(u, -4.0), quad) == 4.0 * base);
    CHECK_THAT(norm_h2(*scaled(u, 1.7), quad),
               Catch::Matchers::WithinRel(1.7 * base, 1e-14));
  }
  SECTION("triangle inequality and h1 <= h2 over random networks") {
    for (int t = 0; t < 20; ++t) {
      MlpParams pa = random_params(Architecture{{1, 6, 1}}, 100 + t);
      MlpParams pb = random_params(Architecture{{1, 6, 1}}, 200 + t);
      MlpField a(pa), b(pb);
      const auto sum = std::make_shared<AnalyticField>(1, [&](Point x) {
        return a.jet(x) + b.jet(x);
      });
      CHECK(norm_h1(*sum, quad) <=
            norm_h1(a, quad) + norm_h1(b, quad) + 1e-12);
      CHECK(norm_h2(*sum, quad) <=
            norm_h2(a, quad) + norm_h2(b, quad) + 1e-12);
      CHECK(norm_h1(a, quad) <= norm_h2(a, quad));
    }
  }
}

TEST_CASE("time reconstructions") {
  const TimeGrid grid = make_time_grid(1.0, 4);
  const auto u = fields::heat_decay();
  const auto traj = nodal_trajectory(u, grid);
  const std::vector<double> x{0.3};

  SECTION("nodal interpolation at t = t^n") {
    for (int n = 1; n <= 4; ++n) {
      const auto r = reconstruct(traj, grid.t(n), x);
      CHECK_THAT(r.hat_value, Catch::Matchers::WithinRel(
                                  traj.levels[n]->jet(x).value, 1e-14));
    }
  }
  SECTION("identical levels give hat_dt = 0 and constant bar") {
    NodalTrajectory c;
    c.grid = grid;
    for (int n = 0; n <= 4; ++n) c.levels.push_back(fields::sin_pi_x());
    const auto r1 = reconstruct(c, 0.1, x);
    const auto r2 = reconstruct(c, 0.9, x);
    CHECK(r1.hat_dt == 0.0);
    CHECK(r1.bar.value == r2.bar.value);
    CHECK(r1.hat_value == r2.hat_value);
  }
  SECTION("midpoint of I_n averages the neighbouring levels") {
    const double tm = 0.5 * (grid.t(1) + grid.t(2));
    const auto r = reconstruct(traj, tm, x);
    const double want = 0.5 * (traj.levels[1]->jet(x).value +
                               traj.levels[2]->jet(x).value);
    CHECK_THAT(r.hat_value, Catch::Matchers::WithinRel(want, 1e-14));
  }
  SECTION("times outside (0, T] are rejected") {
    CHECK_THROWS_AS(reconstruct(traj, 0.0, x), ContractViolation);
    CHECK_THROWS_AS(reconstruct(traj, 1.2, x), ContractViolation);
  }
}

TEST_CASE("parabolic stability indicators") {
  QuadratureSet g;
  g.interior = trapezoid_grid_interval(2048);
  const auto quad = std::span<const WeightedPoint>(g.interior);
  const TimeGrid grid = make_time_grid(1.0, 10);  // k = 0.1

  SECTION("all levels zero") {
    MlpParams p = MlpParams::zeros(Architecture{{1, 3, 1}});
    NodalTrajectory traj;
    traj.grid = grid;
    for (int n = 0; n <= 10; ++n)
      traj.levels.push_back(std::make_shared<MlpField>(p));
    const auto [bar, hat] = parabolic_stability_indicators(traj, quad);
    CHECK(bar == 0.0);
    CHECK(hat == 0.0);
  }
  SECTION("time-constant levels give (sqrt(T) ||U||_H2, 0)") {
    NodalTrajectory traj;
    traj.grid = grid;
    for (int n = 0; n <= 10; ++n) traj.levels.push_back(fields::sin_pi_x());
    const auto [bar, hat] = parabolic_stability_indicators(traj, quad);
    const double h2 = norm_h2(*fields::sin_pi_x(), quad);
    CHECK_THAT(bar, Catch::Matchers::WithinRel(std::sqrt(1.0) * h2, 1e-12));
    CHECK(hat == 0.0);
  }
  SECTION("exact heat levels match the closed forms of the discrete sums") {
    const auto u = fields::heat_decay();
    const auto traj = nodal_trajectory(u, grid);
    const auto [bar, hat] = parabolic_stability_indicators(traj, quad);

    // ||u(t)||_H2^2 = e^{-2 lam t} (1 + pi^2 + pi^4)/2 and
    // ||u(t_n) - u(t_{n-1})||_L2^2 = (e^{-lam t_n} - e^{-lam t_{n-1}})^2 / 2,
    // summed exactly over the grid.
    const double lam = kPi * kPi;
    const double c_h2 = (1 + kPi * kPi + std::pow(kPi, 4)) / 2;
    double bar2 = 0.0, hat2 = 0.0;
    for (int n = 1; n <= grid.steps(); ++n) {
      const double kn = grid.k(n);
      bar2 += kn * c_h2 * std::exp(-2 * lam * grid.t(n));
      const double diff =
          std::exp(-lam * grid.t(n)) - std::exp(-lam * grid.t(n - 1));
      hat2 += kn * (diff / kn) * (diff / kn) / 2.0;
    }
    CHECK_THAT(bar, Catch::Matchers::WithinRel(std::sqrt(bar2), 0.05));
    CHECK_THAT(hat, Catch::Matchers::WithinRel(std::sqrt(hat2), 0.05));
  }
}

TEST_CASE("discrete maximal regularity identity") {
  SECTION("all levels zero") {
    const TimeGrid grid = make_time_grid(1.0, 3);
    std::vector<Eigen::VectorXd> levels(4, Eigen::VectorXd::Zero(8));
    const auto L = dirichlet_laplacian_1d(8, 1.0 / 9);
    const auto r = mr_identity_residual(levels, grid, L, 1.0 / 9);
    CHECK(r.identity_residual == 0.0);
    CHECK(r.slack == 0.0);
  }
  SECTION("N = 1, unit basis vector") {
    const TimeGrid grid = make_time_grid(1.0, 1);
    std::vector<Eigen::VectorXd> levels(2, Eigen::VectorXd::Zero(8));
    levels[1][3] = 1.0;
    const auto L = dirichlet_laplacian_1d(8, 1.0 / 9);
    const auto r = mr_identity_residual(levels, grid, L, 1.0 / 9);
    CHECK(r.identity_residual <= 1e-12);
    CHECK(r.slack <= 1e-12);
  }
  SECTION("random trajectories satisfy identity and slack sign") {
    const TimeGrid grid = make_time_grid(1.0, 5);
    const int m = 16;
    const auto L = dirichlet_laplacian_1d(m, 1.0 / (m + 1));
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      const auto levels = random_levels(6, m, rng);
      const auto r = mr_identity_residual(levels, grid, L, 1.0 / (m + 1));
      // Terms reach ~1e5 for the FD Laplacian; the identity holds to
      // relative roundoff.
      CHECK(r.identity_residual <= 1e-10 * std::max(1.0, std::abs(r.slack)));
      CHECK(r.slack <= 1e-12);
    }
  }
  SECTION("non-SPD operators are rejected") {
    const TimeGrid grid = make_time_grid(1.0, 1);
    std::vector<Eigen::VectorXd> levels(2, Eigen::VectorXd::Zero(4));
    Eigen::MatrixXd bad = -Eigen::MatrixXd::Identity(4, 4);
    CHECK_THROWS_AS(mr_identity_residual(levels, grid, bad, 1.0),
                    ContractViolation);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(4, 4);
    asym(0, 1) = 0.5;
    CHECK_THROWS_AS(mr_identity_residual(levels, grid, asym, 1.0),
                    ContractViolation);
  }
}

TEST_CASE("Crank-Nicolson reference solver") {
  SECTION("decaying sine mode matches the exact solution") {
    const ProblemSpec prob = make_heat_sin(0.1);
    const auto sol = fd_reference_heat(prob, 200, 200);
    double worst = 0.0;
    for (int i = 0; i <= sol.n_t; ++i)
      for (int j = 0; j <= sol.m; ++j) {
        const double x = static_cast<double>(j) / sol.m;
        const double want =
            std::exp(-kPi * kPi * sol.time(i)) * std::sin(kPi * x);
        worst = std::max(worst, std::abs(sol.levels[i][j] - want));
      }
    CHECK(worst <= 1e-4);
  }
  SECTION("zero data stays identically zero") {
    ProblemSpec prob = make_heat_bump(1.0);
    prob.u0 = std::make_shared<AnalyticField>(1, [](Point) { return Jet2(1); });
    const auto sol = fd_reference_heat(prob, 32, 16);
    for (const auto& level : sol.levels)
      for (double v : level) CHECK(v == 0.0);
  }
  SECTION("refinement reduces the error at second order") {
    const ProblemSpec prob = make_heat_sin(0.1);
    auto max_err = [&](int m, int nt) {
      const auto sol = fd_reference_heat(prob, m, nt);
      double worst = 0.0;
      for (int j = 0; j <= m; ++j) {
        const double x = static_cast<double>(j) / m;
        const double want =
            std::exp(-kPi * kPi * prob.T) * std::sin(kPi * x);
        worst = std::max(worst, std::abs(sol.levels[nt][j] - want));
      }
      return worst;
    };
    const double e1 = max_err(25, 25);
    const double e2 = max_err(50, 50);
    CHECK(e1 / e2 > 3.0);
    CHECK(e1 / e2 < 5.0);
  }
}

TEST_CASE("error norms") {
  QuadratureSet g;
  g.interior = trapezoid_grid_interval(1024);
  const auto quad = std::span<const WeightedPoint>(g.interior);

  SECTION("field equal to the reference gives zero errors") {
    const auto u = fields::sin_pi_x();
    const auto [l2, h1] = error_norms(*u, *u, quad);
    CHECK(l2 == 0.0);
    CHECK(h1 == 0.0);
  }
  SECTION("constant offset shifts only the value part") {
    const auto u = fields::sin_pi_x();
    const auto shifted = std::make_shared<AnalyticField>(1, [u](Point x) {
      Jet2 j = u->jet(x);
      j.value += 0.1;
      return j;
    });
    const auto [l2, h1] = error_norms(*shifted, *u, quad);
    CHECK_THAT(l2, Catch::Matchers::WithinRel(0.1, 1e-12));
    CHECK_THAT(h1, Catch::Matchers::WithinRel(0.1, 1e-12));  // grad part 0
  }
  SECTION("space-time error against the FD reference is small when exact") {
    const ProblemSpec prob = make_heat_sin(0.2);
    const auto sol = fd_reference_heat(prob, 128, 64);
    const auto [l2, h1] = error_norms_fd(*prob.exact, sol);
    CHECK(l2 <= 2e-4);
    CHECK(h1 <= 2e-3);
  }
}

TEST_CASE("L-shape contrast: H1 stabilizes while H2 grows") {
  const auto u = fields::lshape_singular();
  auto h_norms = [&](int n, uint64_t seed) {
    Rng rng(seed);
    const auto quad = sample_interior(Domain::LShape, n, rng);
    return std::pair{norm_h1(*u, quad), norm_h2(*u, quad)};
  };
  const auto [h1_small, h2_small] = h_norms(1000, 42);
  const auto [h1_big, h2_big] = h_norms(10000, 43);
  CHECK(std::abs(h1_big / h1_small - 1.0) <= 0.2);  // H1 stable
  CHECK(h2_big > h2_small);                          // H2 keeps growing
}
