#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pinnlab/operators.hpp"

using namespace pinnlab;

namespace {

constexpr double kPi = 3.14159265358979323846;

// u(x) = x^2 on the line.
AnalyticField square_field() {
  return AnalyticField(1, [](Point x) {
    Jet2 j(1);
    j.value = x[0] * x[0];
    j.grad[0] = 2 * x[0];
    j.hess[0] = 2.0;
    return j;
  });
}

// u(x) = sin(pi x).
AnalyticField sin_field() {
  return AnalyticField(1, [](Point x) {
    Jet2 j(1);
    j.value = std::sin(kPi * x[0]);
    j.grad[0] = kPi * std::cos(kPi * x[0]);
    j.hess[0] = -kPi * kPi * std::sin(kPi * x[0]);
    return j;
  });
}

// u(x, t) = t.
AnalyticField time_ramp_field() {
  return AnalyticField(2, [](Point xt) {
    Jet2 j(2);
    j.value = xt[1];
    j.grad[1] = 1.0;
    return j;
  });
}

// u(x, t) = x^2, constant in time.
AnalyticField square_spacetime_field() {
  return AnalyticField(2, [](Point xt) {
    Jet2 j(2);
    j.value = xt[0] * xt[0];
    j.grad[0] = 2 * xt[0];
    j.set_hess(0, 0, 2.0);
    return j;
  });
}

// Exact heat solution u(x, t) = exp(-pi^2 t) sin(pi x).
AnalyticField heat_solution_field() {
  return AnalyticField(2, [](Point xt) {
    const double e = std::exp(-kPi * kPi * xt[1]);
    const double s = std::sin(kPi * xt[0]);
    const double c = std::cos(kPi * xt[0]);
    Jet2 j(2);
    j.value = e * s;
    j.grad[0] = kPi * e * c;
    j.grad[1] = -kPi * kPi * e * s;
    j.set_hess(0, 0, -kPi * kPi * e * s);
    j.set_hess(0, 1, -kPi * kPi * kPi * e * c);
    j.set_hess(1, 1, kPi * kPi * kPi * kPi * e * s);
    return j;
  });
}

// Smooth generic space-time field u = sin(pi x) exp(-t) for consistency-order
// checks.
AnalyticField smooth_spacetime_field() {
  return AnalyticField(2, [](Point xt) {
    const double e = std::exp(-xt[1]);
    const double s = std::sin(kPi * xt[0]);
    const double c = std::cos(kPi * xt[0]);
    Jet2 j(2);
    j.value = e * s;
    j.grad[0] = kPi * e * c;
    j.grad[1] = -e * s;
    j.set_hess(0, 0, -kPi * kPi * e * s);
    j.set_hess(0, 1, -kPi * e * c);
    j.set_hess(1, 1, e * s);
    return j;
  });
}

Jet2 random_jet(int d, Rng& rng) {
  Jet2 j(d);
  j.value = rng.uniform(-1, 1);
  for (int i = 0; i < d; ++i) j.grad[i] = rng.uniform(-1, 1);
  for (int e = 0; e < packed_size(d); ++e) j.hess[e] = rng.uniform(-1, 1);
  return j;
}

}  // namespace

TEST_CASE("apply_L on analytic jets") {
  const auto lap1 = EllipticOperator::laplace(1);
  const auto sq = square_field();

  SECTION("u = x^2, a = 1, c = 0: Lu = -2 everywhere") {
    CHECK(apply_L(lap1, sq.jet(std::vector<double>{0.3})) == -2.0);
    CHECK(apply_L(lap1, sq.jet(std::vector<double>{-5.0})) == -2.0);
  }
  SECTION("u = sin(pi x) at x = 0.5: Lu = pi^2") {
    const double got = apply_L(lap1, sin_field().jet(std::vector<double>{0.5}));
    CHECK_THAT(got, Catch::Matchers::WithinRel(kPi * kPi, 1e-14));
  }
  SECTION("reaction term: u = x^2, c = 3 at x = 1 gives -2 + 3") {
    const auto op = EllipticOperator::laplace(1, 3.0);
    CHECK(apply_L(op, sq.jet(std::vector<double>{1.0})) == 1.0);
  }
}

TEST_CASE("apply_L is linear in the jet") {
  Rng rng(7);
  const std::vector<double> a_full{2.0, 0.3, 0.3, 1.5};
  const auto op = EllipticOperator::make(2, a_full, 0.7);
  for (int t = 0; t < 30; ++t) {
    const Jet2 j1 = random_jet(2, rng);
    const Jet2 j2 = random_jet(2, rng);
    const double al = rng.uniform(-2, 2), be = rng.uniform(-2, 2);
    Jet2 comb = al * j1 + be * j2;
    const double lhs = apply_L(op, comb);
    const double rhs = al * apply_L(op, j1) + be * apply_L(op, j2);
    CHECK_THAT(lhs, Catch::Matchers::WithinAbs(rhs, 1e-13));
  }
}

TEST_CASE("EllipticOperator validation") {
  CHECK_THROWS_AS(
      EllipticOperator::make(2, std::vector<double>{1, 0.5, 0.2, 1}, 0.0),
      ContractViolation);  // not symmetric
  CHECK_THROWS_AS(
      EllipticOperator::make(2, std::vector<double>{1, 2, 2, 1}, 0.0),
      ContractViolation);  // indefinite
  CHECK_THROWS_AS(EllipticOperator::laplace(1, -1.0), ContractViolation);
  const auto op = EllipticOperator::make(
      2, std::vector<double>{2.0, 0.5, 0.5, 1.0}, 0.0);
  // Smallest eigenvalue of [[2, .5], [.5, 1]]: (3 - sqrt(2)) / 2.
  CHECK_THAT(op.theta,
             Catch::Matchers::WithinRel((3.0 - std::sqrt(2.0)) / 2.0, 1e-12));
}

TEST_CASE("residual_elliptic") {
  const auto lap1 = EllipticOperator::laplace(1);

  SECTION("zero field, f = 1 gives -1") {
    MlpParams p = MlpParams::zeros(Architecture{{1, 3, 1}});
    MlpField zero(p);
    const double r = residual_elliptic(
        zero, lap1, [](Point) { return 1.0; }, std::vector<double>{0.4});
    CHECK(r == -1.0);
  }
  SECTION("exact solution annihilates the residual") {
    const auto u = sin_field();
    const SourceFn f = [](Point x) {
      return kPi * kPi * std::sin(kPi * x[0]);
    };
    Rng rng(9);
    for (int t = 0; t < 100; ++t) {
      const std::vector<double> x{rng.uniform(0, 1)};
      CHECK(std::abs(residual_elliptic(u, lap1, f, x)) <= 1e-12);
    }
  }
  SECTION("compositional re-check against apply_L of the network jet") {
    MlpParams p = MlpParams::zeros(Architecture{{1, 8, 1}});
    Rng rng(11);
    for (double& t : p.theta) t = rng.uniform(-1, 1);
    MlpField net(p);
    const SourceFn f = [](Point x) { return 0.3 + x[0]; };
    const std::vector<double> x{0.37};
    const double want = apply_L(lap1, mlp_jet(p, x)) - f(x);
    CHECK(residual_elliptic(net, lap1, f, x) == want);
  }
}

TEST_CASE("residual_parabolic_exact") {
  const auto heat = EllipticOperator::laplace(1);

  SECTION("u = t, f = 1: residual vanishes") {
    const auto u = time_ramp_field();
    const double r = residual_parabolic_exact(
        u, heat, [](Point) { return 1.0; }, std::vector<double>{0.3, 0.8});
    CHECK(r == 0.0);
  }
  SECTION("exact heat solution, f = 0: residual vanishes everywhere") {
    const auto u = heat_solution_field();
    Rng rng(13);
    for (int t = 0; t < 100; ++t) {
      const std::vector<double> xt{rng.uniform(0, 1), rng.uniform(0, 1)};
      CHECK(std::abs(residual_parabolic_exact(
                u, heat, [](Point) { return 0.0; }, xt)) <= 1e-10);
    }
  }
  SECTION("zero field, f = x t at (0.5, 2): residual -1") {
    MlpParams p = MlpParams::zeros(Architecture{{2, 3, 1}});
    MlpField zero(p);
    const double r = residual_parabolic_exact(
        zero, heat, [](Point xt) { return xt[0] * xt[1]; },
        std::vector<double>{0.5, 2.0});
    CHECK(r == -1.0);
  }
}

TEST_CASE("residual_time_discrete") {
  const auto heat = EllipticOperator::laplace(1);
  const TimeGrid grid = make_time_grid(1.0, 4);

  SECTION("u = t with f = 1 vanishes for both schemes at every step") {
    const auto u = time_ramp_field();
    const SourceFn f = [](Point) { return 1.0; };
    for (int n = 1; n <= grid.steps(); ++n) {
      CHECK(std::abs(residual_time_discrete(u, heat, f, std::vector<double>{0.3},
                                            grid, n, Scheme::IE)) <= 1e-14);
      CHECK(std::abs(residual_time_discrete(u, heat, f, std::vector<double>{0.3},
                                            grid, n, Scheme::EE)) <= 1e-14);
    }
  }
  SECTION("time-constant u = x^2 with f = 0: residual -2") {
    const auto u = square_spacetime_field();
    const SourceFn f = [](Point) { return 0.0; };
    for (int n = 1; n <= grid.steps(); ++n)
      CHECK(residual_time_discrete(u, heat, f, std::vector<double>{0.7}, grid,
                                   n, Scheme::EE) == -2.0);
  }
  SECTION("random network matches an independent transcription") {
    MlpParams p = MlpParams::zeros(Architecture{{2, 6, 1}});
    Rng rng(17);
    for (double& t : p.theta) t = rng.uniform(-1, 1);
    MlpField v(p);
    const SourceFn f = [](Point xt) { return xt[0] - 0.5 * xt[1]; };
    const std::vector<double> x{0.41};
    const int n = 2;
    for (Scheme sch : {Scheme::IE, Scheme::EE}) {
      // Direct transcription of the difference-quotient formula.
      const double tn = grid.t(n), tm = grid.t(n - 1), kn = grid.k(n);
      const double vn = mlp_forward(p, std::vector<double>{x[0], tn});
      const double vm = mlp_forward(p, std::vector<double>{x[0], tm});
      const double ts = sch == Scheme::IE ? tn : tm;
      const Jet2 js = mlp_jet(p, std::vector<double>{x[0], ts});
      const double want = (vn - vm) / kn + (-js.hess_at(0, 0)) -
                          f(std::vector<double>{x[0], ts});
      const double got = residual_time_discrete(v, heat, f, x, grid, n, sch);
      CHECK_THAT(got, Catch::Matchers::WithinAbs(want, 1e-13));
    }
  }
  SECTION("IE at n equals EE at n+1 for time-constant fields and data") {
    const auto u = square_spacetime_field();
    const SourceFn f = [](Point xt) { return 0.25 * xt[0]; };  // t-independent
    const std::vector<double> x{0.63};
    for (int n = 1; n < grid.steps(); ++n) {
      const double ie =
          residual_time_discrete(u, heat, f, x, grid, n, Scheme::IE);
      const double ee =
          residual_time_discrete(u, heat, f, x, grid, n + 1, Scheme::EE);
      CHECK(ie == ee);
    }
  }
  SECTION("step index out of range is a contract violation") {
    const auto u = time_ramp_field();
    const SourceFn f = [](Point) { return 0.0; };
    CHECK_THROWS_AS(residual_time_discrete(u, heat, f, std::vector<double>{0.5},
                                           grid, 0, Scheme::IE),
                    ContractViolation);
    CHECK_THROWS_AS(residual_time_discrete(u, heat, f, std::vector<double>{0.5},
                                           grid, 5, Scheme::IE),
                    ContractViolation);
  }
}

TEST_CASE("IE residual converges to the exact-time residual at order >= 0.9") {
  const auto heat = EllipticOperator::laplace(1);
  const auto u = smooth_spacetime_field();
  const SourceFn f = [](Point) { return 0.0; };
  const std::vector<double> x{0.3};
  const double t_eval = 0.5;

  std::vector<double> errs;
  for (double k : {0.1, 0.05, 0.025}) {
    const int N = static_cast<int>(std::lround(1.0 / k));
    const TimeGrid grid = make_time_grid(1.0, N);
    const int n = static_cast<int>(std::lround(t_eval / k));
    const double discrete =
        residual_time_discrete(u, heat, f, x, grid, n, Scheme::IE);
    const double exact = residual_parabolic_exact(
        u, heat, f, std::vector<double>{x[0], grid.t(n)});
    errs.push_back(std::abs(discrete - exact));
  }
  for (size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    CHECK(order >= 0.9);
  }
}
