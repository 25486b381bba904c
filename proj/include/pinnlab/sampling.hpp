#pragma once

#include <vector>

#include "pinnlab/common.hpp"
#include "pinnlab/time_grid.hpp"

namespace pinnlab {

enum class Domain { Interval, UnitSquare, LShape };

inline int domain_dim(Domain d) { return d == Domain::Interval ? 1 : 2; }

inline double domain_measure(Domain d) {
  switch (d) {
    case Domain::Interval:  return 1.0;
    case Domain::UnitSquare: return 1.0;
    case Domain::LShape:    return 0.75;
  }
  return 0.0;
}

/// Boundary measure; for the interval this is the counting measure of the
/// two endpoints.
inline double domain_boundary_measure(Domain d) {
  switch (d) {
    case Domain::Interval:  return 2.0;
    case Domain::UnitSquare: return 4.0;
    // Legs 1, 1, 1/2, 1/2, 1/2, 1/2 around the unit square minus its
    // upper-right quadrant.
    case Domain::LShape:    return 4.0;
  }
  return 0.0;
}

/// Open-interior membership. LShape = (0,1)^2 minus [1/2,1) x [1/2,1).
inline bool domain_contains(Domain d, Point x) {
  switch (d) {
    case Domain::Interval:
      return x[0] > 0.0 && x[0] < 1.0;
    case Domain::UnitSquare:
      return x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0;
    case Domain::LShape:
      return x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0 &&
             !(x[0] >= 0.5 && x[1] >= 0.5);
  }
  return false;
}

struct WeightedPoint {
  std::array<double, kMaxDim> x{};
  double w = 0.0;
};

/// n i.i.d. uniform interior points (LShape by rejection from the bounding
/// square), Monte-Carlo weights |Omega|/n. Deterministic given the generator
/// state.
inline std::vector<WeightedPoint> sample_interior(Domain dom, int n,
                                                  Rng& rng) {
  require(n >= 1, "sample_interior: need n >= 1");
  std::vector<WeightedPoint> pts(n);
  const double w = domain_measure(dom) / n;
  for (auto& p : pts) {
    p.w = w;
    switch (dom) {
      case Domain::Interval:
        p.x[0] = rng.uniform();
        break;
      case Domain::UnitSquare:
        p.x[0] = rng.uniform();
        p.x[1] = rng.uniform();
        break;
      case Domain::LShape:
        do {
          p.x[0] = rng.uniform();
          p.x[1] = rng.uniform();
        } while (p.x[0] >= 0.5 && p.x[1] >= 0.5);
        break;
    }
  }
  return pts;
}

namespace detail {

struct Edge {
  double x0, y0, x1, y1, len;
};

inline const std::vector<Edge>& edges_of(Domain dom) {
  static const std::vector<Edge> square{
      {0, 0, 1, 0, 1}, {1, 0, 1, 1, 1}, {1, 1, 0, 1, 1}, {0, 1, 0, 0, 1}};
  static const std::vector<Edge> lshape{
      {0, 0, 1, 0, 1},       {1, 0, 1, 0.5, 0.5},   {1, 0.5, 0.5, 0.5, 0.5},
      {0.5, 0.5, 0.5, 1, 0.5}, {0.5, 1, 0, 1, 0.5}, {0, 1, 0, 0, 1}};
  return dom == Domain::UnitSquare ? square : lshape;
}

}  // namespace detail

/// Boundary sample with weights |dOmega|/n. The interval's 0-dimensional
/// boundary is enumerated (alternating endpoints), not sampled.
inline std::vector<WeightedPoint> sample_boundary(Domain dom, int n,
                                                  Rng& rng) {
  require(n >= 1, "sample_boundary: need n >= 1");
  std::vector<WeightedPoint> pts(n);
  const double w = domain_boundary_measure(dom) / n;
  if (dom == Domain::Interval) {
    for (int i = 0; i < n; ++i) {
      pts[i].x[0] = i % 2 == 0 ? 0.0 : 1.0;
      pts[i].w = w;
    }
    return pts;
  }
  const auto& edges = detail::edges_of(dom);
  const double perim = domain_boundary_measure(dom);
  for (auto& p : pts) {
    double s = rng.uniform() * perim;
    for (const auto& e : edges) {
      if (s <= e.len || &e == &edges.back()) {
        const double r = std::min(s / e.len, 1.0);
        p.x[0] = e.x0 + r * (e.x1 - e.x0);
        p.x[1] = e.y0 + r * (e.y1 - e.y0);
        break;
      }
      s -= e.len;
    }
    p.w = w;
  }
  return pts;
}

/// Uniform points in Omega x (0, T], weights |Omega| T / n; time is the
/// last coordinate.
inline std::vector<WeightedPoint> sample_space_time(Domain dom, double T,
                                                    int n, Rng& rng) {
  require(T > 0.0, "sample_space_time: need T > 0");
  auto pts = sample_interior(dom, n, rng);
  const int ds = domain_dim(dom);
  for (auto& p : pts) {
    p.x[ds] = T * (1.0 - rng.uniform());  // in (0, T]
    p.w *= T;
  }
  return pts;
}

/// Uniform points on the lateral boundary dOmega x (0, T].
inline std::vector<WeightedPoint> sample_boundary_space_time(Domain dom,
                                                             double T, int n,
                                                             Rng& rng) {
  require(T > 0.0, "sample_boundary_space_time: need T > 0");
  auto pts = sample_boundary(dom, n, rng);
  const int ds = domain_dim(dom);
  for (auto& p : pts) {
    p.x[ds] = T * (1.0 - rng.uniform());
    p.w *= T;
  }
  return pts;
}

/// Deterministic trapezoidal grid on [0, 1]: m + 1 nodes, exact trapezoidal
/// weights.
inline std::vector<WeightedPoint> trapezoid_grid_interval(int m) {
  require(m >= 1, "trapezoid_grid_interval: need m >= 1");
  std::vector<WeightedPoint> pts(m + 1);
  const double h = 1.0 / m;
  for (int i = 0; i <= m; ++i) {
    pts[i].x[0] = static_cast<double>(i) / m;
    pts[i].w = (i == 0 || i == m) ? h / 2 : h;
  }
  return pts;
}

/// Tensor trapezoidal grid on the unit square.
inline std::vector<WeightedPoint> trapezoid_grid_square(int m) {
  require(m >= 1, "trapezoid_grid_square: need m >= 1");
  std::vector<WeightedPoint> pts;
  pts.reserve((m + 1) * (m + 1));
  const double h = 1.0 / m;
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) {
      WeightedPoint p;
      p.x[0] = static_cast<double>(i) / m;
      p.x[1] = static_cast<double>(j) / m;
      const double wi = (i == 0 || i == m) ? h / 2 : h;
      const double wj = (j == 0 || j == m) ? h / 2 : h;
      p.w = wi * wj;
      pts.push_back(p);
    }
  return pts;
}

}  // namespace pinnlab
