#pragma once

#include <vector>

#include "pinnlab/common.hpp"

namespace pinnlab {

/// Partition 0 = t^0 < t^1 < ... < t^N = T with steps k_n = t^n - t^{n-1}.
struct TimeGrid {
  std::vector<double> nodes;

  int steps() const { return static_cast<int>(nodes.size()) - 1; }
  double horizon() const { return nodes.back(); }
  double t(int n) const { return nodes[n]; }
  double k(int n) const {
    require(n >= 1 && n <= steps(), "TimeGrid: step index out of range");
    return nodes[n] - nodes[n - 1];
  }

  void validate() const {
    require(nodes.size() >= 2, "TimeGrid: need at least one step");
    require(nodes.front() == 0.0, "TimeGrid: must start at t = 0");
    for (size_t n = 1; n < nodes.size(); ++n)
      require(nodes[n] > nodes[n - 1], "TimeGrid: nodes must increase");
  }

  /// Index n with t in I_n = (t^{n-1}, t^n]; t must lie in (0, T].
  int interval_of(double time) const {
    require(time > 0.0 && time <= horizon() * (1 + 1e-14),
            "TimeGrid: time outside (0, T]");
    for (int n = 1; n <= steps(); ++n)
      if (time <= nodes[n] || n == steps()) return n;
    return steps();
  }
};

/// Uniform grid with k = T/N.
inline TimeGrid make_time_grid(double T, int N) {
  require(T > 0.0 && N >= 1, "make_time_grid: need T > 0 and N >= 1");
  TimeGrid g;
  g.nodes.resize(N + 1);
  for (int n = 0; n <= N; ++n) g.nodes[n] = T * n / N;
  g.nodes[N] = T;
  g.validate();
  return g;
}

}  // namespace pinnlab
