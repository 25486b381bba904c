#pragma once

#include <chrono>
#include <optional>

#include "pinnlab/diagnostics.hpp"

namespace pinnlab {

/// Glorot-uniform weights (range +-sqrt(6/(fan_in + fan_out))), zero biases;
/// deterministic per seed.
inline MlpParams init_params(const Architecture& arch, uint64_t seed) {
  MlpParams p = MlpParams::zeros(arch);
  Rng rng(seed);
  for (int k = 0; k < arch.layer_count(); ++k) {
    const double bound =
        std::sqrt(6.0 / (arch.widths[k] + arch.widths[k + 1]));
    for (int i = 0; i < arch.widths[k + 1]; ++i)
      for (int j = 0; j < arch.widths[k]; ++j)
        p.w(k, i, j) = rng.uniform(-bound, bound);
  }
  return p;
}

enum class OptimizerKind { Adam, GradientDescent };
enum class Termination { MaxIters, Converged, Diverged, NonFinite };

inline const char* termination_name(Termination t) {
  switch (t) {
    case Termination::MaxIters:  return "MaxIters";
    case Termination::Converged: return "Converged";
    case Termination::Diverged:  return "Diverged";
    case Termination::NonFinite: return "NonFinite";
  }
  return "?";
}

struct TrainConfig {
  Architecture arch;
  uint64_t seed = 0;
  int n_interior = 256;
  int n_boundary = 64;
  int n_initial = 64;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int max_iters = 1000;
  int log_every = 100;
  int resample_every = 0;  // 0 = fixed point sets
  double divergence_threshold = 10.0;
  double converge_tol = 0.0;
  std::optional<TimeGrid> grid;             // IE/EE schemes
  std::optional<MlpParams> initial_params;  // overrides init_params

  void validate(const ProblemSpec& prob, const EnergySpec& spec) const {
    require(n_interior >= 1 && n_boundary >= 1 && n_initial >= 1,
            "TrainConfig: point counts must be positive");
    require(lr > 0.0, "TrainConfig: lr must be positive");
    require(max_iters >= 0 && log_every >= 1,
            "TrainConfig: bad iteration counts");
    require(divergence_threshold > 0.0,
            "TrainConfig: divergence threshold must be positive");
    arch.validate();
    require(arch.input_dim() == prob.field_dim(),
            "TrainConfig: network input dim does not match the problem");
    if (spec.scheme == Scheme::IE || spec.scheme == Scheme::EE) {
      require(prob.parabolic, "TrainConfig: time-discrete scheme on an "
                              "elliptic problem");
      require(grid.has_value(), "TrainConfig: time-discrete scheme needs a grid");
      require(std::abs(grid->horizon() - prob.T) <= 1e-12 * (1 + prob.T),
              "TrainConfig: grid horizon does not match the problem");
    }
    if (spec.scheme == Scheme::ExactTime)
      require(prob.parabolic, "TrainConfig: ExactTime needs a parabolic problem");
    if (spec.scheme == Scheme::Elliptic)
      require(!prob.parabolic, "TrainConfig: Elliptic scheme on a parabolic "
                               "problem");
    if (initial_params) require(initial_params->arch == arch,
                                "TrainConfig: initial params shape mismatch");
  }
};

struct TrajectoryRow {
  int iteration = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double h1 = 0.0, h2 = 0.0;                   // elliptic indicators
  double l2h2_bar = 0.0, l2l2_hat_dt = 0.0;    // parabolic indicators
  double sup_norm = 0.0;
  double error_l2 = 0.0, error_h1 = 0.0;
  double wall_ms = 0.0;
};

struct TrainTrajectory {
  std::vector<TrajectoryRow> rows;
  MlpParams final_params;
  Termination reason = Termination::MaxIters;
  std::string note;
  double sup_reference = 1.0;  // 1 + sup|u0|; divergence scale

  double peak_sup_ratio() const {
    double peak = 0.0;
    for (const auto& r : rows) peak = std::max(peak, r.sup_norm);
    return peak / sup_reference;
  }
  double final_energy() const {
    return rows.empty() ? 0.0 : rows.back().energy;
  }
};

namespace detail {

inline QuadratureSet build_quadrature(const ProblemSpec& prob,
                                      const EnergySpec& spec,
                                      const TrainConfig& cfg, Rng& rng) {
  QuadratureSet q;
  switch (spec.scheme) {
    case Scheme::Elliptic:
      q.interior = sample_interior(prob.domain, cfg.n_interior, rng);
      q.boundary = sample_boundary(prob.domain, cfg.n_boundary, rng);
      break;
    case Scheme::ExactTime:
      q.interior = sample_space_time(prob.domain, prob.T, cfg.n_interior, rng);
      q.boundary =
          sample_boundary_space_time(prob.domain, prob.T, cfg.n_boundary, rng);
      q.initial = sample_interior(prob.domain, cfg.n_initial, rng);
      break;
    case Scheme::IE:
    case Scheme::EE:
      q.interior = sample_interior(prob.domain, cfg.n_interior, rng);
      q.boundary = sample_boundary(prob.domain, cfg.n_boundary, rng);
      q.initial = sample_interior(prob.domain, cfg.n_initial, rng);
      break;
  }
  return q;
}

// Fixed per-run evaluation sets for the logged indicators.
struct DiagContext {
  std::vector<WeightedPoint> spatial;     // norms / indicators
  std::vector<double> probe_times;        // sup-norm probes (parabolic)
  std::optional<FdHeatSolution> fd_ref;   // parabolic error reference
  TimeGrid indicator_grid;                // levels for bar/hat indicators
};

inline DiagContext make_diag_context(const ProblemSpec& prob,
                                     const EnergySpec& spec,
                                     const TrainConfig& cfg) {
  DiagContext d;
  if (prob.spatial_dim() == 1) {
    d.spatial = trapezoid_grid_interval(prob.parabolic ? 64 : 256);
  } else if (prob.domain == Domain::UnitSquare) {
    d.spatial = trapezoid_grid_square(32);
  } else {
    Rng rng(0x1f2e3d);
    d.spatial = sample_interior(prob.domain, 2048, rng);
  }
  if (prob.parabolic) {
    d.indicator_grid = (spec.scheme == Scheme::IE || spec.scheme == Scheme::EE)
                           ? *cfg.grid
                           : make_time_grid(prob.T, 10);
    for (double t : d.indicator_grid.nodes) d.probe_times.push_back(t);
    if (prob.spatial_dim() == 1) {
      const int N = d.indicator_grid.steps();
      const int per = std::max(1, (int)std::ceil(200.0 / N));
      d.fd_ref = fd_reference_heat(prob, 128, N * per);
    }
  }
  return d;
}

}  // namespace detail

/// Runs the configured first-order optimizer on the assembled energy,
/// logging indicators every log_every iterations. Stops at max_iters, when
/// the energy reaches converge_tol (Converged), when the sup-norm indicator
/// exceeds divergence_threshold * (1 + sup|u0|) (Diverged), or on a
/// non-finite energy/gradient (NonFinite, recorded rather than thrown).
inline TrainTrajectory train(const ProblemSpec& prob, const EnergySpec& spec,
                             const TrainConfig& cfg) {
  cfg.validate(prob, spec);
  spec.validate();
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  auto wall_ms = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - t_start)
        .count();
  };

  Rng point_rng(mix_seed(cfg.seed, 1));
  QuadratureSet quad = detail::build_quadrature(prob, spec, cfg, point_rng);
  const TimeGrid* grid = cfg.grid ? &*cfg.grid : nullptr;
  const EnergyEval eval = make_energy_eval(prob, spec, quad, grid);

  MlpParams params = cfg.initial_params
                         ? *cfg.initial_params
                         : init_params(cfg.arch, mix_seed(cfg.seed, 2));
  params.build_offsets();

  const detail::DiagContext diag = detail::make_diag_context(prob, spec, cfg);

  TrainTrajectory out;
  out.sup_reference = 1.0;
  if (prob.parabolic && prob.u0) {
    out.sup_reference =
        1.0 + (prob.spatial_dim() == 1 ? sup_norm_profile(*prob.u0, {}, 200)
                                       : sup_norm(*prob.u0, diag.spatial));
  }
  const double sup_limit = cfg.divergence_threshold * out.sup_reference;

  // Adam state.
  std::vector<double> m(params.theta.size(), 0.0),
      v(params.theta.size(), 0.0);
  int adam_t = 0;

  auto log_row = [&](int iter, double energy,
                     const std::vector<double>& g) -> TrajectoryRow& {
    TrajectoryRow row;
    row.iteration = iter;
    row.energy = energy;
    double gn = 0.0;
    for (double gi : g) gn += gi * gi;
    row.grad_norm = std::sqrt(gn);

    MlpField raw(params);
    std::optional<HardBcField> wrapped;
    const Field* field = &raw;
    if (spec.bc_mode == BcMode::HardConstraint) {
      wrapped.emplace(raw, prob.domain);
      field = &*wrapped;
    }

    if (!prob.parabolic) {
      row.h1 = norm_h1(*field, diag.spatial);
      row.h2 = norm_h2(*field, diag.spatial);
      if (prob.spatial_dim() == 1) {
        row.sup_norm = sup_norm_profile(*field, {}, 200);
      } else {
        row.sup_norm = sup_norm(*field, diag.spatial);
      }
      if (prob.exact) {
        const auto [el2, eh1] = error_norms(*field, *prob.exact, diag.spatial);
        row.error_l2 = el2;
        row.error_h1 = eh1;
      }
    } else {
      // Stability indicators over the nodal trajectory of the current field.
      NodalTrajectory traj;
      traj.grid = diag.indicator_grid;
      std::vector<SliceField> slices;
      slices.reserve(traj.grid.steps() + 1);
      for (int n = 0; n <= traj.grid.steps(); ++n)
        slices.emplace_back(*field, traj.grid.t(n));
      for (auto& s : slices)
        traj.levels.push_back(
            std::shared_ptr<const Field>(&s, [](const Field*) {}));
      const auto [bar, hat] =
          parabolic_stability_indicators(traj, diag.spatial);
      row.l2h2_bar = bar;
      row.l2l2_hat_dt = hat;
      if (prob.spatial_dim() == 1) {
        row.sup_norm = sup_norm_profile(*field, diag.probe_times, 100);
      } else {
        for (const auto& s : slices)
          row.sup_norm = std::max(row.sup_norm, sup_norm(s, diag.spatial));
      }
      if (prob.exact) {
        double l2 = 0.0, h1 = 0.0;
        for (int n = 1; n <= traj.grid.steps(); ++n) {
          SliceField ex(*prob.exact, traj.grid.t(n));
          const auto [el2, eh1] =
              error_norms(*traj.levels[n], ex, diag.spatial);
          l2 += traj.grid.k(n) * el2 * el2;
          h1 += traj.grid.k(n) * eh1 * eh1;
        }
        row.error_l2 = std::sqrt(l2);
        row.error_h1 = std::sqrt(h1);
      } else if (diag.fd_ref) {
        const auto [el2, eh1] = error_norms_fd(*field, *diag.fd_ref);
        row.error_l2 = el2;
        row.error_h1 = eh1;
      }
    }
    row.wall_ms = wall_ms();
    out.rows.push_back(row);
    return out.rows.back();
  };

  for (int iter = 0;; ++iter) {
    if (cfg.resample_every > 0 && iter > 0 && iter % cfg.resample_every == 0)
      quad = detail::build_quadrature(prob, spec, cfg, point_rng);

    EnergyValueGrad eg;
    try {
      eg = loss_gradient(params, eval);
    } catch (const NonFiniteEnergy& err) {
      TrajectoryRow row;
      row.iteration = iter;
      row.energy = std::numeric_limits<double>::quiet_NaN();
      row.wall_ms = wall_ms();
      out.rows.push_back(row);
      out.reason = Termination::NonFinite;
      out.note = err.what();
      break;
    }

    const bool logging = iter % cfg.log_every == 0 || iter == cfg.max_iters;
    if (logging) {
      const TrajectoryRow& row = log_row(iter, eg.value, eg.grad);
      if (row.sup_norm > sup_limit) {
        out.reason = Termination::Diverged;
        out.note = "sup-norm indicator exceeded " + fmt_g17(sup_limit);
        break;
      }
      if (eg.value <= cfg.converge_tol) {
        out.reason = Termination::Converged;
        break;
      }
    }
    if (iter == cfg.max_iters) {
      out.reason = Termination::MaxIters;
      break;
    }

    ++adam_t;
    if (cfg.optimizer == OptimizerKind::Adam) {
      const double c1 = 1.0 - std::pow(cfg.beta1, adam_t);
      const double c2 = 1.0 - std::pow(cfg.beta2, adam_t);
      for (size_t i = 0; i < params.theta.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * eg.grad[i];
        v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * eg.grad[i] * eg.grad[i];
        params.theta[i] -=
            cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
      }
    } else {
      for (size_t i = 0; i < params.theta.size(); ++i)
        params.theta[i] -= cfg.lr * eg.grad[i];
    }
  }

  out.final_params = params;
  return out;
}

}  // namespace pinnlab
