#pragma once

#include <optional>

#include "pinnlab/problems.hpp"

namespace pinnlab {

enum class InitialNorm { L2, H1Semi };
enum class BcMode { SoftPenalty, HardConstraint };

/// Weights and switches assembling one loss functional.
///
/// Under HardConstraint the tau term is omitted identically, and lambda = 0
/// skips the regularizer evaluation entirely.
struct EnergySpec {
  Scheme scheme = Scheme::Elliptic;
  double tau = 0.0;
  double mu = 1.0;
  InitialNorm initial_norm = InitialNorm::H1Semi;
  double lambda = 0.0;
  BcMode bc_mode = BcMode::HardConstraint;

  void validate() const {
    require(tau >= 0.0 && mu >= 0.0 && lambda >= 0.0,
            "EnergySpec: weights must be nonnegative");
  }
};

/// Point sets with quadrature weights. For elliptic energies `interior`
/// samples Omega; for exact-time parabolic it samples Omega x (0,T] (time
/// last); for time-discrete energies it holds spatial points reused at every
/// level. `initial` holds spatial points for the initial misfit.
struct QuadratureSet {
  std::vector<WeightedPoint> interior;
  std::vector<WeightedPoint> boundary;
  std::vector<WeightedPoint> initial;
};

// ---------------------------------------------------------------------------
// Hard boundary constraint: multiply the network by a smooth cutoff that
// vanishes exactly on the Dirichlet boundary. For space-time fields the
// cutoff depends on the spatial coordinates only.
// ---------------------------------------------------------------------------

namespace detail {

// 1D factor jet for expr in {x - a, b - x} lifted to `dim` coordinates.
inline Jet2 linear_factor(int dim, int coord, double scale, double shift,
                          Point x) {
  Jet2 j(dim);
  j.value = scale * x[coord] + shift;
  j.grad[coord] = scale;
  return j;
}

}  // namespace detail

/// Smooth cutoff vanishing exactly on the Dirichlet boundary, as a jet with
/// respect to the full input (time components zero). Interval: x(1-x);
/// rectangle: x(1-x)y(1-y); L-shape adds the per-edge factors (x-1/2)(y-1/2).
inline Jet2 cutoff_jet(Domain dom, Point x, int full_dim) {
  Jet2 g = detail::linear_factor(full_dim, 0, 1.0, 0.0, x);            // x
  g = jet_mul(g, detail::linear_factor(full_dim, 0, -1.0, 1.0, x));    // 1-x
  if (dom == Domain::UnitSquare || dom == Domain::LShape) {
    g = jet_mul(g, detail::linear_factor(full_dim, 1, 1.0, 0.0, x));   // y
    g = jet_mul(g, detail::linear_factor(full_dim, 1, -1.0, 1.0, x));  // 1-y
  }
  if (dom == Domain::LShape) {
    g = jet_mul(g, detail::linear_factor(full_dim, 0, 1.0, -0.5, x));
    g = jet_mul(g, detail::linear_factor(full_dim, 1, 1.0, -0.5, x));
  }
  return g;
}

/// Adjoint of jet_mul(g, u) with respect to u: maps the product cotangent
/// `seed` to the inner-field cotangent given the cutoff jet g.
inline Jet2 cutoff_seed_transform(const Jet2& g, const Jet2& seed) {
  const int d = seed.dim;
  Jet2 out(d);
  double v = seed.value * g.value;
  for (int i = 0; i < d; ++i) v += seed.grad[i] * g.grad[i];
  for (int e = 0; e < packed_size(d); ++e) v += seed.hess[e] * g.hess[e];
  out.value = v;
  for (int k = 0; k < d; ++k) {
    double gk = g.value * seed.grad[k];
    for (int i = 0; i < d; ++i) {
      const int e = packed_index(d, std::min(i, k), std::max(i, k));
      gk += (i == k ? 2.0 : 1.0) * seed.hess[e] * g.grad[i];
    }
    out.grad[k] = gk;
  }
  for (int e = 0; e < packed_size(d); ++e) out.hess[e] = g.value * seed.hess[e];
  return out;
}

/// Field x -> g(x) u(x) with jets composed by the exact product rule.
class HardBcField final : public Field {
 public:
  HardBcField(const Field& inner, Domain dom) : inner_(&inner), dom_(dom) {
    const int sd = domain_dim(dom);
    require(inner.dim() == sd || inner.dim() == sd + 1,
            "hard_bc_wrap: field dimension does not match the domain");
  }

  int dim() const override { return inner_->dim(); }
  Jet2 jet(Point x) const override {
    return jet_mul(cutoff_jet(dom_, x, inner_->dim()), inner_->jet(x));
  }
  int param_count() const override { return inner_->param_count(); }

  struct Tape final : FieldTape {
    std::unique_ptr<FieldTape> inner;
    Jet2 cutoff;
  };

  std::unique_ptr<FieldTape> make_tape() const override {
    auto t = std::make_unique<Tape>();
    t->inner = inner_->make_tape();
    return t;
  }
  Jet2 jet_record(Point x, FieldTape& tape) const override {
    auto& t = static_cast<Tape&>(tape);
    t.cutoff = cutoff_jet(dom_, x, inner_->dim());
    return jet_mul(t.cutoff, inner_->jet_record(x, *t.inner));
  }
  void backprop(const FieldTape& tape, const Jet2& seed,
                std::span<double> dtheta) const override {
    const auto& t = static_cast<const Tape&>(tape);
    inner_->backprop(*t.inner, cutoff_seed_transform(t.cutoff, seed), dtheta);
  }

 private:
  const Field* inner_;
  Domain dom_;
};

inline HardBcField hard_bc_wrap(const Field& inner, Domain dom) {
  return HardBcField(inner, dom);
}

// ---------------------------------------------------------------------------
// Energy functionals as quadrature sums. Each has a value form and a
// gradient form; the gradient form accumulates d(energy)/d(theta) into
// `dtheta` through one tape per sample point. Evaluation order is fixed
// (points in storage order, levels inner ascending), so results are
// reproducible run to run.
// ---------------------------------------------------------------------------

/// Squared H1 seminorm by quadrature: sum_z w_z |grad v(z)|^2 (full input
/// gradient).
inline double regularizer_h1(const Field& v,
                             std::span<const WeightedPoint> interior) {
  require(!interior.empty(), "regularizer_h1: empty quadrature");
  double J = 0.0;
  for (const auto& z : interior) {
    const Jet2 j = v.jet(Point(z.x.data(), v.dim()));
    double g2 = 0.0;
    for (int i = 0; i < j.dim; ++i) g2 += j.grad[i] * j.grad[i];
    J += z.w * g2;
  }
  return J;
}

namespace detail {

inline void check_finite(double r, const char* what) {
  if (!std::isfinite(r)) throw NonFiniteEnergy(std::string(what));
}

// Adds the lambda * sum w |grad v|^2 term (and its seeds).
template <bool WithGrad>
double regularizer_term(const Field& v,
                        std::span<const WeightedPoint> interior, double lambda,
                        double time_weight, double fixed_time, bool spacetime,
                        std::span<double> dtheta) {
  double J = 0.0;
  auto tape = WithGrad ? v.make_tape() : nullptr;
  const int d = v.dim();
  for (const auto& z : interior) {
    double buf[kMaxDim];
    for (int i = 0; i < d; ++i) buf[i] = z.x[i];
    if (spacetime) buf[d - 1] = fixed_time;
    const Point x(buf, d);
    const Jet2 j = WithGrad ? v.jet_record(x, *tape) : v.jet(x);
    double g2 = 0.0;
    for (int i = 0; i < d; ++i) g2 += j.grad[i] * j.grad[i];
    check_finite(g2, "regularizer: non-finite gradient term");
    J += time_weight * lambda * z.w * g2;
    if constexpr (WithGrad) {
      Jet2 seed(d);
      for (int i = 0; i < d; ++i)
        seed.grad[i] = 2.0 * time_weight * lambda * z.w * j.grad[i];
      v.backprop(*tape, seed, dtheta);
    }
  }
  return J;
}

template <bool WithGrad>
double energy_elliptic_impl(const Field& v, const ProblemSpec& prob,
                            const QuadratureSet& quad, const EnergySpec& spec,
                            std::span<double> dtheta) {
  require(spec.scheme == Scheme::Elliptic,
          "energy_elliptic: spec.scheme must be Elliptic");
  require(!quad.interior.empty(), "energy_elliptic: empty interior set");
  spec.validate();
  const int d = prob.spatial_dim();
  require(v.dim() == d, "energy_elliptic: field dimension mismatch");
  double E = 0.0;
  auto tape = WithGrad ? v.make_tape() : nullptr;
  for (const auto& z : quad.interior) {
    const Point x(z.x.data(), d);
    const Jet2 j = WithGrad ? v.jet_record(x, *tape) : v.jet(x);
    const double r = apply_L(prob.op, j) - prob.f(x);
    check_finite(r, "energy_elliptic: non-finite residual");
    E += z.w * r * r;
    if constexpr (WithGrad) {
      const double coef = 2.0 * z.w * r;
      Jet2 seed(d);
      seed.value = coef * prob.op.c;
      int e = 0;
      for (int i = 0; i < d; ++i)
        for (int jj = i; jj < d; ++jj, ++e)
          seed.hess[e] = -coef * (i == jj ? 1.0 : 2.0) * prob.op.a[e];
      v.backprop(*tape, seed, dtheta);
    }
  }
  if (spec.bc_mode == BcMode::SoftPenalty && spec.tau != 0.0) {
    for (const auto& s : quad.boundary) {
      const Point x(s.x.data(), d);
      const Jet2 j = WithGrad ? v.jet_record(x, *tape) : v.jet(x);
      check_finite(j.value, "energy_elliptic: non-finite boundary value");
      E += spec.tau * s.w * j.value * j.value;
      if constexpr (WithGrad) {
        Jet2 seed(d);
        seed.value = 2.0 * spec.tau * s.w * j.value;
        v.backprop(*tape, seed, dtheta);
      }
    }
  }
  if (spec.lambda != 0.0)
    E += regularizer_term<WithGrad>(v, quad.interior, spec.lambda, 1.0, 0.0,
                                    false, dtheta);
  return E;
}

template <bool WithGrad>
double energy_parabolic_exact_impl(const Field& v, const ProblemSpec& prob,
                                   const QuadratureSet& quad,
                                   const EnergySpec& spec,
                                   std::span<double> dtheta) {
  require(spec.scheme == Scheme::ExactTime,
          "energy_parabolic_exact: spec.scheme must be ExactTime");
  require(prob.parabolic, "energy_parabolic_exact: problem must be parabolic");
  require(!quad.interior.empty(), "energy_parabolic_exact: empty interior set");
  spec.validate();
  const int ds = prob.spatial_dim();
  require(v.dim() == ds + 1, "energy_parabolic_exact: field must be space-time");
  double E = 0.0;
  auto tape = WithGrad ? v.make_tape() : nullptr;
  for (const auto& z : quad.interior) {
    const Point xt(z.x.data(), ds + 1);
    const Jet2 j = WithGrad ? v.jet_record(xt, *tape) : v.jet(xt);
    const double r = j.grad[ds] + apply_L_spatial(prob.op, j) - prob.f(xt);
    check_finite(r, "energy_parabolic_exact: non-finite residual");
    E += z.w * r * r;
    if constexpr (WithGrad) {
      const double coef = 2.0 * z.w * r;
      Jet2 seed(ds + 1);
      seed.grad[ds] = coef;
      seed.value = coef * prob.op.c;
      for (int i = 0; i < ds; ++i)
        for (int jj = i; jj < ds; ++jj)
          seed.hess[packed_index(ds + 1, i, jj)] =
              -coef * (i == jj ? 1.0 : 2.0) * prob.op.a_at(i, jj);
      v.backprop(*tape, seed, dtheta);
    }
  }
  if (spec.mu != 0.0 && !quad.initial.empty()) {
    require(prob.u0 != nullptr, "energy_parabolic_exact: missing u0");
    for (const auto& z : quad.initial) {
      double buf[kMaxDim];
      for (int i = 0; i < ds; ++i) buf[i] = z.x[i];
      buf[ds] = 0.0;
      const Point xt(buf, ds + 1);
      const Jet2 j = WithGrad ? v.jet_record(xt, *tape) : v.jet(xt);
      const Jet2 u0 = prob.u0->jet(Point(z.x.data(), ds));
      Jet2 seed(ds + 1);
      if (spec.initial_norm == InitialNorm::L2) {
        const double diff = j.value - u0.value;
        check_finite(diff, "energy_parabolic_exact: non-finite initial term");
        E += spec.mu * z.w * diff * diff;
        if constexpr (WithGrad) seed.value = 2.0 * spec.mu * z.w * diff;
      } else {
        double acc = 0.0;
        for (int i = 0; i < ds; ++i) {
          const double diff = j.grad[i] - u0.grad[i];
          acc += diff * diff;
          if constexpr (WithGrad) seed.grad[i] = 2.0 * spec.mu * z.w * diff;
        }
        check_finite(acc, "energy_parabolic_exact: non-finite initial term");
        E += spec.mu * z.w * acc;
      }
      if constexpr (WithGrad) v.backprop(*tape, seed, dtheta);
    }
  }
  if (spec.bc_mode == BcMode::SoftPenalty && spec.tau != 0.0) {
    for (const auto& s : quad.boundary) {
      const Point xt(s.x.data(), ds + 1);
      const Jet2 j = WithGrad ? v.jet_record(xt, *tape) : v.jet(xt);
      check_finite(j.value, "energy_parabolic_exact: non-finite boundary value");
      E += spec.tau * s.w * j.value * j.value;
      if constexpr (WithGrad) {
        Jet2 seed(ds + 1);
        seed.value = 2.0 * spec.tau * s.w * j.value;
        v.backprop(*tape, seed, dtheta);
      }
    }
  }
  if (spec.lambda != 0.0)
    E += regularizer_term<WithGrad>(v, quad.interior, spec.lambda, 1.0, 0.0,
                                    false, dtheta);
  return E;
}

template <bool WithGrad>
double energy_time_discrete_impl(const Field& v, const ProblemSpec& prob,
                                 const TimeGrid& grid,
                                 const QuadratureSet& quad,
                                 const EnergySpec& spec,
                                 std::span<double> dtheta) {
  require(spec.scheme == Scheme::IE || spec.scheme == Scheme::EE,
          "energy_time_discrete: scheme must be IE or EE");
  require(prob.parabolic, "energy_time_discrete: problem must be parabolic");
  grid.validate();
  require(grid.steps() >= 1, "energy_time_discrete: empty time grid");
  require(!quad.interior.empty(), "energy_time_discrete: empty interior set");
  spec.validate();
  const int ds = prob.spatial_dim();
  require(v.dim() == ds + 1, "energy_time_discrete: field must be space-time");
  const int N = grid.steps();
  double E = 0.0;

  if constexpr (!WithGrad) {
    // Value path goes through the pointwise residual operation.
    for (const auto& z : quad.interior) {
      const Point x(z.x.data(), ds);
      for (int n = 1; n <= N; ++n) {
        const double r =
            residual_time_discrete(v, prob.op, prob.f, x, grid, n, spec.scheme);
        check_finite(r, "energy_time_discrete: non-finite residual");
        E += grid.k(n) * z.w * r * r;
      }
    }
  } else {
    // Gradient path: one tape per level per point; the difference quotient
    // couples consecutive levels, so seeds are accumulated before the
    // per-level backward sweep.
    std::vector<std::unique_ptr<FieldTape>> tapes(N + 1);
    for (auto& t : tapes) t = v.make_tape();
    std::vector<Jet2> jets(N + 1);
    std::vector<Jet2> seeds(N + 1);
    for (const auto& z : quad.interior) {
      double xt[kMaxDim];
      for (int n = 0; n <= N; ++n) {
        detail::space_time(Point(z.x.data(), ds), grid.t(n), xt, ds);
        jets[n] = v.jet_record(Point(xt, ds + 1), *tapes[n]);
        seeds[n] = Jet2(ds + 1);
      }
      for (int n = 1; n <= N; ++n) {
        const double kn = grid.k(n);
        const int s = spec.scheme == Scheme::IE ? n : n - 1;
        detail::space_time(Point(z.x.data(), ds), grid.t(s), xt, ds);
        const double r = (jets[n].value - jets[n - 1].value) / kn +
                         apply_L_spatial(prob.op, jets[s]) -
                         prob.f(Point(xt, ds + 1));
        check_finite(r, "energy_time_discrete: non-finite residual");
        E += kn * z.w * r * r;
        const double coef = 2.0 * kn * z.w * r;
        seeds[n].value += coef / kn;
        seeds[n - 1].value -= coef / kn;
        seeds[s].value += coef * prob.op.c;
        for (int i = 0; i < ds; ++i)
          for (int jj = i; jj < ds; ++jj)
            seeds[s].hess[packed_index(ds + 1, i, jj)] -=
                coef * (i == jj ? 1.0 : 2.0) * prob.op.a_at(i, jj);
      }
      for (int n = 0; n <= N; ++n) v.backprop(*tapes[n], seeds[n], dtheta);
    }
  }

  if (spec.mu != 0.0 && !quad.initial.empty()) {
    require(prob.u0 != nullptr, "energy_time_discrete: missing u0");
    auto tape = WithGrad ? v.make_tape() : nullptr;
    for (const auto& z : quad.initial) {
      double buf[kMaxDim];
      for (int i = 0; i < ds; ++i) buf[i] = z.x[i];
      buf[ds] = 0.0;
      const Point xt(buf, ds + 1);
      const Jet2 j = WithGrad ? v.jet_record(xt, *tape) : v.jet(xt);
      const Jet2 u0 = prob.u0->jet(Point(z.x.data(), ds));
      Jet2 seed(ds + 1);
      if (spec.initial_norm == InitialNorm::L2) {
        const double diff = j.value - u0.value;
        check_finite(diff, "energy_time_discrete: non-finite initial term");
        E += spec.mu * z.w * diff * diff;
        if constexpr (WithGrad) seed.value = 2.0 * spec.mu * z.w * diff;
      } else {
        double acc = 0.0;
        for (int i = 0; i < ds; ++i) {
          const double diff = j.grad[i] - u0.grad[i];
          acc += diff * diff;
          if constexpr (WithGrad) seed.grad[i] = 2.0 * spec.mu * z.w * diff;
        }
        check_finite(acc, "energy_time_discrete: non-finite initial term");
        E += spec.mu * z.w * acc;
      }
      if constexpr (WithGrad) v.backprop(*tape, seed, dtheta);
    }
  }

  if (spec.bc_mode == BcMode::SoftPenalty && spec.tau != 0.0) {
    auto tape = WithGrad ? v.make_tape() : nullptr;
    for (int n = 1; n <= N; ++n) {
      const double kn = grid.k(n);
      for (const auto& s : quad.boundary) {
        double buf[kMaxDim];
        detail::space_time(Point(s.x.data(), ds), grid.t(n), buf, ds);
        const Point xt(buf, ds + 1);
        const Jet2 j = WithGrad ? v.jet_record(xt, *tape) : v.jet(xt);
        check_finite(j.value, "energy_time_discrete: non-finite boundary value");
        E += spec.tau * kn * s.w * j.value * j.value;
        if constexpr (WithGrad) {
          Jet2 seed(ds + 1);
          seed.value = 2.0 * spec.tau * kn * s.w * j.value;
          v.backprop(*tape, seed, dtheta);
        }
      }
    }
  }

  if (spec.lambda != 0.0) {
    // Per-level spatial H1 regularizer, levels weighted by k_n.
    auto tape = WithGrad ? v.make_tape() : nullptr;
    for (int n = 1; n <= N; ++n) {
      const double kn = grid.k(n);
      for (const auto& z : quad.interior) {
        double buf[kMaxDim];
        detail::space_time(Point(z.x.data(), ds), grid.t(n), buf, ds);
        const Point xt(buf, ds + 1);
        const Jet2 j = WithGrad ? v.jet_record(xt, *tape) : v.jet(xt);
        double g2 = 0.0;
        for (int i = 0; i < ds; ++i) g2 += j.grad[i] * j.grad[i];
        check_finite(g2, "energy_time_discrete: non-finite regularizer term");
        E += spec.lambda * kn * z.w * g2;
        if constexpr (WithGrad) {
          Jet2 seed(ds + 1);
          for (int i = 0; i < ds; ++i)
            seed.grad[i] = 2.0 * spec.lambda * kn * z.w * j.grad[i];
          v.backprop(*tape, seed, dtheta);
        }
      }
    }
  }
  return E;
}

}  // namespace detail

inline double energy_elliptic(const Field& v, const ProblemSpec& prob,
                              const QuadratureSet& quad,
                              const EnergySpec& spec) {
  return detail::energy_elliptic_impl<false>(v, prob, quad, spec, {});
}
inline double energy_elliptic_grad(const Field& v, const ProblemSpec& prob,
                                   const QuadratureSet& quad,
                                   const EnergySpec& spec,
                                   std::span<double> dtheta) {
  return detail::energy_elliptic_impl<true>(v, prob, quad, spec, dtheta);
}

inline double energy_parabolic_exact(const Field& v, const ProblemSpec& prob,
                                     const QuadratureSet& quad,
                                     const EnergySpec& spec) {
  return detail::energy_parabolic_exact_impl<false>(v, prob, quad, spec, {});
}
inline double energy_parabolic_exact_grad(const Field& v,
                                          const ProblemSpec& prob,
                                          const QuadratureSet& quad,
                                          const EnergySpec& spec,
                                          std::span<double> dtheta) {
  return detail::energy_parabolic_exact_impl<true>(v, prob, quad, spec,
                                                   dtheta);
}

inline double energy_time_discrete(const Field& v, const ProblemSpec& prob,
                                   const TimeGrid& grid,
                                   const QuadratureSet& quad,
                                   const EnergySpec& spec) {
  return detail::energy_time_discrete_impl<false>(v, prob, grid, quad, spec,
                                                  {});
}
inline double energy_time_discrete_grad(const Field& v,
                                        const ProblemSpec& prob,
                                        const TimeGrid& grid,
                                        const QuadratureSet& quad,
                                        const EnergySpec& spec,
                                        std::span<double> dtheta) {
  return detail::energy_time_discrete_impl<true>(v, prob, grid, quad, spec,
                                                 dtheta);
}

/// Bundles problem, spec, quadrature and (for time-discrete schemes) the
/// grid into an assembled-energy evaluator for loss_gradient / train. The
/// referenced objects must outlive the returned closure. Applies the hard
/// boundary cutoff to the raw network field when configured.
inline EnergyEval make_energy_eval(const ProblemSpec& prob,
                                   const EnergySpec& spec,
                                   const QuadratureSet& quad,
                                   const TimeGrid* grid = nullptr) {
  spec.validate();
  if (spec.scheme == Scheme::IE || spec.scheme == Scheme::EE)
    require(grid != nullptr, "make_energy_eval: time-discrete scheme needs a grid");
  return [&prob, &spec, &quad, grid](const Field& raw,
                                     std::span<double> dtheta) {
    std::optional<HardBcField> wrapped;
    const Field* v = &raw;
    if (spec.bc_mode == BcMode::HardConstraint) {
      wrapped.emplace(raw, prob.domain);
      v = &*wrapped;
    }
    const bool with_grad = !dtheta.empty();
    switch (spec.scheme) {
      case Scheme::Elliptic:
        return with_grad ? energy_elliptic_grad(*v, prob, quad, spec, dtheta)
                         : energy_elliptic(*v, prob, quad, spec);
      case Scheme::ExactTime:
        return with_grad
                   ? energy_parabolic_exact_grad(*v, prob, quad, spec, dtheta)
                   : energy_parabolic_exact(*v, prob, quad, spec);
      case Scheme::IE:
      case Scheme::EE:
        return with_grad ? energy_time_discrete_grad(*v, prob, *grid, quad,
                                                     spec, dtheta)
                         : energy_time_discrete(*v, prob, *grid, quad, spec);
    }
    throw ContractViolation("make_energy_eval: unknown scheme");
  };
}

}  // namespace pinnlab
