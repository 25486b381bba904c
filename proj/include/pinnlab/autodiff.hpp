#pragma once

#include <functional>
#include <memory>

#include "pinnlab/jet.hpp"
#include "pinnlab/mlp.hpp"

namespace pinnlab {

/// Activation value and its first three derivatives at one pre-activation.
/// The third derivative feeds the reverse pass: parameter gradients of
/// Hessian-dependent losses differentiate through sigma''.
struct ActDerivs {
  double s0, s1, s2, s3;
};

inline ActDerivs act_eval(Activation act, int relu_k, double y) {
  if (act == Activation::Tanh) {
    const double t = std::tanh(y);
    const double s1 = 1.0 - t * t;
    return {t, s1, -2.0 * t * s1, (6.0 * t * t - 2.0) * s1};
  }
  // ReLU^k, k >= 2. At the kink the jet is defined one-sidedly from the
  // right, so y == 0 evaluates the right limits (s2 = 2 for k = 2).
  const double k = relu_k;
  if (y > 0.0) {
    const double p0 = std::pow(y, relu_k);
    const double p1 = k * std::pow(y, relu_k - 1);
    const double p2 = k * (k - 1) * std::pow(y, relu_k - 2);
    const double p3 =
        relu_k >= 3 ? k * (k - 1) * (k - 2) * std::pow(y, relu_k - 3) : 0.0;
    return {p0, p1, p2, p3};
  }
  if (y == 0.0)
    return {0.0, 0.0, relu_k == 2 ? 2.0 : 0.0, relu_k == 3 ? 6.0 : 0.0};
  return {0.0, 0.0, 0.0, 0.0};
}

// ---------------------------------------------------------------------------
// Jet propagation with a tape.
//
// Each layer's jet state is a row-major array of `width` units, each unit
// holding [value, grad(0..d-1), hess packed upper triangle] (stride
// 1 + d + d(d+1)/2). The tape records the input point plus pre- and
// post-activation states of every layer; replaying it reproduces the forward
// value bit-identically and suffices to accumulate d(loss)/d(theta).
// ---------------------------------------------------------------------------

struct MlpTape {
  int dim = 0;
  std::array<double, kMaxDim> x{};
  std::vector<std::vector<double>> pre;   // per layer: affine output state
  std::vector<std::vector<double>> post;  // per hidden layer: activated state
  double value = 0.0;

  int stride() const { return 1 + dim + packed_size(dim); }
};

namespace detail {

inline void activation_forward(Activation act, int relu_k, const double* pre,
                               double* post, int width, int d) {
  const int dd = packed_size(d);
  const int s = 1 + d + dd;
  for (int u = 0; u < width; ++u) {
    const double* in = pre + int64_t{1} * u * s;
    double* out = post + int64_t{1} * u * s;
    const ActDerivs a = act_eval(act, relu_k, in[0]);
    out[0] = a.s0;
    for (int i = 0; i < d; ++i) out[1 + i] = a.s1 * in[1 + i];
    const double* g = in + 1;
    int e = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++e)
        out[1 + d + e] = a.s2 * g[i] * g[j] + a.s1 * in[1 + d + e];
  }
}

// Adjoint of activation_forward: consumes the post-state cotangent `adj`
// in place and rewrites it as the pre-state cotangent.
inline void activation_backward(Activation act, int relu_k, const double* pre,
                                double* adj, int width, int d) {
  const int dd = packed_size(d);
  const int s = 1 + d + dd;
  for (int u = 0; u < width; ++u) {
    const double* in = pre + int64_t{1} * u * s;
    double* a = adj + int64_t{1} * u * s;
    const ActDerivs ad = act_eval(act, relu_k, in[0]);
    const double* g = in + 1;
    const double* h = in + 1 + d;
    const double zbar = a[0];
    double vbar = zbar * ad.s1;
    double gbar[kMaxDim] = {0, 0, 0, 0};
    for (int i = 0; i < d; ++i) {
      vbar += ad.s2 * a[1 + i] * g[i];
      gbar[i] = ad.s1 * a[1 + i];
    }
    int e = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++e) {
        const double hb = a[1 + d + e];
        vbar += hb * (ad.s3 * g[i] * g[j] + ad.s2 * h[e]);
        if (i == j) {
          gbar[i] += 2.0 * ad.s2 * hb * g[i];
        } else {
          gbar[i] += ad.s2 * hb * g[j];
          gbar[j] += ad.s2 * hb * g[i];
        }
        a[1 + d + e] = ad.s1 * hb;
      }
    a[0] = vbar;
    for (int i = 0; i < d; ++i) a[1 + i] = gbar[i];
  }
}

inline void input_state(Point x, std::vector<double>& st) {
  const int d = static_cast<int>(x.size());
  const int s = 1 + d + packed_size(d);
  st.assign(int64_t{1} * d * s, 0.0);
  for (int j = 0; j < d; ++j) {
    st[int64_t{1} * j * s] = x[j];
    st[int64_t{1} * j * s + 1 + j] = 1.0;
  }
}

}  // namespace detail

/// Forward propagation of (value, gradient, Hessian) jets through the
/// network, recording every layer state on the tape.
inline Jet2 mlp_jet_record(const MlpParams& p, Point x, MlpTape& tape) {
  const int d = p.arch.input_dim();
  require(static_cast<int>(x.size()) == d,
          "mlp_jet: input dimension mismatch");
  const int L = p.arch.layer_count();
  const int s = 1 + d + packed_size(d);
  tape.dim = d;
  for (int i = 0; i < d; ++i) tape.x[i] = x[i];
  tape.pre.resize(L);
  tape.post.resize(L - 1);

  std::vector<double> a0;
  detail::input_state(x, a0);
  const double* in = a0.data();
  int n_in = d;
  for (int k = 0; k < L; ++k) {
    const int n_out = p.arch.widths[k + 1];
    tape.pre[k].resize(int64_t{1} * n_out * s);
    detail::affine_apply(p, k, in, n_in, tape.pre[k].data(), n_out, s);
    if (k + 1 < L) {
      tape.post[k].resize(int64_t{1} * n_out * s);
      detail::activation_forward(p.arch.activation, p.arch.relu_k,
                                 tape.pre[k].data(), tape.post[k].data(),
                                 n_out, d);
      in = tape.post[k].data();
    }
    n_in = n_out;
  }

  Jet2 out(d);
  const double* last = tape.pre[L - 1].data();
  out.value = last[0];
  for (int i = 0; i < d; ++i) out.grad[i] = last[1 + i];
  for (int e = 0; e < packed_size(d); ++e) out.hess[e] = last[1 + d + e];
  tape.value = out.value;
  return out;
}

/// Exact value, gradient and Hessian of u_theta at x.
inline Jet2 mlp_jet(const MlpParams& p, Point x) {
  MlpTape scratch;
  return mlp_jet_record(p, x, scratch);
}

/// Reverse accumulation through a recorded jet forward pass.
///
/// `seed` is the cotangent of the output jet (dE/d value, dE/d grad,
/// dE/d hess in the packed layout); the parameter cotangent is accumulated
/// into `dtheta` (same flat layout as MlpParams::theta).
inline void mlp_jet_backprop(const MlpParams& p, const MlpTape& tape,
                             const Jet2& seed, std::span<double> dtheta) {
  const int d = tape.dim;
  const int L = p.arch.layer_count();
  const int s = tape.stride();
  require(seed.dim == d, "mlp_jet_backprop: seed dimension mismatch");
  require(static_cast<int>(dtheta.size()) == p.arch.param_count(),
          "mlp_jet_backprop: dtheta size mismatch");

  std::vector<double> adj(s), adj_in;
  adj[0] = seed.value;
  for (int i = 0; i < d; ++i) adj[1 + i] = seed.grad[i];
  for (int e = 0; e < packed_size(d); ++e) adj[1 + d + e] = seed.hess[e];

  std::vector<double> a0;
  detail::input_state(std::span<const double>(tape.x.data(), d), a0);

  for (int k = L - 1; k >= 0; --k) {
    const int n_out = p.arch.widths[k + 1];
    const int n_in = p.arch.widths[k];
    const double* in_state = k > 0 ? tape.post[k - 1].data() : a0.data();
    adj_in.assign(int64_t{1} * n_in * s, 0.0);
    for (int i = 0; i < n_out; ++i) {
      const double* ao = adj.data() + int64_t{1} * i * s;
      dtheta[p.b_index(k, i)] += ao[0];
      double* dw = dtheta.data() + p.w_index(k, i, 0);
      const double* wr = p.w_row(k, i);
      for (int j = 0; j < n_in; ++j) {
        const double* a = in_state + int64_t{1} * j * s;
        double dot = 0.0;
        for (int c = 0; c < s; ++c) dot += ao[c] * a[c];
        dw[j] += dot;
        double* ai = adj_in.data() + int64_t{1} * j * s;
        const double wij = wr[j];
        for (int c = 0; c < s; ++c) ai[c] += wij * ao[c];
      }
    }
    if (k > 0)
      detail::activation_backward(p.arch.activation, p.arch.relu_k,
                                  tape.pre[k - 1].data(), adj_in.data(), n_in,
                                  d);
    adj.swap(adj_in);
  }
}

// ---------------------------------------------------------------------------
// Fields: anything evaluable as point -> Jet2. Networks, analytic test
// fields and boundary-cutoff wrappers all implement this, so residuals and
// energies can be exercised against analytic fields independently of
// training. Fields backed by parameters additionally support tape recording
// and backpropagation.
// ---------------------------------------------------------------------------

class FieldTape {
 public:
  virtual ~FieldTape() = default;
};

class Field {
 public:
  virtual ~Field() = default;
  virtual int dim() const = 0;
  virtual Jet2 jet(Point x) const = 0;

  virtual int param_count() const { return 0; }
  virtual std::unique_ptr<FieldTape> make_tape() const { return nullptr; }
  virtual Jet2 jet_record(Point x, FieldTape&) const { return jet(x); }
  virtual void backprop(const FieldTape&, const Jet2&,
                        std::span<double>) const {}
};

class MlpFieldTape final : public FieldTape {
 public:
  MlpTape tape;
};

/// A network as a field over its input space.
class MlpField final : public Field {
 public:
  explicit MlpField(const MlpParams& p) : p_(&p) {}

  int dim() const override { return p_->arch.input_dim(); }
  Jet2 jet(Point x) const override { return mlp_jet(*p_, x); }
  int param_count() const override {
    return static_cast<int>(p_->arch.param_count());
  }
  std::unique_ptr<FieldTape> make_tape() const override {
    return std::make_unique<MlpFieldTape>();
  }
  Jet2 jet_record(Point x, FieldTape& t) const override {
    return mlp_jet_record(*p_, x, static_cast<MlpFieldTape&>(t).tape);
  }
  void backprop(const FieldTape& t, const Jet2& seed,
                std::span<double> dtheta) const override {
    mlp_jet_backprop(*p_, static_cast<const MlpFieldTape&>(t).tape, seed,
                     dtheta);
  }

  const MlpParams& params() const { return *p_; }

 private:
  const MlpParams* p_;
};

/// Field defined by a closed-form jet evaluator (manufactured solutions,
/// initial data, oracles).
class AnalyticField final : public Field {
 public:
  AnalyticField(int dim, std::function<Jet2(Point)> fn)
      : dim_(dim), fn_(std::move(fn)) {}

  int dim() const override { return dim_; }
  Jet2 jet(Point x) const override {
    require(static_cast<int>(x.size()) == dim_,
            "AnalyticField: dimension mismatch");
    return fn_(x);
  }

 private:
  int dim_;
  std::function<Jet2(Point)> fn_;
};

/// Spatial slice v(., t) of a space-time field (time = last coordinate).
/// The returned jets are purely spatial: time derivatives are dropped.
class SliceField final : public Field {
 public:
  SliceField(const Field& inner, double t)
      : inner_(&inner), t_(t), dim_(inner.dim() - 1) {
    require(dim_ >= 1, "SliceField: inner field must be space-time");
  }

  int dim() const override { return dim_; }
  Jet2 jet(Point x) const override {
    require(static_cast<int>(x.size()) == dim_,
            "SliceField: dimension mismatch");
    double xt[kMaxDim];
    for (int i = 0; i < dim_; ++i) xt[i] = x[i];
    xt[dim_] = t_;
    const Jet2 full = inner_->jet(Point(xt, dim_ + 1));
    Jet2 out(dim_);
    out.value = full.value;
    for (int i = 0; i < dim_; ++i) out.grad[i] = full.grad[i];
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j) out.set_hess(i, j, full.hess_at(i, j));
    return out;
  }

  double time() const { return t_; }

 private:
  const Field* inner_;
  double t_;
  int dim_;
};

// ---------------------------------------------------------------------------
// Assembled-energy gradients.
// ---------------------------------------------------------------------------

struct EnergyValueGrad {
  double value = 0.0;
  std::vector<double> grad;
};

/// An assembled energy: given a field, returns the scalar energy and, when
/// `dtheta` is non-empty, accumulates the parameter gradient into it.
using EnergyEval = std::function<double(const Field&, std::span<double>)>;

/// Energy value and exact gradient w.r.t. the flattened parameter vector,
/// by reverse accumulation through the jet-forward computation (one tape per
/// sample point, summed by the evaluator in a fixed order).
inline EnergyValueGrad loss_gradient(const MlpParams& p,
                                     const EnergyEval& energy) {
  MlpField field(p);
  EnergyValueGrad out;
  out.grad.assign(p.theta.size(), 0.0);
  out.value = energy(field, out.grad);
  if (!std::isfinite(out.value))
    throw NonFiniteEnergy("loss_gradient: non-finite energy value");
  for (double g : out.grad)
    if (!std::isfinite(g))
      throw NonFiniteEnergy("loss_gradient: non-finite gradient entry");
  return out;
}

}  // namespace pinnlab
