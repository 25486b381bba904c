#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pinnlab/common.hpp"

namespace pinnlab {

enum class Activation { Tanh, ReluPow };

/// Layer widths d_1..d_{L+1} (d_1 = input dim, d_{L+1} = 1) plus activation.
struct Architecture {
  std::vector<int> widths;
  Activation activation = Activation::Tanh;
  int relu_k = 2;  // exponent for ReluPow; >= 2 so jets stay defined

  int input_dim() const { return widths.front(); }
  int layer_count() const { return static_cast<int>(widths.size()) - 1; }

  int64_t param_count() const {
    int64_t n = 0;
    for (int k = 0; k + 1 < static_cast<int>(widths.size()); ++k)
      n += int64_t{1} * widths[k + 1] * (widths[k] + 1);
    return n;
  }

  void validate() const {
    require(widths.size() >= 3, "Architecture: need at least one hidden layer");
    require(widths.back() == 1, "Architecture: output width must be 1");
    for (int w : widths) require(w >= 1, "Architecture: widths must be >= 1");
    require(widths.front() >= 1 && widths.front() <= kMaxDim,
            "Architecture: input dim out of range");
    if (activation == Activation::ReluPow)
      require(relu_k >= 2, "Architecture: ReluPow needs k >= 2");
  }

  std::string activation_name() const {
    if (activation == Activation::Tanh) return "tanh";
    return "relu" + std::to_string(relu_k);
  }

  bool operator==(const Architecture& o) const {
    return widths == o.widths && activation == o.activation &&
           (activation != Activation::ReluPow || relu_k == o.relu_k);
  }
};

/// Weights and biases of a dense feed-forward network, stored flat.
///
/// Frozen flat ordering (also the checkpoint ordering): for each affine layer
/// k = 0..L-1, the entries of W_k row-major, then b_k. Gradient vectors use
/// the identical layout.
struct MlpParams {
  Architecture arch;
  std::vector<double> theta;

  static MlpParams zeros(Architecture a) {
    a.validate();
    MlpParams p;
    p.arch = std::move(a);
    p.theta.assign(static_cast<size_t>(p.arch.param_count()), 0.0);
    p.build_offsets();
    return p;
  }

  void build_offsets() {
    const int L = arch.layer_count();
    w_off_.resize(L);
    b_off_.resize(L);
    int64_t off = 0;
    for (int k = 0; k < L; ++k) {
      w_off_[k] = off;
      off += int64_t{1} * arch.widths[k + 1] * arch.widths[k];
      b_off_[k] = off;
      off += arch.widths[k + 1];
    }
  }

  int64_t w_index(int k, int i, int j) const {
    return w_off_[k] + int64_t{1} * i * arch.widths[k] + j;
  }
  int64_t b_index(int k, int i) const { return b_off_[k] + i; }

  double w(int k, int i, int j) const { return theta[w_index(k, i, j)]; }
  double& w(int k, int i, int j) { return theta[w_index(k, i, j)]; }
  double b(int k, int i) const { return theta[b_index(k, i)]; }
  double& b(int k, int i) { return theta[b_index(k, i)]; }

  const double* w_row(int k, int i) const {
    return theta.data() + w_index(k, i, 0);
  }
  const double* b_ptr(int k) const { return theta.data() + b_off_[k]; }

 private:
  std::vector<int64_t> w_off_, b_off_;
};

namespace detail {

// Shared affine kernel: out = W_k * in (+ bias on column 0), where `in` holds
// n_in rows of `stride` consecutive entries. mlp_forward and the jet
// propagation both run through this single kernel, so their value columns
// accumulate in the identical order (bitwise-equal results).
inline void affine_apply(const MlpParams& p, int k, const double* in, int n_in,
                         double* out, int n_out, int stride) {
  for (int i = 0; i < n_out; ++i) {
    double* o = out + int64_t{1} * i * stride;
    for (int c = 0; c < stride; ++c) o[c] = 0.0;
    const double* wr = p.w_row(k, i);
    for (int j = 0; j < n_in; ++j) {
      const double wij = wr[j];
      const double* a = in + int64_t{1} * j * stride;
      for (int c = 0; c < stride; ++c) o[c] += wij * a[c];
    }
    o[0] += p.b_ptr(k)[i];
  }
}

}  // namespace detail

/// Evaluate u_theta(x): alternating affine maps and componentwise activation,
/// final layer affine with no activation.
inline double mlp_forward(const MlpParams& p, Point x) {
  require(static_cast<int>(x.size()) == p.arch.input_dim(),
          "mlp_forward: input dimension mismatch");
  const int L = p.arch.layer_count();
  std::vector<double> a(x.begin(), x.end()), y;
  for (int k = 0; k < L; ++k) {
    y.resize(p.arch.widths[k + 1]);
    detail::affine_apply(p, k, a.data(), p.arch.widths[k], y.data(),
                         p.arch.widths[k + 1], 1);
    if (k + 1 < L) {
      for (double& v : y) {
        if (p.arch.activation == Activation::Tanh) {
          v = std::tanh(v);
        } else {
          v = v > 0.0 ? std::pow(v, p.arch.relu_k) : 0.0;
        }
      }
    }
    a.swap(y);
  }
  return a[0];
}

// ---------------------------------------------------------------------------
// Checkpoint I/O. Format: one descriptor line
//   arch: d1,d2,...,dL+1; activation: tanh
// followed by the flat parameter list in the frozen ordering, one %.17g value
// per line.
// ---------------------------------------------------------------------------

inline void save_checkpoint(const MlpParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << "arch: ";
  for (size_t i = 0; i < p.arch.widths.size(); ++i) {
    if (i) out << ",";
    out << p.arch.widths[i];
  }
  out << "; activation: " << p.arch.activation_name() << "\n";
  for (double v : p.theta) out << fmt_g17(v) << "\n";
  if (!out) throw std::runtime_error("save_checkpoint: write failed " + path);
}

inline MlpParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string header;
  std::getline(in, header);
  Architecture arch;
  {
    const auto apos = header.find("arch:");
    const auto spos = header.find(';');
    require(apos != std::string::npos && spos != std::string::npos,
            "load_checkpoint: malformed descriptor line");
    std::stringstream widths(header.substr(apos + 5, spos - apos - 5));
    std::string tok;
    while (std::getline(widths, tok, ','))
      arch.widths.push_back(std::stoi(tok));
    auto act = header.substr(header.find("activation:") + 11);
    while (!act.empty() && act.front() == ' ') act.erase(act.begin());
    while (!act.empty() && (act.back() == ' ' || act.back() == '\r'))
      act.pop_back();
    if (act == "tanh") {
      arch.activation = Activation::Tanh;
    } else if (act.rfind("relu", 0) == 0) {
      arch.activation = Activation::ReluPow;
      arch.relu_k = std::stoi(act.substr(4));
    } else {
      throw ContractViolation("load_checkpoint: unknown activation " + act);
    }
  }
  MlpParams p = MlpParams::zeros(arch);
  for (size_t i = 0; i < p.theta.size(); ++i) {
    if (!(in >> p.theta[i]))
      throw std::runtime_error("load_checkpoint: truncated parameter list");
  }
  return p;
}

}  // namespace pinnlab
