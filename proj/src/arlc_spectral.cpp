// Rule execution, confidences, soft selection and the training loss evaluated
// on spectra, with a hand-written backward pass to the assignment logits.
//
// Gradient convention: for a real function f of a spectrum A, the gradient G
// satisfies df = dot(G, dA), where dot is SpectralBasis::dot (the flat
// D-dimensional inner product). With this convention
//   cos(A, Y):        G = Y / (|A||Y|) - cos * A / |A|^2
//   P = C * R:        G_C = G_P * conj(R)
//   P = conj(C) * R:  G_C = conj(G_P) * R

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ravenx/arlc.hpp"

namespace ravenx::arlc {

using vsa::Spectrum;
using cplx = std::complex<double>;

namespace {

inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}
inline cplx mul_conj(cplx a, cplx b) {  // a * conj(b)
  return {a.real() * b.real() + a.imag() * b.imag(), a.imag() * b.real() - a.real() * b.imag()};
}

double weighted_dot(std::span<const double> w, const cplx* a, const cplx* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
  return acc;
}

double plain_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

std::vector<double> softmax(std::span<const double> s) {
  const double top = *std::max_element(s.begin(), s.end());
  std::vector<double> p(s.size());
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) total += (p[i] = std::exp(s[i] - top));
  for (double& v : p) v /= total;
  return p;
}

/// All term weights, laid out [rule][term][source].
std::vector<double> all_weights(const RuleSet& rules) {
  const auto& sh = rules.shape();
  std::vector<double> alpha;
  alpha.reserve(rules.parameter_count());
  for (int r = 0; r < rules.rules(); ++r) {
    for (int k = 0; k < sh.terms(); ++k) {
      const auto w = rules.weights(r, k);
      alpha.insert(alpha.end(), w.begin(), w.end());
    }
  }
  return alpha;
}

/// Per-permutation working state.
struct PermState {
  std::vector<const cplx*> sources;  // N spectra
  std::vector<cplx> terms;           // [R*T][F]
  std::vector<cplx> preds;           // [R][F]
  std::vector<double> pred_norm;     // [R]
  std::vector<double> cos;           // [R]
  const cplx* target = nullptr;
  double target_norm = 0.0;
};

class Kernel {
 public:
  Kernel(const vsa::SpectralBasis& basis, const RuleSet& rules, std::span<const Spectrum> panels)
      : basis_(basis),
        shape_(rules.shape()),
        R_(rules.rules()),
        T_(shape_.terms()),
        N_(shape_.sources()),
        F_(basis.bins()),
        w_(basis.weights()),
        alpha_(all_weights(rules)),
        identity_(basis.identity()),
        panels_(panels) {
    if (panels.size() != static_cast<std::size_t>(3 * shape_.grid)) {
      throw std::invalid_argument("spectral kernel: expected " + std::to_string(3 * shape_.grid) + " panels, got " +
                                  std::to_string(panels.size()));
    }
  }

  void forward(PermState& st, const RowPermutation& perm, bool with_target) const {
    st.sources.clear();
    for (const auto& p : perm.samples) st.sources.push_back(panel(p));
    for (const auto& p : perm.context) st.sources.push_back(panel(p));
    st.sources.push_back(identity_.data());

    // Terms: C[rt] = sum_n alpha[rt][n] * S[n]; complex arrays viewed as doubles.
    const std::size_t RT = static_cast<std::size_t>(R_ * T_);
    const std::size_t F2 = 2 * F_;
    st.terms.assign(RT * F_, cplx{0.0, 0.0});
    double* C = reinterpret_cast<double*>(st.terms.data());
    for (std::size_t rt = 0; rt < RT; ++rt) {
      double* c = C + rt * F2;
      const double* a = alpha_.data() + rt * static_cast<std::size_t>(N_);
      for (int n = 0; n < N_; ++n) {
        const double an = a[n];
        if (an == 0.0) continue;
        const double* s = reinterpret_cast<const double*>(st.sources[static_cast<std::size_t>(n)]);
        for (std::size_t i = 0; i < F2; ++i) c[i] += an * s[i];
      }
    }

    st.preds.assign(static_cast<std::size_t>(R_) * F_, cplx{1.0, 0.0});
    for (int r = 0; r < R_; ++r) {
      cplx* P = st.preds.data() + static_cast<std::size_t>(r) * F_;
      for (int k = 0; k < T_; ++k) {
        const cplx* c = term(st, r, k);
        if (shape_.is_numerator(k)) {
          for (std::size_t i = 0; i < F_; ++i) P[i] = mul(P[i], c[i]);
        } else {
          for (std::size_t i = 0; i < F_; ++i) P[i] = mul_conj(P[i], c[i]);
        }
      }
    }

    st.pred_norm.assign(static_cast<std::size_t>(R_), 0.0);
    for (int r = 0; r < R_; ++r) {
      const cplx* P = st.preds.data() + static_cast<std::size_t>(r) * F_;
      st.pred_norm[static_cast<std::size_t>(r)] = std::sqrt(weighted_dot(w_, P, P, F_));
    }
    st.cos.assign(static_cast<std::size_t>(R_), 0.0);
    if (!with_target) return;
    st.target = panel(perm.target);
    st.target_norm = std::sqrt(weighted_dot(w_, st.target, st.target, F_));
    for (int r = 0; r < R_; ++r) {
      const cplx* P = st.preds.data() + static_cast<std::size_t>(r) * F_;
      st.cos[static_cast<std::size_t>(r)] =
          weighted_dot(w_, P, st.target, F_) / (st.pred_norm[static_cast<std::size_t>(r)] * st.target_norm);
    }
  }

  /// Accumulates d(f)/d(alpha) given G_P for rule r of permutation st.
  void backward_rule(const PermState& st, int r, const std::vector<cplx>& grad_pred, std::vector<double>& dalpha,
                     std::vector<cplx>& prefix, std::vector<cplx>& suffix, std::vector<cplx>& grad_term) const {
    const std::size_t T = static_cast<std::size_t>(T_);
    prefix.assign((T + 1) * F_, cplx{1.0, 0.0});
    suffix.assign((T + 1) * F_, cplx{1.0, 0.0});
    for (std::size_t k = 0; k < T; ++k) {
      const cplx* c = term(st, r, static_cast<int>(k));
      const cplx* in = prefix.data() + k * F_;
      cplx* out = prefix.data() + (k + 1) * F_;
      if (shape_.is_numerator(static_cast<int>(k))) {
        for (std::size_t i = 0; i < F_; ++i) out[i] = mul(in[i], c[i]);
      } else {
        for (std::size_t i = 0; i < F_; ++i) out[i] = mul_conj(in[i], c[i]);
      }
    }
    for (std::size_t k = T; k-- > 0;) {
      const cplx* c = term(st, r, static_cast<int>(k));
      const cplx* in = suffix.data() + (k + 1) * F_;
      cplx* out = suffix.data() + k * F_;
      if (shape_.is_numerator(static_cast<int>(k))) {
        for (std::size_t i = 0; i < F_; ++i) out[i] = mul(in[i], c[i]);
      } else {
        for (std::size_t i = 0; i < F_; ++i) out[i] = mul_conj(in[i], c[i]);
      }
    }

    grad_term.resize(F_);
    const std::size_t F2 = 2 * F_;
    for (std::size_t k = 0; k < T; ++k) {
      const cplx* pre = prefix.data() + k * F_;
      const cplx* suf = suffix.data() + (k + 1) * F_;
      const bool numer = shape_.is_numerator(static_cast<int>(k));
      for (std::size_t i = 0; i < F_; ++i) {
        const cplx rest = mul(pre[i], suf[i]);
        const cplx g = numer ? mul_conj(grad_pred[i], rest) : mul(std::conj(grad_pred[i]), rest);
        grad_term[i] = g * w_[i];  // fold the dot-product weight in once
      }
      const double* gt = reinterpret_cast<const double*>(grad_term.data());
      double* da = dalpha.data() + (static_cast<std::size_t>(r) * T + k) * static_cast<std::size_t>(N_);
      for (int n = 0; n < N_; ++n) {
        const auto an = alpha_[(static_cast<std::size_t>(r) * T + k) * static_cast<std::size_t>(N_) +
                               static_cast<std::size_t>(n)];
        if (an == 0.0) continue;  // softmax Jacobian zeroes these anyway
        da[n] += plain_dot(gt, reinterpret_cast<const double*>(st.sources[static_cast<std::size_t>(n)]), F2);
      }
    }
  }

  /// G of cos(A, Y) w.r.t. A, scaled by `factor`, added into out.
  void add_cos_grad(const cplx* A, double normA, const cplx* Y, double normY, double cosv, double factor,
                    cplx* out) const {
    const double a = factor / (normA * normY);
    const double b = factor * cosv / (normA * normA);
    for (std::size_t i = 0; i < F_; ++i) out[i] += a * Y[i] - b * A[i];
  }

  const cplx* term(const PermState& st, int r, int k) const {
    return st.terms.data() + (static_cast<std::size_t>(r) * T_ + k) * F_;
  }

  const cplx* panel(PanelRef p) const {
    const auto& s = panels_[static_cast<std::size_t>(p.row * shape_.grid + p.col)];
    if (s.size() != F_) throw std::logic_error("spectral kernel: panel (" + std::to_string(p.row) + "," +
                                               std::to_string(p.col) + ") is not available");
    return s.data();
  }

  const vsa::SpectralBasis& basis_;
  TemplateShape shape_;
  int R_, T_, N_;
  std::size_t F_;
  std::span<const double> w_;
  std::vector<double> alpha_;
  Spectrum identity_;
  std::span<const Spectrum> panels_;
};

}  // namespace

std::vector<Spectrum> encode_panels(const vsa::SpectralBasis& basis, const raven::Grid& grid) {
  std::vector<Spectrum> out;
  for (const auto& row : grid) {
    for (int v : row) {
      if (v < 0 || static_cast<std::size_t>(v) >= basis.range()) {
        throw std::out_of_range("encode_panels: value " + std::to_string(v) + " outside the dictionary range " +
                                std::to_string(basis.range()));
      }
      out.push_back(basis.code(static_cast<std::size_t>(v)));
    }
  }
  return out;
}

double loss_and_gradient(const vsa::SpectralBasis& basis, const RuleSet& rules, std::span<const Spectrum> panels,
                         std::span<double> grad, double scale) {
  Kernel K(basis, rules, panels);
  const auto perms = build_contexts(rules.shape().grid);
  const std::size_t R = static_cast<std::size_t>(rules.rules());
  const std::size_t F = basis.bins();

  std::array<PermState, 3> st;
  for (std::size_t p = 0; p < 3; ++p) K.forward(st[p], perms[p], true);

  std::vector<double> s(R, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    for (const auto& ps : st) s[r] += ps.cos[r];
  }
  const auto beta = softmax(s);

  std::array<std::vector<cplx>, 3> V;
  std::array<double, 3> v_norm{}, v_cos{};
  double loss = 1.0;
  for (std::size_t p = 0; p < 3; ++p) {
    V[p].assign(F, cplx{0.0, 0.0});
    for (std::size_t r = 0; r < R; ++r) {
      const cplx* P = st[p].preds.data() + r * F;
      for (std::size_t i = 0; i < F; ++i) V[p][i] += beta[r] * P[i];
    }
    v_norm[p] = std::sqrt(weighted_dot(K.w_, V[p].data(), V[p].data(), F));
    v_cos[p] = weighted_dot(K.w_, V[p].data(), st[p].target, F) / (v_norm[p] * st[p].target_norm);
    loss -= v_cos[p];
  }
  if (grad.empty()) return loss;
  if (grad.size() != rules.parameter_count()) throw std::invalid_argument("loss_and_gradient: gradient size mismatch");

  std::array<std::vector<cplx>, 3> GV;
  for (std::size_t p = 0; p < 3; ++p) {
    GV[p].assign(F, cplx{0.0, 0.0});
    K.add_cos_grad(V[p].data(), v_norm[p], st[p].target, st[p].target_norm, v_cos[p], -1.0, GV[p].data());
  }

  std::vector<double> dbeta(R, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t p = 0; p < 3; ++p) dbeta[r] += weighted_dot(K.w_, GV[p].data(), st[p].preds.data() + r * F, F);
  }
  double mean = 0.0;
  for (std::size_t r = 0; r < R; ++r) mean += beta[r] * dbeta[r];
  std::vector<double> ds(R);
  for (std::size_t r = 0; r < R; ++r) ds[r] = beta[r] * (dbeta[r] - mean);

  std::vector<double> dalpha(rules.parameter_count(), 0.0);
  std::vector<cplx> gp(F), prefix, suffix, grad_term;
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t r = 0; r < R; ++r) {
      const cplx* P = st[p].preds.data() + r * F;
      for (std::size_t i = 0; i < F; ++i) gp[i] = beta[r] * GV[p][i];
      K.add_cos_grad(P, st[p].pred_norm[r], st[p].target, st[p].target_norm, st[p].cos[r], ds[r], gp.data());
      K.backward_rule(st[p], static_cast<int>(r), gp, dalpha, prefix, suffix, grad_term);
    }
  }

  // Softmax Jacobian per term: dtheta_n = alpha_n * (dalpha_n - sum_m alpha_m dalpha_m).
  const std::size_t N = static_cast<std::size_t>(rules.shape().sources());
  for (std::size_t base = 0; base < dalpha.size(); base += N) {
    double dotp = 0.0;
    for (std::size_t n = 0; n < N; ++n) dotp += K.alpha_[base + n] * dalpha[base + n];
    for (std::size_t n = 0; n < N; ++n) grad[base + n] += scale * K.alpha_[base + n] * (dalpha[base + n] - dotp);
  }
  return loss;
}

AttributeInference infer_attribute(const vsa::SpectralBasis& basis, const RuleSet& rules,
                                   std::span<const Spectrum> panels) {
  Kernel K(basis, rules, panels);
  const auto perms = build_contexts(rules.shape().grid);
  const std::size_t R = static_cast<std::size_t>(rules.rules());
  const std::size_t F = basis.bins();

  AttributeInference out;
  out.confidences.assign(R, 0.0);
  PermState st;
  for (std::size_t p = 0; p < 2; ++p) {
    K.forward(st, perms[p], true);
    for (std::size_t r = 0; r < R; ++r) out.confidences[r] += st.cos[r];
  }
  K.forward(st, perms[2], false);
  const auto beta = softmax(out.confidences);
  out.prediction.assign(F, cplx{0.0, 0.0});
  for (std::size_t r = 0; r < R; ++r) {
    const cplx* P = st.preds.data() + r * F;
    for (std::size_t i = 0; i < F; ++i) out.prediction[i] += beta[r] * P[i];
  }
  return out;
}

}  // namespace ravenx::arlc
