#include "ravenx/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ravenx::vsa {

SpectralBasis::SpectralBasis(const Codebook& codebook) : block_len_(codebook.block_len()) {
  const std::size_t L = block_len_;
  std::vector<std::size_t> multiplicity(L, 0);
  for (std::size_t offset : codebook.base_offsets()) {
    for (std::size_t f = 0; f < L; ++f) ++multiplicity[(f * offset) % L];
  }
  for (std::size_t phi = 0; phi <= L / 2; ++phi) {
    const bool self_conjugate = phi == 0 || 2 * phi == L;
    const std::size_t count = self_conjugate ? multiplicity[phi] : multiplicity[phi] + multiplicity[L - phi];
    if (count == 0) continue;
    frequencies_.push_back(phi);
    weights_.push_back(static_cast<double>(count) / static_cast<double>(L));
  }

  twiddle_.resize(L);
  for (std::size_t n = 0; n < L; ++n) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(L);
    twiddle_[n] = {std::cos(angle), std::sin(angle)};
  }

  dictionary_.reserve(codebook.range());
  for (std::size_t k = 0; k < codebook.range(); ++k) dictionary_.push_back(encode(static_cast<long>(k)));
}

Spectrum SpectralBasis::encode(long v) const {
  const long L = static_cast<long>(block_len_);
  const std::size_t shift = static_cast<std::size_t>(((v % L) + L) % L);
  Spectrum s(bins());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = twiddle_[(frequencies_[i] * shift) % block_len_];
  return s;
}

Spectrum SpectralBasis::encode_pmf(const Pmf& p) const {
  if (p.size() != range()) throw std::invalid_argument("SpectralBasis::encode_pmf: PMF length mismatch");
  Spectrum s(bins(), {0.0, 0.0});
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    const Spectrum& c = dictionary_[k];
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += p[k] * c[i];
  }
  return s;
}

double SpectralBasis::dot(const Spectrum& a, const Spectrum& b) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += weights_[i] * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
  }
  return acc;
}

double SpectralBasis::cosine(const Spectrum& a, const Spectrum& b) const {
  const double na = dot(a, a);
  const double nb = dot(b, b);
  if (na <= 0.0 || nb <= 0.0) throw std::invalid_argument("SpectralBasis::cosine: zero vector");
  return dot(a, b) / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace ravenx::vsa
