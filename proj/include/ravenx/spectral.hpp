#pragma once

// Frequency-domain view of the codebook span.
//
// Every vector produced from a Codebook by encoding, binding, unbinding and
// convex combination is the image of a distribution q over the exponent group
// Z_L: block b holds q pushed forward through k -> k * offset_b (mod L). The
// DFT of block b at bin f therefore equals Q(f * offset_b mod L), where Q is
// the DFT of q. Binding becomes Q_a * Q_b, unbinding Q_a * conj(Q_b), and the
// flat D-dimensional dot product is a weighted sum over the distinct
// frequencies. Only frequencies 0..L/2 are stored; the rest are conjugates.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "ravenx/vsa.hpp"

namespace ravenx::vsa {

using Spectrum = std::vector<std::complex<double>>;

class SpectralBasis {
 public:
  explicit SpectralBasis(const Codebook& codebook);

  std::size_t bins() const { return frequencies_.size(); }
  std::size_t block_len() const { return block_len_; }
  std::size_t range() const { return dictionary_.size(); }
  /// Exponent-group frequency held in each stored bin.
  std::span<const std::size_t> frequencies() const { return frequencies_; }
  /// Dot-product weight of each stored bin (multiplicity over blocks and
  /// conjugate pairs, divided by L).
  std::span<const double> weights() const { return weights_; }

  /// Spectrum of z^v for any integer v (negative exponents allowed).
  Spectrum encode(long v) const;
  /// Dictionary entry z^k, 0 <= k < range.
  const Spectrum& code(std::size_t k) const { return dictionary_.at(k); }
  Spectrum identity() const { return Spectrum(bins(), {1.0, 0.0}); }
  Spectrum encode_pmf(const Pmf& p) const;

  /// Flat dot product of the two BlockVectors the spectra stand for.
  double dot(const Spectrum& a, const Spectrum& b) const;
  double cosine(const Spectrum& a, const Spectrum& b) const;

 private:
  std::size_t block_len_;
  std::vector<std::size_t> frequencies_;
  std::vector<double> weights_;
  std::vector<std::complex<double>> twiddle_;
  std::vector<Spectrum> dictionary_;
};

}  // namespace ravenx::vsa
