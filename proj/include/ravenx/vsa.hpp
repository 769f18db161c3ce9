#pragma once

// Binary generalized sparse block codes (GSBC) with fractional power encoding.
//
// A BlockVector of dimension D is split into B blocks of length L = D / B.
// Binding is block-wise circular convolution, unbinding block-wise circular
// correlation, bundling a weighted sum renormalized per block, similarity the
// cosine over the flat vector. A binary code has one element set per block;
// binding two binary codes adds their per-block offsets modulo L, which is what
// makes z^a (x) z^b == z^(a+b).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"

namespace ravenx::vsa {

class BlockVector {
 public:
  BlockVector() = default;
  BlockVector(std::size_t blocks, std::size_t block_len);

  /// One-hot at index 0 in every block; the neutral element of bind.
  static BlockVector identity(std::size_t blocks, std::size_t block_len);
  /// One-hot at `positions[b]` in block b.
  static BlockVector one_hot(std::size_t block_len, std::span<const std::size_t> positions);

  std::size_t blocks() const { return blocks_; }
  std::size_t block_len() const { return block_len_; }
  std::size_t dims() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> block(std::size_t b) { return {data_.data() + b * block_len_, block_len_}; }
  std::span<const double> block(std::size_t b) const {
    return {data_.data() + b * block_len_, block_len_};
  }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const BlockVector& other) const {
    return blocks_ == other.blocks_ && block_len_ == other.block_len_;
  }

  bool operator==(const BlockVector&) const = default;

 private:
  std::size_t blocks_ = 0;
  std::size_t block_len_ = 0;
  std::vector<double> data_;
};

BlockVector bind(const BlockVector& a, const BlockVector& b);
BlockVector unbind(const BlockVector& a, const BlockVector& b);
/// Weighted sum followed by per-block normalization to unit mass.
BlockVector bundle(std::span<const BlockVector> vectors, std::span<const double> weights);
/// Cosine similarity over the flattened vectors.
double similarity(const BlockVector& a, const BlockVector& b);

/// True when every element is non-negative and each block sums to 1 within `tol`.
bool on_simplex(const BlockVector& v, double tol = 1e-9);

/// Probability mass function over the m values of an attribute.
class Pmf {
 public:
  explicit Pmf(std::vector<double> probabilities);
  static Pmf delta(std::size_t m, std::size_t k);
  static Pmf uniform(std::size_t m);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t k) const { return p_[k]; }
  std::span<const double> probabilities() const { return p_; }

 private:
  std::vector<double> p_;
};

struct CodebookSpec {
  std::size_t dims = 1024;
  std::size_t blocks = 4;
  std::size_t range = 10;
  std::uint64_t seed = 0;

  bool operator==(const CodebookSpec&) const = default;
};

/// Seeded binary base vector z and the dictionary {z^0, ..., z^(m-1)}.
/// Fully determined by its CodebookSpec.
class Codebook {
 public:
  explicit Codebook(CodebookSpec spec);

  const CodebookSpec& spec() const { return spec_; }
  std::size_t dims() const { return spec_.dims; }
  std::size_t blocks() const { return spec_.blocks; }
  std::size_t block_len() const { return spec_.dims / spec_.blocks; }
  std::size_t range() const { return spec_.range; }
  std::uint64_t seed() const { return spec_.seed; }

  const BlockVector& base() const { return base_; }
  const BlockVector& identity() const { return dictionary_.front(); }
  std::span<const BlockVector> dictionary() const { return dictionary_; }
  /// Position of the set element in each block of the base vector.
  std::span<const std::size_t> base_offsets() const { return offsets_; }

  /// Same base vector, dictionary resized to `range` entries.
  Codebook with_range(std::size_t range) const;

 private:
  CodebookSpec spec_;
  std::vector<std::size_t> offsets_;
  BlockVector base_;
  std::vector<BlockVector> dictionary_;
};

/// z^v; throws std::out_of_range unless 0 <= v < m.
const BlockVector& fpe_encode(const Codebook& codebook, long v);
/// Sum_k p[k] z^k.
BlockVector encode_pmf(const Codebook& codebook, const Pmf& p);

nlohmann::json to_json(const CodebookSpec& spec);
CodebookSpec codebook_spec_from_json(const nlohmann::json& j);
void save_codebook(const Codebook& codebook, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

}  // namespace ravenx::vsa
