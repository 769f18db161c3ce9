#include "ravenx/vsa.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ravenx/rng.hpp"

namespace ravenx::vsa {

namespace {

constexpr const char* kCodebookSchema = "ravenx.codebook/1";

void require_same_shape(const BlockVector& a, const BlockVector& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + std::to_string(a.blocks()) +
                                "x" + std::to_string(a.block_len()) + " vs " +
                                std::to_string(b.blocks()) + "x" + std::to_string(b.block_len()) +
                                ")");
  }
}

}  // namespace

BlockVector::BlockVector(std::size_t blocks, std::size_t block_len)
    : blocks_(blocks), block_len_(block_len), data_(blocks * block_len, 0.0) {}

BlockVector BlockVector::identity(std::size_t blocks, std::size_t block_len) {
  BlockVector v(blocks, block_len);
  for (std::size_t b = 0; b < blocks; ++b) v.block(b)[0] = 1.0;
  return v;
}

BlockVector BlockVector::one_hot(std::size_t block_len, std::span<const std::size_t> positions) {
  BlockVector v(positions.size(), block_len);
  for (std::size_t b = 0; b < positions.size(); ++b) {
    if (positions[b] >= block_len) throw std::out_of_range("one_hot: position outside block");
    v.block(b)[positions[b]] = 1.0;
  }
  return v;
}

// Zero entries of the left operand are skipped, so binary codes cost O(L) per
// block and the result stays exact.
BlockVector bind(const BlockVector& a, const BlockVector& b) {
  require_same_shape(a, b, "bind");
  const std::size_t L = a.block_len();
  BlockVector out(a.blocks(), L);
  for (std::size_t blk = 0; blk < a.blocks(); ++blk) {
    auto x = a.block(blk);
    auto y = b.block(blk);
    auto z = out.block(blk);
    for (std::size_t i = 0; i < L; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < L; ++j) {
        const std::size_t n = i + j < L ? i + j : i + j - L;
        z[n] += xi * y[j];
      }
    }
  }
  return out;
}

// out[n] = sum_k a[(n + k) mod L] * b[k]
BlockVector unbind(const BlockVector& a, const BlockVector& b) {
  require_same_shape(a, b, "unbind");
  const std::size_t L = a.block_len();
  BlockVector out(a.blocks(), L);
  for (std::size_t blk = 0; blk < a.blocks(); ++blk) {
    auto x = a.block(blk);
    auto y = b.block(blk);
    auto z = out.block(blk);
    for (std::size_t k = 0; k < L; ++k) {
      const double yk = y[k];
      if (yk == 0.0) continue;
      for (std::size_t n = 0; n < L; ++n) {
        const std::size_t src = n + k < L ? n + k : n + k - L;
        z[n] += x[src] * yk;
      }
    }
  }
  return out;
}

BlockVector bundle(std::span<const BlockVector> vectors, std::span<const double> weights) {
  if (vectors.empty()) throw std::invalid_argument("bundle: no vectors");
  if (vectors.size() != weights.size()) throw std::invalid_argument("bundle: weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("bundle: weights must be non-negative");
    total += w;
  }
  if (total == 0.0) throw std::invalid_argument("bundle: all weights are zero");

  BlockVector out(vectors.front().blocks(), vectors.front().block_len());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    require_same_shape(out, vectors[i], "bundle");
    if (weights[i] == 0.0) continue;
    auto src = vectors[i].data();
    auto dst = out.data();
    for (std::size_t n = 0; n < dst.size(); ++n) dst[n] += weights[i] * src[n];
  }
  for (std::size_t blk = 0; blk < out.blocks(); ++blk) {
    auto z = out.block(blk);
    const double mass = std::accumulate(z.begin(), z.end(), 0.0);
    if (mass == 0.0) throw std::invalid_argument("bundle: block with zero mass");
    for (double& v : z) v /= mass;
  }
  return out;
}

double similarity(const BlockVector& a, const BlockVector& b) {
  require_same_shape(a, b, "similarity");
  double dot = 0.0, na = 0.0, nb = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    na += x[i] * x[i];
    nb += y[i] * y[i];
  }
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("similarity: zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

bool on_simplex(const BlockVector& v, double tol) {
  for (std::size_t blk = 0; blk < v.blocks(); ++blk) {
    double mass = 0.0;
    for (double x : v.block(blk)) {
      if (x < 0.0) return false;
      mass += x;
    }
    if (std::abs(mass - 1.0) > tol) return false;
  }
  return true;
}

Pmf::Pmf(std::vector<double> probabilities) : p_(std::move(probabilities)) {
  if (p_.empty()) throw std::invalid_argument("Pmf: empty");
  double total = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0)) throw std::invalid_argument("Pmf: negative or NaN probability");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("Pmf: probabilities do not sum to 1");
}

Pmf Pmf::delta(std::size_t m, std::size_t k) {
  if (k >= m) throw std::out_of_range("Pmf::delta: index outside range");
  std::vector<double> p(m, 0.0);
  p[k] = 1.0;
  return Pmf(std::move(p));
}

Pmf Pmf::uniform(std::size_t m) {
  if (m == 0) throw std::invalid_argument("Pmf::uniform: empty");
  return Pmf(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

Codebook::Codebook(CodebookSpec spec) : spec_(spec) {
  if (spec_.blocks == 0 || spec_.dims == 0 || spec_.dims % spec_.blocks != 0) {
    throw std::invalid_argument("Codebook: dims must be a positive multiple of blocks");
  }
  if (spec_.range == 0) throw std::invalid_argument("Codebook: range must be positive");
  const std::size_t L = block_len();
  if (L < 2) throw std::invalid_argument("Codebook: block length must be at least 2");

  // Offsets coprime to L give z a full period of L, so z^a and z^b share no
  // block position unless a == b (mod L).
  Rng rng(spec_.seed);
  offsets_.resize(spec_.blocks);
  for (auto& o : offsets_) {
    do {
      o = static_cast<std::size_t>(rng.below(L));
    } while (std::gcd(o, L) != 1);
  }
  base_ = BlockVector::one_hot(L, offsets_);

  dictionary_.reserve(spec_.range);
  dictionary_.push_back(BlockVector::identity(spec_.blocks, L));
  for (std::size_t k = 1; k < spec_.range; ++k) dictionary_.push_back(bind(dictionary_.back(), base_));
}

Codebook Codebook::with_range(std::size_t range) const {
  CodebookSpec s = spec_;
  s.range = range;
  return Codebook(s);
}

const BlockVector& fpe_encode(const Codebook& codebook, long v) {
  if (v < 0 || static_cast<std::size_t>(v) >= codebook.range()) {
    throw std::out_of_range("fpe_encode: value " + std::to_string(v) + " outside [0, " +
                            std::to_string(codebook.range()) + ")");
  }
  return codebook.dictionary()[static_cast<std::size_t>(v)];
}

BlockVector encode_pmf(const Codebook& codebook, const Pmf& p) {
  if (p.size() != codebook.range()) {
    throw std::invalid_argument("encode_pmf: PMF has " + std::to_string(p.size()) +
                                " entries, codebook range is " + std::to_string(codebook.range()));
  }
  BlockVector out(codebook.blocks(), codebook.block_len());
  auto dst = out.data();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double w = p[k];
    if (w == 0.0) continue;
    auto src = codebook.dictionary()[k].data();
    for (std::size_t n = 0; n < dst.size(); ++n) dst[n] += w * src[n];
  }
  return out;
}

nlohmann::json to_json(const CodebookSpec& spec) {
  return {{"schema", kCodebookSchema},
          {"dims", spec.dims},
          {"blocks", spec.blocks},
          {"range", spec.range},
          {"seed", spec.seed}};
}

CodebookSpec codebook_spec_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string{}) != kCodebookSchema) {
    throw std::runtime_error("codebook: unsupported schema '" + j.value("schema", std::string{}) + "'");
  }
  CodebookSpec s;
  s.dims = j.at("dims").get<std::size_t>();
  s.blocks = j.at("blocks").get<std::size_t>();
  s.range = j.at("range").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

void save_codebook(const Codebook& codebook, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(codebook.spec()).dump(2) << '\n';
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return Codebook(codebook_spec_from_json(nlohmann::json::parse(in)));
}

}  // namespace ravenx::vsa
