#include "refrain/synthetic.h"

#include <cmath>
#include <numbers>

#include "refrain/tagger.h"

namespace refrain {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in (0, 1], never zero so log() is safe.
double unit_open(std::uint64_t& state) {
  return (static_cast<double>(splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

SyntheticEmbedder::SyntheticEmbedder(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be positive");
}

std::vector<double> SyntheticEmbedder::token_vector(std::string_view token) const {
  std::uint64_t state = fnv1a(token) ^ (seed_ * 0xd1b54a32d192ed03ULL);
  std::vector<double> v(dim_);
  // Box-Muller; written out so vectors are identical on every platform.
  for (std::size_t i = 0; i < dim_; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(unit_open(state)));
    const double theta = 2.0 * std::numbers::pi * unit_open(state);
    v[i] = r * std::cos(theta);
    if (i + 1 < dim_) v[i + 1] = r * std::sin(theta);
  }
  const double norm = l2_norm(v);
  for (double& x : v) x /= norm;
  return v;
}

EmbeddingVector SyntheticEmbedder::embed_text(std::string_view text) const {
  auto tokens = tokenize(text);
  if (tokens.empty()) tokens.emplace_back("<empty>");
  std::vector<double> sum(dim_, 0.0);
  for (const auto& t : tokens) {
    const auto v = token_vector(t);
    for (std::size_t i = 0; i < dim_; ++i) sum[i] += v[i];
  }
  return l2_normalize(sum);
}

std::vector<EmbeddingVector> SyntheticEmbedder::embed_frames(std::span<const std::string> items) const {
  std::vector<EmbeddingVector> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(embed_text(item));
  return out;
}

}  // namespace refrain
