#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refrain/provider.h"

namespace refrain {

// Deterministic offline embedder. Every token maps to a seeded Gaussian unit
// vector; a text embeds as the normalized sum of its token vectors, so texts
// sharing tokens are close. Frame items are treated as textual descriptors in
// the same space.
class SyntheticEmbedder : public TextEmbedder, public FrameEmbedder {
 public:
  explicit SyntheticEmbedder(std::uint64_t seed = 0, std::size_t dim = 256);

  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed_text(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_frames(std::span<const std::string> items) const override;

  // Unit vector of a single (already lowercased) token.
  std::vector<double> token_vector(std::string_view token) const;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

}  // namespace refrain
