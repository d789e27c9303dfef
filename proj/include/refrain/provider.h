#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refrain/core.h"

namespace refrain {

// An ordered list of frame embeddings for one video (or one clip of it).
// `sources` optionally names where each frame came from (image path or store
// key) so remote scorers can resend the raw frames; it is either empty or
// parallel to `frames`.
struct FrameSet {
  std::string video_id;
  std::vector<EmbeddingVector> frames;
  std::vector<std::string> sources;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  // Throws kEmptyInput / kDimensionMismatch / kValidationError.
  void validate() const;
  FrameSet slice(std::size_t begin, std::size_t end) const;
};

// Text -> normalized embedding. Implementations must be safe for concurrent
// calls on a const instance.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed_text(std::string_view text) const = 0;
  virtual std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) const;
};

// Frame item (image path, descriptor or store key) -> normalized embedding.
class FrameEmbedder {
 public:
  virtual ~FrameEmbedder() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<EmbeddingVector> embed_frames(std::span<const std::string> items) const = 0;
};

// Matching score between a caption and a video (or clip). Higher is better.
// Implementations must be safe for concurrent calls on a const instance.
class MatchScorer {
 public:
  virtual ~MatchScorer() = default;
  virtual double match(std::string_view caption, const FrameSet& video) const = 0;
};

// Scores by cosine between the caption embedding and the mean-pooled frames.
class CosineMatchScorer : public MatchScorer {
 public:
  explicit CosineMatchScorer(const TextEmbedder& embedder) : embedder_(embedder) {}
  double match(std::string_view caption, const FrameSet& video) const override;

 private:
  const TextEmbedder& embedder_;
};

// Frame indices sampled uniformly from a sequence of `total` frames: the
// centre of each of `count` equal spans. Returns all indices when total <= count.
std::vector<std::size_t> uniform_frame_indices(std::size_t total, std::size_t count);

}  // namespace refrain
