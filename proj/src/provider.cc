#include "refrain/provider.h"

namespace refrain {

void FrameSet::validate() const {
  if (frames.empty()) throw Error(ErrorCode::kEmptyInput, "frame set '" + video_id + "' is empty");
  const auto dim = frames.front().dim();
  for (const auto& f : frames) {
    if (f.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "frame set '" + video_id + "' mixes dimensions");
    }
    if (!f.normalized()) {
      throw Error(ErrorCode::kValidationError, "frame set '" + video_id + "' has unnormalized frames");
    }
  }
  if (!sources.empty() && sources.size() != frames.size()) {
    throw Error(ErrorCode::kValidationError, "frame set '" + video_id + "' has mismatched sources");
  }
}

FrameSet FrameSet::slice(std::size_t begin, std::size_t end) const {
  FrameSet out;
  out.video_id = video_id;
  out.frames.assign(frames.begin() + static_cast<std::ptrdiff_t>(begin),
                    frames.begin() + static_cast<std::ptrdiff_t>(end));
  if (!sources.empty()) {
    out.sources.assign(sources.begin() + static_cast<std::ptrdiff_t>(begin),
                       sources.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<EmbeddingVector> TextEmbedder::embed_texts(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_text(t));
  return out;
}

double CosineMatchScorer::match(std::string_view caption, const FrameSet& video) const {
  return cosine_similarity(embedder_.embed_text(caption), mean_pool(video.frames));
}

std::vector<std::size_t> uniform_frame_indices(std::size_t total, std::size_t count) {
  std::vector<std::size_t> out;
  if (total <= count) {
    for (std::size_t i = 0; i < total; ++i) out.push_back(i);
    return out;
  }
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back((2 * i + 1) * total / (2 * count));
  }
  return out;
}

}  // namespace refrain
