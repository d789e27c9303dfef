#pragma once

// Small hand-built embedders shared by unit and acceptance tests.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "refrain/core.h"
#include "refrain/provider.h"
#include "refrain/retrieval.h"
#include "refrain/tagger.h"

namespace refrain::testing {

// Each known word owns a fixed direction; unknown words share the last
// axis. A text embeds as the normalized sum over its tokens.
class TableEmbedder : public TextEmbedder {
 public:
  TableEmbedder(std::size_t dim, std::map<std::string, std::vector<double>> words)
      : dim_(dim), words_(std::move(words)) {}

  std::size_t dim() const override { return dim_; }

  EmbeddingVector embed_text(std::string_view text) const override {
    std::vector<double> sum(dim_, 0.0);
    for (const auto& token : tokenize(text)) {
      const auto it = words_.find(token);
      if (it == words_.end()) {
        sum.back() += 1.0;
      } else {
        for (std::size_t i = 0; i < dim_; ++i) sum[i] += it->second[i];
      }
    }
    if (l2_norm(sum) == 0.0) sum.back() = 1.0;
    return l2_normalize(sum);
  }

 private:
  std::size_t dim_;
  std::map<std::string, std::vector<double>> words_;
};

inline constexpr const char* kRaceCaption = "Three cars racing on a track, trying to outpace each other.";

// The four keywords sit on axes 0..3; axis 4 is scenery, axis 5 everything else.
inline TableEmbedder race_embedder() {
  return TableEmbedder(6, {{"cars", {1, 0, 0, 0, 0, 0}},
                           {"racing", {0, 1, 0, 0, 0, 0}},
                           {"track", {0, 0, 1, 0, 0, 0}},
                           {"outpace", {0, 0, 0, 1, 0, 0}},
                           {"trying", {0, 0, 0, 0, 0.6, 0.8}},
                           {"scenery", {0, 0, 0, 0, 1, 0}}});
}

// Eight frames of a race: mostly cars and track, some motion, some scenery.
inline FrameSet race_frames() {
  const std::vector<std::vector<double>> raw = {
      {0.9, 0.3, 0.6, 0.1, 0.2, 0}, {0.8, 0.5, 0.5, 0.2, 0.1, 0}, {0.7, 0.6, 0.4, 0.4, 0.1, 0},
      {0.6, 0.6, 0.7, 0.3, 0.3, 0}, {0.2, 0.1, 0.3, 0.0, 0.9, 0}, {0.8, 0.7, 0.5, 0.5, 0.1, 0},
      {0.9, 0.4, 0.6, 0.2, 0.2, 0}, {0.5, 0.3, 0.8, 0.1, 0.4, 0}};
  FrameSet frames;
  frames.video_id = "race";
  for (const auto& r : raw) frames.frames.push_back(l2_normalize(r));
  return frames;
}

// n videos whose frames describe exactly their one caption: "item<i> alpha<i> ...".
inline RetrievalDataset planted_dataset(const FrameEmbedder& embedder, std::size_t n, std::size_t frames = 4) {
  RetrievalDataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const auto tag = std::to_string(i);
    const std::string text = "item" + tag + " alpha" + tag + " beta" + tag;
    FrameSet f;
    f.video_id = "v" + tag;
    f.sources.assign(frames, text);
    f.frames = embedder.embed_frames(f.sources);
    d.videos.push_back({f.video_id, std::move(f)});
    d.captions.push_back({"c" + tag, text, i});
  }
  return d;
}

// Scores from a callback; lets tests plant any score table.
class FnScorer : public MatchScorer {
 public:
  using Fn = std::function<double(std::string_view, const FrameSet&)>;
  explicit FnScorer(Fn fn) : fn_(std::move(fn)) {}
  double match(std::string_view caption, const FrameSet& video) const override { return fn_(caption, video); }

 private:
  Fn fn_;
};

}  // namespace refrain::testing
