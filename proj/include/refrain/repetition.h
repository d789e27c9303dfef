#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refrain/config.h"
#include "refrain/provider.h"
#include "refrain/retrieval.h"
#include "refrain/tagger.h"

namespace refrain {

// Half-open frame range [begin, end).
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - begin; }
  bool operator==(const Segment&) const = default;
};

// Proposes contiguous segments covering [0, frame_count).
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<Segment> propose(std::size_t frame_count, std::size_t clips) const = 0;
};

// Splits into min(clips, frame_count) equal contiguous spans.
class UniformSegmenter : public Segmenter {
 public:
  std::vector<Segment> propose(std::size_t frame_count, std::size_t clips) const override;
};

// Original video at index 0 followed by exactly `clips` clip variants.
struct ClipSet {
  std::string video_id;
  std::vector<FrameSet> variants;

  std::size_t clips() const { return variants.empty() ? 0 : variants.size() - 1; }
};

// Normalizes proposed segments: segments shorter than min_clip_frames merge
// into their left neighbour (the first one into its right neighbour); while
// more than `clips` remain, the shortest merges into its shorter neighbour.
std::vector<Segment> merge_segments(std::vector<Segment> segments, std::size_t clips,
                                    std::size_t min_clip_frames);

// Throws kEmptyInput for a video without frames.
ClipSet segment_clips(const FrameSet& video, std::size_t clips, std::size_t min_clip_frames,
                      const Segmenter& segmenter);

// k candidates x (w + 1) variants of matching scores.
class ScoreMatrix {
 public:
  ScoreMatrix(std::size_t rows, std::size_t cols);
  ScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double at(std::size_t row, std::size_t col) const { return values_[row * cols_ + col]; }
  double& at(std::size_t row, std::size_t col) { return values_[row * cols_ + col]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  ScoreMatrix transposed() const;
  bool operator==(const ScoreMatrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
};

// Entry (j, i) = scorer(caption, variant i of candidate j). Throws
// kScorerError (with the candidate index) and kInvalidArgument when the
// candidates disagree on the clip count.
ScoreMatrix build_score_matrix(std::string_view caption, std::span<const ClipSet* const> candidates,
                               const MatchScorer& scorer);

// One vote per variant: the candidate row with the highest score in that
// column (row of the transpose), lowest row on ties.
std::vector<std::size_t> collect_votes(const ScoreMatrix& matrix);

// Shannon entropy (nats) of the histogram of distinct votes. Throws kEmptyInput.
double matching_entropy(std::span<const std::size_t> votes);
std::map<std::size_t, std::size_t> vote_histogram(std::span<const std::size_t> votes);

bool should_repeat(double me, double threshold);

struct AugmentedCaption {
  Caption original;
  std::vector<std::string> keywords;
  std::string text;
};

// Appends the caption's nouns and verbs, in caption order, as ", "-joined
// suffix after a single space. Keyword-free captions are returned unchanged.
AugmentedCaption augment_caption(const Caption& caption);
AugmentedCaption augment_caption(const Caption& caption, const Lexicon& lexicon);

struct MEReport {
  std::size_t query = 0;
  std::string query_id;
  std::vector<std::size_t> candidates;  // gallery indices in stage-1 order
  std::vector<std::size_t> votes;       // gallery indices chosen by each voter
  std::map<std::size_t, std::size_t> histogram;
  double me = 0.0;
  bool triggered = false;
  std::optional<std::size_t> rank_before;  // 1-based rank of the truth
  std::optional<std::size_t> rank_after;
};

enum class RepetitionMode {
  kTargeted,  // repeat only when ME exceeds the threshold
  kAll,       // repeat every query regardless of ME
};

struct RepetitionOptions {
  Direction direction = Direction::kTextToVideo;
  RepetitionMode mode = RepetitionMode::kTargeted;
  // Allows the v2t direction; voters are clips of the query video and the
  // candidate captions are augmented.
  bool symmetric = false;
  std::size_t workers = 1;
};

struct RepetitionRun {
  RetrievalRun run;
  std::vector<MEReport> reports;  // sorted by query index
};

RepetitionRun repetition_pipeline(const RetrievalDataset& dataset, const EngineConfig& config,
                                  const TextEmbedder& embedder, const MatchScorer& scorer,
                                  const Segmenter& segmenter, const Lexicon& lexicon,
                                  const RepetitionOptions& options = {});

// One JSON object per line per query; candidate and vote entries are
// rendered as gallery ids.
std::string render_diagnostics(const RepetitionRun& run, const RetrievalDataset& dataset);

}  // namespace refrain
