#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refrain/config.h"
#include "refrain/provider.h"

namespace refrain {

enum class Direction { kTextToVideo, kVideoToText };

std::string_view direction_name(Direction direction);
Direction parse_direction(std::string_view name);

// A video with its frames (already sampled to at most frames_per_video).
struct Video {
  std::string id;
  FrameSet frames;
};

struct CaptionRecord {
  std::string id;
  std::string text;
  std::size_t video = 0;  // index into RetrievalDataset::videos
};

struct RetrievalDataset {
  std::vector<Video> videos;
  std::vector<CaptionRecord> captions;

  // Throws kStoreIncomplete when a video has no frames or a caption points
  // at a missing video.
  void validate() const;
};

struct QueryResult {
  std::size_t query = 0;               // caption index (t2v) or video index (v2t)
  std::string query_id;
  std::vector<std::size_t> ranking;    // gallery indices, best first
  std::vector<std::size_t> truths;     // any of these counts as a hit
};

struct RetrievalRun {
  Direction direction = Direction::kTextToVideo;
  std::vector<QueryResult> results;    // sorted by query index
  std::map<std::size_t, double> recall;

  // Fills `recall` for every rank; throws kRankOutOfRange.
  void summarize(std::span<const std::size_t> ranks);
};

// Indices of the k gallery entries most similar to the query, best first,
// lowest index on ties. Throws kInsufficientGallery when k > gallery size.
std::vector<std::size_t> candidate_select(const EmbeddingVector& query,
                                          std::span<const EmbeddingVector> gallery, std::size_t k);

// Score callback for one candidate id. May throw; failures surface as
// kScorerError carrying the candidate id.
using CandidateScore = std::function<double(std::size_t candidate)>;

// Stable sort of candidates by score, descending. Throws kEmptyInput.
std::vector<std::size_t> rerank(std::span<const std::size_t> candidates, const CandidateScore& score);

// Same ordering from precomputed scores (scores[i] belongs to candidates[i]).
std::vector<std::size_t> rerank_by_scores(std::span<const std::size_t> candidates,
                                          std::span<const double> scores);

// Fraction of queries whose truth appears in the top n. Throws
// kRankOutOfRange when n exceeds any ranking length.
double recall_at_n(const RetrievalRun& run, std::size_t n);

// 1-based rank of the first truth in the ranking, if present.
std::optional<std::size_t> truth_rank(const QueryResult& result);

// Embeddings shared by evaluate() and the repetition pipeline.
struct PreparedDataset {
  std::vector<EmbeddingVector> video_vectors;    // mean-pooled frames
  std::vector<EmbeddingVector> caption_vectors;
  std::vector<std::vector<std::size_t>> captions_of_video;
};

PreparedDataset prepare(const RetrievalDataset& dataset, const TextEmbedder& embedder);

struct EvalOptions {
  Direction direction = Direction::kTextToVideo;
  std::size_t workers = 1;
};

// Stage-1 candidate selection followed by matching-score rerank, per query.
RetrievalRun evaluate(const RetrievalDataset& dataset, const EngineConfig& config,
                      const TextEmbedder& embedder, const MatchScorer& scorer,
                      const EvalOptions& options = {});

// Stage-1 candidates for query q in the given direction.
std::vector<std::size_t> stage_one(const PreparedDataset& prepared, Direction direction,
                                   std::size_t query, std::size_t k);

std::vector<std::size_t> query_truths(const RetrievalDataset& dataset,
                                      const PreparedDataset& prepared, Direction direction,
                                      std::size_t query);

// Plain-text table (rows R@N) and its JSON mirror. Both are deterministic
// functions of the run.
std::string render_report(const RetrievalRun& run);
std::string render_report_json(const RetrievalRun& run);

}  // namespace refrain
