#include "refrain/repetition.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include "json.hpp"

namespace refrain {

namespace {

ScoreMatrix fill_matrix(std::size_t rows, std::size_t cols,
                        const std::function<double(std::size_t, std::size_t)>& score,
                        const std::function<std::string(std::size_t)>& describe) {
  ScoreMatrix matrix(rows, cols);
  for (std::size_t j = 0; j < rows; ++j) {
    for (std::size_t i = 0; i < cols; ++i) {
      double s = 0.0;
      try {
        s = score(j, i);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kScorerError, describe(j) + ", variant " + std::to_string(i) + ": " + e.what());
      }
      if (!std::isfinite(s)) {
        throw Error(ErrorCode::kScorerError, describe(j) + ", variant " + std::to_string(i) + ": non-finite score");
      }
      matrix.at(j, i) = s;
    }
  }
  return matrix;
}

std::vector<double> column(const ScoreMatrix& m, std::size_t c) {
  std::vector<double> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = m.at(r, c);
  return out;
}

}  // namespace

std::vector<Segment> UniformSegmenter::propose(std::size_t frame_count, std::size_t clips) const {
  std::vector<Segment> out;
  const std::size_t parts = std::min(clips, frame_count);
  for (std::size_t i = 0; i < parts; ++i) {
    out.push_back({i * frame_count / parts, (i + 1) * frame_count / parts});
  }
  return out;
}

std::vector<Segment> merge_segments(std::vector<Segment> segments, std::size_t clips,
                                    std::size_t min_clip_frames) {
  auto merge = [&](std::size_t into, std::size_t from) {
    segments[into].begin = std::min(segments[into].begin, segments[from].begin);
    segments[into].end = std::max(segments[into].end, segments[from].end);
    segments.erase(segments.begin() + static_cast<std::ptrdiff_t>(from));
  };

  while (segments.size() > 1) {
    const auto it = std::find_if(segments.begin(), segments.end(),
                                 [&](const Segment& s) { return s.length() < min_clip_frames; });
    if (it == segments.end()) break;
    const auto idx = static_cast<std::size_t>(it - segments.begin());
    if (idx > 0) {
      merge(idx - 1, idx);
    } else {
      merge(1, 0);
    }
  }

  while (segments.size() > clips && segments.size() > 1) {
    std::size_t shortest = 0;
    for (std::size_t i = 1; i < segments.size(); ++i) {
      if (segments[i].length() < segments[shortest].length()) shortest = i;
    }
    const bool has_left = shortest > 0;
    const bool has_right = shortest + 1 < segments.size();
    bool to_left = has_left;
    if (has_left && has_right) {
      to_left = segments[shortest - 1].length() <= segments[shortest + 1].length();
    }
    if (to_left) {
      merge(shortest - 1, shortest);
    } else {
      merge(shortest + 1, shortest);
    }
  }
  return segments;
}

ClipSet segment_clips(const FrameSet& video, std::size_t clips, std::size_t min_clip_frames,
                      const Segmenter& segmenter) {
  if (video.empty()) throw Error(ErrorCode::kEmptyInput, "video '" + video.video_id + "' has no frames");
  if (clips == 0) throw Error(ErrorCode::kInvalidArgument, "clips must be >= 1");

  auto segments = segmenter.propose(video.size(), clips);
  std::size_t cursor = 0;
  for (const auto& s : segments) {
    if (s.begin != cursor || s.end <= s.begin || s.end > video.size()) {
      throw Error(ErrorCode::kValidationError, "segmenter returned a non-contiguous or empty segment");
    }
    cursor = s.end;
  }
  if (!segments.empty() && cursor != video.size()) {
    throw Error(ErrorCode::kValidationError, "segmenter did not cover every frame");
  }
  segments = merge_segments(std::move(segments), clips, min_clip_frames);

  ClipSet out;
  out.video_id = video.video_id;
  out.variants.reserve(clips + 1);
  out.variants.push_back(video);
  for (const auto& s : segments) out.variants.push_back(video.slice(s.begin, s.end));
  while (out.variants.size() < clips + 1) out.variants.push_back(video);
  return out;
}

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw Error(ErrorCode::kEmptyInput, "score matrix needs rows and columns");
}

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows == 0 || cols == 0) throw Error(ErrorCode::kEmptyInput, "score matrix needs rows and columns");
  if (values_.size() != rows * cols) throw Error(ErrorCode::kDimensionMismatch, "score matrix size");
}

ScoreMatrix ScoreMatrix::transposed() const {
  ScoreMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) out.at(c, r) = at(r, c);
  }
  return out;
}

ScoreMatrix build_score_matrix(std::string_view caption, std::span<const ClipSet* const> candidates,
                               const MatchScorer& scorer) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyInput, "no candidates");
  const std::size_t cols = candidates.front()->variants.size();
  for (const auto* c : candidates) {
    if (c->variants.size() != cols) {
      throw Error(ErrorCode::kInvalidArgument, "candidates disagree on clip count");
    }
  }
  return fill_matrix(
      candidates.size(), cols,
      [&](std::size_t j, std::size_t i) { return scorer.match(caption, candidates[j]->variants[i]); },
      [&](std::size_t j) { return "candidate " + candidates[j]->video_id; });
}

std::vector<std::size_t> collect_votes(const ScoreMatrix& matrix) {
  const auto voters = matrix.transposed();
  std::vector<std::size_t> votes;
  votes.reserve(voters.rows());
  for (std::size_t v = 0; v < voters.rows(); ++v) votes.push_back(argmax_with_tiebreak(voters.row(v)));
  return votes;
}

std::map<std::size_t, std::size_t> vote_histogram(std::span<const std::size_t> votes) {
  std::map<std::size_t, std::size_t> histogram;
  for (auto v : votes) ++histogram[v];
  return histogram;
}

double matching_entropy(std::span<const std::size_t> votes) {
  if (votes.empty()) throw Error(ErrorCode::kEmptyInput, "no votes");
  const auto histogram = vote_histogram(votes);
  if (histogram.size() == 1) return 0.0;
  const double total = static_cast<double>(votes.size());
  double me = 0.0;
  for (const auto& [vote, count] : histogram) {
    const double p = static_cast<double>(count) / total;
    me -= p * std::log(p);
  }
  return me;
}

bool should_repeat(double me, double threshold) { return me > threshold; }

AugmentedCaption augment_caption(const Caption& caption) {
  AugmentedCaption out{caption, keywords_in_caption_order(caption), caption.text};
  if (out.keywords.empty()) return out;
  out.text += ' ';
  for (std::size_t i = 0; i < out.keywords.size(); ++i) {
    if (i > 0) out.text += ", ";
    out.text += out.keywords[i];
  }
  return out;
}

AugmentedCaption augment_caption(const Caption& caption, const Lexicon& lexicon) {
  return augment_caption(make_caption(caption.id, caption.text, lexicon));
}

RepetitionRun repetition_pipeline(const RetrievalDataset& dataset, const EngineConfig& config,
                                  const TextEmbedder& embedder, const MatchScorer& scorer,
                                  const Segmenter& segmenter, const Lexicon& lexicon,
                                  const RepetitionOptions& options) {
  config.validate();
  const bool t2v = options.direction == Direction::kTextToVideo;
  if (!t2v && !options.symmetric) {
    throw Error(ErrorCode::kInvalidArgument, "video-to-text repetition requires symmetric mode");
  }
  const auto prepared = prepare(dataset, embedder);

  std::vector<ClipSet> clipsets;
  clipsets.reserve(dataset.videos.size());
  for (const auto& v : dataset.videos) {
    clipsets.push_back(segment_clips(v.frames, config.clips, config.min_clip_frames, segmenter));
  }

  const std::size_t queries = t2v ? dataset.captions.size() : dataset.videos.size();
  RepetitionRun out;
  out.run.direction = options.direction;
  out.run.results.resize(queries);
  out.reports.resize(queries);

  parallel_for(queries, options.workers, [&](std::size_t q) {
    auto& result = out.run.results[q];
    auto& report = out.reports[q];
    const std::string query_id = t2v ? dataset.captions[q].id : dataset.videos[q].id;
    try {
      result.query = report.query = q;
      result.query_id = report.query_id = query_id;
      result.truths = query_truths(dataset, prepared, options.direction, q);
      const auto candidates = stage_one(prepared, options.direction, q, config.candidates);
      report.candidates = candidates;

      ScoreMatrix matrix(1, 1);
      if (t2v) {
        std::vector<const ClipSet*> cand_clips;
        cand_clips.reserve(candidates.size());
        for (auto v : candidates) cand_clips.push_back(&clipsets[v]);
        matrix = build_score_matrix(dataset.captions[q].text, cand_clips, scorer);
      } else {
        const auto& query_clips = clipsets[q];
        matrix = fill_matrix(
            candidates.size(), query_clips.variants.size(),
            [&](std::size_t j, std::size_t i) {
              return scorer.match(dataset.captions[candidates[j]].text, query_clips.variants[i]);
            },
            [&](std::size_t j) { return "candidate " + dataset.captions[candidates[j]].id; });
      }

      // Column 0 scores every candidate against its full video: the baseline rerank.
      const auto baseline = rerank_by_scores(candidates, column(matrix, 0));
      for (auto row : collect_votes(matrix)) report.votes.push_back(candidates[row]);
      report.histogram = vote_histogram(report.votes);
      report.me = matching_entropy(report.votes);
      report.triggered = options.mode == RepetitionMode::kAll || should_repeat(report.me, config.me_threshold);

      result.ranking = baseline;
      if (report.triggered) {
        if (t2v) {
          const auto caption = make_caption(query_id, dataset.captions[q].text, lexicon);
          const auto augmented = augment_caption(caption);
          result.ranking = rerank(candidates, [&](std::size_t v) {
            return scorer.match(augmented.text, dataset.videos[v].frames);
          });
        } else {
          const auto& frames = dataset.videos[q].frames;
          result.ranking = rerank(candidates, [&](std::size_t c) {
            const auto caption = make_caption(dataset.captions[c].id, dataset.captions[c].text, lexicon);
            return scorer.match(augment_caption(caption).text, frames);
          });
        }
      }
      QueryResult before = result;
      before.ranking = baseline;
      report.rank_before = truth_rank(before);
      report.rank_after = truth_rank(result);
    } catch (const Error& e) {
      throw Error(e.code(), "query '" + query_id + "': " + e.what());
    }
  });
  out.run.summarize(config.recall_ranks);
  return out;
}

std::string render_diagnostics(const RepetitionRun& run, const RetrievalDataset& dataset) {
  const bool t2v = run.run.direction == Direction::kTextToVideo;
  auto gallery_id = [&](std::size_t i) { return t2v ? dataset.videos.at(i).id : dataset.captions.at(i).id; };
  std::string out;
  for (const auto& r : run.reports) {
    nlohmann::ordered_json doc;
    doc["query_id"] = r.query_id;
    auto& cands = doc["candidates"] = nlohmann::ordered_json::array();
    for (auto c : r.candidates) cands.push_back(gallery_id(c));
    auto& votes = doc["votes"] = nlohmann::ordered_json::array();
    for (auto v : r.votes) votes.push_back(gallery_id(v));
    auto& hist = doc["histogram"] = nlohmann::ordered_json::object();
    for (const auto& [v, count] : r.histogram) hist[gallery_id(v)] = count;
    doc["me"] = r.me;
    doc["triggered"] = r.triggered;
    doc["rank_before"] = r.rank_before ? nlohmann::ordered_json(*r.rank_before) : nlohmann::ordered_json();
    doc["rank_after"] = r.rank_after ? nlohmann::ordered_json(*r.rank_after) : nlohmann::ordered_json();
    out += doc.dump() + "\n";
  }
  return out;
}

}  // namespace refrain
