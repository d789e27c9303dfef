#include "refrain/retrieval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

namespace refrain {

std::string_view direction_name(Direction direction) {
  return direction == Direction::kTextToVideo ? "t2v" : "v2t";
}

Direction parse_direction(std::string_view name) {
  if (name == "t2v") return Direction::kTextToVideo;
  if (name == "v2t") return Direction::kVideoToText;
  throw Error(ErrorCode::kInvalidArgument, "direction must be t2v or v2t, got " + std::string(name));
}

void RetrievalDataset::validate() const {
  if (videos.empty()) throw Error(ErrorCode::kStoreIncomplete, "dataset has no videos");
  if (captions.empty()) throw Error(ErrorCode::kStoreIncomplete, "dataset has no captions");
  for (const auto& v : videos) {
    if (v.frames.empty()) throw Error(ErrorCode::kStoreIncomplete, "video '" + v.id + "' has no frames");
    v.frames.validate();
  }
  for (const auto& c : captions) {
    if (c.video >= videos.size()) {
      throw Error(ErrorCode::kStoreIncomplete, "caption '" + c.id + "' references a missing video");
    }
  }
}

void RetrievalRun::summarize(std::span<const std::size_t> ranks) {
  recall.clear();
  for (auto n : ranks) recall[n] = recall_at_n(*this, n);
}

std::vector<std::size_t> candidate_select(const EmbeddingVector& query,
                                          std::span<const EmbeddingVector> gallery, std::size_t k) {
  if (k > gallery.size()) {
    throw Error(ErrorCode::kInsufficientGallery, "k=" + std::to_string(k) + " exceeds gallery size " +
                                                     std::to_string(gallery.size()));
  }
  std::vector<double> sims(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) sims[i] = cosine_similarity(query, gallery[i]);
  std::vector<std::size_t> order(gallery.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (sims[a] != sims[b]) return sims[a] > sims[b];
                      return a < b;
                    });
  order.resize(k);
  return order;
}

std::vector<std::size_t> rerank_by_scores(std::span<const std::size_t> candidates,
                                          std::span<const double> scores) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyInput, "no candidates to rerank");
  if (scores.size() != candidates.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one score per candidate required");
  }
  std::vector<std::size_t> positions(candidates.size());
  std::iota(positions.begin(), positions.end(), 0);
  std::stable_sort(positions.begin(), positions.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> out;
  out.reserve(candidates.size());
  for (auto p : positions) out.push_back(candidates[p]);
  return out;
}

std::vector<std::size_t> rerank(std::span<const std::size_t> candidates, const CandidateScore& score) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyInput, "no candidates to rerank");
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (auto id : candidates) {
    double s = 0.0;
    try {
      s = score(id);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kScorerError, "candidate " + std::to_string(id) + ": " + e.what());
    }
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kScorerError, "candidate " + std::to_string(id) + ": non-finite score");
    }
    scores.push_back(s);
  }
  return rerank_by_scores(candidates, scores);
}

double recall_at_n(const RetrievalRun& run, std::size_t n) {
  if (run.results.empty()) throw Error(ErrorCode::kEmptyInput, "run has no queries");
  std::size_t hits = 0;
  for (const auto& r : run.results) {
    if (n == 0 || n > r.ranking.size()) {
      throw Error(ErrorCode::kRankOutOfRange, "R@" + std::to_string(n) + " on a ranking of length " +
                                                  std::to_string(r.ranking.size()));
    }
    const auto top = std::span(r.ranking).first(n);
    const bool hit = std::any_of(r.truths.begin(), r.truths.end(), [&](std::size_t t) {
      return std::find(top.begin(), top.end(), t) != top.end();
    });
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(run.results.size());
}

std::optional<std::size_t> truth_rank(const QueryResult& result) {
  for (std::size_t i = 0; i < result.ranking.size(); ++i) {
    if (std::find(result.truths.begin(), result.truths.end(), result.ranking[i]) != result.truths.end()) {
      return i + 1;
    }
  }
  return std::nullopt;
}

PreparedDataset prepare(const RetrievalDataset& dataset, const TextEmbedder& embedder) {
  dataset.validate();
  PreparedDataset out;
  out.video_vectors.reserve(dataset.videos.size());
  for (const auto& v : dataset.videos) out.video_vectors.push_back(mean_pool(v.frames.frames));
  std::vector<std::string> texts;
  texts.reserve(dataset.captions.size());
  for (const auto& c : dataset.captions) texts.push_back(c.text);
  out.caption_vectors = embedder.embed_texts(texts);
  if (out.caption_vectors.size() != texts.size()) {
    throw Error(ErrorCode::kStoreIncomplete, "embedder returned the wrong number of vectors");
  }
  out.captions_of_video.resize(dataset.videos.size());
  for (std::size_t i = 0; i < dataset.captions.size(); ++i) {
    out.captions_of_video[dataset.captions[i].video].push_back(i);
  }
  return out;
}

std::vector<std::size_t> stage_one(const PreparedDataset& prepared, Direction direction,
                                   std::size_t query, std::size_t k) {
  if (direction == Direction::kTextToVideo) {
    return candidate_select(prepared.caption_vectors.at(query), prepared.video_vectors, k);
  }
  return candidate_select(prepared.video_vectors.at(query), prepared.caption_vectors, k);
}

std::vector<std::size_t> query_truths(const RetrievalDataset& dataset,
                                      const PreparedDataset& prepared, Direction direction,
                                      std::size_t query) {
  if (direction == Direction::kTextToVideo) return {dataset.captions.at(query).video};
  return prepared.captions_of_video.at(query);
}

RetrievalRun evaluate(const RetrievalDataset& dataset, const EngineConfig& config,
                      const TextEmbedder& embedder, const MatchScorer& scorer,
                      const EvalOptions& options) {
  config.validate();
  const auto prepared = prepare(dataset, embedder);
  const bool t2v = options.direction == Direction::kTextToVideo;
  const std::size_t queries = t2v ? dataset.captions.size() : dataset.videos.size();

  RetrievalRun run;
  run.direction = options.direction;
  run.results.resize(queries);
  parallel_for(queries, options.workers, [&](std::size_t q) {
    QueryResult& result = run.results[q];
    result.query = q;
    result.query_id = t2v ? dataset.captions[q].id : dataset.videos[q].id;
    result.truths = query_truths(dataset, prepared, options.direction, q);
    const auto candidates = stage_one(prepared, options.direction, q, config.candidates);
    if (t2v) {
      const auto& text = dataset.captions[q].text;
      result.ranking = rerank(candidates, [&](std::size_t v) {
        return scorer.match(text, dataset.videos[v].frames);
      });
    } else {
      const auto& frames = dataset.videos[q].frames;
      result.ranking = rerank(candidates, [&](std::size_t c) {
        return scorer.match(dataset.captions[c].text, frames);
      });
    }
  });
  run.summarize(config.recall_ranks);
  return run;
}

std::string render_report(const RetrievalRun& run) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %s\n", "direction", std::string(direction_name(run.direction)).c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-10s %zu\n", "queries", run.results.size());
  out += line;
  for (const auto& [n, value] : run.recall) {
    std::snprintf(line, sizeof line, "%-10s %6.2f\n", ("R@" + std::to_string(n)).c_str(), 100.0 * value);
    out += line;
  }
  return out;
}

std::string render_report_json(const RetrievalRun& run) {
  nlohmann::ordered_json doc;
  doc["direction"] = direction_name(run.direction);
  doc["queries"] = run.results.size();
  nlohmann::ordered_json recall = nlohmann::ordered_json::object();
  for (const auto& [n, value] : run.recall) recall["R@" + std::to_string(n)] = value;
  doc["recall"] = recall;
  return doc.dump() + "\n";
}

}  // namespace refrain
