#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "refrain/provider.h"
#include "refrain/retrieval.h"
#include "refrain/tagger.h"

namespace refrain {

// How a benchmark query relates to its paired distractor video.
enum class QueryKind {
  kPlain,         // truth clearly best, augmentation harmless
  kFragile,       // truth best, but keyword-heavy distractor wins once keywords are repeated
  kDisagreement,  // distractor wins on the full video, clips disagree, keywords rescue the truth
};

struct BenchmarkOptions {
  std::size_t queries = 100;
  double disagreement_share = 0.30;
  double fragile_share = 0.35;
  std::size_t frames = 8;  // frame items per video
  std::size_t clips = 3;   // must match the clip count used for evaluation
  std::uint64_t seed = 7;
};

struct BenchmarkVideo {
  std::string id;
  std::vector<std::string> frames;    // textual frame descriptors
  std::vector<std::string> captions;
  QueryKind kind = QueryKind::kPlain;
  bool distractor = false;
};

// Synthetic gallery for the repetition pipeline: every query owns a private
// pseudo-word vocabulary, a true video and one distractor. Video order is
// shuffled with the seed.
struct Benchmark {
  std::vector<BenchmarkVideo> videos;
  std::string lexicon_text;  // word<TAB>tag lines for the pseudo-words

  Lexicon lexicon() const { return Lexicon::parse(lexicon_text); }
};

Benchmark make_repetition_benchmark(const BenchmarkOptions& options = {});

// Writes manifest.jsonl, frames/<id>.txt and lexicon.tsv under `dir`.
void write_benchmark(const Benchmark& benchmark, const std::string& dir);

// Same dataset build_dataset() yields for the written manifest.
RetrievalDataset benchmark_dataset(const Benchmark& benchmark, const FrameEmbedder& embedder,
                                   std::size_t frames_per_video);

}  // namespace refrain
