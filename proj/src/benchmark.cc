#include "refrain/benchmark.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <unordered_set>

#include "refrain/manifest.h"

namespace refrain {

namespace {

class WordSource {
 public:
  explicit WordSource(std::uint64_t seed) : rng_(seed) {}

  // Pronounceable, unique, never a real stop word.
  std::string next() {
    static constexpr std::string_view kCons = "bdfgklmnprstvz";
    static constexpr std::string_view kVowels = "aeiou";
    for (;;) {
      std::string w;
      for (int i = 0; i < 3; ++i) {
        w += kCons[rng_() % kCons.size()];
        w += kVowels[rng_() % kVowels.size()];
      }
      if (used_.insert(w).second) return w;
    }
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::unordered_set<std::string> used_;
};

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::vector<std::string> repeat(const std::vector<std::string>& words, std::size_t n) {
  return std::vector<std::string>(n, join(words));
}

}  // namespace

Benchmark make_repetition_benchmark(const BenchmarkOptions& options) {
  if (options.queries == 0 || options.frames == 0 || options.clips == 0) {
    throw Error(ErrorCode::kInvalidArgument, "benchmark needs queries, frames and clips");
  }
  if (options.clips < 2 || options.frames < options.clips) {
    throw Error(ErrorCode::kInvalidArgument, "benchmark needs at least 2 clips and one frame per clip");
  }
  if (options.disagreement_share < 0 || options.fragile_share < 0 ||
      options.disagreement_share + options.fragile_share > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "benchmark shares must be non-negative and sum to at most 1");
  }
  const auto n_dis = static_cast<std::size_t>(options.disagreement_share * options.queries + 0.5);
  const auto n_frag = std::min(options.queries - n_dis,
                               static_cast<std::size_t>(options.fragile_share * options.queries + 0.5));
  // Frames of the distractor's final uniform segment; only those change.
  const std::size_t tail_begin = (options.clips - 1) * options.frames / options.clips;
  const std::size_t F = options.frames;

  WordSource words(options.seed);
  Benchmark bench;
  std::string& lex = bench.lexicon_text;
  lex = "# pseudo-word lexicon for the repetition benchmark\n";

  for (std::size_t q = 0; q < options.queries; ++q) {
    const QueryKind kind = q < n_dis ? QueryKind::kDisagreement
                           : q < n_dis + n_frag ? QueryKind::kFragile
                                                : QueryKind::kPlain;
    const std::string n1 = words.next(), verb = words.next(), n2 = words.next();
    const std::string c1 = words.next(), c2 = words.next(), c3 = words.next();
    const std::string odd = words.next();
    lex += n1 + "\tnoun\n" + verb + "\tverb\n" + n2 + "\tnoun\n";
    lex += c1 + "\tother\n" + c2 + "\tother\n" + c3 + "\tother\n" + odd + "\tother\n";

    const std::vector<std::string> keys = {n1, verb, n2};
    const std::vector<std::string> context = {c1, c2, c3};
    BenchmarkVideo truth{"", {}, {"a " + n1 + " is " + verb + " " + c1 + " " + c2 + " with " + n2 + " " + c3}, kind,
                         false};
    BenchmarkVideo other{"", {}, {}, kind, true};
    switch (kind) {
      case QueryKind::kPlain:
        truth.frames = repeat({n1, verb, n2, c1, c2, c3}, F);
        other.frames = repeat({n1, odd}, F);
        other.captions = {"the " + n1 + " near " + odd};
        break;
      case QueryKind::kFragile:
        truth.frames = repeat({n1, c1, c2, c3}, F);
        other.frames = repeat(keys, F);
        other.captions = {"the " + n1 + " is " + verb + " with " + n2};
        break;
      case QueryKind::kDisagreement:
        truth.frames = repeat(keys, F);
        other.frames = repeat({n1, c1, c2, c3}, tail_begin);
        for (std::size_t i = tail_begin; i < F; ++i) other.frames.push_back(c1);
        other.captions = {"the " + n1 + " " + c1 + " " + c2 + " and " + c3};
        break;
    }
    bench.videos.push_back(std::move(truth));
    bench.videos.push_back(std::move(other));
  }

  std::shuffle(bench.videos.begin(), bench.videos.end(), words.rng());
  for (std::size_t i = 0; i < bench.videos.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "bench%04zu", i);
    bench.videos[i].id = id;
  }
  return bench;
}

void write_benchmark(const Benchmark& benchmark, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "frames");
  std::ofstream manifest(fs::path(dir) / "manifest.jsonl");
  if (!manifest) throw Error(ErrorCode::kIoError, "cannot write manifest under " + dir);
  for (const auto& v : benchmark.videos) {
    const auto rel = "frames/" + v.id + ".txt";
    std::ofstream frames(fs::path(dir) / rel);
    for (const auto& f : v.frames) frames << f << '\n';
    if (!frames) throw Error(ErrorCode::kIoError, "cannot write " + rel);
    manifest << render_manifest_record({v.id, rel, v.captions, Split::kTest, 0}) << '\n';
  }
  std::ofstream lexicon(fs::path(dir) / "lexicon.tsv");
  lexicon << benchmark.lexicon_text;
  if (!manifest || !lexicon) throw Error(ErrorCode::kIoError, "failed writing benchmark to " + dir);
}

RetrievalDataset benchmark_dataset(const Benchmark& benchmark, const FrameEmbedder& embedder,
                                   std::size_t frames_per_video) {
  RetrievalDataset dataset;
  for (const auto& v : benchmark.videos) {
    FrameSet fs;
    fs.video_id = v.id;
    for (auto i : uniform_frame_indices(v.frames.size(), frames_per_video)) fs.sources.push_back(v.frames[i]);
    fs.frames = embedder.embed_frames(fs.sources);
    const auto index = dataset.videos.size();
    dataset.videos.push_back({v.id, std::move(fs)});
    for (std::size_t c = 0; c < v.captions.size(); ++c) {
      dataset.captions.push_back({v.id + "#" + std::to_string(c), v.captions[c], index});
    }
  }
  return dataset;
}

}  // namespace refrain
