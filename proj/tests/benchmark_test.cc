#include "refrain/benchmark.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "refrain/manifest.h"
#include "refrain/synthetic.h"
#include "test_util.h"

namespace refrain {
namespace {

TEST(Benchmark, ShapeAndDeterminism) {
  const auto a = make_repetition_benchmark();
  EXPECT_EQ(a.videos.size(), 200u);
  std::size_t kinds[3] = {0, 0, 0};
  std::set<std::string> ids;
  for (const auto& v : a.videos) {
    if (!v.distractor) ++kinds[static_cast<int>(v.kind)];
    EXPECT_EQ(v.frames.size(), 8u);
    EXPECT_EQ(v.captions.size(), 1u);
    ids.insert(v.id);
  }
  EXPECT_EQ(ids.size(), 200u);
  EXPECT_EQ(kinds[static_cast<int>(QueryKind::kDisagreement)], 30u);
  EXPECT_EQ(kinds[static_cast<int>(QueryKind::kFragile)], 35u);
  EXPECT_EQ(kinds[static_cast<int>(QueryKind::kPlain)], 35u);

  const auto b = make_repetition_benchmark();
  EXPECT_EQ(a.lexicon_text, b.lexicon_text);
  for (std::size_t i = 0; i < a.videos.size(); ++i) EXPECT_EQ(a.videos[i].frames, b.videos[i].frames);
  EXPECT_NE(make_repetition_benchmark({.seed = 8}).lexicon_text, a.lexicon_text);
}

TEST(Benchmark, DisagreementDistractorChangesOnlyInLastClip) {
  const auto bench = make_repetition_benchmark({.queries = 10});
  for (const auto& v : bench.videos) {
    if (!v.distractor || v.kind != QueryKind::kDisagreement) continue;
    // uniform 3-way split of 8 frames puts the last clip at [5, 8)
    for (std::size_t i = 1; i < 5; ++i) EXPECT_EQ(v.frames[i], v.frames[0]);
    for (std::size_t i = 5; i < 8; ++i) EXPECT_NE(v.frames[i], v.frames[0]);
  }
}

TEST(Benchmark, WrittenManifestMatchesInMemoryDataset) {
  const auto dir = std::filesystem::temp_directory_path() / "refrain_bench_test";
  std::filesystem::remove_all(dir);
  const auto bench = make_repetition_benchmark({.queries = 12});
  write_benchmark(bench, dir.string());
  const SyntheticEmbedder e(0, 64);
  const auto manifest = load_manifest((dir / "manifest.jsonl").string());
  const auto from_disk = build_dataset(manifest, Split::kTest, FrameResolver(&e, nullptr), 8);
  const auto in_memory = benchmark_dataset(bench, e, 8);
  ASSERT_EQ(from_disk.videos.size(), in_memory.videos.size());
  for (std::size_t i = 0; i < in_memory.videos.size(); ++i) {
    EXPECT_EQ(from_disk.videos[i].frames.frames, in_memory.videos[i].frames.frames);
  }
  for (std::size_t i = 0; i < in_memory.captions.size(); ++i) {
    EXPECT_EQ(from_disk.captions[i].text, in_memory.captions[i].text);
    EXPECT_EQ(from_disk.captions[i].id, in_memory.captions[i].id);
  }
  const auto lex = Lexicon::load((dir / "lexicon.tsv").string());
  EXPECT_EQ(lex.size(), 12u * 7);
  std::filesystem::remove_all(dir);
}

TEST(Benchmark, RejectsBadOptions) {
  EXPECT_CODE(make_repetition_benchmark({.queries = 0}), ErrorCode::kInvalidArgument);
  EXPECT_CODE(make_repetition_benchmark({.frames = 2, .clips = 3}), ErrorCode::kInvalidArgument);
  EXPECT_CODE(make_repetition_benchmark({.disagreement_share = 0.8, .fragile_share = 0.5}),
              ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace refrain
