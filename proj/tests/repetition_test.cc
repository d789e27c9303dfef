#include "refrain/repetition.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "fixtures.h"
#include "refrain/benchmark.h"
#include "refrain/synthetic.h"
#include "test_util.h"

namespace refrain {
namespace {

using Votes = std::vector<std::size_t>;

class ListSegmenter : public Segmenter {
 public:
  explicit ListSegmenter(std::vector<Segment> segments) : segments_(std::move(segments)) {}
  std::vector<Segment> propose(std::size_t, std::size_t) const override { return segments_; }

 private:
  std::vector<Segment> segments_;
};

FrameSet numbered_frames(std::size_t n) {
  FrameSet f;
  f.video_id = "v";
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(n + 1, 0.0);
    x[i] = 1.0;
    f.frames.push_back(l2_normalize(x));
  }
  return f;
}

std::vector<Segment> spans_of(const ClipSet& c, const FrameSet& video) {
  std::vector<Segment> out;
  for (std::size_t v = 1; v < c.variants.size(); ++v) {
    const auto& clip = c.variants[v];
    const auto first = std::find(video.frames.begin(), video.frames.end(), clip.frames.front()) - video.frames.begin();
    out.push_back({static_cast<std::size_t>(first), static_cast<std::size_t>(first) + clip.size()});
  }
  return out;
}

TEST(SegmentClips, SingleFramePadsWithOriginal) {
  const auto video = numbered_frames(1);
  const auto c = segment_clips(video, 3, 1, UniformSegmenter());
  ASSERT_EQ(c.variants.size(), 4u);
  for (const auto& v : c.variants) EXPECT_EQ(v.frames, video.frames);
}

TEST(SegmentClips, EvenSplit) {
  const auto video = numbered_frames(12);
  const auto c = segment_clips(video, 3, 2, UniformSegmenter());
  ASSERT_EQ(c.clips(), 3u);
  EXPECT_EQ(c.variants[0].frames, video.frames);
  EXPECT_EQ(spans_of(c, video), (std::vector<Segment>{{0, 4}, {4, 8}, {8, 12}}));
}

TEST(SegmentClips, UnevenSplitEightFrames) {
  const auto video = numbered_frames(8);
  const auto c = segment_clips(video, 3, 1, UniformSegmenter());
  EXPECT_EQ(spans_of(c, video), (std::vector<Segment>{{0, 2}, {2, 5}, {5, 8}}));
}

TEST(SegmentClips, MergeRuleHandTrace) {
  // lengths 3,1,2,2,2 -> short [3,4) joins its left neighbour -> 4,2,2,2
  // -> shortest [4,6) joins its shorter (right) neighbour -> [0,4) [4,8) [8,10)
  const auto video = numbered_frames(10);
  const ListSegmenter seg({{0, 3}, {3, 4}, {4, 6}, {6, 8}, {8, 10}});
  const auto c = segment_clips(video, 3, 2, seg);
  EXPECT_EQ(spans_of(c, video), (std::vector<Segment>{{0, 4}, {4, 8}, {8, 10}}));
}

TEST(SegmentClips, ShortFirstSegmentJoinsRight) {
  EXPECT_EQ(merge_segments({{0, 1}, {1, 5}, {5, 9}}, 3, 2), (std::vector<Segment>{{0, 5}, {5, 9}}));
}

TEST(SegmentClips, ShortestTieMergesLeft) {
  EXPECT_EQ(merge_segments({{0, 2}, {2, 4}, {4, 6}}, 2, 1), (std::vector<Segment>{{0, 4}, {4, 6}}));
}

TEST(SegmentClips, FewerSegmentsArePadded) {
  const auto video = numbered_frames(6);
  const ListSegmenter seg({{0, 3}, {3, 6}});
  const auto c = segment_clips(video, 4, 1, seg);
  ASSERT_EQ(c.variants.size(), 5u);
  EXPECT_EQ(c.variants[3].frames, video.frames);
  EXPECT_EQ(c.variants[4].frames, video.frames);
}

TEST(SegmentClips, Errors) {
  EXPECT_CODE(segment_clips(FrameSet{}, 3, 1, UniformSegmenter()), ErrorCode::kEmptyInput);
  const ListSegmenter gap({{0, 2}, {3, 6}});
  EXPECT_CODE(segment_clips(numbered_frames(6), 3, 1, gap), ErrorCode::kValidationError);
  const ListSegmenter partial({{0, 2}});
  EXPECT_CODE(segment_clips(numbered_frames(6), 3, 1, partial), ErrorCode::kValidationError);
}

// Scores looked up by (caption, video_id, variant size) from a table.
ClipSet tagged_clipset(const std::string& id, std::size_t clips) {
  ClipSet c;
  c.video_id = id;
  for (std::size_t i = 0; i <= clips; ++i) {
    FrameSet f = numbered_frames(1);
    f.video_id = id + "/" + std::to_string(i);
    c.variants.push_back(f);
  }
  return c;
}

TEST(ScoreMatrix, MinimalShapeAndConstant) {
  const auto c = tagged_clipset("a", 1);
  const ClipSet* cands[] = {&c};
  int calls = 0;
  const testing::FnScorer counting([&](std::string_view, const FrameSet&) { return ++calls, 0.5; });
  const auto m = build_score_matrix("q", cands, counting);
  EXPECT_EQ(m.rows(), 1u);
  EXPECT_EQ(m.cols(), 2u);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(m, ScoreMatrix(1, 2, {0.5, 0.5}));
}

TEST(ScoreMatrix, TableDriven) {
  const std::map<std::string, double> table = {
      {"a/0", 0.1}, {"a/1", 0.2}, {"a/2", 0.3}, {"a/3", 0.4}, {"b/0", 0.5}, {"b/1", 0.6},
      {"b/2", 0.0}, {"b/3", 0.9}, {"c/0", 0.7}, {"c/1", 0.1}, {"c/2", 0.8}, {"c/3", 0.2}};
  const testing::FnScorer scorer([&](std::string_view, const FrameSet& f) { return table.at(f.video_id); });
  const auto a = tagged_clipset("a", 3), b = tagged_clipset("b", 3), c = tagged_clipset("c", 3);
  const ClipSet* cands[] = {&a, &b, &c};
  const auto m = build_score_matrix("q", cands, scorer);
  EXPECT_EQ(m, ScoreMatrix(3, 4, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.0, 0.9, 0.7, 0.1, 0.8, 0.2}));
  EXPECT_EQ(collect_votes(m), (Votes{2, 1, 2, 1}));
}

TEST(ScoreMatrix, Errors) {
  const auto a = tagged_clipset("a", 3), b = tagged_clipset("b", 2);
  const testing::FnScorer zero([](std::string_view, const FrameSet&) { return 0.0; });
  const ClipSet* mixed[] = {&a, &b};
  EXPECT_CODE(build_score_matrix("q", mixed, zero), ErrorCode::kInvalidArgument);
  const testing::FnScorer failing([](std::string_view, const FrameSet& f) -> double {
    if (f.video_id == "b/1") throw std::runtime_error("nope");
    return 0.0;
  });
  const auto b3 = tagged_clipset("b", 3);
  const ClipSet* cands[] = {&a, &b3};
  try {
    build_score_matrix("q", cands, failing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScorerError);
    EXPECT_NE(std::string(e.what()).find("candidate b"), std::string::npos);
  }
}

TEST(Votes, Examples) {
  EXPECT_EQ(collect_votes(ScoreMatrix(1, 4, {0.3, 0.1, 0.9, 0.2})), (Votes{0, 0, 0, 0}));
  EXPECT_EQ(collect_votes(ScoreMatrix(2, 2, {1, 0, 0, 1})), (Votes{0, 1}));
  EXPECT_EQ(collect_votes(ScoreMatrix(3, 2, std::vector<double>(6, 0.4))), (Votes{0, 0}));
}

TEST(Votes, ColumnShiftAndDoubleTranspose) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 1 + t % 9, cols = 2 + t % 5;
    std::vector<double> values(k * cols);
    for (auto& v : values) v = u(rng);
    const ScoreMatrix m(k, cols, values);
    EXPECT_EQ(m.transposed().transposed(), m);
    EXPECT_EQ(collect_votes(m.transposed().transposed()), collect_votes(m));
    ScoreMatrix shifted = m;
    const std::size_t col = t % cols;
    for (std::size_t r = 0; r < k; ++r) shifted.at(r, col) += 0.75;
    EXPECT_EQ(collect_votes(shifted), collect_votes(m));
  }
}

TEST(MatchingEntropy, Examples) {
  EXPECT_EQ(matching_entropy(Votes{2, 2, 2, 2}), 0.0);
  EXPECT_NEAR(matching_entropy(Votes{0, 0, 0, 2}), -(0.75 * std::log(0.75) + 0.25 * std::log(0.25)), 1e-15);
  EXPECT_NEAR(matching_entropy(Votes{0, 0, 0, 2}), 0.5623, 1e-4);
  EXPECT_NEAR(matching_entropy(Votes{3, 1, 0, 2}), std::log(4.0), 1e-15);
  EXPECT_CODE(matching_entropy(Votes{}), ErrorCode::kEmptyInput);
}

TEST(MatchingEntropy, Properties) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng() % 15;
    Votes v(n);
    for (auto& x : v) x = rng() % (1 + rng() % 6);
    const double me = matching_entropy(v);
    EXPECT_GE(me, 0.0);
    EXPECT_LE(me, std::log(static_cast<double>(n)) + 1e-12);
    EXPECT_EQ(me == 0.0, vote_histogram(v).size() == 1);
    auto perm = v;
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_NEAR(matching_entropy(perm), me, 1e-12);
    auto relabeled = v;
    for (auto& x : relabeled) x = 1000 - 7 * x;
    EXPECT_NEAR(matching_entropy(relabeled), me, 1e-12);
    std::size_t total = 0;
    for (const auto& [vote, count] : vote_histogram(v)) total += count;
    EXPECT_EQ(total, n);
  }
}

TEST(ShouldRepeat, StrictThreshold) {
  const double me = matching_entropy(Votes{0, 0, 0, 2});
  EXPECT_FALSE(should_repeat(0.0, 0.0));
  EXPECT_TRUE(should_repeat(me, 0.0));
  EXPECT_FALSE(should_repeat(me, me));
  EXPECT_FALSE(should_repeat(std::log(16.0), INFINITY));
}

TEST(Augment, KnownCaptions) {
  const auto& lex = Lexicon::builtin();
  const std::string cat = "A cat is panting like a dog and rolling around in a cat bed.";
  auto a = augment_caption(make_caption("c", cat, lex));
  EXPECT_EQ(a.text, cat + " cat, panting, dog, rolling, bed");
  EXPECT_EQ(a.original.text, cat);
  a = augment_caption(make_caption("c", testing::kRaceCaption, lex));
  EXPECT_EQ(a.text, std::string(testing::kRaceCaption) + " cars, racing, track, outpace");
  EXPECT_EQ(a.keywords, (std::vector<std::string>{"cars", "racing", "track", "outpace"}));
}

TEST(Augment, KeywordFreeUnchanged) {
  const auto c = make_caption("c", "of the and with", Lexicon::builtin());
  EXPECT_EQ(augment_caption(c).text, "of the and with");
  EXPECT_TRUE(augment_caption(c).keywords.empty());
}

TEST(Augment, RetagsWithGivenLexicon) {
  const auto c = make_caption("c", "blorp the zib", Lexicon::builtin());
  EXPECT_EQ(augment_caption(c, Lexicon::parse("blorp\tnoun\nzib\tverb\n")).text, "blorp the zib blorp, zib");
}

class PipelineTest : public ::testing::Test {
 protected:
  EngineConfig config() const {
    EngineConfig c;
    c.candidates = 10;
    return c;
  }
  const SyntheticEmbedder embedder_{0, 512};
  const CosineMatchScorer scorer_{embedder_};
  const UniformSegmenter segmenter_;
};

TEST_F(PipelineTest, InfiniteThresholdIsBaseline) {
  const auto bench = make_repetition_benchmark({.queries = 20});
  const auto data = benchmark_dataset(bench, embedder_, 8);
  auto cfg = config();
  cfg.me_threshold = INFINITY;
  const auto base = evaluate(data, cfg, embedder_, scorer_);
  const auto rep = repetition_pipeline(data, cfg, embedder_, scorer_, segmenter_, bench.lexicon());
  EXPECT_EQ(render_report(rep.run), render_report(base));
  EXPECT_EQ(render_report_json(rep.run), render_report_json(base));
  for (std::size_t q = 0; q < base.results.size(); ++q) {
    EXPECT_EQ(rep.run.results[q].ranking, base.results[q].ranking);
    EXPECT_FALSE(rep.reports[q].triggered);
  }
}

TEST_F(PipelineTest, PlantedAlignmentIsUnanimous) {
  const auto data = testing::planted_dataset(embedder_, 24, 8);
  const auto base = evaluate(data, config(), embedder_, scorer_);
  const auto rep = repetition_pipeline(data, config(), embedder_, scorer_, segmenter_, Lexicon::builtin());
  EXPECT_EQ(render_report(rep.run), render_report(base));
  for (const auto& r : rep.reports) {
    EXPECT_EQ(r.me, 0.0);
    EXPECT_FALSE(r.triggered);
    EXPECT_EQ(r.votes.size(), 4u);
  }
}

TEST_F(PipelineTest, OnlyTriggeredQueriesChange) {
  const auto bench = make_repetition_benchmark({.queries = 40});
  const auto data = benchmark_dataset(bench, embedder_, 8);
  const auto base = evaluate(data, config(), embedder_, scorer_);
  const auto rep = repetition_pipeline(data, config(), embedder_, scorer_, segmenter_, bench.lexicon());
  std::size_t triggered = 0;
  for (std::size_t q = 0; q < base.results.size(); ++q) {
    const auto& r = rep.reports[q];
    EXPECT_EQ(r.triggered, r.me > 0.0);
    if (!r.triggered) {
      EXPECT_EQ(rep.run.results[q].ranking, base.results[q].ranking) << r.query_id;
    } else {
      ++triggered;
    }
    EXPECT_EQ(r.rank_before, truth_rank(base.results[q]));
    EXPECT_EQ(r.rank_after, truth_rank(rep.run.results[q]));
  }
  EXPECT_GT(triggered, 0u);
  EXPECT_GE(rep.run.recall.at(1), base.recall.at(1));
}

TEST_F(PipelineTest, RepeatAllVersusTargeted) {
  const auto bench = make_repetition_benchmark({.queries = 40});
  const auto data = benchmark_dataset(bench, embedder_, 8);
  const auto lex = bench.lexicon();
  const auto base = evaluate(data, config(), embedder_, scorer_);
  const auto target = repetition_pipeline(data, config(), embedder_, scorer_, segmenter_, lex);
  RepetitionOptions all;
  all.mode = RepetitionMode::kAll;
  const auto every = repetition_pipeline(data, config(), embedder_, scorer_, segmenter_, lex, all);
  for (const auto& r : every.reports) EXPECT_TRUE(r.triggered);
  EXPECT_LE(every.run.recall.at(1), base.recall.at(1));
  EXPECT_LE(base.recall.at(1), target.run.recall.at(1));
}

TEST_F(PipelineTest, ParallelMatchesSerial) {
  const auto bench = make_repetition_benchmark({.queries = 20});
  const auto data = benchmark_dataset(bench, embedder_, 8);
  RepetitionOptions par;
  par.workers = 4;
  const auto a = repetition_pipeline(data, config(), embedder_, scorer_, segmenter_, bench.lexicon());
  const auto b = repetition_pipeline(data, config(), embedder_, scorer_, segmenter_, bench.lexicon(), par);
  EXPECT_EQ(render_diagnostics(a, data), render_diagnostics(b, data));
}

TEST_F(PipelineTest, VideoToTextNeedsSymmetricMode) {
  const auto data = testing::planted_dataset(embedder_, 12, 6);
  RepetitionOptions v2t;
  v2t.direction = Direction::kVideoToText;
  EXPECT_CODE(repetition_pipeline(data, config(), embedder_, scorer_, segmenter_, Lexicon::builtin(), v2t),
              ErrorCode::kInvalidArgument);
  v2t.symmetric = true;
  const auto rep = repetition_pipeline(data, config(), embedder_, scorer_, segmenter_, Lexicon::builtin(), v2t);
  const auto base = evaluate(data, config(), embedder_, scorer_, {Direction::kVideoToText, 1});
  EXPECT_EQ(render_report(rep.run), render_report(base));
}

TEST_F(PipelineTest, ErrorsCarryQueryId) {
  const auto data = testing::planted_dataset(embedder_, 12, 6);
  const testing::FnScorer failing([](std::string_view caption, const FrameSet&) -> double {
    if (caption.starts_with("item7 ")) throw Error(ErrorCode::kProviderUnavailable, "down");
    return 0.0;
  });
  try {
    repetition_pipeline(data, config(), embedder_, failing, segmenter_, Lexicon::builtin());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScorerError);
    EXPECT_NE(std::string(e.what()).find("query 'c7'"), std::string::npos) << e.what();
  }
}

TEST_F(PipelineTest, DiagnosticsRecord) {
  const auto data = testing::planted_dataset(embedder_, 12, 6);
  const auto rep = repetition_pipeline(data, config(), embedder_, scorer_, segmenter_, Lexicon::builtin());
  const auto text = render_diagnostics(rep, data);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 12);
  const auto first = text.substr(0, text.find('\n'));
  EXPECT_TRUE(first.starts_with(R"({"query_id":"c0","candidates":["v0",)")) << first;
  EXPECT_NE(first.find(R"("votes":["v0","v0","v0","v0"],"histogram":{"v0":4},"me":0.0,"triggered":false,)"
                       R"("rank_before":1,"rank_after":1})"),
            std::string::npos)
      << first;
}

}  // namespace
}  // namespace refrain
