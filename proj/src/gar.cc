#include "refrain/gar.h"

#include <algorithm>

namespace refrain {

namespace {

struct ScoredWord {
  std::string word;
  std::size_t position;  // first occurrence in the caption
  double relevance;
};

std::vector<ScoredWord> top_words(const std::vector<std::string>& words, const Caption& caption,
                                  const FrameSet& frames, const TextEmbedder& embedder,
                                  std::size_t limit) {
  std::vector<ScoredWord> scored;
  scored.reserve(words.size());
  for (const auto& w : words) {
    const auto pos = static_cast<std::size_t>(
        std::find(caption.tokens.begin(), caption.tokens.end(), w) - caption.tokens.begin());
    scored.push_back({w, pos, word_frame_relevance(embedder.embed_text(w), frames)});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredWord& a, const ScoredWord& b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return a.position < b.position;
  });
  if (scored.size() > limit) scored.resize(limit);
  return scored;
}

}  // namespace

double word_frame_relevance(const EmbeddingVector& word_embedding, const FrameSet& frames) {
  double total = 0.0;
  for (const auto& frame : frames.frames) total += cosine_similarity(word_embedding, frame);
  return total;
}

Title build_title(const Caption& caption, const FrameSet& frames, const TextEmbedder& embedder,
                  std::size_t nouns, std::size_t verbs) {
  const auto keywords = extract_keywords(caption);
  if (keywords.empty()) {
    throw Error(ErrorCode::kEmptyTitle, "caption '" + caption.id + "' has no nouns or verbs");
  }
  auto chosen = top_words(keywords.nouns, caption, frames, embedder, nouns);
  auto chosen_verbs = top_words(keywords.verbs, caption, frames, embedder, verbs);
  chosen.insert(chosen.end(), chosen_verbs.begin(), chosen_verbs.end());
  if (chosen.empty()) {
    throw Error(ErrorCode::kEmptyTitle, "caption '" + caption.id + "' selected no keywords");
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const ScoredWord& a, const ScoredWord& b) { return a.position < b.position; });

  Title title;
  for (const auto& s : chosen) {
    if (!title.text.empty()) title.text += ' ';
    title.text += s.word;
    title.words.push_back(s.word);
  }
  title.embedding = embedder.embed_text(title.text);
  return title;
}

std::size_t select_frame(const EmbeddingVector& query, const FrameSet& frames) {
  if (frames.empty()) throw Error(ErrorCode::kEmptyInput, "no frames to select from");
  std::vector<double> sims;
  sims.reserve(frames.size());
  for (const auto& f : frames.frames) sims.push_back(cosine_similarity(query, f));
  return argmax_with_tiebreak(sims);
}

std::size_t select_frame(const Title& title, const FrameSet& frames) {
  if (title.embedding.dim() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "title has no embedding");
  }
  return select_frame(title.embedding, frames);
}

}  // namespace refrain
