#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "refrain/provider.h"
#include "refrain/tagger.h"

namespace refrain {

// Keyword title distilled from a caption. `words` follow caption order.
struct Title {
  std::vector<std::string> words;
  std::string text;
  EmbeddingVector embedding;
};

// Summed cosine similarity of one word embedding against every frame.
double word_frame_relevance(const EmbeddingVector& word_embedding, const FrameSet& frames);

// Picks the top `nouns` nouns and top `verbs` verbs by frame relevance (ties
// go to the earlier caption position), renders them in caption order and
// embeds the result. Throws kEmptyTitle when the caption has no keywords.
Title build_title(const Caption& caption, const FrameSet& frames, const TextEmbedder& embedder,
                  std::size_t nouns, std::size_t verbs);

// Index of the frame most similar to the title embedding, lowest on ties.
std::size_t select_frame(const Title& title, const FrameSet& frames);
std::size_t select_frame(const EmbeddingVector& query, const FrameSet& frames);

}  // namespace refrain
