#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace refrain {

enum class PosTag { kNoun, kVerb, kOther };

std::string_view pos_tag_name(PosTag tag);

// Word -> admissible tags. Lookups are case-insensitive; unknown words are
// tagged kOther.
class Lexicon {
 public:
  struct Entry {
    bool noun = false;
    bool verb = false;
  };

  Lexicon() = default;

  // Lines of `word<TAB>tag[,tag]` with tags noun|verb|other. Blank lines and
  // lines starting with '#' are skipped. Throws kParseError with the line.
  static Lexicon parse(std::string_view text);
  static Lexicon load(const std::string& path);
  // The word list bundled with the library (data/lexicon.tsv).
  static const Lexicon& builtin();

  void add(std::string_view word, Entry entry);
  Entry lookup(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, Entry> entries_;
};

struct Caption {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  std::vector<PosTag> tags;  // parallel to tokens
};

struct Keywords {
  std::vector<std::string> nouns;
  std::vector<std::string> verbs;

  bool empty() const { return nouns.empty() && verbs.empty(); }
};

// Splits on whitespace, strips leading/trailing punctuation and lowercases.
// Internal punctuation ("cat-bed") is kept.
std::vector<std::string> tokenize(std::string_view text);

// Tags tokens with the lexicon. Noun/verb-ambiguous words become verbs when
// the previous token is a form of "to be" or ends in "ly", nouns otherwise.
std::vector<PosTag> tag_tokens(const std::vector<std::string>& tokens, const Lexicon& lexicon);

Caption make_caption(std::string id, std::string text, const Lexicon& lexicon);

// Nouns and verbs of an already tagged caption, first-occurrence order,
// duplicates dropped.
Keywords extract_keywords(const Caption& caption);
Keywords extract_keywords(std::string_view text, const Lexicon& lexicon);

// Nouns and verbs interleaved in caption order (first occurrence).
std::vector<std::string> keywords_in_caption_order(const Caption& caption);

}  // namespace refrain
