#include "refrain/tagger.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "refrain/error.h"

namespace refrain {

// Generated from data/lexicon.tsv at build time.
extern const char* const kBuiltinLexicon;

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

bool is_strippable(unsigned char c) { return std::ispunct(c) != 0; }

bool is_be_form(std::string_view w) {
  static const std::unordered_set<std::string_view> kForms = {
      "am", "is", "are", "was", "were", "be", "been", "being", "'s", "'re"};
  return kForms.contains(w);
}

bool is_adverb_like(std::string_view w) { return w.size() > 3 && w.ends_with("ly"); }

}  // namespace

std::string_view pos_tag_name(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "noun";
    case PosTag::kVerb: return "verb";
    case PosTag::kOther: return "other";
  }
  return "other";
}

Lexicon Lexicon::parse(std::string_view text) {
  Lexicon lexicon;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kParseError,
                  "lexicon line " + std::to_string(line_no) + ": expected word<TAB>tags");
    }
    const auto word = trim(line.substr(0, tab));
    const auto tags = trim(line.substr(tab + 1));
    if (word.empty() || tags.empty()) {
      throw Error(ErrorCode::kParseError,
                  "lexicon line " + std::to_string(line_no) + ": empty word or tag list");
    }
    Entry entry;
    std::size_t tpos = 0;
    while (tpos <= tags.size()) {
      const auto tend = std::min(tags.find(',', tpos), tags.size());
      const auto tag = trim(tags.substr(tpos, tend - tpos));
      tpos = tend + 1;
      if (tag == "noun") {
        entry.noun = true;
      } else if (tag == "verb") {
        entry.verb = true;
      } else if (tag != "other") {
        throw Error(ErrorCode::kParseError, "lexicon line " + std::to_string(line_no) +
                                                ": unknown tag '" + std::string(tag) + "'");
      }
    }
    lexicon.add(word, entry);
  }
  return lexicon;
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open lexicon " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lexicon = parse(kBuiltinLexicon);
  return lexicon;
}

void Lexicon::add(std::string_view word, Entry entry) { entries_[lowercase(word)] = entry; }

Lexicon::Entry Lexicon::lookup(std::string_view word) const {
  const auto it = entries_.find(lowercase(word));
  return it == entries_.end() ? Entry{} : it->second;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view word = text.substr(i, j - i);
    while (!word.empty() && is_strippable(word.front())) word.remove_prefix(1);
    while (!word.empty() && is_strippable(word.back())) word.remove_suffix(1);
    if (!word.empty()) tokens.push_back(lowercase(word));
    i = j;
  }
  return tokens;
}

std::vector<PosTag> tag_tokens(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto entry = lexicon.lookup(tokens[i]);
    if (entry.noun && entry.verb) {
      const bool verb_context =
          i > 0 && (is_be_form(tokens[i - 1]) || is_adverb_like(tokens[i - 1]));
      tags.push_back(verb_context ? PosTag::kVerb : PosTag::kNoun);
    } else if (entry.noun) {
      tags.push_back(PosTag::kNoun);
    } else if (entry.verb) {
      tags.push_back(PosTag::kVerb);
    } else {
      tags.push_back(PosTag::kOther);
    }
  }
  return tags;
}

Caption make_caption(std::string id, std::string text, const Lexicon& lexicon) {
  Caption caption{std::move(id), std::move(text), {}, {}};
  caption.tokens = tokenize(caption.text);
  caption.tags = tag_tokens(caption.tokens, lexicon);
  return caption;
}

Keywords extract_keywords(const Caption& caption) {
  Keywords out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < caption.tokens.size(); ++i) {
    const auto tag = caption.tags.at(i);
    if (tag == PosTag::kOther) continue;
    // A word keeps the tag of its first occurrence so the two lists stay disjoint.
    if (!seen.insert(caption.tokens[i]).second) continue;
    (tag == PosTag::kNoun ? out.nouns : out.verbs).push_back(caption.tokens[i]);
  }
  return out;
}

Keywords extract_keywords(std::string_view text, const Lexicon& lexicon) {
  return extract_keywords(make_caption("", std::string(text), lexicon));
}

std::vector<std::string> keywords_in_caption_order(const Caption& caption) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < caption.tokens.size(); ++i) {
    if (caption.tags.at(i) == PosTag::kOther) continue;
    if (seen.insert(caption.tokens[i]).second) out.push_back(caption.tokens[i]);
  }
  return out;
}

}  // namespace refrain
