#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "refrain/core.h"
#include "refrain/provider.h"

namespace refrain {

enum class StoreKind : std::uint32_t { kText = 0, kFrame = 1 };

// Id-keyed normalized vectors. Text stores hold one vector per id; frame
// stores hold a video's frames, in order, under its id.
//
// On disk (all integers and floats little-endian):
//   header  : "RFES" | u32 version=1 | u32 kind | u32 dim | u64 count
//   records : u32 id_len | id bytes | u32 n | n * dim f32
class EmbeddingStore {
 public:
  static constexpr std::uint32_t kVersion = 1;

  struct Record {
    std::string id;
    std::vector<EmbeddingVector> vectors;
  };

  EmbeddingStore(StoreKind kind, std::size_t dim);

  StoreKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }

  // Throws kDuplicateId, kDimensionMismatch, kValidationError (unnormalized
  // or empty vector list).
  void add(std::string id, std::vector<EmbeddingVector> vectors);
  const Record* find(const std::string& id) const;
  // Like find() but throws kStoreIncomplete when missing.
  const Record& at(const std::string& id) const;

  void write(std::ostream& out) const;
  void save(const std::string& path) const;
  // Throws kParseError on malformed input and kValidationError on bad norms.
  static EmbeddingStore read(std::istream& in);
  static EmbeddingStore load(const std::string& path);

 private:
  StoreKind kind_;
  std::size_t dim_;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Text embeddings looked up by exact text in a text store. Texts that were not
// embedded ahead of time fail with kStoreIncomplete.
class StoreTextEmbedder : public TextEmbedder {
 public:
  explicit StoreTextEmbedder(const EmbeddingStore& store);
  std::size_t dim() const override { return store_.dim(); }
  EmbeddingVector embed_text(std::string_view text) const override;

 private:
  const EmbeddingStore& store_;
};

}  // namespace refrain
