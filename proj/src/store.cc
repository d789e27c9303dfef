#include "refrain/store.h"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace refrain {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'F', 'E', 'S'};
// Guards against absurd allocations from corrupt headers.
constexpr std::uint32_t kMaxDim = 1u << 20;
constexpr std::uint32_t kMaxIdLength = 1u << 16;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw Error(ErrorCode::kParseError, std::string("truncated store while reading ") + what);
  }
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(value);
}

}  // namespace

EmbeddingStore::EmbeddingStore(StoreKind kind, std::size_t dim) : kind_(kind), dim_(dim) {
  if (dim == 0 || dim > kMaxDim) throw Error(ErrorCode::kInvalidArgument, "bad store dimension");
}

void EmbeddingStore::add(std::string id, std::vector<EmbeddingVector> vectors) {
  if (index_.contains(id)) throw Error(ErrorCode::kDuplicateId, "store id '" + id + "'");
  if (vectors.empty()) throw Error(ErrorCode::kValidationError, "store id '" + id + "' has no vectors");
  if (kind_ == StoreKind::kText && vectors.size() != 1) {
    throw Error(ErrorCode::kValidationError, "text store entries hold exactly one vector");
  }
  for (const auto& v : vectors) {
    if (v.dim() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "store id '" + id + "': dimension " +
                                                     std::to_string(v.dim()) + " vs " + std::to_string(dim_));
    }
    if (!v.normalized()) throw Error(ErrorCode::kValidationError, "store id '" + id + "' is not normalized");
  }
  index_.emplace(id, records_.size());
  records_.push_back({std::move(id), std::move(vectors)});
}

const EmbeddingStore::Record* EmbeddingStore::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const EmbeddingStore::Record& EmbeddingStore::at(const std::string& id) const {
  const auto* rec = find(id);
  if (!rec) throw Error(ErrorCode::kStoreIncomplete, "no embedding for '" + id + "'");
  return *rec;
}

void EmbeddingStore::write(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kind_));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  put<std::uint64_t>(out, records_.size());
  for (const auto& rec : records_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.id.size()));
    out.write(rec.id.data(), static_cast<std::streamsize>(rec.id.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.vectors.size()));
    for (const auto& v : rec.vectors) {
      for (double x : v.values()) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing embedding store");
}

void EmbeddingStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  write(out);
}

EmbeddingStore EmbeddingStore::read(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::kParseError, "not an embedding store (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kVersion) throw Error(ErrorCode::kParseError, "unsupported store version " + std::to_string(version));
  const auto kind = get<std::uint32_t>(in, "kind");
  if (kind > 1) throw Error(ErrorCode::kParseError, "unknown store kind " + std::to_string(kind));
  const auto dim = get<std::uint32_t>(in, "dim");
  if (dim == 0 || dim > kMaxDim) throw Error(ErrorCode::kParseError, "bad store dimension");
  const auto count = get<std::uint64_t>(in, "count");

  EmbeddingStore store(static_cast<StoreKind>(kind), dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto id_len = get<std::uint32_t>(in, "id length");
    if (id_len > kMaxIdLength) throw Error(ErrorCode::kParseError, "id too long in record " + std::to_string(r));
    std::string id(id_len, '\0');
    if (!in.read(id.data(), id_len)) throw Error(ErrorCode::kParseError, "truncated id in record " + std::to_string(r));
    const auto n = get<std::uint32_t>(in, "vector count");
    std::vector<EmbeddingVector> vectors;
    vectors.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k) {
      std::vector<double> values(dim);
      for (auto& x : values) x = std::bit_cast<float>(get<std::uint32_t>(in, "vector"));
      const double norm = l2_norm(values);
      if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTolerance) {
        throw Error(ErrorCode::kValidationError, "store id '" + id + "' has norm " + std::to_string(norm));
      }
      vectors.emplace_back(std::move(values), true);
    }
    store.add(std::move(id), std::move(vectors));
  }
  return store;
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open store " + path);
  return read(in);
}

StoreTextEmbedder::StoreTextEmbedder(const EmbeddingStore& store) : store_(store) {
  if (store.kind() != StoreKind::kText) throw Error(ErrorCode::kInvalidArgument, "expected a text store");
}

EmbeddingVector StoreTextEmbedder::embed_text(std::string_view text) const {
  return store_.at(std::string(text)).vectors.front();
}

}  // namespace refrain
