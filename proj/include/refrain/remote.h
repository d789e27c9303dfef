#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "refrain/provider.h"

namespace refrain {

struct RemoteOptions {
  std::string endpoint;                  // e.g. http://127.0.0.1:8765
  std::size_t max_batch = 32;            // items per request
  std::size_t max_in_flight = 1;         // concurrent batch requests
  std::size_t retries = 3;               // extra attempts after a transient failure
  std::chrono::milliseconds backoff{50}; // doubled after every failed attempt
  std::chrono::milliseconds timeout{30000};
  // Known embedding dimension; when unset it is read from GET /health.
  std::optional<std::size_t> dim;
};

// Client for the model server wire protocol. Each call POSTs one JSON line
// `{"op": ..., "items": [...]}` to `<endpoint>/<op>` and expects
// `{"dim": D, "vectors": [[...]]}` or `{"scores": [...]}`; failures come back
// as `{"error": ..., "message": ...}`.
//
// Transport failures and 5xx/429 responses are retried; other failures, and
// responses with the wrong dimension or unnormalized vectors, raise
// kProtocolError. Exhausted retries raise kProviderUnavailable.
class RemoteProvider : public TextEmbedder, public FrameEmbedder, public MatchScorer {
 public:
  explicit RemoteProvider(RemoteOptions options);

  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed_text(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) const override;
  std::vector<EmbeddingVector> embed_frames(std::span<const std::string> items) const override;
  double match(std::string_view caption, const FrameSet& video) const override;

  // Model identifier and dimension reported by GET /health.
  struct Health {
    std::string model;
    std::size_t dim = 0;
  };
  Health health() const;

 private:
  nlohmann::json call(const std::string& op, const nlohmann::json& items) const;
  std::vector<EmbeddingVector> embed(const std::string& op, std::span<const std::string> items) const;
  std::vector<EmbeddingVector> parse_vectors(const nlohmann::json& response, std::size_t expected) const;

  RemoteOptions options_;
  std::size_t dim_ = 0;
};

// Tolerance on returned vector norms before the client re-normalizes them.
inline constexpr double kWireNormTolerance = 1e-4;

}  // namespace refrain
