#include "refrain/core.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace refrain {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kInvalidTemperature: return "InvalidTemperature";
    case ErrorCode::kEmptyQueue: return "EmptyQueue";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kTrainingDiverged: return "TrainingDiverged";
    case ErrorCode::kEmptyTitle: return "EmptyTitle";
    case ErrorCode::kInsufficientGallery: return "InsufficientGallery";
    case ErrorCode::kScorerError: return "ScorerError";
    case ErrorCode::kRankOutOfRange: return "RankOutOfRange";
    case ErrorCode::kStoreIncomplete: return "StoreIncomplete";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

EmbeddingVector::EmbeddingVector(std::vector<double> values, bool normalized)
    : values_(std::move(values)), normalized_(normalized) {
  if (normalized_ && std::abs(l2_norm(values_) - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::kValidationError,
                "vector flagged normalized has norm " + std::to_string(l2_norm(values_)));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double l2_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

EmbeddingVector l2_normalize(std::span<const double> v) {
  const double norm = l2_norm(v);
  if (norm == 0.0) throw Error(ErrorCode::kZeroVector, "cannot normalize a zero vector");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return EmbeddingVector(std::move(out), true);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  double sim = dot(a.values(), b.values());
  if (!a.normalized() || !b.normalized()) {
    const double denom = l2_norm(a.values()) * l2_norm(b.values());
    if (denom == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
    sim /= denom;
  }
  return std::clamp(sim, -1.0, 1.0);
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw Error(ErrorCode::kEmptyInput, "softmax of an empty vector");
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidTemperature, std::to_string(temperature));
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - peak) / temperature);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

std::size_t argmax_with_tiebreak(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

EmbeddingVector mean_pool(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::kEmptyInput, "mean_pool of no vectors");
  const std::size_t dim = vectors.front().dim();
  std::vector<double> sum(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::to_string(v.dim()) + " vs " + std::to_string(dim));
    }
    for (std::size_t i = 0; i < dim; ++i) sum[i] += v[i];
  }
  for (double& x : sum) x /= static_cast<double>(vectors.size());
  return l2_normalize(sum);
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    const std::size_t count = std::min(workers, n);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace refrain
