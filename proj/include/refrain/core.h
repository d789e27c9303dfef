#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "refrain/error.h"

namespace refrain {

// Tolerance on the Euclidean norm of vectors flagged as normalized.
inline constexpr double kNormTolerance = 1e-6;

// Fixed-dimension real vector. When `normalized()` is true the norm is
// within kNormTolerance of 1; the constructor enforces it.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values, bool normalized = false);

  std::size_t dim() const noexcept { return values_.size(); }
  bool normalized() const noexcept { return normalized_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
  bool normalized_ = false;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Throws kZeroVector for an all-zero (or empty) input.
EmbeddingVector l2_normalize(std::span<const double> v);

// Cosine similarity clamped to [-1, 1]. Throws kDimensionMismatch.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Temperature-scaled softmax with max subtraction. Throws kEmptyInput and
// kInvalidTemperature.
std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);

// Smallest index attaining the maximum. Throws kEmptyInput.
std::size_t argmax_with_tiebreak(std::span<const double> values);

// Mean of the given vectors, re-normalized. Throws kEmptyInput when the list is
// empty and kDimensionMismatch when dimensions differ.
EmbeddingVector mean_pool(std::span<const EmbeddingVector> vectors);

// Runs fn(i) for i in [0, n) on up to `workers` threads. With workers <= 1
// everything runs on the calling thread. The first exception thrown by any
// task is rethrown after all workers have stopped.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace refrain
