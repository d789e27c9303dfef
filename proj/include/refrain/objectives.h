#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace refrain {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Row i of `video` and row i of `caption` form a positive pair.
struct FeatureBatch {
  Matrix video;
  Matrix caption;

  Eigen::Index size() const { return video.rows(); }
  Eigen::Index dim() const { return video.cols(); }
  // Shapes agree and every row is unit-norm within kNormTolerance.
  void validate() const;
};

// Two FIFO queues of past (detached) video and caption features used as the
// contrastive denominator.
class MomentumQueue {
 public:
  MomentumQueue(std::size_t capacity, std::size_t dim);

  // Copies rows in, evicting the oldest entries at capacity. Returns the slot
  // each row landed in. Throws kInvalidArgument if more rows than capacity.
  std::vector<std::size_t> enqueue(const Matrix& video, const Matrix& caption);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t dim() const { return static_cast<std::size_t>(video_.cols()); }

  // Occupied rows only, in slot order.
  Matrix video() const { return video_.topRows(static_cast<Eigen::Index>(size_)); }
  Matrix caption() const { return caption_.topRows(static_cast<Eigen::Index>(size_)); }

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t cursor_ = 0;
  Matrix video_;
  Matrix caption_;
};

struct VccResult {
  double loss = 0.0;        // mean over batch of v2c + c2v
  double video_to_caption = 0.0;
  double caption_to_video = 0.0;
  Matrix grad_video;        // d loss / d batch.video
  Matrix grad_caption;      // d loss / d batch.caption
};

// Contrastive loss against the queue. `positive_slots[i]` is the queue slot
// holding the momentum copy of pair i. Queue features are constants.
// Throws kInvalidTemperature, kEmptyQueue, kDimensionMismatch.
VccResult vcc_loss(const FeatureBatch& batch, const MomentumQueue& queue,
                   const std::vector<std::size_t>& positive_slots, double temperature);

// Enqueues the batch, then computes vcc_loss against the updated queue.
VccResult vcc_step(const FeatureBatch& batch, MomentumQueue& queue, double temperature);

// Two-class logits per (vision, text) pair. Column 0 scores "matched",
// column 1 "unmatched".
struct MatchLogits {
  Eigen::Matrix<double, Eigen::Dynamic, 2> logits;
  std::vector<bool> matched;

  Eigen::Index size() const { return logits.rows(); }
};

struct MatchResult {
  double loss = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, 2> grad;  // d loss / d logits
};

// Mean two-class cross-entropy of softmax(logits). Throws kEmptyInput and
// kInvalidArgument (label count mismatch).
MatchResult matching_loss(const MatchLogits& logits);
MatchResult vcm_loss(const MatchLogits& logits);
MatchResult ftm_loss(const MatchLogits& logits);

double total_loss(double vcc, double vcm, double ftm);

// Loss value and analytic gradient at a point.
struct LossAndGradient {
  double loss = 0.0;
  Vector gradient;
};
using LossFunction = std::function<LossAndGradient(const Vector&)>;

// Largest relative error between the analytic gradient and central
// differences, |a - n| / max(|a|, |n|, 1e-6) per coordinate. `step` must lie
// in [1e-6, 1e-3]. Throws kNumericalFailure on a non-finite perturbed loss.
double finite_diff_check(const LossFunction& fn, const Vector& point, double step = 1e-5);

// Index of the hardest negative for each row: the column j != i with the
// largest similarity, lowest j on ties. `similarity` must be square, size >= 2.
std::vector<Eigen::Index> hard_negatives(const Matrix& similarity);

}  // namespace refrain
