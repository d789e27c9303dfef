#include "refrain/objectives.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "refrain/core.h"

namespace refrain {

namespace {

// One direction of the contrastive loss: anchors against queue entries.
// Adds d(loss)/d(anchor) * scale into `grad` and returns the summed loss.
double directional_nce(const Matrix& anchors, const Matrix& bank,
                       const std::vector<std::size_t>& positives, double temperature,
                       double scale, Matrix& grad) {
  const Matrix logits = (anchors * bank.transpose()) / temperature;  // B x M
  double total = 0.0;
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    Eigen::RowVectorXd p = (logits.row(i).array() - peak).exp();
    const double norm = p.sum();
    p /= norm;
    const auto pos = static_cast<Eigen::Index>(positives[static_cast<std::size_t>(i)]);
    total += -(logits(i, pos) - peak - std::log(norm));
    p(pos) -= 1.0;
    grad.row(i) += scale / temperature * (p * bank);
  }
  return total;
}

}  // namespace

void FeatureBatch::validate() const {
  if (video.rows() != caption.rows() || video.cols() != caption.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "video and caption batches differ in shape");
  }
  if (video.rows() == 0 || video.cols() == 0) throw Error(ErrorCode::kEmptyInput, "empty batch");
  for (Eigen::Index i = 0; i < video.rows(); ++i) {
    if (std::abs(video.row(i).norm() - 1.0) > kNormTolerance ||
        std::abs(caption.row(i).norm() - 1.0) > kNormTolerance) {
      throw Error(ErrorCode::kValidationError, "batch row " + std::to_string(i) + " is not unit-norm");
    }
  }
}

MomentumQueue::MomentumQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity),
      video_(static_cast<Eigen::Index>(capacity), static_cast<Eigen::Index>(dim)),
      caption_(static_cast<Eigen::Index>(capacity), static_cast<Eigen::Index>(dim)) {
  if (capacity == 0 || dim == 0) {
    throw Error(ErrorCode::kInvalidArgument, "queue capacity and dimension must be positive");
  }
}

std::vector<std::size_t> MomentumQueue::enqueue(const Matrix& video, const Matrix& caption) {
  if (video.rows() != caption.rows() || video.cols() != video_.cols() ||
      caption.cols() != caption_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "enqueue shape does not match the queue");
  }
  if (static_cast<std::size_t>(video.rows()) > capacity_) {
    throw Error(ErrorCode::kInvalidArgument, "batch larger than queue capacity");
  }
  std::vector<std::size_t> slots;
  slots.reserve(static_cast<std::size_t>(video.rows()));
  for (Eigen::Index i = 0; i < video.rows(); ++i) {
    video_.row(static_cast<Eigen::Index>(cursor_)) = video.row(i);
    caption_.row(static_cast<Eigen::Index>(cursor_)) = caption.row(i);
    slots.push_back(cursor_);
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }
  return slots;
}

VccResult vcc_loss(const FeatureBatch& batch, const MomentumQueue& queue,
                   const std::vector<std::size_t>& positive_slots, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::kInvalidTemperature, std::to_string(temperature));
  }
  if (queue.empty()) throw Error(ErrorCode::kEmptyQueue, "contrastive queue is empty");
  if (batch.video.rows() != batch.caption.rows() || batch.video.cols() != batch.caption.cols() ||
      static_cast<std::size_t>(batch.dim()) != queue.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "batch does not match queue dimension");
  }
  if (batch.size() == 0) throw Error(ErrorCode::kEmptyInput, "empty batch");
  if (positive_slots.size() != static_cast<std::size_t>(batch.size())) {
    throw Error(ErrorCode::kInvalidArgument, "one positive slot per pair required");
  }
  for (auto slot : positive_slots) {
    if (slot >= queue.size()) throw Error(ErrorCode::kInvalidArgument, "positive slot out of range");
  }

  const double scale = 1.0 / static_cast<double>(batch.size());
  VccResult result;
  result.grad_video = Matrix::Zero(batch.size(), batch.dim());
  result.grad_caption = Matrix::Zero(batch.size(), batch.dim());
  result.video_to_caption =
      scale * directional_nce(batch.video, queue.caption(), positive_slots, temperature, scale,
                              result.grad_video);
  result.caption_to_video =
      scale * directional_nce(batch.caption, queue.video(), positive_slots, temperature, scale,
                              result.grad_caption);
  result.loss = result.video_to_caption + result.caption_to_video;
  return result;
}

VccResult vcc_step(const FeatureBatch& batch, MomentumQueue& queue, double temperature) {
  const auto slots = queue.enqueue(batch.video, batch.caption);
  return vcc_loss(batch, queue, slots, temperature);
}

MatchResult matching_loss(const MatchLogits& in) {
  if (in.size() == 0) throw Error(ErrorCode::kEmptyInput, "no labeled pairs");
  if (in.matched.size() != static_cast<std::size_t>(in.size())) {
    throw Error(ErrorCode::kInvalidArgument, "one label per logit pair required");
  }
  const double scale = 1.0 / static_cast<double>(in.size());
  MatchResult out;
  out.grad.resize(in.size(), 2);
  for (Eigen::Index i = 0; i < in.size(); ++i) {
    const double a = in.logits(i, 0);
    const double b = in.logits(i, 1);
    const double peak = std::max(a, b);
    const double log_norm = peak + std::log(std::exp(a - peak) + std::exp(b - peak));
    const Eigen::Index target = in.matched[static_cast<std::size_t>(i)] ? 0 : 1;
    out.loss -= scale * (in.logits(i, target) - log_norm);
    const double p0 = std::exp(a - log_norm);
    out.grad(i, 0) = scale * (p0 - (target == 0 ? 1.0 : 0.0));
    out.grad(i, 1) = scale * ((1.0 - p0) - (target == 1 ? 1.0 : 0.0));
  }
  return out;
}

MatchResult vcm_loss(const MatchLogits& logits) { return matching_loss(logits); }

MatchResult ftm_loss(const MatchLogits& logits) { return matching_loss(logits); }

double total_loss(double vcc, double vcm, double ftm) { return vcc + vcm + ftm; }

double finite_diff_check(const LossFunction& fn, const Vector& point, double step) {
  if (!(step >= 1e-6 && step <= 1e-3)) {
    throw Error(ErrorCode::kInvalidArgument, "finite-difference step must lie in [1e-6, 1e-3]");
  }
  const auto analytic = fn(point);
  if (analytic.gradient.size() != point.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "gradient size differs from point size");
  }
  double worst = 0.0;
  Vector probe = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    probe(i) = point(i) + step;
    const double up = fn(probe).loss;
    probe(i) = point(i) - step;
    const double down = fn(probe).loss;
    probe(i) = point(i);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorCode::kNumericalFailure,
                  "non-finite loss at perturbed coordinate " + std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.gradient(i);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

std::vector<Eigen::Index> hard_negatives(const Matrix& similarity) {
  if (similarity.rows() != similarity.cols() || similarity.rows() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "hard negatives need a square matrix of size >= 2");
  }
  std::vector<Eigen::Index> out;
  out.reserve(static_cast<std::size_t>(similarity.rows()));
  for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < similarity.cols(); ++j) {
      if (j == i) continue;
      if (best < 0 || similarity(i, j) > similarity(i, best)) best = j;
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace refrain
