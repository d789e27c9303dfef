#include "refrain/trainer.h"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>

#include "refrain/core.h"

namespace refrain {

namespace {

// d(u/|u|)/du applied row-wise: (g - v (v.g)) / |u|.
Matrix normalize_backward(const Matrix& raw_projected, const Matrix& normalized, const Matrix& grad) {
  Matrix out(grad.rows(), grad.cols());
  for (Eigen::Index i = 0; i < grad.rows(); ++i) {
    const double norm = raw_projected.row(i).norm();
    const double along = normalized.row(i).dot(grad.row(i));
    out.row(i) = (grad.row(i) - along * normalized.row(i)) / norm;
  }
  return out;
}

Matrix gather(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void normalize_rows(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n > 0.0) m.row(i) /= n;
  }
}

// Matched pair (i, i) and hard-negative pair (i, neg(i)) per row. Adds the
// gradients w.r.t. both feature sets and the head into the outputs.
double matching_objective(const Matrix& vision, const Matrix& text, const TowerParams& params,
                          Matrix& grad_vision, Matrix& grad_text, TowerParams& grad) {
  const Eigen::Index b = vision.rows();
  const auto negatives = hard_negatives(vision * text.transpose());
  MatchLogits logits;
  logits.logits.resize(2 * b, 2);
  logits.matched.resize(static_cast<std::size_t>(2 * b));
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(2 * b));
  for (Eigen::Index i = 0; i < b; ++i) {
    pairs.emplace_back(i, i);
    pairs.emplace_back(i, negatives[static_cast<std::size_t>(i)]);
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [vi, tj] = pairs[p];
    const auto row = static_cast<Eigen::Index>(p);
    logits.logits(row, 0) = vision.row(vi) * params.head * text.row(tj).transpose() + params.bias;
    logits.logits(row, 1) = 0.0;
    logits.matched[p] = (vi == tj);
  }
  const auto result = matching_loss(logits);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [vi, tj] = pairs[p];
    const double ds = result.grad(static_cast<Eigen::Index>(p), 0);
    grad.head += ds * vision.row(vi).transpose() * text.row(tj);
    grad.bias += ds;
    grad_vision.row(vi) += ds * (params.head * text.row(tj).transpose()).transpose();
    grad_text.row(tj) += ds * (vision.row(vi) * params.head);
  }
  return result.loss;
}

}  // namespace

void TrainingCorpus::validate() const {
  if (video.rows() < 2) throw Error(ErrorCode::kInvalidArgument, "corpus needs at least 2 pairs");
  if (text.rows() != video.rows()) throw Error(ErrorCode::kDimensionMismatch, "video/text pair count differs");
  if (frame.size() && (frame.rows() != video.rows() || frame.cols() != video.cols())) {
    throw Error(ErrorCode::kDimensionMismatch, "frame features must match video shape");
  }
  if (title.size() && (title.rows() != text.rows() || title.cols() != text.cols())) {
    throw Error(ErrorCode::kDimensionMismatch, "title features must match text shape");
  }
  if (!video.allFinite() || !text.allFinite()) {
    throw Error(ErrorCode::kValidationError, "corpus contains non-finite values");
  }
}

Vector TowerParams::flatten() const {
  Vector flat(video_proj.size() + text_proj.size() + head.size() + 1);
  Eigen::Index at = 0;
  for (const Matrix* m : {&video_proj, &text_proj, &head}) {
    flat.segment(at, m->size()) = m->reshaped();
    at += m->size();
  }
  flat(at) = bias;
  return flat;
}

void TowerParams::assign(const Vector& flat) {
  Eigen::Index at = 0;
  for (Matrix* m : {&video_proj, &text_proj, &head}) {
    m->reshaped() = flat.segment(at, m->size());
    at += m->size();
  }
  bias = flat(at);
}

Matrix project(const Matrix& proj, const Matrix& raw) {
  Matrix out = raw * proj.transpose();
  normalize_rows(out);
  return out;
}

StepResult tower_step(const TowerParams& params, const TrainingCorpus& corpus,
                      std::span<const std::size_t> rows, const MomentumQueue& queue,
                      const std::vector<std::size_t>& slots, double temperature) {
  const Matrix xv = gather(corpus.video, rows);
  const Matrix xt = gather(corpus.text, rows);
  const Matrix xf = gather(corpus.frame_or_video(), rows);
  const Matrix xtl = gather(corpus.title_or_text(), rows);

  const Matrix uv = xv * params.video_proj.transpose();
  const Matrix ut = xt * params.text_proj.transpose();
  const Matrix uf = xf * params.video_proj.transpose();
  const Matrix utl = xtl * params.text_proj.transpose();
  Matrix v = uv, c = ut, f = uf, t = utl;
  for (Matrix* m : {&v, &c, &f, &t}) normalize_rows(*m);

  StepResult out;
  out.grad.video_proj = Matrix::Zero(params.video_proj.rows(), params.video_proj.cols());
  out.grad.text_proj = Matrix::Zero(params.text_proj.rows(), params.text_proj.cols());
  out.grad.head = Matrix::Zero(params.head.rows(), params.head.cols());
  out.grad.bias = 0.0;

  const auto vcc = vcc_loss(FeatureBatch{v, c}, queue, slots, temperature);
  Matrix gv = vcc.grad_video;
  Matrix gc = vcc.grad_caption;
  Matrix gf = Matrix::Zero(f.rows(), f.cols());
  Matrix gt = Matrix::Zero(t.rows(), t.cols());
  const double vcm = matching_objective(v, c, params, gv, gc, out.grad);
  const double ftm = matching_objective(f, t, params, gf, gt, out.grad);

  out.grad.video_proj = normalize_backward(uv, v, gv).transpose() * xv +
                        normalize_backward(uf, f, gf).transpose() * xf;
  out.grad.text_proj = normalize_backward(ut, c, gc).transpose() * xt +
                       normalize_backward(utl, t, gt).transpose() * xtl;
  out.losses = {0, vcc.loss, vcm, ftm, total_loss(vcc.loss, vcm, ftm)};
  return out;
}

TowerParams init_towers(Eigen::Index video_dim, Eigen::Index text_dim, std::size_t embed_dim,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(embed_dim);
  TowerParams params;
  params.video_proj = Matrix::NullaryExpr(d, video_dim, [&] { return gauss(rng); });
  params.text_proj = Matrix::NullaryExpr(d, text_dim, [&] { return gauss(rng); });
  normalize_rows(params.video_proj);
  normalize_rows(params.text_proj);
  params.head = Matrix::Identity(d, d);
  params.bias = 0.0;
  return params;
}

TrainingResult train_linear_towers(const TrainingCorpus& corpus, const EngineConfig& config,
                                   const TrainerOptions& options) {
  corpus.validate();
  config.validate();
  if (options.batch_size < 2) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 2");
  if (options.embed_dim == 0) throw Error(ErrorCode::kInvalidArgument, "embed_dim must be positive");
  if (options.batch_size > config.queue_size) {
    throw Error(ErrorCode::kInvalidArgument, "batch_size exceeds queue_size");
  }

  TrainingResult result;
  result.params = init_towers(corpus.video.cols(), corpus.text.cols(), options.embed_dim,
                              config.rng_seed);
  TowerParams momentum_params = result.params;
  MomentumQueue queue(config.queue_size, options.embed_dim);
  std::mt19937_64 rng(config.rng_seed ^ 0x9e3779b97f4a7c15ULL);

  const auto n = static_cast<std::size_t>(corpus.size());
  std::vector<std::size_t> order(n);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

    double epoch_total = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t start = 0; start < n;) {
      std::size_t end = std::min(start + options.batch_size, n);
      if (n - end == 1) ++end;  // never leave a single-pair batch behind
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      start = end;

      // Momentum towers trail the online towers; with coefficient 0 they coincide.
      momentum_params.video_proj = options.momentum * momentum_params.video_proj +
                                   (1.0 - options.momentum) * result.params.video_proj;
      momentum_params.text_proj = options.momentum * momentum_params.text_proj +
                                  (1.0 - options.momentum) * result.params.text_proj;
      const auto slots = queue.enqueue(project(momentum_params.video_proj, gather(corpus.video, rows)),
                                       project(momentum_params.text_proj, gather(corpus.text, rows)));

      auto step_result = tower_step(result.params, corpus, rows, queue, slots, config.temperature);
      step_result.losses.step = step++;
      if (!std::isfinite(step_result.losses.total)) {
        throw Error(ErrorCode::kTrainingDiverged,
                    "non-finite loss at step " + std::to_string(step_result.losses.step));
      }
      result.trace.push_back(step_result.losses);
      epoch_total += step_result.losses.total;
      ++epoch_steps;

      result.params.video_proj -= options.learning_rate * step_result.grad.video_proj;
      result.params.text_proj -= options.learning_rate * step_result.grad.text_proj;
      result.params.head -= options.learning_rate * step_result.grad.head;
      result.params.bias -= options.learning_rate * step_result.grad.bias;
      normalize_rows(result.params.video_proj);
      normalize_rows(result.params.text_proj);
      if (!result.params.flatten().allFinite()) {
        throw Error(ErrorCode::kTrainingDiverged, "non-finite parameters after step " +
                                                      std::to_string(step_result.losses.step));
      }
    }
    result.epoch_totals.push_back(epoch_total / static_cast<double>(epoch_steps));
  }
  return result;
}

double training_recall_at_1(const TowerParams& params, const TrainingCorpus& corpus) {
  const Matrix v = project(params.video_proj, corpus.video);
  const Matrix c = project(params.text_proj, corpus.text);
  const Matrix sims = c * v.transpose();
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < sims.rows(); ++i) {
    const Eigen::RowVectorXd row = sims.row(i);
    if (argmax_with_tiebreak(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))) ==
        static_cast<std::size_t>(i)) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(sims.rows());
}

void write_loss_trace(std::ostream& out, const std::vector<LossRecord>& trace) {
  out << "step,vcc,vcm,ftm,total\n";
  out << std::setprecision(17);
  for (const auto& r : trace) {
    out << r.step << ',' << r.vcc << ',' << r.vcm << ',' << r.ftm << ',' << r.total << '\n';
  }
}

}  // namespace refrain
