#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "refrain/config.h"
#include "refrain/objectives.h"

namespace refrain {

// Raw paired features. Row i of every matrix belongs to pair i. `frame` and
// `title` feed the fine-grained matching objective; when empty the video and
// text rows stand in for them.
struct TrainingCorpus {
  Matrix video;
  Matrix text;
  Matrix frame;
  Matrix title;

  Eigen::Index size() const { return video.rows(); }
  void validate() const;
  const Matrix& frame_or_video() const { return frame.size() ? frame : video; }
  const Matrix& title_or_text() const { return title.size() ? title : text; }
};

// Two linear towers projecting raw features into a shared space, plus the
// bilinear matching head: score = v^T head c + bias, logits = (score, 0).
struct TowerParams {
  Matrix video_proj;  // D x Dv
  Matrix text_proj;   // D x Dt
  Matrix head;        // D x D
  double bias = 0.0;

  Vector flatten() const;
  void assign(const Vector& flat);  // inverse of flatten for the same shapes
};

struct TrainerOptions {
  std::size_t epochs = 40;
  std::size_t batch_size = 8;
  double learning_rate = 0.5;
  std::size_t embed_dim = 16;
  double momentum = 0.0;  // momentum-tower coefficient; 0 queues detached copies
};

struct LossRecord {
  std::size_t step = 0;
  double vcc = 0.0;
  double vcm = 0.0;
  double ftm = 0.0;
  double total = 0.0;
};

struct StepResult {
  LossRecord losses;
  TowerParams grad;
};

// Rows of raw * proj^T, each scaled to unit norm.
Matrix project(const Matrix& proj, const Matrix& raw);

// Loss and parameter gradient for the pairs in `rows`. The queue must already
// hold momentum copies of those pairs at `slots`; queue entries are constants.
StepResult tower_step(const TowerParams& params, const TrainingCorpus& corpus,
                      std::span<const std::size_t> rows, const MomentumQueue& queue,
                      const std::vector<std::size_t>& slots, double temperature);

struct TrainingResult {
  TowerParams params;
  std::vector<LossRecord> trace;      // one record per step
  std::vector<double> epoch_totals;   // mean total loss per epoch
};

TowerParams init_towers(Eigen::Index video_dim, Eigen::Index text_dim, std::size_t embed_dim,
                        std::uint64_t seed);

// Gradient descent on the summed objectives. Deterministic for a fixed
// config.rng_seed. Throws kTrainingDiverged on a non-finite loss.
TrainingResult train_linear_towers(const TrainingCorpus& corpus, const EngineConfig& config,
                                   const TrainerOptions& options);

// Text-to-video Recall@1 over the corpus pairs under the given towers.
double training_recall_at_1(const TowerParams& params, const TrainingCorpus& corpus);

// `step,vcc,vcm,ftm,total` lines with a header.
void write_loss_trace(std::ostream& out, const std::vector<LossRecord>& trace);

}  // namespace refrain
