#include "refrain/objectives.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.h"

namespace refrain {
namespace {

Matrix unit_rows(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    m.row(i).normalize();
  }
  return m;
}

// Naive per-anchor log-sum-exp, written without Eigen reductions.
double nce_oracle(const Matrix& anchors, const Matrix& bank, const std::vector<std::size_t>& slots, double tau) {
  double total = 0;
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
    std::vector<double> logits;
    for (Eigen::Index m = 0; m < bank.rows(); ++m) {
      double s = 0;
      for (Eigen::Index d = 0; d < bank.cols(); ++d) s += anchors(i, d) * bank(m, d);
      logits.push_back(s / tau);
    }
    double peak = logits[0];
    for (double l : logits) peak = std::max(peak, l);
    double z = 0;
    for (double l : logits) z += std::exp(l - peak);
    total += -(logits[slots[static_cast<std::size_t>(i)]] - peak - std::log(z));
  }
  return total / static_cast<double>(anchors.rows());
}

Vector pack(const FeatureBatch& b) {
  Vector x(b.video.size() + b.caption.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    for (Eigen::Index d = 0; d < b.dim(); ++d) x(k++) = b.video(i, d);
  }
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    for (Eigen::Index d = 0; d < b.dim(); ++d) x(k++) = b.caption(i, d);
  }
  return x;
}

FeatureBatch unpack(const Vector& x, Eigen::Index rows, Eigen::Index cols) {
  FeatureBatch b{Matrix(rows, cols), Matrix(rows, cols)};
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index d = 0; d < cols; ++d) b.video(i, d) = x(k++);
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index d = 0; d < cols; ++d) b.caption(i, d) = x(k++);
  }
  return b;
}

TEST(Queue, FifoEviction) {
  MomentumQueue q(3, 2);
  EXPECT_TRUE(q.empty());
  Matrix a(2, 2), b(2, 2);
  a << 1, 0, 0, 1;
  b << 0.6, 0.8, 0.8, 0.6;
  EXPECT_EQ(q.enqueue(a, a), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(q.enqueue(b, b), (std::vector<std::size_t>{2, 0}));
  EXPECT_EQ(q.size(), 3u);
  EXPECT_EQ(q.video()(0, 0), 0.8);  // slot 0 overwritten by the newest row
  EXPECT_EQ(q.video()(1, 1), 1.0);
  EXPECT_CODE(q.enqueue(Matrix::Zero(4, 2), Matrix::Zero(4, 2)), ErrorCode::kInvalidArgument);
  EXPECT_CODE(q.enqueue(Matrix::Zero(1, 3), Matrix::Zero(1, 3)), ErrorCode::kDimensionMismatch);
}

TEST(Vcc, SingleEntryQueueIsZero) {
  MomentumQueue q(4, 2);
  FeatureBatch b{Matrix(1, 2), Matrix(1, 2)};
  b.video << 0.6, 0.8;
  b.caption << 1, 0;
  const auto r = vcc_step(b, q, 0.07);
  EXPECT_EQ(r.loss, 0.0);
}

TEST(Vcc, OrthogonalNegativeScalarOracle) {
  MomentumQueue q(4, 2);
  Matrix neg(1, 2), pos(1, 2);
  neg << 0, 1;
  pos << 1, 0;
  q.enqueue(neg, neg);
  const FeatureBatch b{pos, pos};
  const auto r = vcc_step(b, q, 1.0);
  const double e = std::exp(1.0);
  const double per = -std::log(e / (e + 1));
  EXPECT_NEAR(r.video_to_caption, per, 1e-15);
  EXPECT_NEAR(r.caption_to_video, per, 1e-15);
  EXPECT_NEAR(r.loss, 2 * per, 1e-15);
  EXPECT_NEAR(r.loss, 0.6266, 1e-4);
}

TEST(Vcc, MatchesNaiveOracle) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    MomentumQueue q(16, 6);
    q.enqueue(unit_rows(rng, 12, 6), unit_rows(rng, 12, 6));
    const FeatureBatch b{unit_rows(rng, 4, 6), unit_rows(rng, 4, 6)};
    const auto slots = q.enqueue(b.video, b.caption);
    const double tau = 0.05 + 0.1 * t;
    const auto r = vcc_loss(b, q, slots, tau);
    const double v2c = nce_oracle(b.video, q.caption(), slots, tau);
    const double c2v = nce_oracle(b.caption, q.video(), slots, tau);
    EXPECT_NEAR(r.video_to_caption, v2c, 1e-10);
    EXPECT_NEAR(r.caption_to_video, c2v, 1e-10);
    EXPECT_NEAR(r.loss, v2c + c2v, 1e-10);
    EXPECT_GE(r.loss, 0.0);
  }
}

TEST(Vcc, Errors) {
  MomentumQueue q(4, 2);
  Matrix pos(1, 2);
  pos << 1, 0;
  const FeatureBatch b{pos, pos};
  EXPECT_CODE(vcc_loss(b, q, {0}, 1.0), ErrorCode::kEmptyQueue);
  q.enqueue(pos, pos);
  EXPECT_CODE(vcc_loss(b, q, {0}, 0.0), ErrorCode::kInvalidTemperature);
  EXPECT_CODE(vcc_loss(b, q, {0}, -1.0), ErrorCode::kInvalidTemperature);
  EXPECT_CODE(vcc_loss(b, q, {5}, 1.0), ErrorCode::kInvalidArgument);
}

TEST(Vcc, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Index B = 2, D = 8;
    MomentumQueue q(16, D);
    q.enqueue(unit_rows(rng, 10, D), unit_rows(rng, 10, D));
    const FeatureBatch b{unit_rows(rng, B, D), unit_rows(rng, B, D)};
    const auto slots = q.enqueue(b.video, b.caption);
    const LossFunction fn = [&](const Vector& x) {
      const auto r = vcc_loss(unpack(x, B, D), q, slots, 0.5);
      return LossAndGradient{r.loss, pack(FeatureBatch{r.grad_video, r.grad_caption})};
    };
    EXPECT_LT(finite_diff_check(fn, pack(b)), 1e-4);
  }
}

MatchLogits random_logits(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> dist(0, 3);
  MatchLogits m;
  m.logits.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.logits(i, 0) = dist(rng);
    m.logits(i, 1) = dist(rng);
    m.matched.push_back(rng() % 2 == 0);
  }
  return m;
}

TEST(Matching, Examples) {
  MatchLogits m;
  m.logits.resize(1, 2);
  m.logits << 20, -20;
  m.matched = {true};
  EXPECT_LT(vcm_loss(m).loss, 1e-8);
  EXPECT_LT(ftm_loss(m).loss, 1e-8);
  m.logits << 0, 0;
  EXPECT_NEAR(vcm_loss(m).loss, std::log(2.0), 1e-15);
  m.matched = {false};
  EXPECT_NEAR(ftm_loss(m).loss, 0.6931, 1e-4);
}

TEST(Matching, Errors) {
  MatchLogits m;
  EXPECT_CODE(vcm_loss(m), ErrorCode::kEmptyInput);
  m.logits.resize(2, 2);
  m.logits.setZero();
  m.matched = {true};
  EXPECT_CODE(ftm_loss(m), ErrorCode::kInvalidArgument);
}

TEST(Matching, MatchesLoopOracle) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_logits(rng, 8);
    double oracle = 0;
    for (Eigen::Index i = 0; i < 8; ++i) {
      const double a = m.logits(i, 0), b = m.logits(i, 1);
      const double p = 1.0 / (1.0 + std::exp(b - a));
      oracle += m.matched[static_cast<std::size_t>(i)] ? -std::log(p) : -std::log1p(-p);
    }
    oracle /= 8;
    EXPECT_NEAR(vcm_loss(m).loss, oracle, 1e-10);
    EXPECT_NEAR(ftm_loss(m).loss, oracle, 1e-10);
  }
}

TEST(Matching, ShiftInvariantPerPair) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 50; ++t) {
    auto m = random_logits(rng, 5);
    const double before = vcm_loss(m).loss;
    for (Eigen::Index i = 0; i < 5; ++i) m.logits.row(i).array() += static_cast<double>(i) * 3.7 - 5;
    EXPECT_NEAR(vcm_loss(m).loss, before, 1e-12);
  }
}

TEST(Matching, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(47);
  for (int t = 0; t < 10; ++t) {
    const auto base = random_logits(rng, 4);
    const LossFunction fn = [&](const Vector& x) {
      MatchLogits m = base;
      for (Eigen::Index i = 0; i < 4; ++i) m.logits(i, 0) = x(2 * i), m.logits(i, 1) = x(2 * i + 1);
      const auto r = ftm_loss(m);
      Vector g(8);
      for (Eigen::Index i = 0; i < 4; ++i) g(2 * i) = r.grad(i, 0), g(2 * i + 1) = r.grad(i, 1);
      return LossAndGradient{r.loss, g};
    };
    Vector x(8);
    for (Eigen::Index i = 0; i < 4; ++i) x(2 * i) = base.logits(i, 0), x(2 * i + 1) = base.logits(i, 1);
    EXPECT_LT(finite_diff_check(fn, x), 1e-4);
  }
}

TEST(TotalLoss, PlainSum) {
  EXPECT_EQ(total_loss(0, 0, 0), 0.0);
  EXPECT_EQ(total_loss(1.0, 0.5, 0.25), 1.75);
}

TEST(FiniteDiff, QuadraticIsExact) {
  Matrix A(3, 3);
  A << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  const LossFunction fn = [&](const Vector& x) { return LossAndGradient{0.5 * x.dot(A * x), A * x}; };
  Vector x(3);
  x << 0.3, -1.2, 2.5;
  EXPECT_LT(finite_diff_check(fn, x, 1e-4), 1e-8);
}

TEST(FiniteDiff, DetectsWrongGradient) {
  const LossFunction fn = [](const Vector& x) { return LossAndGradient{x.squaredNorm(), x}; };
  Vector x(2);
  x << 1, 2;
  EXPECT_GT(finite_diff_check(fn, x), 0.4);
}

TEST(FiniteDiff, Errors) {
  const LossFunction blowup = [](const Vector& x) {
    return LossAndGradient{x(0) > 0 ? std::log(-1.0) : 0.0, Vector::Zero(1)};
  };
  EXPECT_CODE(finite_diff_check(blowup, Vector::Zero(1)), ErrorCode::kNumericalFailure);
  const LossFunction fine = [](const Vector& x) { return LossAndGradient{0, Vector::Zero(x.size())}; };
  EXPECT_CODE(finite_diff_check(fine, Vector::Zero(1), 1e-2), ErrorCode::kInvalidArgument);
  EXPECT_CODE(finite_diff_check(fine, Vector::Zero(1), 1e-8), ErrorCode::kInvalidArgument);
}

TEST(HardNegatives, HighestOffDiagonalLowestOnTies) {
  Matrix s(3, 3);
  s << 1.0, 0.2, 0.5,
       0.9, 1.0, 0.9,
       0.1, 0.1, 1.0;
  EXPECT_EQ(hard_negatives(s), (std::vector<Eigen::Index>{2, 0, 0}));
  EXPECT_CODE(hard_negatives(Matrix::Zero(1, 1)), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace refrain
