#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <algorithm>
#include <numeric>
#include <random>

#include "acgan/metrics.hpp"

using namespace acgan;

namespace {

SampleMatrix gaussian_cloud(Rng& rng, int n, int dim, double center, double sd = 1.0) {
  std::normal_distribution<double> g(center, sd);
  SampleMatrix m(n, std::vector<double>(dim));
  for (auto& row : m)
    for (auto& v : row) v = g(rng);
  return m;
}

struct FixedClassifier final : ImageClassifier {
  int n_classes() const override { return 3; }
  std::vector<int> predict(const Tensor& images) const override {
    std::vector<int> out;
    for (int i = 0; i < images.shape().n; ++i) out.push_back(static_cast<int>(images.sample(i)[0]));
    return out;
  }
  double heldout_accuracy() const override { return 0.97; }
};

}  // namespace

TEST(SegScores, PerfectPrediction) {
  const std::vector<int> gt{0, 1, 2, 2, 1, 0, 0};
  const auto s = seg_scores(confusion_matrix(gt, gt, 3));
  EXPECT_EQ(s.pixel_accuracy, 1.0);
  EXPECT_EQ(s.mean_iou, 1.0);
  EXPECT_EQ(s.mean_accuracy, 1.0);
  EXPECT_NEAR(s.freq_weighted_accuracy, 1.0, 1e-12);
}

TEST(SegScores, BinaryAllWrong) {
  const std::vector<int> gt{0, 1, 0, 1}, pred{1, 0, 1, 0};
  const auto s = seg_scores(confusion_matrix(pred, gt, 2));
  EXPECT_EQ(s.mean_iou, 0.0);
  EXPECT_EQ(s.pixel_accuracy, 0.0);
}

TEST(SegScores, TwoByTwoHandComputed) {
  // gt [[0,0],[1,1]], pred [[0,1],[1,1]]: class 0 TP1 FN1, class 1 TP2 FP1.
  const std::vector<int> gt{0, 0, 1, 1}, pred{0, 1, 1, 1};
  const auto cm = confusion_matrix(pred, gt, 2);
  EXPECT_EQ(cm.at(0, 0), 1u);
  EXPECT_EQ(cm.at(0, 1), 1u);
  EXPECT_EQ(cm.at(1, 1), 2u);
  const auto s = seg_scores(cm);
  EXPECT_NEAR(s.pixel_accuracy, 0.75, 1e-9);
  EXPECT_NEAR(s.per_class_iou[0], 0.5, 1e-9);
  EXPECT_NEAR(s.per_class_iou[1], 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(s.mean_iou, 7.0 / 12.0, 1e-9);
  EXPECT_NEAR(s.mean_accuracy, (0.5 + 1.0) / 2, 1e-9);
  EXPECT_NEAR(s.freq_weighted_accuracy, 0.5 * 0.5 + 0.5 * (2.0 / 3.0), 1e-9);
}

TEST(SegScores, AbsentClassesExcludedFromMeans) {
  const std::vector<int> gt{0, 0, 1, 1}, pred{0, 0, 1, 1};
  const auto s = seg_scores(confusion_matrix(pred, gt, 4));
  EXPECT_EQ(s.mean_iou, 1.0);
  EXPECT_TRUE(std::isnan(s.per_class_iou[2]));
  // A class predicted but absent from ground truth lowers IoU of others, not the mean count.
  const std::vector<int> pred2{0, 3, 1, 1};
  const auto s2 = seg_scores(confusion_matrix(pred2, gt, 4));
  EXPECT_NEAR(s2.mean_iou, (0.5 + 1.0) / 2, 1e-12);
}

TEST(SegScores, BoundedAndPermutationInvariant) {
  Rng rng(1);
  std::uniform_int_distribution<int> c(0, 4);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> gt(200), pred(200);
    for (int i = 0; i < 200; ++i) {
      gt[i] = c(rng);
      pred[i] = c(rng);
    }
    const auto s = seg_scores(confusion_matrix(pred, gt, 5));
    for (double v : {s.pixel_accuracy, s.mean_accuracy, s.freq_weighted_accuracy, s.mean_iou}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    std::vector<std::size_t> order(200);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> gt2, pred2;
    for (auto i : order) {
      gt2.push_back(gt[i]);
      pred2.push_back(pred[i]);
    }
    EXPECT_EQ(seg_scores(confusion_matrix(pred2, gt2, 5)).mean_iou, s.mean_iou);
  }
}

TEST(SegScores, Errors) {
  EXPECT_THROW(confusion_matrix(std::vector<int>{0, 1}, std::vector<int>{0}, 2), std::invalid_argument);
  EXPECT_THROW(confusion_matrix(std::vector<int>{0, 2}, std::vector<int>{0, 1}, 2), std::invalid_argument);
}

TEST(DepthScores, IdenticalIsZero) {
  const std::vector<float> gt{0.5f, 1.0f, 2.0f, 7.5f};
  const auto d = depth_scores(gt, gt);
  EXPECT_EQ(d.rmse_log, 0.0);
  EXPECT_EQ(d.silog, 0.0);
  EXPECT_EQ(d.log10, 0.0);
  EXPECT_EQ(d.abs_rel, 0.0);
}

TEST(DepthScores, ScaledByE) {
  const double e = std::numbers::e;
  const std::vector<float> gt{0.5f, 1.0f, 2.0f, 3.0f};
  std::vector<float> pred;
  for (float g : gt) pred.push_back(static_cast<float>(g * e));
  const auto d = depth_scores(pred, gt);
  // float storage limits these to ~1e-7 relative
  EXPECT_NEAR(d.rmse_log, 1.0, 1e-6);
  EXPECT_NEAR(d.log10, std::log10(e), 1e-6);
  EXPECT_NEAR(d.abs_rel, e - 1, 1e-6);
  EXPECT_NEAR(d.silog, 0.0, 1e-4);
}

TEST(DepthScores, TwoPixelHandComputed) {
  const double e2 = std::exp(2.0);
  const std::vector<float> pred{1.0f, static_cast<float>(e2)}, gt{1.0f, 1.0f};
  const auto d = depth_scores(pred, gt);
  const double l = std::log(static_cast<double>(static_cast<float>(e2)));  // 2 up to float rounding
  EXPECT_NEAR(d.rmse_log, std::sqrt(l * l / 2), 1e-9);
  EXPECT_NEAR(d.silog, 100 * std::sqrt(l * l / 2 - l * l / 4), 1e-9);
  EXPECT_NEAR(d.abs_rel, (static_cast<float>(e2) - 1.0) / 2, 1e-9);
  EXPECT_NEAR(d.rmse_log, std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(d.silog, 100.0, 1e-4);
}

TEST(DepthScores, SilogIgnoresCommonScale) {
  Rng rng(2);
  std::uniform_real_distribution<float> u(0.1f, 10.0f), cs(0.05f, 20.0f);
  for (int t = 0; t < 50; ++t) {
    std::vector<float> gt(64), pred(64);
    const float c = cs(rng);
    for (int i = 0; i < 64; ++i) pred[i] = c * (gt[i] = u(rng));
    EXPECT_NEAR(depth_scores(pred, gt).silog, 0.0, 2e-3);
  }
}

TEST(DepthScores, ClampAndErrors) {
  const std::vector<float> gt{1.0f, 1.0f}, pred{0.0f, 1.0f};
  const auto d = depth_scores(pred, gt);
  EXPECT_EQ(d.clamped, 1u);
  EXPECT_NEAR(d.abs_rel, (1 - kDepthEpsilon) / 2, 1e-9);
  EXPECT_THROW(depth_scores(gt, std::vector<float>{1.0f, -2.0f}), std::invalid_argument);
  EXPECT_THROW(depth_scores(gt, std::vector<float>{1.0f}), std::invalid_argument);
}

TEST(LabelAccuracy, CountsMatchesAndCarriesClassifierAccuracy) {
  Tensor imgs({4, 3, 2, 2}, 0.0f);
  for (int i = 0; i < 4; ++i) imgs.sample(i)[0] = static_cast<float>(i % 3);
  const FixedClassifier clf;
  const std::vector<int> labels{0, 1, 0, 0};
  const auto acc = label_accuracy(clf, imgs, labels);
  EXPECT_EQ(acc.accuracy, 0.75);
  EXPECT_EQ(acc.classifier_heldout_accuracy, 0.97);
  EXPECT_EQ(acc.n, 4u);
  EXPECT_THROW(label_accuracy(clf, imgs, std::vector<int>{0, 1, 5, 0}), std::invalid_argument);
  EXPECT_THROW(label_accuracy(clf, imgs, std::vector<int>{0, 1}), std::invalid_argument);
}

TEST(LabelAccuracy, ShuffledLabelsApproachChance) {
  const int n = 3000;
  Tensor imgs({n, 1, 1, 1}, 0.0f);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) imgs.sample(i)[0] = static_cast<float>(labels[i] = i % 3);
  Rng rng(3);
  std::shuffle(labels.begin(), labels.end(), rng);
  EXPECT_NEAR(label_accuracy(FixedClassifier{}, imgs, labels).accuracy, 1.0 / 3, 0.03);
}

TEST(Ndb, IdenticalSetsGiveZero) {
  Rng rng(4);
  const auto real = gaussian_cloud(rng, 400, 6, 0.0);
  Rng krng(1);
  const auto r = ndb_score(real, real, {.k = 10}, krng);
  EXPECT_EQ(r.ndb, 0);
  EXPECT_EQ(r.ndb_over_k, 0.0);
  double sr = 0, sg = 0;
  for (std::size_t i = 0; i < r.real_proportion.size(); ++i) {
    sr += r.real_proportion[i];
    sg += r.gen_proportion[i];
  }
  EXPECT_NEAR(sr, 1.0, 1e-12);
  EXPECT_NEAR(sg, 1.0, 1e-12);
}

TEST(Ndb, DisjointGaussiansFillEveryBin) {
  Rng rng(5);
  const auto real = gaussian_cloud(rng, 500, 4, 0.0);
  const auto gen = gaussian_cloud(rng, 500, 4, 25.0);
  Rng krng(2);
  const auto r = ndb_score(real, gen, {.k = 10}, krng);
  EXPECT_GE(r.ndb_over_k, 0.9);
  EXPECT_LE(r.ndb, r.k);
}

TEST(Ndb, MonotoneInAlpha) {
  Rng rng(6);
  const auto real = gaussian_cloud(rng, 300, 3, 0.0);
  const auto gen = gaussian_cloud(rng, 300, 3, 0.4, 1.3);
  Rng krng(3);
  const auto base = ndb_score(real, gen, {.k = 12, .alpha = 0.001}, krng);
  int last = -1;
  for (double a : {0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 0.9}) {
    const auto r = ndb_at_alpha(base, real.size(), gen.size(), a);
    EXPECT_GE(r.ndb, last);
    last = r.ndb;
  }
}

TEST(Ndb, DeterministicAndOrderInvariant) {
  Rng rng(7);
  const auto real = gaussian_cloud(rng, 200, 3, 0.0);
  auto gen = gaussian_cloud(rng, 200, 3, 0.5);
  Rng a(9), b(9);
  const auto r1 = ndb_score(real, gen, {.k = 8}, a);
  const auto r2 = ndb_score(real, gen, {.k = 8}, b);
  EXPECT_EQ(r1.z, r2.z);
  std::reverse(gen.begin(), gen.end());
  Rng c(9);
  EXPECT_EQ(ndb_score(real, gen, {.k = 8}, c).ndb, r1.ndb);
}

TEST(Ndb, Errors) {
  Rng rng(8);
  const auto real = gaussian_cloud(rng, 5, 2, 0.0);
  EXPECT_THROW(ndb_score(real, real, {.k = 6}, rng), std::invalid_argument);
  EXPECT_THROW(ndb_score({}, real, {.k = 1}, rng), std::invalid_argument);
  // Five copies of one point cannot fill three clusters.
  const SampleMatrix same(5, std::vector<double>{1.0, 1.0});
  EXPECT_THROW(kmeans(same, 3, rng), std::runtime_error);
}

TEST(Ndb, PatchTiling) {
  Tensor t({2, 1, 4, 4}, 0.0f);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i);
  const auto rows = to_samples(t, 2);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0], (std::vector<double>{0, 1, 4, 5}));
  EXPECT_EQ(to_samples(t).size(), 2u);
}

TEST(MetricJson, SerializedNumbersRoundTrip) {
  const std::vector<int> gt{0, 0, 1, 1}, pred{0, 1, 1, 1};
  const auto s = seg_scores(confusion_matrix(pred, gt, 2));
  const auto j = nlohmann::json::parse(to_json(s).dump());
  EXPECT_EQ(j.at("mean_iou").get<double>(), s.mean_iou);
}
