#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "acgan/pairing.hpp"
#include "acgan/tensor.hpp"

namespace acgan {

/// Row-major counts, rows are ground truth, columns predictions.
struct ConfusionMatrix {
  int n_classes = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t at(int gt, int pred) const {
    return counts[static_cast<std::size_t>(gt) * n_classes + pred];
  }
  std::uint64_t total() const;
  void accumulate(const ConfusionMatrix& o);
};

ConfusionMatrix confusion_matrix(std::span<const int> pred, std::span<const int> gt,
                                 int n_classes);

struct SegScores {
  double pixel_accuracy = 0.0;
  double mean_accuracy = 0.0;
  double freq_weighted_accuracy = 0.0;
  double mean_iou = 0.0;
  /// NaN for classes absent from both prediction and ground truth.
  std::vector<double> per_class_iou;
};

/// Means run over classes present in the ground truth.
SegScores seg_scores(const ConfusionMatrix& conf);

inline constexpr double kDepthEpsilon = 1e-3;

struct DepthScores {
  double rmse_log = 0.0;
  double silog = 0.0;  // x100
  double log10 = 0.0;
  double abs_rel = 0.0;
  /// Number of predicted values raised to kDepthEpsilon.
  std::size_t clamped = 0;
};

/// Predictions below kDepthEpsilon are clamped (and counted); ground truth
/// must be positive after the same clamp.
DepthScores depth_scores(std::span<const float> pred, std::span<const float> gt);

/// Frozen image classifier used by label_accuracy.
class ImageClassifier {
 public:
  virtual ~ImageClassifier() = default;
  virtual int n_classes() const = 0;
  /// Predicted class per sample of an [N, 3, H, W] batch.
  virtual std::vector<int> predict(const Tensor& images) const = 0;
  /// Accuracy on held-out real data, reported next to every label accuracy.
  virtual double heldout_accuracy() const = 0;
};

struct LabelAccuracy {
  double accuracy = 0.0;
  double classifier_heldout_accuracy = 0.0;
  std::size_t n = 0;
};

LabelAccuracy label_accuracy(const ImageClassifier& classifier,
                             const Tensor& generated_images,
                             std::span<const int> intended_labels);

struct NdbOptions {
  int k = 20;
  double alpha = 0.05;
  /// > 0 splits every image into non-overlapping patch x patch tiles.
  int patch = 0;
  int restarts = 10;
  int max_iterations = 100;
  int reseed_limit = 5;
};

struct NdbReport {
  int k = 0;
  double alpha = 0.0;
  std::vector<std::vector<double>> bin_centers;
  std::vector<double> real_proportion;
  std::vector<double> gen_proportion;
  std::vector<double> z;
  std::vector<bool> significant;
  int ndb = 0;
  double ndb_over_k = 0.0;
};

/// Rows of `samples` are flat feature vectors (or images, tiled if patch > 0).
using SampleMatrix = std::vector<std::vector<double>>;

/// Flatten every sample of a batch, optionally into patch tiles.
SampleMatrix to_samples(const Tensor& batch, int patch = 0);

struct KMeansResult {
  std::vector<std::vector<double>> centers;
  double inertia = 0.0;
};

/// k-means++ seeding plus Lloyd iterations, best of `restarts` by inertia.
KMeansResult kmeans(const SampleMatrix& x, int k, Rng& rng, int restarts = 10,
                    int max_iterations = 100, int reseed_limit = 5);
std::vector<int> assign_nearest(const SampleMatrix& x,
                                const std::vector<std::vector<double>>& centers);

NdbReport ndb_score(const SampleMatrix& real, const SampleMatrix& gen,
                    const NdbOptions& options, Rng& rng);
/// Re-tests an existing binning at another significance level.
NdbReport ndb_at_alpha(const NdbReport& report, std::size_t n_real,
                       std::size_t n_gen, double alpha);

nlohmann::json to_json(const SegScores& s);
nlohmann::json to_json(const DepthScores& s);
nlohmann::json to_json(const LabelAccuracy& s);
nlohmann::json to_json(const NdbReport& r);

}  // namespace acgan
