#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "json.hpp"

#include "acgan/layers.hpp"
#include "acgan/metrics.hpp"
#include "acgan/pairing.hpp"

namespace acgan {

using Color = std::array<float, 3>;

/// Eight well separated colors in [-1, 1]; index 0 is the background.
std::vector<Color> default_palette(int n_classes);

struct ShapesSceneSpec {
  int image_size = 64;
  /// Class 0 is background; shapes take classes 1..n_classes-1.
  int n_classes = 6;
  int shapes_min = 5;
  int shapes_max = 9;
  int shape_extent_min = 14;
  int shape_extent_max = 34;
  /// Empty selects default_palette(n_classes).
  std::vector<Color> palette;
  /// Per-sample, per-class color shift drawn uniformly in [-amp, amp] per channel.
  float jitter_amplitude = 0.1f;
  float noise_std = 0.04f;
  std::uint64_t seed = 0;

  const std::vector<Color>& colors() const;
  /// n_classes >= 2, palette large enough, colors pairwise further apart
  /// than twice the largest jitter displacement.
  void validate() const;

 private:
  mutable std::vector<Color> resolved_;
};

nlohmann::json to_json(const ShapesSceneSpec& s);
ShapesSceneSpec shapes_spec_from_json(const nlohmann::json& j);

enum class ShapeKind { Rectangle, Ellipse, Triangle };

struct SceneShape {
  ShapeKind kind;
  float cx, cy;       // center, pixels
  float rx, ry;       // half extents
  float angle;        // radians, triangles only
  int label;          // class id
  float depth;        // (0, 1], smaller is nearer

  bool contains(float x, float y) const;
};

/// One rendered scene. Planes are row-major image_size x image_size.
struct ShapesScene {
  std::vector<SceneShape> shapes;     // in draw order
  std::vector<int> labels;            // label-to-image: topmost shape wins
  std::vector<float> depth;           // depth task: nearest shape wins
  Tensor image;                       // [1, 3, S, S] in [-1, 1]
  Tensor clean_image;                 // no jitter, no noise
};

/// Label-to-image scene number `index`, deterministic in (spec.seed, index).
ShapesScene render_label_scene(const ShapesSceneSpec& spec, std::size_t index);
/// Depth scene: shapes composited far-to-near, brightness falls with depth.
ShapesScene render_depth_scene(const ShapesSceneSpec& spec, std::size_t index);

inline constexpr float kBackgroundDepth = 1.0f;

/// (one-hot label map [1, C, S, S], rendered image [1, 3, S, S]) pairs.
PairedDataset gen_shapes_l2i(const ShapesSceneSpec& spec, std::size_t n_samples);
/// The label-to-image scenes with roles swapped: (image, one-hot label map).
PairedDataset gen_shapes_i2l(const ShapesSceneSpec& spec, std::size_t n_samples);
/// (rendered image [1, 3, S, S], depth [1, 1, S, S]) pairs.
PairedDataset gen_shapes_depth(const ShapesSceneSpec& spec, std::size_t n_samples);

/// One-hot [1, C, S, S] from a class map; throws on out-of-range ids.
Tensor one_hot_map(std::span<const int> labels, int n_classes, int size);
/// Per-pixel argmax over channels of sample n.
std::vector<int> argmax_channels(const Tensor& t, int n = 0);
/// Nearest palette color per pixel of sample n of an RGB batch.
std::vector<int> segment_by_palette(const Tensor& images, int n,
                                    const std::vector<Color>& palette);

/// Class-index conditions [1, C, 1, 1] paired with procedural glyph images
/// [1, 3, S, S]. Classes cycle so the class histogram is exactly balanced.
PairedDataset gen_glyph_single_label(int n_classes, int image_size,
                                     std::size_t n_samples, std::uint64_t seed);
/// Noise-free, unrotated, centered glyph of class `label`.
Tensor glyph_prototype(int label, int n_classes, int image_size);
int max_glyph_classes();

/// Class index held in a one-hot [1, C, 1, 1] condition.
int class_of(const Tensor& one_hot);

inline constexpr double kProbeClassifierFloor = 0.95;

/**
 * Small convolutional classifier used to score generated glyphs. Training
 * holds out 20% of the data and refuses to return a classifier whose held-out
 * accuracy is below kProbeClassifierFloor.
 */
class ProbeClassifier final : public ImageClassifier {
 public:
  int n_classes() const override { return n_classes_; }
  std::vector<int> predict(const Tensor& images) const override;
  double heldout_accuracy() const override { return heldout_accuracy_; }

 private:
  friend ProbeClassifier train_probe_classifier(const PairedDataset&, std::uint64_t,
                                                int);
  ProbeClassifier() = default;
  int n_classes_ = 0;
  double heldout_accuracy_ = 0.0;
  mutable Sequential net_;  // inference scratch only
};

ProbeClassifier train_probe_classifier(const PairedDataset& dataset,
                                       std::uint64_t seed = 0, int max_epochs = 30);

/// Train/validation split: the first n_train samples train.
struct DatasetSplit {
  PairedDataset train;
  PairedDataset val;
};
DatasetSplit split_dataset(const PairedDataset& all, std::size_t n_train);

/**
 * On-disk layout:
 *   manifest.json   {"schema_version":1,"task","n_classes","spec","seed",
 *                    "splits":{"train":[ids],"val":[ids]},
 *                    "samples":{id:{"condition":file|class,"target":file}}}
 *   <id>_label.png  8-bit class ids (label conditions)
 *   <id>_image.png  8-bit RGB
 *   <id>_depth.pgm  16-bit binary PGM, depth * 10000
 */
void save_dataset(const std::filesystem::path& dir, const DatasetSplit& data,
                  const nlohmann::json& spec);
DatasetSplit load_dataset(const std::filesystem::path& dir);

inline constexpr double kDepthPgmScale = 10000.0;

}  // namespace acgan
