#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "acgan/layers.hpp"
#include "acgan/pairing.hpp"

namespace acgan {

enum class Normalization { None, Batch, Instance };
std::string_view to_string(Normalization n);
Normalization parse_normalization(std::string_view s);

struct ConvLayerSpec {
  int kernel = 4;
  int stride = 2;
  int channels_out = 64;
  Normalization normalization = Normalization::None;
  ActivationKind activation = ActivationKind::LeakyReLU;
  /// Negative means (kernel - 1) / 2, i.e. 1 for the usual 4x4 kernels.
  int padding = -1;

  int effective_padding() const { return padding >= 0 ? padding : (kernel - 1) / 2; }
  bool operator==(const ConvLayerSpec&) const = default;
};

/// The 70x70 PatchGAN stack: 4x4 convolutions with strides 2, 2, 2, 1, 1.
std::vector<ConvLayerSpec> patchgan70_spec(int base_channels = 64);

/// Receptive field in pixels of the last layer: r += (k - 1) * prod(previous strides).
int receptive_field(std::span<const ConvLayerSpec> spec);

/// Output grid extent along one axis for an input extent; 0 when a window
/// no longer fits its padded input.
int output_extent(std::span<const ConvLayerSpec> spec, int input);

enum class Fusion { EarlyConcat };

struct DiscriminatorConfig {
  std::vector<ConvLayerSpec> layers = patchgan70_spec(16);
  Fusion fusion = Fusion::EarlyConcat;
  int condition_channels = 1;
  int target_channels = 3;
  /// > 0 for class-index conditions [N, C, 1, 1]: a learned embedding of this
  /// width is broadcast over the target plane before concatenation.
  int class_embedding = 0;
  double init_std = 0.02;
};

/// Raw scores f(x, y) and D = sigmoid(f), both [N, 1, gh, gw].
struct FieldResponse {
  Tensor raw;
  Tensor prob;
};

/**
 * Patch discriminator over early-fused (condition, target) pairs. The last
 * layer emits raw scores; the sigmoid is applied outside the layer stack so
 * probes can read f(x, y) directly.
 */
class PatchDiscriminator {
 public:
  PatchDiscriminator(DiscriminatorConfig config, Rng& init_rng);

  FieldResponse forward(const Tensor& condition, const Tensor& target,
                        Mode mode = Mode::Train);
  /// Gradients of the last forward w.r.t. the target input, given d(raw).
  Tensor backward(const Tensor& grad_raw, bool param_grads);

  std::vector<NamedParam> params();
  const DiscriminatorConfig& config() const { return config_; }
  int receptive_field() const { return acgan::receptive_field(config_.layers); }
  std::pair<int, int> grid(int h, int w) const {
    return {output_extent(config_.layers, h), output_extent(config_.layers, w)};
  }

 private:
  Tensor fuse(const Tensor& condition, const Tensor& target, Mode mode);

  DiscriminatorConfig config_;
  Sequential embed_;
  Sequential body_;
  Shape last_condition_;
  int last_h_ = 0, last_w_ = 0;
};

PatchDiscriminator build_discriminator(std::span<const ConvLayerSpec> spec,
                                       Fusion fusion, int condition_channels,
                                       int target_channels, Rng& init_rng,
                                       int class_embedding = 0);

struct GeneratorConfig {
  Task task = Task::Label2Image;
  int size = 64;
  /// Classes for label conditions or label outputs.
  int n_classes = 4;
  int base_channels = 16;
  /// Down-sampling stages; 0 picks log2(size) - 2 (a 4x4 bottleneck).
  int levels = 0;
  /// Dropout on the innermost decoder stages (pix2pix-style noise).
  float dropout = 0.5f;
  int dropout_stages = 2;
  int class_embedding = 8;
  double init_std = 0.02;
  Normalization normalization = Normalization::Instance;

  int condition_channels() const;
  int output_channels() const;
  ActivationKind output_activation() const;
  int resolved_levels() const;
};

/**
 * Encoder-decoder with skip connections between mirrored stages. Each encoder
 * stage halves the plane with a 4x4 stride-2 convolution; decoder stages
 * double it back and concatenate the mirrored encoder activation.
 */
class UNetGenerator {
 public:
  UNetGenerator(GeneratorConfig config, Rng& init_rng);

  /// `ctx.rng` feeds dropout (train mode) and the noise plane of the
  /// single-label task.
  Tensor forward(const Tensor& condition, const ForwardContext& ctx);
  void backward(const Tensor& grad_out);

  std::vector<NamedParam> params();
  const GeneratorConfig& config() const { return config_; }

 private:
  Tensor prepare_input(const Tensor& condition, const ForwardContext& ctx);

  GeneratorConfig config_;
  Sequential embed_;
  std::vector<Sequential> encoder_;
  std::vector<Sequential> decoder_;  // decoder_[j] produces the plane of encoder stage j - 1
  Sequential head_;
  std::vector<int> enc_channels_;
};

/// Throws for sizes that are not powers of two >= 32.
UNetGenerator build_generator(Task task, int size, Rng& init_rng,
                              GeneratorConfig base = {});

/// FNV hash over every parameter value, in collection order.
std::uint64_t weights_hash(const std::vector<NamedParam>& params);

}  // namespace acgan
