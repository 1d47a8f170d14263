#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "acgan/pairing.hpp"
#include "acgan/tensor.hpp"

namespace acgan {

enum class Mode { Train, Inference };

/// A learnable tensor (or a buffer such as batch-norm running statistics).
struct Param {
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

struct NamedParam {
  std::string name;
  Param* param;
};

/// Per-call forward state. Dropout and noise draw from `rng` in train mode.
struct ForwardContext {
  Mode mode = Mode::Train;
  Rng* rng = nullptr;
};

/**
 * A differentiable layer. `forward` caches what `backward` needs, so a
 * backward call always refers to the most recent forward. `backward` returns
 * the input gradient and, when `param_grads` is set, accumulates into each
 * Param::grad.
 */
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, const ForwardContext& ctx) = 0;
  virtual Tensor backward(const Tensor& grad_out, bool param_grads) = 0;
  virtual void collect(const std::string& prefix, std::vector<NamedParam>& out) {
    (void)prefix;
    (void)out;
  }
  virtual std::unique_ptr<Layer> clone() const = 0;
};

/// Gaussian weight init with the given std, zero bias.
struct InitSpec {
  double std = 0.02;
};

class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int padding,
         Rng& rng, InitSpec init = {});
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool param_grads) override;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<Conv2d>(*this);
  }

  int out_size(int in) const { return (in + 2 * padding_ - kernel_) / stride_ + 1; }

 private:
  int in_, out_, kernel_, stride_, padding_;
  Param weight_;  // [out, in * k * k]
  Param bias_;
  Tensor input_;
};

/// Fractionally strided convolution, the adjoint of Conv2d's data path.
class ConvTranspose2d final : public Layer {
 public:
  ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride,
                  int padding, Rng& rng, InitSpec init = {});
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool param_grads) override;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<ConvTranspose2d>(*this);
  }

  int out_size(int in) const { return (in - 1) * stride_ - 2 * padding_ + kernel_; }

 private:
  int in_, out_, kernel_, stride_, padding_;
  Param weight_;  // [in, out * k * k]
  Param bias_;
  Tensor input_;
};

/// Fully connected over each sample's flattened C*H*W values -> [N, out, 1, 1].
class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features, Rng& rng, InitSpec init = {});
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool param_grads) override;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<Linear>(*this);
  }

 private:
  int in_, out_;
  Param weight_;  // [out, in]
  Param bias_;
  Tensor input_;
};

enum class ActivationKind { LeakyReLU, ReLU, Tanh, Sigmoid, Softmax, Identity };
std::string_view to_string(ActivationKind a);
ActivationKind parse_activation(std::string_view s);

/// Elementwise activations; Softmax normalizes over channels per pixel.
class Activation final : public Layer {
 public:
  explicit Activation(ActivationKind kind, float slope = 0.2f)
      : kind_(kind), slope_(slope) {}
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool param_grads) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<Activation>(*this);
  }

 private:
  ActivationKind kind_;
  float slope_;
  Tensor input_;
  Tensor output_;
};

/// Per-sample, per-channel normalization over the spatial plane (no affine).
class InstanceNorm2d final : public Layer {
 public:
  explicit InstanceNorm2d(float eps = 1e-5f) : eps_(eps) {}
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool param_grads) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<InstanceNorm2d>(*this);
  }

 private:
  float eps_;
  Tensor normalized_;
  std::vector<float> inv_std_;
};

/// Batch statistics in train mode, running statistics in inference mode.
class BatchNorm2d final : public Layer {
 public:
  BatchNorm2d(int channels, Rng& rng, float momentum = 0.1f, float eps = 1e-5f);
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool param_grads) override;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<BatchNorm2d>(*this);
  }

 private:
  int channels_;
  float momentum_, eps_;
  Param gamma_, beta_;
  Param running_mean_, running_var_;
  Tensor normalized_;
  std::vector<float> inv_std_;
  Mode last_mode_ = Mode::Train;
};

class Dropout final : public Layer {
 public:
  explicit Dropout(float p) : p_(p) {}
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool param_grads) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<Dropout>(*this);
  }

 private:
  float p_;
  std::vector<float> mask_;
};

/// [N, C, H, W] -> [N, C, 1, 1].
class GlobalAvgPool final : public Layer {
 public:
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool param_grads) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<GlobalAvgPool>(*this);
  }

 private:
  Shape in_shape_;
};

class Sequential final : public Layer {
 public:
  Sequential() = default;
  Sequential(const Sequential& o);
  Sequential& operator=(const Sequential& o);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  Sequential& add(std::unique_ptr<Layer> layer);
  template <class L, class... Args>
  Sequential& emplace(Args&&... args) {
    return add(std::make_unique<L>(std::forward<Args>(args)...));
  }

  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  Tensor backward(const Tensor& grad_out, bool param_grads) override;
  void collect(const std::string& prefix, std::vector<NamedParam>& out) override;
  std::unique_ptr<Layer> clone() const override {
    return std::make_unique<Sequential>(*this);
  }

  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Patches of a [C, H, W] image laid out as columns [C * k * k, out_h * out_w].
void im2col(const float* img, int channels, int h, int w, int kernel, int stride,
            int padding, int out_h, int out_w, float* col);
/// Adjoint of im2col: accumulates columns back into the image.
void col2im(const float* col, int channels, int h, int w, int kernel,
            int stride, int padding, int out_h, int out_w, float* img);

/// Adam with decoupled learning rate so schedules can set it per step.
class Adam {
 public:
  Adam(std::vector<Param*> params, double lr, double beta1, double beta2,
       double eps = 1e-8);
  void zero_grad();
  void step();
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<Param*> params_;
  std::vector<std::vector<float>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

std::vector<Param*> trainable(const std::vector<NamedParam>& named);
/// Mean absolute gradient over all trainable parameters.
double mean_abs_grad(const std::vector<NamedParam>& named);

}  // namespace acgan
