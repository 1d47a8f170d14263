#include "acgan/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace acgan {

namespace {

using MatR = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<MatR>;
using CMapR = Eigen::Map<const MatR>;

Param gaussian_param(Shape s, Rng& rng, double std) {
  Param p;
  p.value = Tensor(s);
  p.grad = Tensor(s);
  std::normal_distribution<float> dist(0.0f, static_cast<float>(std));
  for (auto& v : p.value.values()) v = dist(rng);
  return p;
}

Param zero_param(Shape s) {
  Param p;
  p.value = Tensor(s);
  p.grad = Tensor(s);
  return p;
}

void require_channels(const Tensor& x, int channels, const char* who) {
  if (x.shape().c != channels)
    throw std::invalid_argument(std::string(who) + ": expected " +
                                std::to_string(channels) + " channels, got " +
                                x.shape().str());
}

}  // namespace

void im2col(const float* img, int channels, int h, int w, int kernel, int stride,
            int padding, int out_h, int out_w, float* col) {
  const int hw = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    const float* plane = img + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj) {
        float* row = col + (static_cast<std::size_t>(c * kernel + ki) * kernel + kj) * hw;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - padding + ki;
          float* dst = row + oy * out_w;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + out_w, 0.0f);
            continue;
          }
          const float* src = plane + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - padding + kj;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im(const float* col, int channels, int h, int w, int kernel,
            int stride, int padding, int out_h, int out_w, float* img) {
  const int hw = out_h * out_w;
  for (int c = 0; c < channels; ++c) {
    float* plane = img + static_cast<std::size_t>(c) * h * w;
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj) {
        const float* row =
            col + (static_cast<std::size_t>(c * kernel + ki) * kernel + kj) * hw;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * stride - padding + ki;
          if (iy < 0 || iy >= h) continue;
          float* dst = plane + static_cast<std::size_t>(iy) * w;
          const float* src = row + oy * out_w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * stride - padding + kj;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride,
               int padding, Rng& rng, InitSpec init)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride),
      padding_(padding) {
  if (kernel < 1 || stride < 1 || padding < 0 || in_channels < 1 ||
      out_channels < 1)
    throw std::invalid_argument("Conv2d: invalid geometry");
  weight_ = gaussian_param({out_, in_ * kernel_ * kernel_, 1, 1}, rng, init.std);
  bias_ = zero_param({out_, 1, 1, 1});
}

Tensor Conv2d::forward(const Tensor& x, const ForwardContext&) {
  require_channels(x, in_, "Conv2d");
  const Shape& s = x.shape();
  const int oh = out_size(s.h), ow = out_size(s.w);
  if (oh < 1 || ow < 1)
    throw std::invalid_argument("Conv2d: input " + s.str() +
                                " too small for kernel");
  input_ = x;
  const int k = in_ * kernel_ * kernel_, hw = oh * ow;
  Tensor out({s.n, out_, oh, ow});
  FloatBuffer col(static_cast<std::size_t>(k) * hw);
  CMapR w(weight_.value.data(), out_, k);
  Eigen::Map<const Eigen::VectorXf> b(bias_.value.data(), out_);
  for (int n = 0; n < s.n; ++n) {
    im2col(x.sample(n), in_, s.h, s.w, kernel_, stride_, padding_, oh, ow,
           col.data());
    MapR y(out.sample(n), out_, hw);
    y.noalias() = w * CMapR(col.data(), k, hw);
    y.colwise() += b;
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out, bool param_grads) {
  const Shape& s = input_.shape();
  const int oh = grad_out.shape().h, ow = grad_out.shape().w;
  const int k = in_ * kernel_ * kernel_, hw = oh * ow;
  Tensor dx(s);
  FloatBuffer col(static_cast<std::size_t>(k) * hw);
  CMapR w(weight_.value.data(), out_, k);
  MapR dw(weight_.grad.data(), out_, k);
  Eigen::Map<Eigen::VectorXf> db(bias_.grad.data(), out_);
  for (int n = 0; n < s.n; ++n) {
    CMapR g(grad_out.sample(n), out_, hw);
    if (param_grads) {
      im2col(input_.sample(n), in_, s.h, s.w, kernel_, stride_, padding_, oh,
             ow, col.data());
      dw.noalias() += g * CMapR(col.data(), k, hw).transpose();
      db += g.rowwise().sum();
    }
    MapR dcol(col.data(), k, hw);
    dcol.noalias() = w.transpose() * g;
    col2im(col.data(), in_, s.h, s.w, kernel_, stride_, padding_, oh, ow,
           dx.sample(n));
  }
  return dx;
}

void Conv2d::collect(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + "weight", &weight_});
  out.push_back({prefix + "bias", &bias_});
}

// ------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(int in_channels, int out_channels, int kernel,
                                 int stride, int padding, Rng& rng,
                                 InitSpec init)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride),
      padding_(padding) {
  if (kernel < 1 || stride < 1 || padding < 0 || in_channels < 1 ||
      out_channels < 1)
    throw std::invalid_argument("ConvTranspose2d: invalid geometry");
  weight_ = gaussian_param({in_, out_ * kernel_ * kernel_, 1, 1}, rng, init.std);
  bias_ = zero_param({out_, 1, 1, 1});
}

Tensor ConvTranspose2d::forward(const Tensor& x, const ForwardContext&) {
  require_channels(x, in_, "ConvTranspose2d");
  const Shape& s = x.shape();
  const int oh = out_size(s.h), ow = out_size(s.w);
  input_ = x;
  const int k = out_ * kernel_ * kernel_, hw_in = s.h * s.w;
  Tensor out({s.n, out_, oh, ow});
  FloatBuffer col(static_cast<std::size_t>(k) * hw_in);
  CMapR w(weight_.value.data(), in_, k);
  const std::size_t plane = static_cast<std::size_t>(oh) * ow;
  for (int n = 0; n < s.n; ++n) {
    MapR c(col.data(), k, hw_in);
    c.noalias() = w.transpose() * CMapR(x.sample(n), in_, hw_in);
    float* y = out.sample(n);
    for (int ch = 0; ch < out_; ++ch)
      std::fill(y + ch * plane, y + (ch + 1) * plane, bias_.value[ch]);
    col2im(col.data(), out_, oh, ow, kernel_, stride_, padding_, s.h, s.w, y);
  }
  return out;
}

Tensor ConvTranspose2d::backward(const Tensor& grad_out, bool param_grads) {
  const Shape& s = input_.shape();
  const Shape& gs = grad_out.shape();
  const int k = out_ * kernel_ * kernel_, hw_in = s.h * s.w;
  Tensor dx(s);
  FloatBuffer col(static_cast<std::size_t>(k) * hw_in);
  CMapR w(weight_.value.data(), in_, k);
  MapR dw(weight_.grad.data(), in_, k);
  const std::size_t plane = gs.plane();
  for (int n = 0; n < s.n; ++n) {
    const float* g = grad_out.sample(n);
    im2col(g, out_, gs.h, gs.w, kernel_, stride_, padding_, s.h, s.w,
           col.data());
    CMapR dcol(col.data(), k, hw_in);
    MapR(dx.sample(n), in_, hw_in).noalias() = w * dcol;
    if (param_grads) {
      dw.noalias() += CMapR(input_.sample(n), in_, hw_in) * dcol.transpose();
      for (int ch = 0; ch < out_; ++ch) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += g[ch * plane + i];
        bias_.grad[ch] += static_cast<float>(acc);
      }
    }
  }
  return dx;
}

void ConvTranspose2d::collect(const std::string& prefix,
                              std::vector<NamedParam>& out) {
  out.push_back({prefix + "weight", &weight_});
  out.push_back({prefix + "bias", &bias_});
}

// ---------------------------------------------------------------- Linear

Linear::Linear(int in_features, int out_features, Rng& rng, InitSpec init)
    : in_(in_features), out_(out_features) {
  weight_ = gaussian_param({out_, in_, 1, 1}, rng, init.std);
  bias_ = zero_param({out_, 1, 1, 1});
}

Tensor Linear::forward(const Tensor& x, const ForwardContext&) {
  if (static_cast<int>(x.shape().sample_size()) != in_)
    throw std::invalid_argument("Linear: expected " + std::to_string(in_) +
                                " features, got " + x.shape().str());
  input_ = x;
  const int n = x.shape().n;
  Tensor out({n, out_, 1, 1});
  CMapR xin(x.data(), n, in_);
  CMapR w(weight_.value.data(), out_, in_);
  MapR y(out.data(), n, out_);
  y.noalias() = xin * w.transpose();
  y.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias_.value.data(), out_);
  return out;
}

Tensor Linear::backward(const Tensor& grad_out, bool param_grads) {
  const int n = input_.shape().n;
  CMapR g(grad_out.data(), n, out_);
  CMapR w(weight_.value.data(), out_, in_);
  if (param_grads) {
    MapR(weight_.grad.data(), out_, in_).noalias() +=
        g.transpose() * CMapR(input_.data(), n, in_);
    Eigen::Map<Eigen::RowVectorXf>(bias_.grad.data(), out_) += g.colwise().sum();
  }
  Tensor dx(input_.shape());
  MapR(dx.data(), n, in_).noalias() = g * w;
  return dx;
}

void Linear::collect(const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + "weight", &weight_});
  out.push_back({prefix + "bias", &bias_});
}

// ------------------------------------------------------------ Activation

std::string_view to_string(ActivationKind a) {
  switch (a) {
    case ActivationKind::LeakyReLU: return "leaky_relu";
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Softmax: return "softmax";
    case ActivationKind::Identity: return "identity";
  }
  return "?";
}

ActivationKind parse_activation(std::string_view s) {
  for (auto a : {ActivationKind::LeakyReLU, ActivationKind::ReLU,
                 ActivationKind::Tanh, ActivationKind::Sigmoid,
                 ActivationKind::Softmax, ActivationKind::Identity})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

Tensor Activation::forward(const Tensor& x, const ForwardContext&) {
  Tensor y = x;
  auto v = y.values();
  switch (kind_) {
    case ActivationKind::LeakyReLU:
      for (auto& e : v) e = e > 0.0f ? e : slope_ * e;
      break;
    case ActivationKind::ReLU:
      for (auto& e : v) e = std::max(e, 0.0f);
      break;
    case ActivationKind::Tanh:
      for (auto& e : v) e = std::tanh(e);
      break;
    case ActivationKind::Sigmoid:
      for (auto& e : v) e = 1.0f / (1.0f + std::exp(-e));
      break;
    case ActivationKind::Softmax: {
      const Shape& s = x.shape();
      const std::size_t plane = s.plane();
      for (int n = 0; n < s.n; ++n) {
        float* base = y.sample(n);
        for (std::size_t p = 0; p < plane; ++p) {
          float mx = base[p];
          for (int c = 1; c < s.c; ++c) mx = std::max(mx, base[c * plane + p]);
          float total = 0.0f;
          for (int c = 0; c < s.c; ++c) {
            float& e = base[c * plane + p];
            e = std::exp(e - mx);
            total += e;
          }
          for (int c = 0; c < s.c; ++c) base[c * plane + p] /= total;
        }
      }
      break;
    }
    case ActivationKind::Identity: break;
  }
  input_ = x;
  output_ = y;
  return y;
}

Tensor Activation::backward(const Tensor& grad_out, bool) {
  Tensor dx = grad_out;
  auto d = dx.values();
  auto in = input_.values();
  auto out = output_.values();
  switch (kind_) {
    case ActivationKind::LeakyReLU:
      for (std::size_t i = 0; i < d.size(); ++i)
        if (in[i] <= 0.0f) d[i] *= slope_;
      break;
    case ActivationKind::ReLU:
      for (std::size_t i = 0; i < d.size(); ++i)
        if (in[i] <= 0.0f) d[i] = 0.0f;
      break;
    case ActivationKind::Tanh:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0f - out[i] * out[i];
      break;
    case ActivationKind::Sigmoid:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= out[i] * (1.0f - out[i]);
      break;
    case ActivationKind::Softmax: {
      const Shape& s = output_.shape();
      const std::size_t plane = s.plane();
      for (int n = 0; n < s.n; ++n) {
        const float* y = output_.sample(n);
        const float* g = grad_out.sample(n);
        float* o = dx.sample(n);
        for (std::size_t p = 0; p < plane; ++p) {
          float dot = 0.0f;
          for (int c = 0; c < s.c; ++c) dot += g[c * plane + p] * y[c * plane + p];
          for (int c = 0; c < s.c; ++c)
            o[c * plane + p] = y[c * plane + p] * (g[c * plane + p] - dot);
        }
      }
      break;
    }
    case ActivationKind::Identity: break;
  }
  return dx;
}

// -------------------------------------------------------- InstanceNorm2d

Tensor InstanceNorm2d::forward(const Tensor& x, const ForwardContext&) {
  const Shape& s = x.shape();
  const std::size_t plane = s.plane();
  normalized_ = Tensor(s);
  inv_std_.assign(static_cast<std::size_t>(s.n) * s.c, 0.0f);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const float* src = x.sample(n) + c * plane;
      float* dst = normalized_.sample(n) + c * plane;
      double mean = 0.0;
      for (std::size_t i = 0; i < plane; ++i) mean += src[i];
      mean /= static_cast<double>(plane);
      double var = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const double d = src[i] - mean;
        var += d * d;
      }
      var /= static_cast<double>(plane);
      const float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
      inv_std_[static_cast<std::size_t>(n) * s.c + c] = inv;
      for (std::size_t i = 0; i < plane; ++i)
        dst[i] = static_cast<float>(src[i] - mean) * inv;
    }
  return normalized_;
}

Tensor InstanceNorm2d::backward(const Tensor& grad_out, bool) {
  const Shape& s = normalized_.shape();
  const std::size_t plane = s.plane();
  Tensor dx(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const float* g = grad_out.sample(n) + c * plane;
      const float* xh = normalized_.sample(n) + c * plane;
      float* o = dx.sample(n) + c * plane;
      double mg = 0.0, mgx = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        mg += g[i];
        mgx += static_cast<double>(g[i]) * xh[i];
      }
      mg /= static_cast<double>(plane);
      mgx /= static_cast<double>(plane);
      const float inv = inv_std_[static_cast<std::size_t>(n) * s.c + c];
      for (std::size_t i = 0; i < plane; ++i)
        o[i] = inv * static_cast<float>(g[i] - mg - xh[i] * mgx);
    }
  return dx;
}

// ----------------------------------------------------------- BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, Rng& rng, float momentum, float eps)
    : channels_(channels), momentum_(momentum), eps_(eps) {
  gamma_ = gaussian_param({channels, 1, 1, 1}, rng, 0.02);
  for (auto& g : gamma_.value.values()) g += 1.0f;
  beta_ = zero_param({channels, 1, 1, 1});
  running_mean_ = zero_param({channels, 1, 1, 1});
  running_mean_.trainable = false;
  running_var_ = zero_param({channels, 1, 1, 1});
  running_var_.value.fill(1.0f);
  running_var_.trainable = false;
}

Tensor BatchNorm2d::forward(const Tensor& x, const ForwardContext& ctx) {
  require_channels(x, channels_, "BatchNorm2d");
  const Shape& s = x.shape();
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n) * plane;
  last_mode_ = ctx.mode;
  normalized_ = Tensor(s);
  inv_std_.assign(channels_, 0.0f);
  Tensor y(s);
  for (int c = 0; c < channels_; ++c) {
    double mean, var;
    if (ctx.mode == Mode::Train) {
      mean = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const float* src = x.sample(n) + c * plane;
        for (std::size_t i = 0; i < plane; ++i) mean += src[i];
      }
      mean /= count;
      var = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const float* src = x.sample(n) + c * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = src[i] - mean;
          var += d * d;
        }
      }
      var /= count;
      const double unbiased = count > 1 ? var * count / (count - 1) : var;
      running_mean_.value[c] = static_cast<float>(
          (1.0 - momentum_) * running_mean_.value[c] + momentum_ * mean);
      running_var_.value[c] = static_cast<float>(
          (1.0 - momentum_) * running_var_.value[c] + momentum_ * unbiased);
    } else {
      mean = running_mean_.value[c];
      var = running_var_.value[c];
    }
    const float inv = static_cast<float>(1.0 / std::sqrt(var + eps_));
    inv_std_[c] = inv;
    const float g = gamma_.value[c], b = beta_.value[c];
    for (int n = 0; n < s.n; ++n) {
      const float* src = x.sample(n) + c * plane;
      float* xh = normalized_.sample(n) + c * plane;
      float* dst = y.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = static_cast<float>(src[i] - mean) * inv;
        dst[i] = g * xh[i] + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out, bool param_grads) {
  const Shape& s = normalized_.shape();
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n) * plane;
  Tensor dx(s);
  for (int c = 0; c < channels_; ++c) {
    double sg = 0.0, sgx = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const float* g = grad_out.sample(n) + c * plane;
      const float* xh = normalized_.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sg += g[i];
        sgx += static_cast<double>(g[i]) * xh[i];
      }
    }
    if (param_grads) {
      gamma_.grad[c] += static_cast<float>(sgx);
      beta_.grad[c] += static_cast<float>(sg);
    }
    const float scale = gamma_.value[c] * inv_std_[c];
    const double mg = sg / count, mgx = sgx / count;
    for (int n = 0; n < s.n; ++n) {
      const float* g = grad_out.sample(n) + c * plane;
      const float* xh = normalized_.sample(n) + c * plane;
      float* o = dx.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i)
        o[i] = last_mode_ == Mode::Train
                   ? scale * static_cast<float>(g[i] - mg - xh[i] * mgx)
                   : scale * g[i];
    }
  }
  return dx;
}

void BatchNorm2d::collect(const std::string& prefix,
                          std::vector<NamedParam>& out) {
  out.push_back({prefix + "gamma", &gamma_});
  out.push_back({prefix + "beta", &beta_});
  out.push_back({prefix + "running_mean", &running_mean_});
  out.push_back({prefix + "running_var", &running_var_});
}

// --------------------------------------------------------------- Dropout

Tensor Dropout::forward(const Tensor& x, const ForwardContext& ctx) {
  if (ctx.mode != Mode::Train || p_ <= 0.0f) {
    mask_.clear();
    return x;
  }
  if (ctx.rng == nullptr)
    throw std::logic_error("Dropout in train mode needs a random source");
  std::bernoulli_distribution keep(1.0 - p_);
  const float scale = 1.0f / (1.0f - p_);
  mask_.resize(x.size());
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mask_[i] = keep(*ctx.rng) ? scale : 0.0f;
    y[i] *= mask_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out, bool) {
  if (mask_.empty()) return grad_out;
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_[i];
  return dx;
}

// --------------------------------------------------------- GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& x, const ForwardContext&) {
  in_shape_ = x.shape();
  const std::size_t plane = in_shape_.plane();
  Tensor y({in_shape_.n, in_shape_.c, 1, 1});
  for (int n = 0; n < in_shape_.n; ++n)
    for (int c = 0; c < in_shape_.c; ++c) {
      const float* src = x.sample(n) + c * plane;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += src[i];
      y.at(n, c, 0, 0) = static_cast<float>(acc / static_cast<double>(plane));
    }
  return y;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out, bool) {
  Tensor dx(in_shape_);
  const std::size_t plane = in_shape_.plane();
  const float inv = 1.0f / static_cast<float>(plane);
  for (int n = 0; n < in_shape_.n; ++n)
    for (int c = 0; c < in_shape_.c; ++c) {
      float* dst = dx.sample(n) + c * plane;
      std::fill(dst, dst + plane, grad_out.at(n, c, 0, 0) * inv);
    }
  return dx;
}

// ------------------------------------------------------------ Sequential

Sequential::Sequential(const Sequential& o) {
  layers_.reserve(o.layers_.size());
  for (const auto& l : o.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& o) {
  if (this != &o) {
    Sequential tmp(o);
    layers_ = std::move(tmp.layers_);
  }
  return *this;
}

Sequential& Sequential::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  return *this;
}

Tensor Sequential::forward(const Tensor& x, const ForwardContext& ctx) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h, ctx);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out, bool param_grads) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    g = (*it)->backward(g, param_grads);
  return g;
}

void Sequential::collect(const std::string& prefix,
                         std::vector<NamedParam>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->collect(prefix + std::to_string(i) + ".", out);
}

// ------------------------------------------------------------------ Adam

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  for (auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0f);
    v_.emplace_back(p->value.size(), 0.0f);
  }
}

void Adam::zero_grad() {
  for (auto* p : params_) p->grad.fill(0.0f);
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const float step = static_cast<float>(lr_ / bc1);
  const float inv_bc2 = static_cast<float>(1.0 / bc2);
  const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const float eps = static_cast<float>(eps_);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k]->value.values();
    auto g = params_[k]->grad.values();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      w[i] -= step * m[i] / (std::sqrt(v[i] * inv_bc2) + eps);
    }
  }
}

std::vector<Param*> trainable(const std::vector<NamedParam>& named) {
  std::vector<Param*> out;
  for (const auto& np : named)
    if (np.param->trainable) out.push_back(np.param);
  return out;
}

double mean_abs_grad(const std::vector<NamedParam>& named) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& np : named) {
    if (!np.param->trainable) continue;
    for (float g : np.param->grad.values()) acc += std::fabs(g);
    count += np.param->grad.size();
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

}  // namespace acgan
