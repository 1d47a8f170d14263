#include "acgan/nets.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace acgan {

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::None: return "none";
    case Normalization::Batch: return "batch";
    case Normalization::Instance: return "instance";
  }
  return "?";
}

Normalization parse_normalization(std::string_view s) {
  for (auto n : {Normalization::None, Normalization::Batch, Normalization::Instance})
    if (to_string(n) == s) return n;
  throw std::invalid_argument("unknown normalization '" + std::string(s) + "'");
}

std::vector<ConvLayerSpec> patchgan70_spec(int base) {
  using A = ActivationKind;
  using N = Normalization;
  return {
      {4, 2, base, N::None, A::LeakyReLU},
      {4, 2, base * 2, N::Instance, A::LeakyReLU},
      {4, 2, base * 4, N::Instance, A::LeakyReLU},
      {4, 1, base * 8, N::Instance, A::LeakyReLU},
      {4, 1, 1, N::None, A::Identity},
  };
}

int receptive_field(std::span<const ConvLayerSpec> spec) {
  if (spec.empty()) throw std::invalid_argument("receptive_field: empty spec");
  int r = 1, jump = 1;
  for (const auto& l : spec) {
    r += (l.kernel - 1) * jump;
    jump *= l.stride;
  }
  return r;
}

int output_extent(std::span<const ConvLayerSpec> spec, int input) {
  int e = input;
  for (const auto& l : spec) {
    const int padded = e + 2 * l.effective_padding();
    if (padded < l.kernel) return 0;
    e = (padded - l.kernel) / l.stride + 1;
  }
  return e;
}

namespace {

std::unique_ptr<Layer> make_norm(Normalization n, int channels, Rng& rng) {
  switch (n) {
    case Normalization::None: return nullptr;
    case Normalization::Batch: return std::make_unique<BatchNorm2d>(channels, rng);
    case Normalization::Instance: return std::make_unique<InstanceNorm2d>();
  }
  return nullptr;
}

void add_norm(Sequential& s, Normalization n, int channels, Rng& rng) {
  if (auto l = make_norm(n, channels, rng)) s.add(std::move(l));
}

void validate_layer(const ConvLayerSpec& l) {
  if (l.kernel < 1 || l.stride < 1 || l.channels_out < 1)
    throw std::invalid_argument("conv layer spec needs kernel >= 1, stride >= 1");
}

// Sum a [N, C, H, W] gradient over its plane -> [N, C, 1, 1].
Tensor sum_plane(const Tensor& g) {
  const Shape& s = g.shape();
  Tensor out({s.n, s.c, 1, 1});
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const float* src = g.sample(n) + c * plane;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += src[i];
      out.at(n, c, 0, 0) = static_cast<float>(acc);
    }
  return out;
}

}  // namespace

// ---------------------------------------------------- PatchDiscriminator

PatchDiscriminator::PatchDiscriminator(DiscriminatorConfig config, Rng& rng)
    : config_(std::move(config)) {
  if (config_.layers.empty())
    throw std::invalid_argument("discriminator spec is empty");
  for (const auto& l : config_.layers) validate_layer(l);
  const auto& last = config_.layers.back();
  if (last.channels_out != 1 || last.activation != ActivationKind::Identity)
    throw std::invalid_argument(
        "discriminator spec must end with a 1-channel identity (raw score) layer");
  InitSpec init{config_.init_std};
  int in = config_.target_channels + (config_.class_embedding > 0
                                          ? config_.class_embedding
                                          : config_.condition_channels);
  if (config_.class_embedding > 0)
    embed_.emplace<Linear>(config_.condition_channels, config_.class_embedding,
                           rng, init);
  for (const auto& l : config_.layers) {
    body_.emplace<Conv2d>(in, l.channels_out, l.kernel, l.stride,
                          l.effective_padding(), rng, init);
    add_norm(body_, l.normalization, l.channels_out, rng);
    if (l.activation != ActivationKind::Identity)
      body_.emplace<Activation>(l.activation);
    in = l.channels_out;
  }
}

Tensor PatchDiscriminator::fuse(const Tensor& condition, const Tensor& target,
                                Mode mode) {
  const Shape& cs = condition.shape();
  const Shape& ts = target.shape();
  if (cs.n != ts.n)
    throw std::invalid_argument("discriminator: batch mismatch " + cs.str() +
                                " vs " + ts.str());
  if (ts.c != config_.target_channels)
    throw std::invalid_argument("discriminator: target channels " + ts.str());
  if (cs.c != config_.condition_channels)
    throw std::invalid_argument("discriminator: condition channels " + cs.str());
  last_condition_ = cs;
  last_h_ = ts.h;
  last_w_ = ts.w;
  if (cs.spatial()) {
    if (cs.h != ts.h || cs.w != ts.w)
      throw std::invalid_argument("discriminator: condition plane " + cs.str() +
                                  " does not match target plane " + ts.str());
    return concat_channels(condition, target);
  }
  ForwardContext ctx{mode, nullptr};
  Tensor c = config_.class_embedding > 0 ? embed_.forward(condition, ctx) : condition;
  return concat_channels(broadcast_spatial(c, ts.h, ts.w), target);
}

FieldResponse PatchDiscriminator::forward(const Tensor& condition,
                                          const Tensor& target, Mode mode) {
  Tensor fused = fuse(condition, target, mode);
  ForwardContext ctx{mode, nullptr};
  FieldResponse r;
  r.raw = body_.forward(fused, ctx);
  r.prob = r.raw;
  for (auto& v : r.prob.values()) v = 1.0f / (1.0f + std::exp(-v));
  return r;
}

Tensor PatchDiscriminator::backward(const Tensor& grad_raw, bool param_grads) {
  Tensor g = body_.backward(grad_raw, param_grads);
  const int cond_channels = config_.class_embedding > 0
                                ? config_.class_embedding
                                : config_.condition_channels;
  auto [g_cond, g_target] = split_channels(g, cond_channels);
  if (param_grads && config_.class_embedding > 0 && !last_condition_.spatial())
    embed_.backward(sum_plane(g_cond), true);
  return std::move(g_target);
}

std::vector<NamedParam> PatchDiscriminator::params() {
  std::vector<NamedParam> out;
  embed_.collect("embed.", out);
  body_.collect("body.", out);
  return out;
}

PatchDiscriminator build_discriminator(std::span<const ConvLayerSpec> spec,
                                       Fusion fusion, int condition_channels,
                                       int target_channels, Rng& init_rng,
                                       int class_embedding) {
  DiscriminatorConfig c;
  c.layers.assign(spec.begin(), spec.end());
  c.fusion = fusion;
  c.condition_channels = condition_channels;
  c.target_channels = target_channels;
  c.class_embedding = class_embedding;
  return PatchDiscriminator(std::move(c), init_rng);
}

// --------------------------------------------------------- UNetGenerator

int GeneratorConfig::condition_channels() const {
  switch (task) {
    case Task::Label2Image: return n_classes;
    case Task::Image2Depth:
    case Task::Image2Label: return 3;
    case Task::SingleLabel2Image: return n_classes;
  }
  return 0;
}

int GeneratorConfig::output_channels() const {
  switch (task) {
    case Task::Label2Image:
    case Task::SingleLabel2Image: return 3;
    case Task::Image2Depth: return 1;
    case Task::Image2Label: return n_classes;
  }
  return 0;
}

ActivationKind GeneratorConfig::output_activation() const {
  switch (task) {
    case Task::Label2Image:
    case Task::SingleLabel2Image: return ActivationKind::Tanh;
    case Task::Image2Depth: return ActivationKind::ReLU;
    case Task::Image2Label: return ActivationKind::Softmax;
  }
  return ActivationKind::Identity;
}

int GeneratorConfig::resolved_levels() const {
  if (levels > 0) return levels;
  return std::countr_zero(static_cast<unsigned>(size)) - 2;
}

UNetGenerator::UNetGenerator(GeneratorConfig config, Rng& rng)
    : config_(std::move(config)) {
  const int size = config_.size;
  if (size < 32 || !std::has_single_bit(static_cast<unsigned>(size)))
    throw std::invalid_argument("generator size must be a power of two >= 32, got " +
                                std::to_string(size));
  const int levels = config_.resolved_levels();
  if (levels < 2 || (size >> levels) < 1)
    throw std::invalid_argument("generator needs 2..log2(size) levels");
  if ((config_.task == Task::Label2Image || config_.task == Task::Image2Label ||
       config_.task == Task::SingleLabel2Image) &&
      config_.n_classes < 2)
    throw std::invalid_argument("generator needs n_classes >= 2");

  InitSpec init{config_.init_std};
  int in = config_.condition_channels();
  if (config_.task == Task::SingleLabel2Image) {
    embed_.emplace<Linear>(config_.n_classes, config_.class_embedding, rng, init);
    in = config_.class_embedding + 1;
  }
  const int base = config_.base_channels;
  for (int i = 0; i < levels; ++i)
    enc_channels_.push_back(base * std::min(1 << i, 8));

  for (int i = 0; i < levels; ++i) {
    Sequential s;
    s.emplace<Conv2d>(in, enc_channels_[i], 4, 2, 1, rng, init);
    if (i > 0 && i < levels - 1) add_norm(s, config_.normalization, enc_channels_[i], rng);
    s.emplace<Activation>(ActivationKind::LeakyReLU, 0.2f);
    encoder_.push_back(std::move(s));
    in = enc_channels_[i];
  }
  decoder_.resize(levels);
  for (int j = levels - 1; j >= 1; --j) {
    const int dec_in = j == levels - 1 ? enc_channels_[j] : 2 * enc_channels_[j];
    Sequential s;
    s.emplace<ConvTranspose2d>(dec_in, enc_channels_[j - 1], 4, 2, 1, rng, init);
    add_norm(s, config_.normalization, enc_channels_[j - 1], rng);
    s.emplace<Activation>(ActivationKind::ReLU);
    if (j >= levels - config_.dropout_stages && config_.dropout > 0.0f)
      s.emplace<Dropout>(config_.dropout);
    decoder_[j] = std::move(s);
  }
  head_.emplace<ConvTranspose2d>(2 * enc_channels_[0], config_.output_channels(),
                                 4, 2, 1, rng, init);
  head_.emplace<Activation>(config_.output_activation());
}

Tensor UNetGenerator::prepare_input(const Tensor& condition,
                                    const ForwardContext& ctx) {
  const Shape& s = condition.shape();
  if (s.c != config_.condition_channels())
    throw std::invalid_argument("generator: condition channels " + s.str());
  if (config_.task != Task::SingleLabel2Image) {
    if (s.h != config_.size || s.w != config_.size)
      throw std::invalid_argument("generator: condition plane " + s.str() +
                                  " != size " + std::to_string(config_.size));
    return condition;
  }
  if (s.spatial())
    throw std::invalid_argument("single-label generator expects [N, C, 1, 1]");
  Tensor e = broadcast_spatial(embed_.forward(condition, ctx), config_.size,
                               config_.size);
  Tensor noise({s.n, 1, config_.size, config_.size});
  if (ctx.rng != nullptr) {
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : noise.values()) v = dist(*ctx.rng);
  }
  return concat_channels(e, noise);
}

Tensor UNetGenerator::forward(const Tensor& condition, const ForwardContext& ctx) {
  Tensor h = prepare_input(condition, ctx);
  const int levels = static_cast<int>(encoder_.size());
  std::vector<Tensor> skips(levels);
  for (int i = 0; i < levels; ++i) {
    h = encoder_[i].forward(h, ctx);
    skips[i] = h;
  }
  Tensor d = decoder_[levels - 1].forward(skips[levels - 1], ctx);
  for (int j = levels - 2; j >= 1; --j)
    d = decoder_[j].forward(concat_channels(d, skips[j]), ctx);
  return head_.forward(concat_channels(d, skips[0]), ctx);
}

void UNetGenerator::backward(const Tensor& grad_out) {
  const int levels = static_cast<int>(encoder_.size());
  std::vector<Tensor> skip_grads(levels);
  Tensor g = head_.backward(grad_out, true);
  auto [gd, ge0] = split_channels(g, enc_channels_[0]);
  skip_grads[0] = std::move(ge0);
  Tensor current = std::move(gd);
  Tensor bottleneck;
  for (int j = 1; j < levels; ++j) {
    Tensor gin = decoder_[j].backward(current, true);
    if (j == levels - 1) {
      bottleneck = std::move(gin);
    } else {
      auto [gnext, gskip] = split_channels(gin, enc_channels_[j]);
      skip_grads[j] = std::move(gskip);
      current = std::move(gnext);
    }
  }
  Tensor ge = std::move(bottleneck);
  for (int i = levels - 1; i >= 0; --i) {
    Tensor gin = encoder_[i].backward(ge, true);
    if (i > 0) {
      const auto& sk = skip_grads[i - 1];
      for (std::size_t k = 0; k < gin.size(); ++k) gin[k] += sk[k];
    }
    ge = std::move(gin);
  }
  if (config_.task == Task::SingleLabel2Image) {
    auto [g_embed, g_noise] = split_channels(ge, config_.class_embedding);
    embed_.backward(sum_plane(g_embed), true);
  }
}

std::vector<NamedParam> UNetGenerator::params() {
  std::vector<NamedParam> out;
  embed_.collect("embed.", out);
  for (std::size_t i = 0; i < encoder_.size(); ++i)
    encoder_[i].collect("enc" + std::to_string(i) + ".", out);
  for (std::size_t j = 1; j < decoder_.size(); ++j)
    decoder_[j].collect("dec" + std::to_string(j) + ".", out);
  head_.collect("head.", out);
  return out;
}

UNetGenerator build_generator(Task task, int size, Rng& init_rng,
                              GeneratorConfig base) {
  base.task = task;
  base.size = size;
  return UNetGenerator(std::move(base), init_rng);
}

std::uint64_t weights_hash(const std::vector<NamedParam>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& np : params) {
    h ^= content_hash(np.param->value.values());
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace acgan
