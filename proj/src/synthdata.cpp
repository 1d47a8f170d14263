#include "acgan/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "acgan/image_io.hpp"

namespace acgan {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSceneStream = 0x5ce0e;
constexpr std::uint64_t kGlyphStream = 0x617f;

float uniform(Rng& rng, float a, float b) {
  return std::uniform_real_distribution<float>(a, b)(rng);
}

int uniform_int(Rng& rng, int a, int b) {
  return std::uniform_int_distribution<int>(a, b)(rng);
}

float clamp1(float v) { return std::clamp(v, -1.0f, 1.0f); }

}  // namespace

std::vector<Color> default_palette(int n_classes) {
  static const std::vector<Color> base = {
      {-0.6f, -0.6f, -0.6f}, {0.9f, -0.8f, -0.8f}, {-0.8f, 0.9f, -0.8f},
      {-0.8f, -0.8f, 0.9f},  {0.9f, 0.9f, -0.8f},  {0.9f, -0.8f, 0.9f},
      {-0.8f, 0.9f, 0.9f},   {0.9f, 0.9f, 0.9f},
  };
  if (n_classes < 1 || n_classes > static_cast<int>(base.size()))
    throw std::invalid_argument("default palette holds 8 colors; supply a palette");
  return {base.begin(), base.begin() + n_classes};
}

const std::vector<Color>& ShapesSceneSpec::colors() const {
  if (!palette.empty()) return palette;
  if (static_cast<int>(resolved_.size()) != n_classes) resolved_ = default_palette(n_classes);
  return resolved_;
}

void ShapesSceneSpec::validate() const {
  if (n_classes < 2) throw std::invalid_argument("shapes spec: n_classes must be >= 2");
  if (image_size < 8) throw std::invalid_argument("shapes spec: image_size too small");
  if (shapes_min < 1 || shapes_max < shapes_min)
    throw std::invalid_argument("shapes spec: bad shape count range");
  if (shape_extent_min < 2 || shape_extent_max < shape_extent_min)
    throw std::invalid_argument("shapes spec: bad shape extent range");
  if (jitter_amplitude < 0 || noise_std < 0)
    throw std::invalid_argument("shapes spec: negative jitter or noise");
  const auto& p = colors();
  if (static_cast<int>(p.size()) < n_classes)
    throw std::invalid_argument("shapes spec: palette smaller than n_classes");
  const double max_shift = jitter_amplitude * std::sqrt(3.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      double d2 = 0;
      for (int c = 0; c < 3; ++c) d2 += (p[i][c] - p[j][c]) * (p[i][c] - p[j][c]);
      if (std::sqrt(d2) <= 2.0 * max_shift)
        throw std::invalid_argument("shapes spec: palette colors closer than twice the jitter");
    }
}

json to_json(const ShapesSceneSpec& s) {
  json pal = json::array();
  for (const auto& c : s.colors()) pal.push_back({c[0], c[1], c[2]});
  return {{"image_size", s.image_size},
          {"n_classes", s.n_classes},
          {"shapes_min", s.shapes_min},
          {"shapes_max", s.shapes_max},
          {"shape_extent_min", s.shape_extent_min},
          {"shape_extent_max", s.shape_extent_max},
          {"palette", pal},
          {"jitter_amplitude", s.jitter_amplitude},
          {"noise_std", s.noise_std},
          {"seed", s.seed}};
}

ShapesSceneSpec shapes_spec_from_json(const json& j) {
  ShapesSceneSpec s;
  s.image_size = j.value("image_size", s.image_size);
  s.n_classes = j.value("n_classes", s.n_classes);
  s.shapes_min = j.value("shapes_min", s.shapes_min);
  s.shapes_max = j.value("shapes_max", s.shapes_max);
  s.shape_extent_min = j.value("shape_extent_min", s.shape_extent_min);
  s.shape_extent_max = j.value("shape_extent_max", s.shape_extent_max);
  if (j.contains("palette"))
    for (const auto& c : j["palette"]) s.palette.push_back({c[0], c[1], c[2]});
  s.jitter_amplitude = j.value("jitter_amplitude", s.jitter_amplitude);
  s.noise_std = j.value("noise_std", s.noise_std);
  s.seed = j.value("seed", s.seed);
  return s;
}

bool SceneShape::contains(float x, float y) const {
  const float dx = x - cx, dy = y - cy;
  switch (kind) {
    case ShapeKind::Rectangle:
      return std::abs(dx) <= rx && std::abs(dy) <= ry;
    case ShapeKind::Ellipse:
      return (dx * dx) / (rx * rx) + (dy * dy) / (ry * ry) <= 1.0f;
    case ShapeKind::Triangle: {
      float vx[3], vy[3];
      for (int i = 0; i < 3; ++i) {
        const float a = angle + static_cast<float>(i) * 2.0f * std::numbers::pi_v<float> / 3.0f;
        vx[i] = cx + rx * std::cos(a);
        vy[i] = cy + ry * std::sin(a);
      }
      bool neg = false, pos = false;
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const float cross = (vx[j] - vx[i]) * (y - vy[i]) - (vy[j] - vy[i]) * (x - vx[i]);
        neg |= cross < 0;
        pos |= cross > 0;
      }
      return !(neg && pos);
    }
  }
  return false;
}

namespace {

std::vector<SceneShape> draw_shapes(const ShapesSceneSpec& spec, std::size_t index,
                                    Rng& rng) {
  const int count = uniform_int(rng, spec.shapes_min, spec.shapes_max);
  const float size = static_cast<float>(spec.image_size);
  std::vector<SceneShape> shapes;
  for (int i = 0; i < count; ++i) {
    SceneShape s{};
    s.kind = static_cast<ShapeKind>(uniform_int(rng, 0, 2));
    const float extent = uniform(rng, static_cast<float>(spec.shape_extent_min),
                                 static_cast<float>(spec.shape_extent_max));
    s.rx = 0.5f * extent * uniform(rng, 0.7f, 1.0f);
    s.ry = 0.5f * extent * uniform(rng, 0.7f, 1.0f);
    s.cx = uniform(rng, 0.0f, size);
    s.cy = uniform(rng, 0.0f, size);
    s.angle = uniform(rng, 0.0f, 2.0f * std::numbers::pi_v<float>);
    s.label = uniform_int(rng, 1, spec.n_classes - 1);
    s.depth = uniform(rng, 0.2f, 0.8f);
    shapes.push_back(s);
  }
  // The topmost shape cycles through the classes so every class shows up.
  shapes.back().label = 1 + static_cast<int>(index % (spec.n_classes - 1));
  return shapes;
}

// Rasterize in draw order; later shapes cover earlier ones.
std::vector<int> paint(const std::vector<SceneShape>& shapes, int size,
                       std::vector<int>* owner = nullptr) {
  std::vector<int> labels(static_cast<std::size_t>(size) * size, 0);
  if (owner) owner->assign(labels.size(), -1);
  for (std::size_t k = 0; k < shapes.size(); ++k)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        if (shapes[k].contains(x + 0.5f, y + 0.5f)) {
          labels[static_cast<std::size_t>(y) * size + x] = shapes[k].label;
          if (owner) (*owner)[static_cast<std::size_t>(y) * size + x] = static_cast<int>(k);
        }
  return labels;
}

std::vector<Color> jittered_palette(const ShapesSceneSpec& spec, Rng& rng) {
  std::vector<Color> p = spec.colors();
  for (auto& c : p)
    for (auto& v : c) v += uniform(rng, -spec.jitter_amplitude, spec.jitter_amplitude);
  return p;
}

template <class ColorAt>
void render(Tensor& image, Tensor& clean, int size, ColorAt color_at, float noise_std,
            Rng& rng) {
  image = Tensor({1, 3, size, size});
  clean = Tensor({1, 3, size, size});
  std::normal_distribution<float> noise(0.0f, 1.0f);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const auto [noisy, plain] = color_at(c, y, x);
        clean.at(0, c, y, x) = clamp1(plain);
        image.at(0, c, y, x) = clamp1(noisy + noise_std * noise(rng));
      }
}

constexpr int kPlacementRetries = 20;

}  // namespace

ShapesScene render_label_scene(const ShapesSceneSpec& spec, std::size_t index) {
  spec.validate();
  Rng rng = derive_rng(spec.seed, kSceneStream + 2 * index);
  const int size = spec.image_size;
  ShapesScene scene;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kPlacementRetries)
      throw std::runtime_error("shapes: impossible placement after retries");
    scene.shapes = draw_shapes(spec, index, rng);
    scene.labels = paint(scene.shapes, size);
    if (std::find(scene.labels.begin(), scene.labels.end(), scene.shapes.back().label) !=
        scene.labels.end())
      break;
  }
  const auto jittered = jittered_palette(spec, rng);
  const auto& base = spec.colors();
  render(
      scene.image, scene.clean_image, size,
      [&](int c, int y, int x) {
        const int l = scene.labels[static_cast<std::size_t>(y) * size + x];
        return std::pair{jittered[l][c], base[l][c]};
      },
      spec.noise_std, rng);
  return scene;
}

ShapesScene render_depth_scene(const ShapesSceneSpec& spec, std::size_t index) {
  spec.validate();
  Rng rng = derive_rng(spec.seed, kSceneStream + 2 * index + 1);
  const int size = spec.image_size;
  ShapesScene scene;
  std::vector<int> owner;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kPlacementRetries)
      throw std::runtime_error("shapes: impossible placement after retries");
    scene.shapes = draw_shapes(spec, index, rng);
    // Painter's algorithm: far shapes first so nearer ones overwrite them.
    std::stable_sort(scene.shapes.begin(), scene.shapes.end(),
                     [](const SceneShape& a, const SceneShape& b) { return a.depth > b.depth; });
    scene.labels = paint(scene.shapes, size, &owner);
    if (std::any_of(owner.begin(), owner.end(), [](int o) { return o >= 0; })) break;
  }
  scene.depth.resize(owner.size());
  for (std::size_t i = 0; i < owner.size(); ++i)
    scene.depth[i] = owner[i] < 0 ? kBackgroundDepth : scene.shapes[owner[i]].depth;
  const auto jittered = jittered_palette(spec, rng);
  const auto& base = spec.colors();
  render(
      scene.image, scene.clean_image, size,
      [&](int c, int y, int x) {
        const std::size_t i = static_cast<std::size_t>(y) * size + x;
        const int l = scene.labels[i];
        const float brightness = 1.1f - scene.depth[i];
        auto shade = [&](float v) { return (v + 1.0f) * brightness - 1.0f; };
        return std::pair{shade(jittered[l][c]), shade(base[l][c])};
      },
      spec.noise_std, rng);
  return scene;
}

Tensor one_hot_map(std::span<const int> labels, int n_classes, int size) {
  if (labels.size() != static_cast<std::size_t>(size) * size)
    throw std::invalid_argument("one_hot_map: label count does not match size");
  Tensor t({1, n_classes, size, size});
  const std::size_t plane = labels.size();
  for (std::size_t i = 0; i < plane; ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes)
      throw std::invalid_argument("one_hot_map: class id out of range");
    t[static_cast<std::size_t>(labels[i]) * plane + i] = 1.0f;
  }
  return t;
}

std::vector<int> argmax_channels(const Tensor& t, int n) {
  const Shape& s = t.shape();
  const std::size_t plane = s.plane();
  std::vector<int> out(plane, 0);
  const float* base = t.sample(n);
  for (std::size_t i = 0; i < plane; ++i) {
    float best = base[i];
    for (int c = 1; c < s.c; ++c)
      if (base[c * plane + i] > best) {
        best = base[c * plane + i];
        out[i] = c;
      }
  }
  return out;
}

std::vector<int> segment_by_palette(const Tensor& images, int n,
                                    const std::vector<Color>& palette) {
  const Shape& s = images.shape();
  if (s.c != 3) throw std::invalid_argument("segment_by_palette: RGB input required");
  const std::size_t plane = s.plane();
  const float* base = images.sample(n);
  std::vector<int> out(plane, 0);
  for (std::size_t i = 0; i < plane; ++i) {
    float best = std::numeric_limits<float>::max();
    for (std::size_t k = 0; k < palette.size(); ++k) {
      float d = 0;
      for (int c = 0; c < 3; ++c) {
        const float e = base[c * plane + i] - palette[k][c];
        d += e * e;
      }
      if (d < best) {
        best = d;
        out[i] = static_cast<int>(k);
      }
    }
  }
  return out;
}

namespace {

void check_coverage(const PairedDataset& ds, const std::vector<std::vector<int>>& maps) {
  std::vector<bool> seen(ds.n_classes, false);
  for (const auto& m : maps)
    for (int l : m) seen[l] = true;
  if (maps.size() >= static_cast<std::size_t>(10 * ds.n_classes) &&
      std::find(seen.begin(), seen.end(), false) != seen.end())
    throw std::runtime_error("shapes: a class never appears; raise shapes_max or n_samples");
}

std::string sample_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
  return buf;
}

}  // namespace

PairedDataset gen_shapes_l2i(const ShapesSceneSpec& spec, std::size_t n_samples) {
  PairedDataset ds;
  ds.task = Task::Label2Image;
  ds.n_classes = spec.n_classes;
  std::vector<std::vector<int>> maps;
  for (std::size_t i = 0; i < n_samples; ++i) {
    ShapesScene scene = render_label_scene(spec, i);
    ds.samples.push_back({one_hot_map(scene.labels, spec.n_classes, spec.image_size),
                          std::move(scene.image), sample_name("s", i)});
    maps.push_back(std::move(scene.labels));
  }
  check_coverage(ds, maps);
  return ds;
}

PairedDataset gen_shapes_i2l(const ShapesSceneSpec& spec, std::size_t n_samples) {
  PairedDataset ds = gen_shapes_l2i(spec, n_samples);
  ds.task = Task::Image2Label;
  for (auto& s : ds.samples) std::swap(s.condition, s.target);
  return ds;
}

PairedDataset gen_shapes_depth(const ShapesSceneSpec& spec, std::size_t n_samples) {
  PairedDataset ds;
  ds.task = Task::Image2Depth;
  ds.n_classes = spec.n_classes;
  for (std::size_t i = 0; i < n_samples; ++i) {
    ShapesScene scene = render_depth_scene(spec, i);
    Tensor depth({1, 1, spec.image_size, spec.image_size}, scene.depth);
    ds.samples.push_back({std::move(scene.image), std::move(depth), sample_name("d", i)});
  }
  return ds;
}

namespace {

struct Stroke {
  enum Kind { Segment, Ring, Disc } kind;
  float x0, y0, x1, y1;  // segment ends, or center and radius in x1
};

const std::vector<std::vector<Stroke>>& glyph_table() {
  using S = Stroke;
  static const std::vector<std::vector<Stroke>> table = {
      {{S::Ring, 0, 0, 0.7f, 0}},
      {{S::Segment, 0, -0.8f, 0, 0.8f}},
      {{S::Segment, -0.8f, 0, 0.8f, 0}},
      {{S::Segment, 0, -0.8f, 0, 0.8f}, {S::Segment, -0.8f, 0, 0.8f, 0}},
      {{S::Segment, -0.7f, -0.7f, 0.7f, 0.7f}, {S::Segment, -0.7f, 0.7f, 0.7f, -0.7f}},
      {{S::Segment, 0, -0.8f, 0.75f, 0.6f},
       {S::Segment, 0.75f, 0.6f, -0.75f, 0.6f},
       {S::Segment, -0.75f, 0.6f, 0, -0.8f}},
      {{S::Segment, -0.65f, -0.65f, 0.65f, -0.65f},
       {S::Segment, 0.65f, -0.65f, 0.65f, 0.65f},
       {S::Segment, 0.65f, 0.65f, -0.65f, 0.65f},
       {S::Segment, -0.65f, 0.65f, -0.65f, -0.65f}},
      {{S::Disc, 0, 0, 0.45f, 0}},
      {{S::Segment, -0.5f, -0.8f, -0.5f, 0.7f}, {S::Segment, -0.5f, 0.7f, 0.6f, 0.7f}},
      {{S::Segment, -0.7f, -0.7f, 0.7f, -0.7f}, {S::Segment, 0, -0.7f, 0, 0.8f}},
  };
  return table;
}

constexpr float kStroke = 0.13f;

bool on_glyph(const std::vector<Stroke>& strokes, float u, float v) {
  for (const auto& s : strokes) {
    switch (s.kind) {
      case Stroke::Ring:
        if (std::abs(std::hypot(u - s.x0, v - s.y0) - s.x1) < kStroke) return true;
        break;
      case Stroke::Disc:
        if (std::hypot(u - s.x0, v - s.y0) < s.x1) return true;
        break;
      case Stroke::Segment: {
        const float dx = s.x1 - s.x0, dy = s.y1 - s.y0;
        const float t = std::clamp(((u - s.x0) * dx + (v - s.y0) * dy) / (dx * dx + dy * dy),
                                   0.0f, 1.0f);
        if (std::hypot(u - s.x0 - t * dx, v - s.y0 - t * dy) < kStroke) return true;
        break;
      }
    }
  }
  return false;
}

struct GlyphPose {
  float angle = 0, tx = 0, ty = 0, scale = 1;
  Color fg{0.8f, 0.8f, 0.8f};
  Color bg{-0.8f, -0.8f, -0.8f};
  float noise = 0;
};

Tensor draw_glyph(int label, int size, const GlyphPose& pose, Rng* rng) {
  const auto& strokes = glyph_table().at(label);
  Tensor t({1, 3, size, size});
  const float half = size / 2.0f;
  const float unit = size * 0.38f * pose.scale;
  const float ca = std::cos(pose.angle), sa = std::sin(pose.angle);
  std::normal_distribution<float> noise(0.0f, 1.0f);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const float px = (x + 0.5f - half - pose.tx) / unit;
      const float py = (y + 0.5f - half - pose.ty) / unit;
      const float u = ca * px + sa * py;
      const float v = -sa * px + ca * py;
      const bool ink = on_glyph(strokes, u, v);
      for (int c = 0; c < 3; ++c) {
        float val = ink ? pose.fg[c] : pose.bg[c];
        if (rng && pose.noise > 0) val += pose.noise * noise(*rng);
        t.at(0, c, y, x) = clamp1(val);
      }
    }
  return t;
}

}  // namespace

int max_glyph_classes() { return static_cast<int>(glyph_table().size()); }

Tensor glyph_prototype(int label, int n_classes, int image_size) {
  if (label < 0 || label >= n_classes || n_classes > max_glyph_classes())
    throw std::invalid_argument("glyph class out of range");
  return draw_glyph(label, image_size, {}, nullptr);
}

int class_of(const Tensor& one_hot) {
  const Shape& s = one_hot.shape();
  if (s.n != 1 || s.h != 1 || s.w != 1) throw std::invalid_argument("class_of: [1, C, 1, 1] expected");
  return static_cast<int>(std::max_element(one_hot.values().begin(), one_hot.values().end()) -
                          one_hot.values().begin());
}

PairedDataset gen_glyph_single_label(int n_classes, int image_size, std::size_t n_samples,
                                     std::uint64_t seed) {
  if (n_classes < 2 || n_classes > max_glyph_classes())
    throw std::invalid_argument("glyphs: n_classes must lie in [2, " +
                                std::to_string(max_glyph_classes()) + "]");
  if (image_size < 16) throw std::invalid_argument("glyphs: image_size must be >= 16");
  PairedDataset ds;
  ds.task = Task::SingleLabel2Image;
  ds.n_classes = n_classes;
  const float deg = std::numbers::pi_v<float> / 180.0f;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Rng rng = derive_rng(seed, kGlyphStream + i);
    const int label = static_cast<int>(i % n_classes);
    GlyphPose pose;
    pose.angle = uniform(rng, -15.0f, 15.0f) * deg;
    pose.tx = uniform(rng, -1.0f, 1.0f) * image_size / 16.0f;
    pose.ty = uniform(rng, -1.0f, 1.0f) * image_size / 16.0f;
    pose.scale = uniform(rng, 0.9f, 1.1f);
    for (auto& v : pose.fg) v += uniform(rng, -0.15f, 0.15f);
    pose.noise = 0.1f;
    Tensor cond({1, n_classes, 1, 1});
    cond[label] = 1.0f;
    ds.samples.push_back({std::move(cond), draw_glyph(label, image_size, pose, &rng),
                          sample_name("g", i)});
  }
  return ds;
}

std::vector<int> ProbeClassifier::predict(const Tensor& images) const {
  const int n = images.shape().n;
  std::vector<int> out;
  out.reserve(n);
  ForwardContext ctx{Mode::Inference, nullptr};
  constexpr int chunk = 64;
  for (int b = 0; b < n; b += chunk) {
    const Tensor logits = net_.forward(slice_batch(images, b, std::min(chunk, n - b)), ctx);
    for (int i = 0; i < logits.shape().n; ++i) {
      const float* l = logits.sample(i);
      out.push_back(static_cast<int>(std::max_element(l, l + logits.shape().c) - l));
    }
  }
  return out;
}

ProbeClassifier train_probe_classifier(const PairedDataset& dataset, std::uint64_t seed,
                                       int max_epochs) {
  if (dataset.task != Task::SingleLabel2Image || dataset.size() < 10)
    throw std::invalid_argument("probe classifier needs a single-label dataset of >= 10 samples");
  const int c = dataset.n_classes;
  const int size = dataset.samples[0].target.shape().h;
  if (size % 4 != 0) throw std::invalid_argument("probe classifier needs sizes divisible by 4");

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = derive_rng(seed, 0xc1a55);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_held = std::max<std::size_t>(1, order.size() / 5);
  const std::vector<std::size_t> held(order.begin(), order.begin() + n_held);
  std::vector<std::size_t> train(order.begin() + n_held, order.end());

  auto batch_of = [&](std::span<const std::size_t> idx, Tensor& x, std::vector<int>& y) {
    std::vector<Tensor> xs;
    y.clear();
    for (auto i : idx) {
      xs.push_back(dataset.samples[i].target);
      y.push_back(class_of(dataset.samples[i].condition));
    }
    x = stack(xs);
  };

  ProbeClassifier clf;
  clf.n_classes_ = c;
  auto he = [](int fan_in) { return InitSpec{std::sqrt(2.0 / fan_in)}; };
  clf.net_.emplace<Conv2d>(3, 16, 4, 2, 1, rng, he(3 * 16))
      .emplace<Activation>(ActivationKind::LeakyReLU)
      .emplace<Conv2d>(16, 32, 4, 2, 1, rng, he(16 * 16))
      .emplace<Activation>(ActivationKind::LeakyReLU)
      .emplace<Linear>(32 * (size / 4) * (size / 4), c, rng,
                       InitSpec{std::sqrt(1.0 / (32 * (size / 4) * (size / 4)))});
  std::vector<NamedParam> named;
  clf.net_.collect("clf", named);
  Adam opt(trainable(named), 1e-3, 0.9, 0.999);
  ForwardContext ctx{Mode::Train, &rng};
  constexpr int batch = 32;
  Tensor x;
  std::vector<int> y;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    std::size_t correct = 0;
    for (std::size_t b = 0; b < train.size(); b += batch) {
      const std::size_t m = std::min<std::size_t>(batch, train.size() - b);
      batch_of(std::span(train).subspan(b, m), x, y);
      opt.zero_grad();
      const Tensor logits = clf.net_.forward(x, ctx);
      Tensor grad(logits.shape());
      for (std::size_t i = 0; i < m; ++i) {
        const float* l = logits.sample(static_cast<int>(i));
        const float mx = *std::max_element(l, l + c);
        double z = 0;
        for (int k = 0; k < c; ++k) z += std::exp(l[k] - mx);
        int arg = 0;
        for (int k = 0; k < c; ++k) {
          const double p = std::exp(l[k] - mx) / z;
          grad.sample(static_cast<int>(i))[k] =
              static_cast<float>((p - (k == y[i] ? 1.0 : 0.0)) / m);
          if (l[k] > l[arg]) arg = k;
        }
        correct += arg == y[i];
      }
      clf.net_.backward(grad, true);
      opt.step();
    }
    if (static_cast<double>(correct) / train.size() >= 0.995) break;
  }

  batch_of(held, x, y);
  const auto pred = clf.predict(x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
  clf.heldout_accuracy_ = static_cast<double>(hit) / y.size();
  if (clf.heldout_accuracy_ < kProbeClassifierFloor)
    throw std::runtime_error("probe classifier held-out accuracy " +
                             std::to_string(clf.heldout_accuracy_) + " is below the floor");
  return clf;
}

DatasetSplit split_dataset(const PairedDataset& all, std::size_t n_train) {
  if (n_train > all.size()) throw std::invalid_argument("split_dataset: n_train > size");
  DatasetSplit s;
  s.train.task = s.val.task = all.task;
  s.train.n_classes = s.val.n_classes = all.n_classes;
  s.train.samples.assign(all.samples.begin(), all.samples.begin() + n_train);
  s.val.samples.assign(all.samples.begin() + n_train, all.samples.end());
  return s;
}

namespace {

std::uint8_t to_u8(float v) {
  return static_cast<std::uint8_t>(std::lround((std::clamp(v, -1.0f, 1.0f) + 1.0f) * 127.5f));
}

float from_u8(std::uint8_t v) { return v / 127.5f - 1.0f; }

void save_rgb(const std::filesystem::path& p, const Tensor& t) {
  const Shape& s = t.shape();
  Image8 img{s.w, s.h, 3, {}};
  img.pixels.resize(static_cast<std::size_t>(s.w) * s.h * 3);
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c)
        img.pixels[(static_cast<std::size_t>(y) * s.w + x) * 3 + c] = to_u8(t.at(0, c, y, x));
  write_png(p, img);
}

Tensor load_rgb(const std::filesystem::path& p) {
  const Image8 img = read_png(p);
  if (img.channels != 3) throw std::runtime_error("expected RGB png: " + p.string());
  Tensor t({1, 3, img.height, img.width});
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(0, c, y, x) = from_u8(img.pixels[(static_cast<std::size_t>(y) * img.width + x) * 3 + c]);
  return t;
}

void save_labels(const std::filesystem::path& p, const Tensor& one_hot) {
  const auto labels = argmax_channels(one_hot);
  const Shape& s = one_hot.shape();
  Image8 img{s.w, s.h, 1, {}};
  for (int l : labels) img.pixels.push_back(static_cast<std::uint8_t>(l));
  write_png(p, img);
}

Tensor load_labels(const std::filesystem::path& p, int n_classes) {
  const Image8 img = read_png(p);
  if (img.channels != 1 || img.width != img.height)
    throw std::runtime_error("expected square gray label png: " + p.string());
  std::vector<int> labels(img.pixels.begin(), img.pixels.end());
  return one_hot_map(labels, n_classes, img.width);
}

void save_depth(const std::filesystem::path& p, const Tensor& d) {
  const Shape& s = d.shape();
  Image16 img{s.w, s.h, {}};
  for (float v : d.values())
    img.pixels.push_back(static_cast<std::uint16_t>(
        std::clamp<long>(std::lround(v * kDepthPgmScale), 0, 65535)));
  write_pgm16(p, img);
}

Tensor load_depth(const std::filesystem::path& p) {
  const Image16 img = read_pgm16(p);
  Tensor t({1, 1, img.height, img.width});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    t[i] = static_cast<float>(img.pixels[i] / kDepthPgmScale);
  return t;
}

json save_sample(const std::filesystem::path& dir, Task task, const PairedSample& s) {
  const std::string id = s.sample_id;
  switch (task) {
    case Task::Label2Image:
      save_labels(dir / (id + "_label.png"), s.condition);
      save_rgb(dir / (id + "_image.png"), s.target);
      return {{"condition", id + "_label.png"}, {"target", id + "_image.png"}};
    case Task::Image2Label:
      save_rgb(dir / (id + "_image.png"), s.condition);
      save_labels(dir / (id + "_label.png"), s.target);
      return {{"condition", id + "_image.png"}, {"target", id + "_label.png"}};
    case Task::Image2Depth:
      save_rgb(dir / (id + "_image.png"), s.condition);
      save_depth(dir / (id + "_depth.pgm"), s.target);
      return {{"condition", id + "_image.png"}, {"target", id + "_depth.pgm"}};
    case Task::SingleLabel2Image:
      save_rgb(dir / (id + "_image.png"), s.target);
      return {{"condition", class_of(s.condition)}, {"target", id + "_image.png"}};
  }
  throw std::logic_error("unknown task");
}

PairedSample load_sample(const std::filesystem::path& dir, Task task, int n_classes,
                         const std::string& id, const json& entry) {
  PairedSample s;
  s.sample_id = id;
  const auto target = dir / entry.at("target").get<std::string>();
  switch (task) {
    case Task::Label2Image:
      s.condition = load_labels(dir / entry.at("condition").get<std::string>(), n_classes);
      s.target = load_rgb(target);
      break;
    case Task::Image2Label:
      s.condition = load_rgb(dir / entry.at("condition").get<std::string>());
      s.target = load_labels(target, n_classes);
      break;
    case Task::Image2Depth:
      s.condition = load_rgb(dir / entry.at("condition").get<std::string>());
      s.target = load_depth(target);
      break;
    case Task::SingleLabel2Image: {
      const int label = entry.at("condition").get<int>();
      if (label < 0 || label >= n_classes)
        throw std::runtime_error("dataset manifest: class out of range for " + id);
      s.condition = Tensor({1, n_classes, 1, 1});
      s.condition[label] = 1.0f;
      s.target = load_rgb(target);
      break;
    }
  }
  return s;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const DatasetSplit& data,
                  const json& spec) {
  std::filesystem::create_directories(dir);
  json m;
  m["schema_version"] = 1;
  m["task"] = to_string(data.train.task);
  m["n_classes"] = data.train.n_classes;
  m["spec"] = spec;
  m["seed"] = spec.value("seed", std::uint64_t{0});
  m["splits"] = {{"train", json::array()}, {"val", json::array()}};
  m["samples"] = json::object();
  for (auto [name, part] : {std::pair{"train", &data.train}, std::pair{"val", &data.val}})
    for (const auto& s : part->samples) {
      m["splits"][name].push_back(s.sample_id);
      m["samples"][s.sample_id] = save_sample(dir, part->task, s);
    }
  std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
}

DatasetSplit load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("no dataset manifest in " + dir.string());
  const json m = json::parse(in);
  if (m.at("schema_version").get<int>() != 1)
    throw std::runtime_error("unsupported dataset schema version");
  DatasetSplit out;
  const Task task = parse_task(m.at("task").get<std::string>());
  const int n_classes = m.at("n_classes");
  for (auto [name, part] : {std::pair{"train", &out.train}, std::pair{"val", &out.val}}) {
    part->task = task;
    part->n_classes = n_classes;
    for (const auto& id : m.at("splits").at(name))
      part->samples.push_back(
          load_sample(dir, task, n_classes, id.get<std::string>(), m.at("samples").at(id)));
    part->validate();
  }
  return out;
}

}  // namespace acgan
