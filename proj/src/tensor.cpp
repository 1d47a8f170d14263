#include "acgan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace acgan {

std::string Shape::str() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + "]";
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape), data_(shape.size(), fill) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0)
    throw std::invalid_argument("negative tensor extent " + shape.str());
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(shape), data_(values.begin(), values.end()) {
  if (data_.size() != shape_.size())
    throw std::invalid_argument("value count does not match shape " +
                                shape_.str());
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(Shape s) {
  if (s.size() != data_.size())
    throw std::invalid_argument("reshape " + shape_.str() + " -> " + s.str());
  shape_ = s;
}

Tensor stack(std::span<const Tensor> samples) {
  if (samples.empty()) throw std::invalid_argument("stack of nothing");
  Shape s = samples.front().shape();
  Shape out = s;
  out.n = 0;
  for (const auto& t : samples) {
    const Shape& ts = t.shape();
    if (ts.c != s.c || ts.h != s.h || ts.w != s.w)
      throw std::invalid_argument("stack: shape mismatch " + ts.str() +
                                  " vs " + s.str());
    out.n += ts.n;
  }
  Tensor result(out);
  float* dst = result.data();
  for (const auto& t : samples) {
    std::memcpy(dst, t.data(), t.size() * sizeof(float));
    dst += t.size();
  }
  return result;
}

Tensor take_sample(const Tensor& batch, int i) { return slice_batch(batch, i, 1); }

Tensor slice_batch(const Tensor& batch, int begin, int count) {
  const Shape& s = batch.shape();
  if (begin < 0 || count < 0 || begin + count > s.n)
    throw std::out_of_range("slice_batch out of range");
  Tensor out({count, s.c, s.h, s.w});
  std::memcpy(out.data(), batch.sample(begin),
              out.size() * sizeof(float));
  return out;
}

Tensor concat_batch(std::span<const Tensor> parts) { return stack(parts); }

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw std::invalid_argument("concat_channels: " + sa.str() + " vs " +
                                sb.str());
  Tensor out({sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t na = sa.sample_size(), nb = sb.sample_size();
  for (int n = 0; n < sa.n; ++n) {
    float* dst = out.sample(n);
    std::memcpy(dst, a.sample(n), na * sizeof(float));
    std::memcpy(dst + na, b.sample(n), nb * sizeof(float));
  }
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, int first_channels) {
  const Shape& s = t.shape();
  if (first_channels < 0 || first_channels > s.c)
    throw std::invalid_argument("split_channels out of range");
  Tensor a({s.n, first_channels, s.h, s.w});
  Tensor b({s.n, s.c - first_channels, s.h, s.w});
  const std::size_t na = a.shape().sample_size(), nb = b.shape().sample_size();
  for (int n = 0; n < s.n; ++n) {
    std::memcpy(a.sample(n), t.sample(n), na * sizeof(float));
    std::memcpy(b.sample(n), t.sample(n) + na, nb * sizeof(float));
  }
  return {std::move(a), std::move(b)};
}

Tensor broadcast_spatial(const Tensor& t, int h, int w) {
  const Shape& s = t.shape();
  if (s.h != 1 || s.w != 1)
    throw std::invalid_argument("broadcast_spatial expects [N,C,1,1], got " +
                                s.str());
  Tensor out({s.n, s.c, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      float v = t.at(n, c, 0, 0);
      float* dst = out.sample(n) + c * plane;
      std::fill(dst, dst + plane, v);
    }
  return out;
}

double mean_abs(std::span<const float> v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (float x : v) acc += std::fabs(x);
  return acc / static_cast<double>(v.size());
}

std::uint64_t content_hash(std::span<const float> v) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
  for (std::size_t i = 0; i < v.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace acgan
