#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <new>
#include <vector>

namespace acgan {

/// 64-byte aligned allocation. Vectorized reductions peel differently
/// depending on the start address, so aligned buffers keep results bitwise
/// reproducible from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), kAlignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

/// NCHW extents. Vectors and scalars use trailing ones.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t sample_size() const {
    return static_cast<std::size_t>(c) * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool spatial() const { return h > 1 || w > 1; }

  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/**
 * Dense float tensor in NCHW layout. Value semantics throughout; copies are
 * deep. Every tensor is four dimensional, a single sample has n == 1.
 */
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(int n, int c, int h, int w) {
    return data_[index(n, c, h, w)];
  }
  float at(int n, int c, int h, int w) const {
    return data_[index(n, c, h, w)];
  }

  /// Pointer to the first element of sample `n`.
  float* sample(int n) { return data_.data() + n * shape_.sample_size(); }
  const float* sample(int n) const {
    return data_.data() + n * shape_.sample_size();
  }

  void fill(float v);
  void reshape(Shape s);

  bool operator==(const Tensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) *
               shape_.w +
           w;
  }

  Shape shape_{0, 0, 0, 0};
  FloatBuffer data_;
};

/// Stack single-sample tensors (n == 1, identical C/H/W) along the batch axis.
Tensor stack(std::span<const Tensor> samples);
/// Copy sample `i` out of a batch as an n == 1 tensor.
Tensor take_sample(const Tensor& batch, int i);
/// Rows [begin, begin + count) of a batch.
Tensor slice_batch(const Tensor& batch, int begin, int count);
/// Concatenate along the batch axis.
Tensor concat_batch(std::span<const Tensor> parts);
/// Concatenate along channels; batch and spatial extents must agree.
Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Split channels at `first_channels`, returns the two halves.
std::pair<Tensor, Tensor> split_channels(const Tensor& t, int first_channels);
/// Broadcast a [N,C,1,1] tensor over an h x w plane.
Tensor broadcast_spatial(const Tensor& t, int h, int w);

/// Mean absolute value, 0 for empty tensors.
double mean_abs(std::span<const float> v);
/// FNV-1a over the raw bytes. Used to witness that frozen weights did not move.
std::uint64_t content_hash(std::span<const float> v);

}  // namespace acgan
