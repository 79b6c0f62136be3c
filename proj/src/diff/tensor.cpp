#include "zdc/diff/tensor.hpp"

#include <bit>
#include <cstdint>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "zdc/errors.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace zdc::diff {

namespace {

#ifdef __GLIBC__
// Training allocates and frees multi-megabyte activations every step. Keeping
// them on the heap instead of returning them to the OS avoids repeated page
// faults on every batch.
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
  return true;
}();
#endif

}  // namespace

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw ContractError("tensor dimensions must be positive, got " + to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != element_count(shape_)) {
    throw ContractError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                        to_string(shape_));
  }
}

std::int64_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) throw ContractError("axis out of range for shape " + to_string(shape_));
  return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size()) {
    throw ContractError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(float value) noexcept { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  // exponent bits all set means inf or NaN; an integer OR-reduction vectorizes
  std::uint32_t bad = 0;
  for (float v : data_) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    bad |= static_cast<std::uint32_t>((bits & 0x7f800000u) == 0x7f800000u);
  }
  return bad == 0;
}

double Tensor::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

}  // namespace zdc::diff
