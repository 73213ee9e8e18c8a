#include "bcdrive/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "bcdrive/errors.hpp"

namespace bcdrive {

namespace {

std::size_t element_count(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw ShapeError("tensor must have rank >= 1");
  for (auto d : dims) {
    if (d == 0) throw ShapeError("tensor dimension must be positive: " + bcdrive::shape_string(dims));
  }
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)), data_(element_count(dims_), fill) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (element_count(dims_) != data_.size()) {
    throw ShapeError("shape " + bcdrive::shape_string(dims_) + " does not hold " +
                     std::to_string(data_.size()) + " values");
  }
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const { return bcdrive::shape_string(dims_); }

std::string shape_string(std::span<const std::size_t> dims) {
  std::string out = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(dims[i]);
  }
  return out + "]";
}

}  // namespace bcdrive
