#include "fedcy/engine/array.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace fedcy::engine {

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Array::Array(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Array::Array(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("array data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

Array Array::scalar(double value) { return Array(Shape{}, std::vector<double>{value}); }

Array Array::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Array(Shape{n}, std::move(values));
}

Array Array::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Array(Shape{rows, cols}, std::move(values));
}

Array Array::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Array(Shape{r, c}, std::move(data));
}

std::size_t Array::rows() const {
  if (rank() != 2) throw ShapeError("rows() on array of shape " + shape_string(shape_));
  return shape_[0];
}

std::size_t Array::cols() const {
  if (rank() != 2) throw ShapeError("cols() on array of shape " + shape_string(shape_));
  return shape_[1];
}

double Array::item() const {
  if (data_.size() != 1) throw ShapeError("item() on array of shape " + shape_string(shape_));
  return data_[0];
}

std::span<const double> Array::row(std::size_t r) const {
  const std::size_t c = cols();
  if (r >= shape_[0]) throw std::out_of_range("row index out of range");
  return std::span<const double>(data_).subspan(r * c, c);
}

bool Array::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Array take_rows(const Array& matrix, std::span<const std::size_t> ids) {
  const std::size_t c = matrix.cols();
  std::vector<double> out;
  out.reserve(ids.size() * c);
  for (std::size_t id : ids) {
    auto r = matrix.row(id);
    out.insert(out.end(), r.begin(), r.end());
  }
  return Array::matrix(ids.size(), c, std::move(out));
}

Array stack_rows(std::span<const Array> rows) {
  if (rows.empty()) throw ShapeError("stack_rows of zero rows");
  const std::size_t c = rows.front().size();
  std::vector<double> out;
  out.reserve(rows.size() * c);
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.size() != c) throw ShapeError("stack_rows expects equal-length vectors");
    out.insert(out.end(), r.data().begin(), r.data().end());
  }
  return Array::matrix(rows.size(), c, std::move(out));
}

}  // namespace fedcy::engine
