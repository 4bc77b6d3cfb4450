#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedcy::engine {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct BindingError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense row-major array of doubles. Rank 0 is a scalar holding one value.
/// A zero extent is allowed so that empty batches stay representable.
class Array {
 public:
  Array() : data_(1, 0.0) {}
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> data);

  static Array scalar(double value);
  static Array vector(std::vector<double> values);
  static Array matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Array matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  /// Value of a single-element array.
  double item() const;
  std::span<const double> row(std::size_t r) const;
  bool all_finite() const noexcept;

  friend bool operator==(const Array&, const Array&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Rows `ids` of a matrix, in the given order.
Array take_rows(const Array& matrix, std::span<const std::size_t> ids);

/// Stack equal-length vectors into a matrix (one row each).
Array stack_rows(std::span<const Array> rows);

}  // namespace fedcy::engine
