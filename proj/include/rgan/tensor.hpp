#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rgan {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
///
/// A scalar has the empty shape. Matrices are rank 2, vectors rank 1.
/// Entries handed to the public constructor must be finite; ops that could
/// overflow check their own results.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_scalar_like() const noexcept { return data_.size() == 1; }

  /// Rows/cols of a rank-2 tensor; throws DimensionError otherwise.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> mutable_data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_.back() + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_.back() + c]; }

  /// Value of a single-element tensor.
  double item() const;

  std::span<const double> row(std::size_t r) const;

  bool all_finite() const noexcept;
  bool is_zero() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  struct Unchecked {};
  Tensor(Unchecked, Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {}

  Shape shape_;
  std::vector<double> data_;
};

/// Stack `rows` row-vectors of a matrix selected by index.
Tensor gather_rows(const Tensor& source, std::span<const std::size_t> indices);

/// Element-wise a + scale * b.
Tensor axpy(const Tensor& a, double scale, const Tensor& b);

}  // namespace rgan
