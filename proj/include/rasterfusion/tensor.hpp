#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace rasterfusion {

/// Dense row-major f64 array of rank 1 to 5.
class Tensor {
 public:
  static constexpr std::size_t kMaxRank = 5;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Row-major flat offset of a full index. Bounds are checked.
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  double& at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
  double at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

  void fill(double v);
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace rasterfusion
