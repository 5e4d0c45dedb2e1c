#ifndef SEFUN_TENSOR_HPP
#define SEFUN_TENSOR_HPP

#include <cstddef>
#include <vector>

namespace sefun {

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything we need.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    data.assign(n, 0.0);
  }

  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape[0]; }
  std::size_t cols() const { return shape[1]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
  double* row_ptr(std::size_t r) { return data.data() + r * shape[1]; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * shape[1]; }

  void fill(double v) { data.assign(data.size(), v); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool operator==(const Tensor& o) const = default;
};

}  // namespace sefun

#endif  // SEFUN_TENSOR_HPP
