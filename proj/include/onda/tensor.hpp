#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace onda {

// Dense row-major array of 64-bit floats with an explicit shape.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_, double fill = 0.0);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  bool all_finite() const;
  bool operator==(const Tensor&) const = default;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
std::vector<double> column_sums(const Tensor& a);

Tensor relu_forward(const Tensor& x);
// Masks grad_out where the forward input was <= 0.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

struct CrossEntropyResult {
  double loss = 0.0;
  Tensor grad;  // d(loss)/d(logits), already divided by the batch size
};

// Mean negative log-softmax of the true class, stabilized by max subtraction.
CrossEntropyResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Ties resolve to the lowest column index.
std::size_t argmax_row(const Tensor& t, std::size_t row);

}  // namespace onda
