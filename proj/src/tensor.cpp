#include "onda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace onda {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_, double fill)
    : shape(std::move(shape_)), data(product(shape), fill) {
  require(!shape.empty(), "tensor shape must be nonempty");
  for (std::size_t d : shape) require(d > 0, "tensor dimensions must be positive");
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  require(rows.size() > 0 && rows.begin()->size() > 0, "from_rows needs at least one element");
  Tensor t = Tensor::matrix(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& row : rows) {
    require(row.size() == t.cols(), "ragged rows");
    std::size_t j = 0;
    for (double v : row) t.at(i, j++) = v;
    ++i;
  }
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::invalid_argument("rows(): tensor is not rank 2");
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::invalid_argument("cols(): tensor is not rank 2");
  return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }

double Tensor::at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: operands must be rank 2");
  require(a.cols() == b.rows(), "matmul: inner dimensions disagree");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a.at(i, p) * b.at(p, j);
      out.at(i, j) = acc;
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require(a.rank() == 2, "transpose: tensor must be rank 2");
  Tensor out = Tensor::matrix(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

std::vector<double> column_sums(const Tensor& a) {
  require(a.rank() == 2, "column_sums: tensor must be rank 2");
  std::vector<double> sums(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) sums[j] += a.at(i, j);
  return sums;
}

Tensor relu_forward(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  require(x.shape == grad_out.shape, "relu_backward: shape mismatch");
  Tensor grad_in = grad_out;
  for (std::size_t i = 0; i < x.data.size(); ++i)
    if (x.data[i] <= 0.0) grad_in.data[i] = 0.0;
  return grad_in;
}

CrossEntropyResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require(logits.rank() == 2, "softmax_cross_entropy: logits must be rank 2");
  const std::size_t b = logits.rows(), c = logits.cols();
  require(labels.size() == b, "softmax_cross_entropy: one label per row required");
  for (int y : labels)
    require(y >= 0 && static_cast<std::size_t>(y) < c, "softmax_cross_entropy: label out of range");

  CrossEntropyResult res;
  res.grad = Tensor::matrix(b, c);
  double total = 0.0;
  std::vector<double> p(c);
  for (std::size_t i = 0; i < b; ++i) {
    double mx = logits.at(i, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(logits.at(i, j) - mx);
      z += p[j];
    }
    const auto y = static_cast<std::size_t>(labels[i]);
    total += std::log(z) - (logits.at(i, y) - mx);
    for (std::size_t j = 0; j < c; ++j)
      res.grad.at(i, j) = (p[j] / z - (j == y ? 1.0 : 0.0)) / static_cast<double>(b);
  }
  res.loss = total / static_cast<double>(b);
  return res;
}

std::size_t argmax_row(const Tensor& t, std::size_t row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < t.cols(); ++j)
    if (t.at(row, j) > t.at(row, best)) best = j;
  return best;
}

}  // namespace onda
