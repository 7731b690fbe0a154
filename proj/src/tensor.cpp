#include "tcnseg/tensor.hpp"

#include <cmath>
#include <sstream>

#include "tcnseg/error.hpp"

namespace tcnseg {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                         shape_string(b));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  data_.assign(shape_product(shape_), 0.0);
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<double> values) {
  if (shape_product(shape) != values.size()) {
    throw DimensionError("from_values: " + std::to_string(values.size()) +
                         " values do not fill the requested shape");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

void Tensor::fill(double value) {
  for (double& x : data_) x = value;
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string shape_string(const Tensor& t) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i) out << " x ";
    out << t.extent(i);
  }
  out << "]";
  return out.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(a) + " and " +
                         shape_string(b));
  }
  const std::size_t rows = a.extent(0);
  const std::size_t inner = a.extent(1);
  const std::size_t cols = b.extent(1);
  Tensor out({rows, cols});
  // Each output row is an independent serial accumulation, so the result is
  // bit-identical for any thread count.
#pragma omp parallel for schedule(static) if (rows * cols * inner > 16384)
  for (long long ir = 0; ir < static_cast<long long>(rows); ++ir) {
    const std::size_t i = static_cast<std::size_t>(ir);
    double* out_row = out.row(i);
    const double* a_row = a.row(i);
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = a_row[k];
      const double* b_row = b.row(k);
      for (std::size_t j = 0; j < cols; ++j) {
        out_row[j] += aik * b_row[j];
      }
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) {
    throw DimensionError("transpose: expected rank 2, got " + shape_string(a));
  }
  Tensor out({a.extent(1), a.extent(0)});
  for (std::size_t i = 0; i < a.extent(0); ++i) {
    for (std::size_t j = 0; j < a.extent(1); ++j) {
      out(j, i) = a(i, j);
    }
  }
  return out;
}

double logsumexp(const double* v, std::size_t k) {
  if (k == 0) {
    throw DomainError("logsumexp: empty input");
  }
  double max = v[0];
  for (std::size_t i = 1; i < k; ++i) {
    if (v[i] > max) max = v[i];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    total += std::exp(v[i] - max);
  }
  return max + std::log(total);
}

double logsumexp(const Tensor& v) { return logsumexp(v.data(), v.size()); }

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * factor;
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::exp(a[i]);
  return out;
}

Tensor log(const Tensor& a) {
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::log(a[i]);
  return out;
}

}  // namespace tcnseg
