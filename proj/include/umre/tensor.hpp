#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace umre {

// Row-major dense matrix of doubles. Vectors are 1xN or Nx1 as convenient.
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Tensor2: negative shape");
  }

  static Tensor2 zeros(int r, int c) { return Tensor2(r, c); }

  static Tensor2 from_row(const std::vector<double>& v) {
    Tensor2 t(1, static_cast<int>(v.size()));
    t.data = v;
    return t;
  }

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  const double* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  double* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }
  bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  std::vector<double> row_vec(int r) const {
    return std::vector<double>(row_ptr(r), row_ptr(r) + cols);
  }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline bool all_finite(const Tensor2& t) {
  for (double v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void check_finite(const Tensor2& t, const char* what) {
  if (!all_finite(t)) throw std::runtime_error(std::string("non-finite values in ") + what);
}

// Trainable tensor with an accumulated gradient of the same shape.
struct Parameter {
  std::string name;
  Tensor2 value;
  Tensor2 grad;

  Parameter() = default;
  Parameter(std::string n, int r, int c) : name(std::move(n)), value(r, c), grad(r, c) {}

  void zero_grad() { grad.fill(0.0); }
};

using ParamRefs = std::vector<Parameter*>;

}  // namespace umre
