#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace limopt {

// Dense parameter/gradient vector. 64-bit floats throughout.
using ParamVector = std::vector<double>;

inline void check_same_length(const ParamVector& a, const ParamVector& b, const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(op) + ": length mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                ")");
  }
}

// Inner product, accumulated in index order.
inline double dot(const ParamVector& a, const ParamVector& b) {
  check_same_length(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Euclidean norm.
inline double norm2(const ParamVector& a) { return std::sqrt(dot(a, a)); }

// alpha*x + y as a new vector.
inline ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y) {
  check_same_length(x, y, "axpy");
  ParamVector out(y);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

inline bool all_finite(const ParamVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace limopt
