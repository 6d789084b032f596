#ifndef VARPG_LINALG_HPP
#define VARPG_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace varpg {

using Vec = std::vector<double>;

// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline void scale(Vec& x, double a) {
  for (double& v : x) v *= a;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace varpg

#endif  // VARPG_LINALG_HPP
