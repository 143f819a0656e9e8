// Nodal coefficient vector over one mesh level's P1 basis.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dch {

struct NodalField {
  int level = 0;
  std::vector<double> v;

  NodalField() = default;
  NodalField(int level_index, std::vector<double> values)
      : level(level_index), v(std::move(values)) {}

  static NodalField zeros(int level_index, std::size_t n) {
    return {level_index, std::vector<double>(n, 0.0)};
  }

  std::size_t size() const { return v.size(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

inline void check_same_shape(const NodalField& a, const NodalField& b, const char* where) {
  if (a.level != b.level || a.size() != b.size())
    throw std::invalid_argument(std::string(where) + ": field level/size mismatch");
}

// y += alpha * x
inline void axpy(NodalField& y, double alpha, const NodalField& x) {
  check_same_shape(y, x, "axpy");
  for (std::size_t i = 0; i < y.size(); ++i) y.v[i] += alpha * x.v[i];
}

inline double min_value(const NodalField& f) {
  return *std::min_element(f.v.begin(), f.v.end());
}

inline double max_value(const NodalField& f) {
  return *std::max_element(f.v.begin(), f.v.end());
}

inline bool all_finite(const NodalField& f) {
  for (double x : f.v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace dch
