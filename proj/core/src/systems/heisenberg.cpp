#include <cmath>

#include "model.hpp"

namespace anosovlab {

Eigen::Vector3d heisenberg_mul(const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
  return {p[0] + q[0], p[1] + q[1], p[2] + q[2] + p[0] * q[1]};
}

Eigen::Vector3d heisenberg_inv(const Eigen::Vector3d& p) {
  return {-p[0], -p[1], -p[2] + p[0] * p[1]};
}

Eigen::Vector3d heisenberg_reduce(const Eigen::Vector3d& p) {
  // Right multiplication by (m,0,0), then (0,n,0) which shifts z by x·n, then (0,0,k).
  const double x = detail::frac01(p[0]);
  const double n = -std::floor(p[1]);
  const double y = detail::frac01(p[1]);
  const double z = detail::frac01(p[2] + x * n);
  return {x, y, z};
}

}  // namespace anosovlab
