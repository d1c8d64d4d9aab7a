#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace anosovlab {

// Counter-based seed derivation: every task gets derive_seed(root, stream, index),
// so results do not depend on evaluation order or thread count.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // 53-bit uniform in [0,1); avoids implementation-defined distributions.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Eigen::VectorXd normal_vector(int n);
  Eigen::VectorXd unit_vector(int n);
  Eigen::MatrixXd orthonormal_frame(int n, int k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace anosovlab
