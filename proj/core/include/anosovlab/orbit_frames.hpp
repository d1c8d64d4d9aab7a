#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "anosovlab/cocycle.hpp"

namespace anosovlab {

// Orbit segment g_t x for t on the grid t_min + k·h, with step Jacobians and
// forward/backward QR flags cached so splittings and Lyapunov norms can be read
// off anywhere on the segment. Homogeneous models store nothing and use closed forms.
class OrbitFrames {
 public:
  OrbitFrames(const System& s, const Point& x, double t_min, double t_max, double h,
              std::uint64_t seed = 0);

  double h() const { return h_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  const System& system() const { return sys_; }

  Point point(double t) const;
  // Dg_{t-s} from g_s x to g_t x.
  Mat jacobian(double s, double t) const;
  Splitting splitting(double t) const;
  double lyapunov_norm(double t, const Vec& v, LyapunovNormParams p = {}) const;
  const std::vector<double>& exponents() const { return exps_; }

 private:
  long index(double t) const;
  Mat frame_at(long k) const;

  System sys_;
  Point x_;
  double t_min_, t_max_, h_;
  std::vector<std::vector<int>> groups_;
  std::vector<double> exps_;
  std::vector<double> se_;
  // Non-homogeneous storage, index k <-> t_min + k h.
  std::vector<Point> pts_;
  std::vector<Mat> jac_, jinv_;
  std::vector<Mat> fast_, slow_;
  Splitting const_split_;
  std::shared_ptr<std::mutex> mu_ = std::make_shared<std::mutex>();
  mutable std::map<long, Mat> frame_cache_;
};

}  // namespace anosovlab
