#include <cmath>

#include "model.hpp"

namespace anosovlab::detail {
namespace {

// Mapping torus of a hyperbolic A in SL2(Z): G = R^2 ⋊ R, (v,s)(v',s') = (v + A^s v', s+s').
class CatModel final : public Model {
 public:
  explicit CatModel(const SystemSpec& s) {
    a_ << s.matrix[0], s.matrix[1], s.matrix[2], s.matrix[3];
    const double det = a_.determinant();
    const double tr = a_.trace();
    if (std::abs(det - 1.0) > 1e-12)
      fail(ErrorCode::InvalidParams, "cat matrix must have determinant 1");
    if (tr <= 2.0)
      fail(ErrorCode::InvalidParams, "cat matrix must have trace > 2 (hyperbolic, positive spectrum)");
    const double disc = std::sqrt(tr * tr - 4.0);
    mu_ = {(tr + disc) / 2.0, (tr - disc) / 2.0};
    for (int i = 0; i < 2; ++i) {
      Eigen::Vector2d v;
      // (A - mu I) v = 0
      if (std::abs(a_(0, 1)) > std::abs(a_(1, 0)))
        v << a_(0, 1), mu_[i] - a_(0, 0);
      else
        v << mu_[i] - a_(1, 1), a_(1, 0);
      p_.col(i) = v.normalized();
    }
    pinv_ = p_.inverse();
  }

  int dim() const override { return 3; }
  int coord_dim() const override { return 3; }
  bool quotiented() const override { return true; }
  bool homogeneous() const override { return true; }

  Eigen::Matrix2d power(double s) const {
    return p_ * Eigen::Vector2d(std::pow(mu_[0], s), std::pow(mu_[1], s)).asDiagonal() * pinv_;
  }

  Vec flow(const Vec& c, double t) const override {
    Vec r(3);
    r.head<2>() = power(t) * c.head<2>();
    r[2] = c[2] + t;
    return r;
  }

  Mat tangent(const Vec&, double t) const override {
    Mat m = Mat::Identity(3, 3);
    m.topLeftCorner(2, 2) = power(t);
    return m;
  }

  Vec exp_left(const Vec& v, const Vec& c) const override {
    Vec r(3);
    r.head<2>() = v.head<2>() + power(v[2]) * c.head<2>();
    r[2] = v[2] + c[2];
    return r;
  }

  Vec rel(const Vec& p, const Vec& q) const override {
    Vec r(3);
    r[2] = q[2] - p[2];
    r.head<2>() = q.head<2>() - power(r[2]) * p.head<2>();
    return r;
  }

  Vec reduce(const Vec& c) const override {
    const Vec w = fundamental(c);
    return from_fundamental(w);
  }

  Vec fundamental(const Vec& c) const override {
    // (v,s) ~ (v, s-k) for integer k, then v = A^s w with w taken mod Z^2.
    const double s = frac01(c[2]);
    Eigen::Vector2d w = power(-s) * c.head<2>();
    w[0] = frac01(w[0]);
    w[1] = frac01(w[1]);
    Vec r(3);
    r << w[0], w[1], s;
    return r;
  }

  Vec from_fundamental(const Vec& w) const override {
    Vec r(3);
    r.head<2>() = power(w[2]) * w.head<2>();
    r[2] = w[2];
    return r;
  }

  std::vector<int> periodic() const override { return {0, 1, 2}; }

  Vec generator(const Vec&) const override { return Eigen::Vector3d(0, 0, 1); }

  std::vector<double> frame_weights() const override {
    return {std::log(mu_[0]), 0.0, std::log(mu_[1])};
  }

  Mat frame_eigenvectors() const override {
    Mat e = Mat::Zero(3, 3);
    e.block<2, 1>(0, 0) = p_.col(0);
    e(2, 1) = 1.0;
    e.block<2, 1>(0, 2) = p_.col(1);
    return e;
  }

  Vec base() const override { return from_fundamental(Eigen::Vector3d(0.1234567, 0.3141592, 0.2718281)); }
  Vec identity() const override { return Vec::Zero(3); }
  double chart_radius() const override { return 0.1; }

 private:
  Eigen::Matrix2d a_;
  Eigen::Matrix2d p_;
  Eigen::Matrix2d pinv_;
  std::array<double, 2> mu_{};
};

}  // namespace

std::shared_ptr<const Model> make_cat(const SystemSpec& s) { return std::make_shared<CatModel>(s); }

}  // namespace anosovlab::detail
