#include <cmath>

#include "model.hpp"

namespace anosovlab::detail {
namespace {

using M3 = Eigen::Matrix3d;

M3 unpack(const Vec& c) {
  M3 m;
  m << c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8];
  return m;
}

Vec pack(const M3& m) {
  Vec c(9);
  c << m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1), m(2, 2);
  return c;
}

Vec nan_vec(int n) { return Vec::Constant(n, std::numeric_limits<double>::quiet_NaN()); }

// Shared machinery for groups of 3x3 matrices flowed by left multiplication by a_t,
// with points in a chart g = U·D·L (unstable · diagonal · stable).
class MatrixModel : public Model {
 public:
  explicit MatrixModel(double bound) : bound_(bound) {}

  int coord_dim() const override { return 9; }
  bool quotiented() const override { return false; }
  bool homogeneous() const override { return true; }

  virtual M3 cartan(double t) const = 0;
  virtual M3 element(const Vec& v) const = 0;
  virtual Vec coords(const M3& g) const = 0;

  Vec flow(const Vec& c, double t) const override { return pack(cartan(t) * unpack(c)); }

  Mat tangent(const Vec&, double t) const override {
    const std::vector<double> w = frame_weights();
    Mat m = Mat::Zero(dim(), dim());
    for (int i = 0; i < dim(); ++i) m(i, i) = std::exp(w[static_cast<std::size_t>(i)] * t);
    return m;
  }

  Vec exp_left(const Vec& v, const Vec& c) const override { return pack(element(v) * unpack(c)); }

  Vec rel(const Vec& p, const Vec& q) const override {
    return coords(unpack(q) * unpack(p).inverse());
  }

  bool in_chart(const Vec& c) const override {
    return c.allFinite() && c.cwiseAbs().maxCoeff() <= bound_;
  }

  Vec identity() const override { return pack(M3::Identity()); }
  double chart_radius() const override { return 0.1; }

 protected:
  double bound_;
};

// SL3(R) with a_t = exp(t·diag(2,1,-3)). Frame [x, y, z, d1, d2, s1, s2, s3]:
// U = [[1,x,z],[0,1,y],[0,0,1]], D = diag(e^d1, e^d2, e^{-d1-d2}), L = [[1,0,0],[s1,1,0],[s3,s2,1]].
class SL3Model final : public MatrixModel {
 public:
  using MatrixModel::MatrixModel;
  int dim() const override { return 8; }

  M3 cartan(double t) const override {
    return Eigen::Vector3d(std::exp(2 * t), std::exp(t), std::exp(-3 * t)).asDiagonal();
  }

  M3 element(const Vec& v) const override {
    M3 u = M3::Identity(), d = M3::Zero(), l = M3::Identity();
    u(0, 1) = v[0];
    u(1, 2) = v[1];
    u(0, 2) = v[2];
    d(0, 0) = std::exp(v[3]);
    d(1, 1) = std::exp(v[4]);
    d(2, 2) = std::exp(-v[3] - v[4]);
    l(1, 0) = v[5];
    l(2, 1) = v[6];
    l(2, 0) = v[7];
    return u * d * l;
  }

  // g^{-1} = L' D' U' (Doolittle), so g = U'^{-1} D'^{-1} L'^{-1}.
  Vec coords(const M3& g) const override {
    const M3 h = g.inverse();
    const double d1 = h(0, 0);
    if (!(d1 > 0.0)) return nan_vec(8);
    const double p = h(1, 0) / d1, r = h(2, 0) / d1;
    const double a = h(0, 1) / d1, c = h(0, 2) / d1;
    const double d2 = h(1, 1) - p * h(0, 1);
    if (!(d2 > 0.0)) return nan_vec(8);
    const double bb = (h(1, 2) - p * h(0, 2)) / d2;
    const double q = (h(2, 1) - r * h(0, 1)) / d2;
    Vec v(8);
    v[0] = -a;
    v[1] = -bb;
    v[2] = a * bb - c;
    v[3] = -std::log(d1);
    v[4] = -std::log(d2);
    v[5] = -p;
    v[6] = -q;
    v[7] = p * q - r;
    return v;
  }

  Vec generator(const Vec&) const override {
    Vec g = Vec::Zero(8);
    g[3] = 2.0;
    g[4] = 1.0;
    return g;
  }

  std::vector<double> frame_weights() const override { return {1, 4, 5, 0, 0, -1, -4, -5}; }

  Vec base() const override { return identity(); }
};

// ASL2(R) = SL2(R) ⋉ R^2 as [[A, v],[0, 1]], a_t = diag(e^t, e^{-t}, 1).
// Frame [b, x, d, c, y]: U = [[1,b,x],[0,1,0],[0,0,1]], D = diag(e^d, e^{-d}, 1),
// L = [[1,0,0],[c,1,y],[0,0,1]].
class ASL2Model final : public MatrixModel {
 public:
  using MatrixModel::MatrixModel;
  int dim() const override { return 5; }

  M3 cartan(double t) const override {
    return Eigen::Vector3d(std::exp(t), std::exp(-t), 1.0).asDiagonal();
  }

  M3 element(const Vec& v) const override {
    M3 u = M3::Identity(), d = M3::Identity(), l = M3::Identity();
    u(0, 1) = v[0];
    u(0, 2) = v[1];
    d(0, 0) = std::exp(v[2]);
    d(1, 1) = std::exp(-v[2]);
    l(1, 0) = v[3];
    l(1, 2) = v[4];
    return u * d * l;
  }

  Vec coords(const M3& g) const override {
    const double a22 = g(1, 1);
    if (!(a22 > 0.0)) return nan_vec(5);
    Vec v(5);
    v[0] = g(0, 1) / a22;
    v[1] = g(0, 2) - g(0, 1) * g(1, 2) / a22;
    v[2] = -std::log(a22);
    v[3] = g(1, 0) / a22;
    v[4] = g(1, 2) / a22;
    return v;
  }

  Vec generator(const Vec&) const override {
    Vec g = Vec::Zero(5);
    g[2] = 1.0;
    return g;
  }

  std::vector<double> frame_weights() const override { return {2, 1, 0, -2, -1}; }

  Vec base() const override { return identity(); }
};

}  // namespace

std::shared_ptr<const Model> make_asl2(const SystemSpec& s) {
  return std::make_shared<ASL2Model>(s.chart_bound);
}
std::shared_ptr<const Model> make_sl3(const SystemSpec& s) {
  return std::make_shared<SL3Model>(s.chart_bound);
}

}  // namespace anosovlab::detail
