#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

#include "model.hpp"

namespace anosovlab::detail {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kSqrt5 = std::sqrt(5.0);
const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;
const double kPhiConj = (1.0 - std::sqrt(5.0)) / 2.0;

template <class T>
using V7 = Eigen::Matrix<T, 7, 1>;

inline double val(double x) { return x; }
template <class D>
double val(const Eigen::AutoDiffScalar<D>& x) {
  return x.value();
}

// N = H(R) x H(R) in polarized coordinates (x,y,z)(x',y',z') = (x+x', y+y', z+z'+xy'),
// coordinates (x1,y1,z1,x2,y2,z2,s) on G = N ⋊ R where s acts by A^s.
struct Core {
  std::array<double, 6> rate{};  // weight * log(lambda)
  double eps = 0.0;

  template <class T>
  V7<T> act(const V7<T>& n, const T& tau) const {
    using std::exp;
    V7<T> r = n;
    for (int i = 0; i < 6; ++i) r[i] = n[i] * exp(tau * rate[static_cast<std::size_t>(i)]);
    return r;
  }

  template <class T>
  static V7<T> nmul(const V7<T>& p, const V7<T>& q) {
    V7<T> r;
    for (int f = 0; f < 6; f += 3) {
      r[f] = p[f] + q[f];
      r[f + 1] = p[f + 1] + q[f + 1];
      r[f + 2] = p[f + 2] + q[f + 2] + p[f] * q[f + 1];
    }
    r[6] = T(0.0);
    return r;
  }

  template <class T>
  static V7<T> ninv(const V7<T>& p) {
    V7<T> r;
    for (int f = 0; f < 6; f += 3) {
      r[f] = -p[f];
      r[f + 1] = -p[f + 1];
      r[f + 2] = -p[f + 2] + p[f] * p[f + 1];
    }
    r[6] = T(0.0);
    return r;
  }

  template <class T>
  V7<T> gmul(const V7<T>& p, const V7<T>& q) const {
    V7<T> r = nmul(p, act(q, p[6]));
    r[6] = p[6] + q[6];
    return r;
  }

  template <class T>
  V7<T> ginv(const V7<T>& p) const {
    V7<T> r = act(ninv(p), T(-p[6]));
    r[6] = -p[6];
    return r;
  }

  template <class T>
  T psi(const V7<T>& n) const {
    using std::sin;
    return sin(kTwoPi * (n[0] - n[3]) / kSqrt5);
  }

  // Fiber shear exp(sigma * eps * psi(n) Z1)·n; psi ignores z so the inverse is exact.
  template <class T>
  V7<T> shear(const V7<T>& n, const T& sigma) const {
    V7<T> r = n;
    r[2] += sigma * eps * psi(n);
    return r;
  }

  template <class T>
  static T smooth_step(const T& f) {
    using std::sin;
    return f - sin(kTwoPi * f) / kTwoPi;
  }

  template <class T>
  V7<T> fmap(const V7<T>& n) const { return act(shear(n, T(1.0)), T(1.0)); }
  template <class T>
  V7<T> fmap_inv(const V7<T>& n) const { return shear(act(n, T(-1.0)), T(-1.0)); }

  // Psi_sigma = A^f ∘ B_{beta(f)} ∘ F^k, sigma = k + f.
  template <class T>
  V7<T> psi_map(V7<T> h, const T& sigma) const {
    const double k = std::floor(val(sigma));
    const T f = sigma - k;
    for (int i = 0; i < static_cast<int>(k); ++i) h = fmap(h);
    for (int i = 0; i > static_cast<int>(k); --i) h = fmap_inv(h);
    return act(shear(h, smooth_step(f)), f);
  }

  template <class T>
  V7<T> psi_inv(V7<T> m, const T& sigma) const {
    const double k = std::floor(val(sigma));
    const T f = sigma - k;
    m = shear(act(m, T(-f)), T(-smooth_step(f)));
    for (int i = 0; i < static_cast<int>(k); ++i) m = fmap_inv(m);
    for (int i = 0; i > static_cast<int>(k); --i) m = fmap(m);
    return m;
  }

  template <class T>
  V7<T> flow(const V7<T>& c, const T& t) const {
    if (eps == 0.0) {
      V7<T> r = act(c, t);
      r[6] = c[6] + t;
      return r;
    }
    const T s = c[6];
    V7<T> r = psi_map(psi_inv(c, s), T(s + t));
    r[6] = s + t;
    return r;
  }
};

// Lattice O_K ⊂ R^2 via α -> (α, σα), basis (1,1), (φ, σφ).
inline std::pair<double, double> ok_coords(double u1, double u2) {
  const double n = (u1 - u2) / kSqrt5;
  return {u1 - n * kPhi, n};
}
inline std::pair<double, double> ok_embed(double m, double n) {
  return {m + n * kPhi, m + n * kPhiConj};
}

class BorelSmaleModel final : public Model {
 public:
  explicit BorelSmaleModel(const SystemSpec& s) : spec_(s) {
    if (s.a == 0 || s.b == 0) fail(ErrorCode::InvalidParams, "weights a, b must be nonzero");
    if (s.a == -s.b) fail(ErrorCode::InvalidParams, "a = -b makes the z-weights vanish");
    if (!(s.lambda > 1.0) || !std::isfinite(s.lambda))
      fail(ErrorCode::InvalidParams, "lambda must be finite and > 1");
    if (!(s.eps_pert >= 0.0) || !std::isfinite(s.eps_pert))
      fail(ErrorCode::InvalidParams, "eps_pert must be finite and >= 0");
    const double ll = std::log(s.lambda);
    weights_ = {double(s.a), double(s.b), double(s.a + s.b), double(-s.a), double(-s.b),
                double(-s.a - s.b)};
    for (std::size_t i = 0; i < 6; ++i) core_.rate[i] = weights_[i] * ll;
    core_.eps = s.eps_pert;
    // lambda must be an even power of the golden ratio for A to preserve H(O_K).
    const double k = ll / (2.0 * std::log(kPhi));
    unit_ = std::abs(k - std::round(k)) < 1e-9 && std::round(k) >= 1.0;
    if (s.eps_pert > 0.0) {
      if (!unit_)
        fail(ErrorCode::InvalidParams,
             "perturbed model needs lambda = ((1+sqrt5)/2)^(2k) so the shear descends");
      if (kTwoPi * s.eps_pert >= 0.5)
        fail(ErrorCode::InvalidParams, "perturbation too large: C1 size 2*pi*eps must be < 1/2");
      check_invertible();
    }
  }

  int dim() const override { return 7; }
  int coord_dim() const override { return 7; }
  bool quotiented() const override { return unit_; }
  bool homogeneous() const override { return spec_.eps_pert == 0.0; }

  Vec flow(const Vec& c, double t) const override {
    const V7<double> r = core_.flow(V7<double>(c), t);
    return Vec(r);
  }

  Mat tangent(const Vec& c, double t) const override {
    if (homogeneous()) return diag(t);
    using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 7, 1>>;
    const V7<double> cd(c);
    const V7<double> p = core_.flow(cd, t);
    V7<AD> e;
    for (int i = 0; i < 7; ++i) e[i] = AD(0.0, 7, i);
    V7<AD> ca;
    for (int i = 0; i < 7; ++i) ca[i] = AD(cd[i], Eigen::Matrix<double, 7, 1>::Zero());
    const V7<AD> moved = core_.flow(core_.gmul(e, ca), AD(t, Eigen::Matrix<double, 7, 1>::Zero()));
    V7<AD> pa;
    for (int i = 0; i < 7; ++i) pa[i] = AD(p[i], Eigen::Matrix<double, 7, 1>::Zero());
    const V7<AD> d = core_.gmul(moved, core_.ginv(pa));
    Mat j(7, 7);
    for (int i = 0; i < 7; ++i) j.row(i) = d[i].derivatives().transpose();
    return j;
  }

  Vec conjugate(const Vec& d, double t) const override { return diag(t) * d; }

  Mat diag(double t) const {
    Mat m = Mat::Identity(7, 7);
    for (int i = 0; i < 6; ++i) m(i, i) = std::exp(core_.rate[static_cast<std::size_t>(i)] * t);
    return m;
  }

  Vec exp_left(const Vec& v, const Vec& c) const override {
    return Vec(core_.gmul(V7<double>(v), V7<double>(c)));
  }

  Vec rel(const Vec& p, const Vec& q) const override {
    return Vec(core_.gmul(V7<double>(q), core_.ginv(V7<double>(p))));
  }

  Vec reduce(const Vec& c) const override { return from_fundamental(fundamental(c)); }

  Vec fundamental(const Vec& c) const override {
    if (!unit_) fail(ErrorCode::Unsupported, "lambda is not a unit of Z[(1+sqrt5)/2]; no lattice");
    const double s = frac01(c[6]);
    V7<double> w = core_.act(V7<double>(c), -s);
    Vec out(7);
    // x, then y (which shifts z by x·β), then z.
    auto [mx, nx] = ok_coords(w[0], w[3]);
    mx = frac01(mx);
    nx = frac01(nx);
    std::tie(w[0], w[3]) = ok_embed(mx, nx);
    auto [my, ny] = ok_coords(w[1], w[4]);
    const double fy = frac01(my), gy = frac01(ny);
    const auto [b1, b2] = ok_embed(fy - my, gy - ny);
    w[1] += b1;
    w[4] += b2;
    w[2] += w[0] * b1;
    w[5] += w[3] * b2;
    auto [mz, nz] = ok_coords(w[2], w[5]);
    out << mx, nx, fy, gy, frac01(mz), frac01(nz), s;
    return out;
  }

  Vec from_fundamental(const Vec& f) const override {
    V7<double> w;
    std::tie(w[0], w[3]) = ok_embed(f[0], f[1]);
    std::tie(w[1], w[4]) = ok_embed(f[2], f[3]);
    std::tie(w[2], w[5]) = ok_embed(f[4], f[5]);
    w[6] = 0.0;
    V7<double> c = core_.act(w, f[6]);
    c[6] = f[6];
    return Vec(c);
  }

  std::vector<int> periodic() const override { return {6}; }

  Vec generator(const Vec& c) const override {
    if (homogeneous()) {
      Vec g = Vec::Zero(7);
      g[6] = 1.0;
      return g;
    }
    using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 1, 1>>;
    using D1 = Eigen::Matrix<double, 1, 1>;
    V7<AD> ca;
    V7<AD> ia;
    for (int i = 0; i < 7; ++i) {
      ca[i] = AD(c[i], D1::Zero());
      ia[i] = AD(c[i], D1::Zero());
    }
    const V7<AD> moved = core_.flow(ca, AD(0.0, 1, 0));
    const V7<AD> d = core_.gmul(moved, core_.ginv(ia));
    Vec g(7);
    for (int i = 0; i < 7; ++i) g[i] = d[i].derivatives()[0];
    return g;
  }

  std::vector<double> frame_weights() const override {
    std::vector<double> w(core_.rate.begin(), core_.rate.end());
    w.push_back(0.0);
    return w;
  }

  Vec base() const override {
    if (!unit_) {
      Vec c(7);
      c << 0.0123, -0.0211, 0.0071, 0.0157, 0.0093, -0.0132, 0.0;
      return c;
    }
    Vec f(7);
    f << 0.1234567, 0.3141592, 0.2718281, 0.5772156, 0.6931471, 0.4142135, 0.1732050;
    return from_fundamental(f);
  }
  Vec identity() const override { return Vec::Zero(7); }

 private:
  void check_invertible() const {
    // The shear has unit Jacobian determinant; confirm numerically on a grid.
    for (int i = 0; i < 16; ++i) {
      Vec f(7);
      for (int k = 0; k < 7; ++k) f[k] = std::fmod(0.37 * (i + 1) * (k + 1) + 0.11 * k, 1.0);
      const double det = tangent(from_fundamental(f), 1.0).determinant();
      if (!std::isfinite(det) || std::abs(det) < 0.5)
        fail(ErrorCode::InvalidParams, "perturbed fiber map is not invertible");
    }
  }

  SystemSpec spec_;
  Core core_;
  std::array<double, 6> weights_{};
  bool unit_ = false;
};

}  // namespace

std::shared_ptr<const Model> make_borel_smale(const SystemSpec& s) {
  return std::make_shared<BorelSmaleModel>(s);
}

}  // namespace anosovlab::detail
