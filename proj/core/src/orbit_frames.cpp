#include "anosovlab/orbit_frames.hpp"

#include <cmath>
#include <numbers>

#include "anosovlab/errors.hpp"
#include "anosovlab/rng.hpp"

namespace anosovlab {

namespace {

Mat qr_q(const Mat& y, int dim) {
  Eigen::HouseholderQR<Mat> qr(y);
  Mat q = qr.householderQ() * Mat::Identity(dim, dim);
  const Mat& r = qr.matrixQR();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

OrbitFrames::OrbitFrames(const System& s, const Point& x, double t_min, double t_max, double h,
                         std::uint64_t seed)
    : sys_(s), x_(x), h_(h) {
  if (!(h > 0) || !(t_max > t_min) || t_min > 0 || t_max < 0)
    fail(ErrorCode::InvalidParams, "orbit segment must contain 0 with h > 0");
  const long k0 = std::lround(std::ceil(-t_min / h - 1e-9));
  const long k1 = std::lround(std::ceil(t_max / h - 1e-9));
  t_min_ = -static_cast<double>(k0) * h;
  t_max_ = static_cast<double>(k1) * h;

  if (s.homogeneous()) {
    const_split_ = oseledets_splitting(s, x, 50, 50, seed);
    for (const auto& b : const_split_.blocks) {
      exps_.push_back(b.exponent);
      se_.push_back(b.std_error);
    }
    return;
  }

  const long n = k0 + k1;
  const int d = s.dim();
  pts_.resize(static_cast<std::size_t>(n + 1));
  pts_[static_cast<std::size_t>(k0)] = s.quotiented() ? s.lattice_reduce(x) : x;
  for (long k = k0; k < n; ++k)
    pts_[static_cast<std::size_t>(k + 1)] = s.flow(pts_[static_cast<std::size_t>(k)], h);
  for (long k = k0; k > 0; --k)
    pts_[static_cast<std::size_t>(k - 1)] = s.flow(pts_[static_cast<std::size_t>(k)], -h);
  jac_.resize(static_cast<std::size_t>(n));
  jinv_.resize(static_cast<std::size_t>(n));
  for (long k = 0; k < n; ++k) {
    jac_[static_cast<std::size_t>(k)] = s.tangent_flow(pts_[static_cast<std::size_t>(k)], h);
    jinv_[static_cast<std::size_t>(k)] = jac_[static_cast<std::size_t>(k)].inverse();
  }

  // Forward pass for fast flags, backward pass for slow flags. Exponent estimates
  // average both passes over the portion past a 20 time-unit burn-in.
  Rng r1(derive_seed(seed, 11)), r2(derive_seed(seed, 12));
  fast_.resize(static_cast<std::size_t>(n + 1));
  slow_.resize(static_cast<std::size_t>(n + 1));
  const long burn = std::min(n / 2, std::lround(20.0 / h));
  Vec lf = Vec::Zero(d), lb = Vec::Zero(d);
  std::vector<Vec> blocks_f, blocks_b;
  const long nb = 10;
  const long span = std::max(1L, (n - burn) / nb);
  Vec acc_f = Vec::Zero(d), acc_b = Vec::Zero(d);
  Mat q = r1.orthonormal_frame(d, d);
  fast_[0] = q;
  for (long k = 0; k < n; ++k) {
    const Mat y = jac_[static_cast<std::size_t>(k)] * q;
    q = qr_q(y, d);
    fast_[static_cast<std::size_t>(k + 1)] = q;
    if (k >= burn) {
      const Vec lg = (q.transpose() * y).diagonal().cwiseAbs().array().log();
      lf += lg;
      acc_f += lg;
      if ((k - burn + 1) % span == 0) {
        blocks_f.push_back(acc_f / (static_cast<double>(span) * h));
        acc_f.setZero();
      }
    }
  }
  q = r2.orthonormal_frame(d, d);
  slow_[static_cast<std::size_t>(n)] = q;
  for (long k = n - 1; k >= 0; --k) {
    const Mat y = jinv_[static_cast<std::size_t>(k)] * q;
    q = qr_q(y, d);
    slow_[static_cast<std::size_t>(k)] = q;
    if (n - 1 - k >= burn) {
      const Vec lg = (q.transpose() * y).diagonal().cwiseAbs().array().log();
      lb += lg;
      acc_b += lg;
      if ((n - k - burn) % span == 0) {
        blocks_b.push_back(acc_b / (static_cast<double>(span) * h));
        acc_b.setZero();
      }
    }
  }
  const double m = static_cast<double>(n - burn) * h;
  std::vector<double> ex(static_cast<std::size_t>(d)), se(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    const int j = d - 1 - i;
    ex[static_cast<std::size_t>(i)] = 0.5 * (lf[i] / m - lb[j] / m);
    std::vector<double> cf, cb;
    for (const auto& v : blocks_f) cf.push_back(v[i]);
    for (const auto& v : blocks_b) cb.push_back(v[j]);
    const double sf = cf.size() > 1 ? sample_stddev(cf) / std::sqrt(double(cf.size())) : 0.0;
    const double sb = cb.size() > 1 ? sample_stddev(cb) / std::sqrt(double(cb.size())) : 0.0;
    se[static_cast<std::size_t>(i)] = 0.5 * std::hypot(sf, sb);
  }
  groups_ = merge_exponents(ex, se);
  if (groups_.size() < 2) fail(ErrorCode::IllConditioned, "all exponents coincide along the orbit");
  for (const auto& g : groups_) {
    double e = 0.0, s2 = 0.0;
    for (int i : g) {
      e += ex[static_cast<std::size_t>(i)];
      s2 += se[static_cast<std::size_t>(i)] * se[static_cast<std::size_t>(i)];
    }
    exps_.push_back(e / static_cast<double>(g.size()));
    se_.push_back(std::sqrt(s2) / static_cast<double>(g.size()));
  }
}

long OrbitFrames::index(double t) const {
  const double r = (t - t_min_) / h_;
  const long k = std::lround(r);
  if (std::abs(r - static_cast<double>(k)) > 1e-6)
    fail(ErrorCode::InvalidParams, "time is not on the orbit grid");
  if (k < 0 || t > t_max_ + 1e-9 * std::max(1.0, std::abs(t_max_)))
    fail(ErrorCode::InvalidParams, "time outside the cached orbit segment");
  return k;
}

Point OrbitFrames::point(double t) const {
  if (sys_.homogeneous()) return sys_.flow(x_, t);
  return pts_[static_cast<std::size_t>(index(t))];
}

Mat OrbitFrames::jacobian(double s, double t) const {
  if (sys_.homogeneous()) return sys_.tangent_flow(x_, t - s);
  const long a = index(s), b = index(t);
  Mat m = Mat::Identity(sys_.dim(), sys_.dim());
  for (long k = a; k < b; ++k) m = jac_[static_cast<std::size_t>(k)] * m;
  for (long k = a - 1; k >= b; --k) m = jinv_[static_cast<std::size_t>(k)] * m;
  return m;
}

Splitting OrbitFrames::splitting(double t) const {
  if (sys_.homogeneous()) {
    Splitting sp = const_split_;
    sp.point = point(t);
    return sp;
  }
  const long k = index(t);
  const Mat f = frame_at(k);
  Splitting sp;
  sp.point = pts_[static_cast<std::size_t>(k)];
  int before = 0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const int d = static_cast<int>(groups_[g].size());
    sp.blocks.push_back({exps_[g], se_[g], f.middleCols(before, d)});
    before += d;
  }
  sp.theta = std::numbers::pi / 2;
  for (std::size_t i = 0; i < sp.blocks.size(); ++i)
    for (std::size_t j = i + 1; j < sp.blocks.size(); ++j)
      sp.theta = std::min(sp.theta, subspace_angle(sp.blocks[i].basis, sp.blocks[j].basis));
  return sp;
}

double OrbitFrames::lyapunov_norm(double t, const Vec& v, LyapunovNormParams p) const {
  const Splitting sp = splitting(t);
  if (sys_.homogeneous()) return anosovlab::lyapunov_norm(sys_, sp, v, p);
  const long k = index(t);
  const long m = std::max(1L, std::lround(p.dtau / h_));
  p.dtau = static_cast<double>(m) * h_;
  const long n = static_cast<long>(jac_.size());
  const long up = std::min(std::lround(std::floor(p.T_trunc / p.dtau + 1e-9)), (n - k) / m);
  const long down = std::min(std::lround(std::floor(p.T_trunc / p.dtau + 1e-9)), k / m);
  return lyapunov_norm_walk(
      sp, v, p,
      [&](long j, int dir) {
        Mat acc = Mat::Identity(sys_.dim(), sys_.dim());
        const long base = k + j * m;
        if (dir > 0)
          for (long i = 0; i < m; ++i) acc = jac_[static_cast<std::size_t>(base + i)] * acc;
        else
          for (long i = 1; i <= m; ++i) acc = jinv_[static_cast<std::size_t>(base - i)] * acc;
        return acc;
      },
      [&](long j) { return frame_at(k + j * m); }, -down, up);
}

Mat OrbitFrames::frame_at(long k) const {
  {
    std::lock_guard<std::mutex> lock(*mu_);
    auto it = frame_cache_.find(k);
    if (it != frame_cache_.end()) return it->second;
  }
  const auto u = static_cast<std::size_t>(k);
  const int n = sys_.dim();
  Mat f(n, n);
  int before = 0;
  for (const auto& g : groups_) {
    const int d = static_cast<int>(g.size());
    f.middleCols(before, d) = subspace_intersection(fast_[u].leftCols(before + d), slow_[u].leftCols(n - before), d);
    before += d;
  }
  std::lock_guard<std::mutex> lock(*mu_);
  frame_cache_.emplace(k, f);
  return f;
}

}  // namespace anosovlab
