#include "anosovlab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "anosovlab/errors.hpp"
#include "anosovlab/orbit_frames.hpp"
#include "anosovlab/rng.hpp"

namespace anosovlab {

int Splitting::dim() const {
  int d = 0;
  for (const auto& b : blocks) d += static_cast<int>(b.basis.cols());
  return d;
}

std::vector<int> Splitting::offsets() const {
  std::vector<int> off{0};
  for (const auto& b : blocks) off.push_back(off.back() + static_cast<int>(b.basis.cols()));
  return off;
}

Mat Splitting::frame() const {
  const int n = dim();
  Mat f(blocks.empty() ? 0 : blocks.front().basis.rows(), n);
  int c = 0;
  for (const auto& b : blocks) {
    f.middleCols(c, b.basis.cols()) = b.basis;
    c += static_cast<int>(b.basis.cols());
  }
  return f;
}

Vec Splitting::component(const Vec& v, int block) const {
  const Mat f = frame();
  const Vec coef = f.fullPivLu().solve(v);
  const auto off = offsets();
  const auto& b = blocks[static_cast<std::size_t>(block)];
  return b.basis * coef.segment(off[static_cast<std::size_t>(block)], b.basis.cols());
}

namespace {

struct QrPass {
  std::vector<double> exponents;  // in column order, not sorted
  std::vector<double> se;
  Mat q;
};

// Pushes a frame through `n` steps; jac(i) for i = 0..n-1 in push order.
QrPass qr_push(int dim, long n, double dt, const std::function<Mat(long)>& jac, Mat q,
               double burn_in, int n_blocks) {
  const long burn = static_cast<long>(std::floor(burn_in * static_cast<double>(n)));
  const long m = n - burn;
  std::vector<Vec> block_sum(static_cast<std::size_t>(std::max(n_blocks, 1)), Vec::Zero(dim));
  std::vector<long> block_len(block_sum.size(), 0);
  Vec total = Vec::Zero(dim);
  for (long i = 0; i < n; ++i) {
    Mat y = jac(i) * q;
    Eigen::HouseholderQR<Mat> qr(y);
    q = qr.householderQ() * Mat::Identity(dim, dim);
    const Mat& r = qr.matrixQR();
    Vec lg(dim);
    for (int j = 0; j < dim; ++j) {
      if (r(j, j) < 0) q.col(j) = -q.col(j);
      lg[j] = std::log(std::abs(r(j, j)));
    }
    if (!lg.allFinite()) fail(ErrorCode::NonFinite, "QR recursion produced a singular step");
    if (i >= burn) {
      total += lg;
      const auto b = static_cast<std::size_t>(
          std::min<long>((i - burn) * static_cast<long>(block_sum.size()) / std::max(m, 1L),
                         static_cast<long>(block_sum.size()) - 1));
      block_sum[b] += lg;
      block_len[b] += 1;
    }
  }
  QrPass out;
  out.q = std::move(q);
  out.exponents.resize(static_cast<std::size_t>(dim));
  out.se.assign(static_cast<std::size_t>(dim), 0.0);
  for (int j = 0; j < dim; ++j)
    out.exponents[static_cast<std::size_t>(j)] = m > 0 ? total[j] / (static_cast<double>(m) * dt) : 0.0;
  std::vector<Vec> means;
  for (std::size_t b = 0; b < block_sum.size(); ++b)
    if (block_len[b] > 0) means.push_back(block_sum[b] / (static_cast<double>(block_len[b]) * dt));
  if (means.size() >= 2) {
    for (int j = 0; j < dim; ++j) {
      std::vector<double> col;
      for (const auto& mv : means) col.push_back(mv[j]);
      out.se[static_cast<std::size_t>(j)] =
          sample_stddev(col) / std::sqrt(static_cast<double>(means.size()));
    }
  }
  return out;
}

std::vector<std::vector<int>> exact_groups(const std::vector<double>& ex) {
  std::vector<std::vector<int>> g;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    if (!g.empty() && std::abs(ex[static_cast<std::size_t>(g.back().front())] - ex[i]) < 1e-12)
      g.back().push_back(static_cast<int>(i));
    else
      g.push_back({static_cast<int>(i)});
  }
  return g;
}

Splitting assemble(const Mat& fast, const Mat& slow, const std::vector<std::vector<int>>& groups,
                   const std::vector<double>& exps, const std::vector<double>& se, const Point& at) {
  const int n = static_cast<int>(fast.rows());
  if (groups.size() < 2)
    fail(ErrorCode::IllConditioned, "all exponents coincide; no hyperbolic splitting");
  Splitting sp;
  sp.point = at;
  int before = 0;
  for (const auto& g : groups) {
    const int d = static_cast<int>(g.size());
    SplitBlock b;
    double e = 0.0, s2 = 0.0;
    for (int i : g) {
      e += exps[static_cast<std::size_t>(i)];
      s2 += se[static_cast<std::size_t>(i)] * se[static_cast<std::size_t>(i)];
    }
    b.exponent = e / d;
    b.std_error = std::sqrt(s2) / d;
    b.basis = subspace_intersection(fast.leftCols(before + d), slow.leftCols(n - before), d);
    sp.blocks.push_back(std::move(b));
    before += d;
  }
  sp.theta = std::numbers::pi / 2;
  for (std::size_t i = 0; i < sp.blocks.size(); ++i)
    for (std::size_t j = i + 1; j < sp.blocks.size(); ++j)
      sp.theta = std::min(sp.theta, subspace_angle(sp.blocks[i].basis, sp.blocks[j].basis));
  if (!(sp.theta >= 1e-8)) fail(ErrorCode::IllConditioned, "splitting angle below 1e-8");
  return sp;
}

}  // namespace

std::vector<std::vector<int>> merge_exponents(const std::vector<double>& exps,
                                              const std::vector<double>& se) {
  std::vector<std::vector<int>> g;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    if (!g.empty()) {
      const auto j = static_cast<std::size_t>(g.back().back());
      if (std::abs(exps[i] - exps[j]) <= 3.0 * (se[i] + se[j]) + 1e-9) {
        g.back().push_back(static_cast<int>(i));
        continue;
      }
    }
    g.push_back({static_cast<int>(i)});
  }
  return g;
}

LyapunovReport qr_spectrum(int dim, long steps, double dt, const StepJacobian& jac,
                           std::uint64_t seed, double burn_in, int n_blocks) {
  if (steps <= 0 || !(dt > 0)) fail(ErrorCode::InvalidParams, "qr_spectrum needs steps > 0 and dt > 0");
  Rng rng(seed);
  QrPass p = qr_push(dim, steps, dt, jac, rng.orthonormal_frame(dim, dim), burn_in, n_blocks);
  std::vector<int> order(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return p.exponents[static_cast<std::size_t>(a)] > p.exponents[static_cast<std::size_t>(b)];
  });
  LyapunovReport r;
  for (int i : order) {
    r.exponents.push_back(p.exponents[static_cast<std::size_t>(i)]);
    r.std_error.push_back(p.se[static_cast<std::size_t>(i)]);
  }
  r.T_total = static_cast<double>(steps) * dt;
  r.steps = steps;
  return r;
}

LyapunovReport lyapunov_spectrum(const System& s, const Point& x0, double T, double dt_qr,
                                 std::uint64_t seed) {
  if (!(dt_qr > 0) || !(T >= 100.0 * dt_qr))
    fail(ErrorCode::InvalidParams, "lyapunov_spectrum needs T >= 100 dt_qr");
  const long n = std::lround(T / dt_qr);
  if (s.homogeneous()) {
    const Mat j = s.tangent_flow(x0, dt_qr);
    return qr_spectrum(s.dim(), n, dt_qr, [&](long) { return j; }, seed);
  }
  Point y = x0;
  return qr_spectrum(
      s.dim(), n, dt_qr,
      [&](long) {
        Mat j = s.tangent_flow(y, dt_qr);
        y = s.flow(y, dt_qr);
        return j;
      },
      seed);
}

Splitting splitting_from_cocycle(int dim, double dt, long n_back, long n_fwd, const StepJacobian& jac,
                                 std::uint64_t seed, const Point& at) {
  if (n_back < 1 || n_fwd < 1) fail(ErrorCode::InvalidParams, "splitting needs both orbit halves");
  Rng rng(derive_seed(seed, 1));
  Rng rng2(derive_seed(seed, 2));
  const QrPass f = qr_push(
      dim, n_back, dt, [&](long i) { return jac(i - n_back); }, rng.orthonormal_frame(dim, dim), 0.1, 10);
  const QrPass b = qr_push(
      dim, n_fwd, dt, [&](long i) { return Mat(jac(n_fwd - 1 - i).inverse()); },
      rng2.orthonormal_frame(dim, dim), 0.1, 10);
  std::vector<double> exps(static_cast<std::size_t>(dim)), se(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    const auto u = static_cast<std::size_t>(i), v = static_cast<std::size_t>(dim - 1 - i);
    exps[u] = 0.5 * (f.exponents[u] - b.exponents[v]);
    se[u] = 0.5 * std::hypot(f.se[u], b.se[v]);
  }
  return assemble(f.q, b.q, merge_exponents(exps, se), exps, se, at);
}

Splitting oseledets_splitting(const System& s, const Point& x, double T_forward, double T_backward,
                              std::uint64_t seed) {
  const double dt = 1.0;
  const long nf = std::max(1L, std::lround(std::ceil(T_forward / dt)));
  const long nb = std::max(1L, std::lround(std::ceil(T_backward / dt)));
  const int n = s.dim();
  std::function<Mat(long)> jac;
  std::vector<Mat> store;
  if (s.homogeneous()) {
    const Mat j = s.tangent_flow(x, dt);
    jac = [j](long) { return j; };
  } else {
    store.resize(static_cast<std::size_t>(nb + nf));
    Point y = x;
    for (long k = 0; k < nf; ++k) {
      store[static_cast<std::size_t>(nb + k)] = s.tangent_flow(y, dt);
      y = s.flow(y, dt);
    }
    y = x;
    for (long k = 1; k <= nb; ++k) {
      y = s.flow(y, -dt);
      store[static_cast<std::size_t>(nb - k)] = s.tangent_flow(y, dt);
    }
    jac = [&store, nb](long k) { return store[static_cast<std::size_t>(k + nb)]; };
  }
  if (!s.exact_exponents()) return splitting_from_cocycle(n, dt, nb, nf, jac, seed, x);

  // Exact spectrum: flags from QR, grouping and exponents from the closed form.
  Rng rng(derive_seed(seed, 1));
  Rng rng2(derive_seed(seed, 2));
  const QrPass f = qr_push(
      n, nb, dt, [&](long i) { return jac(i - nb); }, rng.orthonormal_frame(n, n), 0.1, 10);
  const QrPass b = qr_push(
      n, nf, dt, [&](long i) { return Mat(jac(nf - 1 - i).inverse()); }, rng2.orthonormal_frame(n, n),
      0.1, 10);
  const auto& ex = *s.exact_exponents();
  return assemble(f.q, b.q, exact_groups(ex), ex, std::vector<double>(ex.size(), 0.0), x);
}

double default_epsilon(const Splitting& sp) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < sp.blocks.size(); ++i)
    gap = std::min(gap, std::abs(sp.blocks[i - 1].exponent - sp.blocks[i].exponent));
  return std::isfinite(gap) && gap > 0 ? gap / 10.0 : 0.01;
}

double lyapunov_norm_walk(const Splitting& sp, const Vec& v, const LyapunovNormParams& p,
                          const std::function<Mat(long, int)>& step,
                          const std::function<Mat(long)>& frame, long k_lo, long k_hi) {
  const double eps = p.epsilon > 0 ? p.epsilon : default_epsilon(sp);
  const auto off = sp.offsets();
  const std::size_t nb = sp.blocks.size();
  auto project = [&](const Mat& f, const Vec& w, std::size_t i) {
    const Vec c = f.partialPivLu().solve(w);
    const auto o = static_cast<Eigen::Index>(off[i]);
    const auto d = static_cast<Eigen::Index>(off[i + 1]) - o;
    return Vec(f.middleCols(o, d) * c.segment(o, d));
  };
  auto weight = [&](long k) {
    return (k == k_lo || k == k_hi) && k_lo != k_hi ? 0.5 * p.dtau : p.dtau;
  };
  double norm_const = 0.0;
  for (long k = k_lo; k <= k_hi; ++k)
    norm_const += weight(k) * std::exp(-2.0 * eps * std::abs(static_cast<double>(k) * p.dtau));

  const Mat f0 = frame(0);
  double total = 0.0;
  std::vector<Mat> frames_up, frames_down;
  for (long k = 1; k <= k_hi; ++k) frames_up.push_back(frame(k));
  for (long k = -1; k >= k_lo; --k) frames_down.push_back(frame(k));
  for (std::size_t i = 0; i < nb; ++i) {
    const double lam = sp.blocks[i].exponent;
    const Vec w0 = project(f0, v, i);
    total += weight(0) * w0.squaredNorm();
    // Track log-scale separately so long horizons never overflow.
    for (int dir : {1, -1}) {
      Vec w = w0;
      double log_scale = 0.0;
      const long kend = dir > 0 ? k_hi : k_lo;
      for (long k = 0; k != kend; k += dir) {
        w = project(dir > 0 ? frames_up[static_cast<std::size_t>(k)]
                            : frames_down[static_cast<std::size_t>(-k)],
                    step(k, dir) * w, i);
        const double nrm = w.norm();
        if (nrm > 0) {
          log_scale += std::log(nrm);
          w /= nrm;
        }
        const long kk = k + dir;
        const double tau = static_cast<double>(kk) * p.dtau;
        const double e = nrm > 0 ? std::exp(2.0 * (log_scale - lam * tau) - 2.0 * eps * std::abs(tau)) : 0.0;
        total += weight(kk) * e;
      }
    }
  }
  return std::sqrt(total / norm_const);
}

double lyapunov_norm(const System& s, const Splitting& sp, const Vec& v, LyapunovNormParams p) {
  if (s.homogeneous()) {
    const Mat fwd = s.tangent_flow(sp.point, p.dtau);
    const Mat bwd = s.tangent_flow(sp.point, -p.dtau);
    const Mat f = sp.frame();
    const long m = std::lround(std::floor(p.T_trunc / p.dtau + 1e-9));
    return lyapunov_norm_walk(
        sp, v, p, [&](long, int dir) { return dir > 0 ? fwd : bwd; }, [&](long) { return f; }, -m, m);
  }
  const double margin = p.T_trunc + 25.0;
  const OrbitFrames of(s, sp.point, -margin, margin, p.dtau / 4.0);
  return of.lyapunov_norm(0.0, v, p);
}

double regular_set_density(const System& s, const Point& x, double T, double theta_min,
                           std::uint64_t seed) {
  if (!(T > 0)) fail(ErrorCode::InvalidParams, "regular_set_density needs T > 0");
  if (theta_min > std::numbers::pi / 2) return 0.0;
  if (s.homogeneous()) return oseledets_splitting(s, x, 50, 50, seed).theta >= theta_min ? 1.0 : 0.0;
  const double margin = 20.0;
  const OrbitFrames of(s, x, -margin, std::ceil(T) + margin, 1.0, seed);
  long hits = 0, total = 0;
  for (long k = 0; k <= static_cast<long>(std::floor(T)); ++k) {
    ++total;
    if (of.splitting(static_cast<double>(k)).theta >= theta_min) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

double cocycle_lambda2(const System& s, const Point& x, double t) {
  if (t == 0.0) return 0.0;
  if (s.homogeneous()) {
    const Splitting sp = oseledets_splitting(s, x);
    if (sp.blocks.size() < 2) fail(ErrorCode::IllConditioned, "no second block");
    const Vec e = sp.blocks[1].basis.col(0);
    return std::log(lyapunov_norm(s, sp, s.tangent_flow(x, t) * e) / lyapunov_norm(s, sp, e));
  }
  const long n = std::max(1L, std::lround(std::ceil(std::abs(t) * 8.0)));
  const double h = std::abs(t) / static_cast<double>(n);
  const double lo = std::min(0.0, t) - 20.0, hi = std::max(0.0, t) + 20.0;
  const OrbitFrames of(s, x, std::floor(lo / h) * h, std::ceil(hi / h) * h, h);
  const Splitting sp = of.splitting(0.0);
  const Vec e = sp.blocks.at(1).basis.col(0);
  return std::log(of.lyapunov_norm(t, of.jacobian(0.0, t) * e) / of.lyapunov_norm(0.0, e));
}

}  // namespace anosovlab
