#include "anosovlab/factorize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "anosovlab/errors.hpp"
#include "anosovlab/numerics.hpp"

namespace anosovlab {

namespace {

int slowest_stable_block(const Splitting& sp) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(sp.blocks.size()); ++i)
    if (sp.blocks[static_cast<std::size_t>(i)].exponent < -1e-6) {
      if (best < 0 ||
          sp.blocks[static_cast<std::size_t>(i)].exponent > sp.blocks[static_cast<std::size_t>(best)].exponent)
        best = i;
    }
  if (best < 0) fail(ErrorCode::IllConditioned, "splitting has no stable block");
  return best;
}

int neutral_block(const Splitting& sp) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(sp.blocks.size()); ++i)
    if (std::abs(sp.blocks[static_cast<std::size_t>(i)].exponent) <
        std::abs(sp.blocks[static_cast<std::size_t>(best)].exponent))
      best = i;
  return best;
}

Vec second_block_vector(const Splitting& sp, const Vec& axis) {
  if (sp.blocks.size() < 2 || sp.blocks[1].basis.cols() != 1)
    fail(ErrorCode::IllConditioned, "second Oseledets block is not one-dimensional");
  Vec e = sp.blocks[1].basis.col(0).normalized();
  if (e.dot(axis) < 0) e = -e;
  return e;
}

Mat projector(const Mat& basis) {
  if (basis.cols() == 0) return Mat::Zero(basis.rows(), basis.rows());
  const Mat q = orthonormalize(basis);
  return q * q.transpose();
}

double second_rate(const System& s) {
  const auto blocks = s.reference_blocks();
  if (blocks.size() < 2) fail(ErrorCode::IllConditioned, "no second block");
  return s.reference_exponents()[static_cast<std::size_t>(blocks[1].front())];
}

double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

// ---- holonomy and identification ----

HolonomyResult holonomy_limit(const System& s, const Point& x, const Point& z, double T_max,
                              double tol) {
  HolonomyResult out;
  Vec d = s.displacement(x, z);
  const double d0 = d.norm();
  // Below round-off the two orbits are indistinguishable.
  if (d0 <= 1e-14 * (1.0 + max_abs(x.coords))) return out;

  const Vec axis = second_block_axis(s);
  Vec vx = second_block_vector(leaf_splitting(s, x), axis);
  Vec vz = second_block_vector(leaf_splitting(s, z), axis);
  Point px = x;
  double sum = 0.0, dmin = d0, prev_norm = d0;
  bool grew = false;
  const int n = std::max(1, static_cast<int>(std::ceil(T_max)));
  int k = 0;
  for (; k < n; ++k) {
    const Point pz = s.exp_at(px, d);
    const Vec wx = s.tangent_flow(px, 1.0) * vx;
    const Vec wz = s.tangent_flow(pz, 1.0) * vz;
    const double inc = std::log(wz.norm()) - std::log(wx.norm());
    vx = wx.normalized();
    vz = wz.normalized();
    out.increments.push_back(inc);
    sum += inc;
    auto [p1, d1] = s.transport(px, d, 1.0);
    px = std::move(p1);
    d = std::move(d1);
    const double dn = d.norm();
    dmin = std::min(dmin, dn);
    if (k + 1 == n / 2 && dn > 0.5 * d0)
      fail(ErrorCode::NotStablyRelated, "orbits do not converge by T_max/2");
    if (std::abs(inc) < tol && dn < 0.5 * d0) {
      ++k;
      break;
    }
    // Round-off in the expanding directions eventually dominates the separation.
    if (dn > prev_norm) {
      grew = true;
      ++k;
      break;
    }
    prev_norm = dn;
  }
  if (grew && dmin > 0.5 * d0) fail(ErrorCode::NotStablyRelated, "separation does not contract");

  out.value = std::exp(sum);
  out.T_used = k;
  std::vector<double> ts, ls;
  for (std::size_t i = 0; i < out.increments.size(); ++i)
    if (out.increments[i] != 0.0) {
      ts.push_back(static_cast<double>(i));
      ls.push_back(std::log(std::abs(out.increments[i])));
    }
  const double last = out.increments.empty() ? 0.0 : std::abs(out.increments.back());
  if (ts.size() >= 3) {
    const LinearFit f = fit_line(ts, ls);
    out.decay_rate = f.slope;
    const double q = std::exp(f.slope);
    out.tail_bound = q < 1.0 ? last * q / (1.0 - q) : last * std::max(0.0, T_max - k);
  } else {
    out.tail_bound = last;
  }
  return out;
}

Vec second_block_axis(const System& s) {
  const auto blocks = s.reference_blocks();
  if (blocks.size() < 2) fail(ErrorCode::IllConditioned, "no second block");
  return s.reference_frame().col(blocks[1].front()).normalized();
}

double identification_map(const Splitting& sp, const Vec& e2) {
  if (sp.blocks.size() < 3 || sp.blocks[1].basis.cols() != 1)
    fail(ErrorCode::IllConditioned, "quotient lines are not one-dimensional");
  const int n = static_cast<int>(e2.size());
  Mat lower(n, 0), first(n, 0);
  for (std::size_t i = 2; i < sp.blocks.size(); ++i) {
    const Mat& b = sp.blocks[i].basis;
    Mat grown(n, lower.cols() + b.cols());
    grown << lower, b;
    lower = grown;
  }
  if (sp.blocks[2].exponent > 0) first = sp.blocks[2].basis;
  const Mat id = Mat::Identity(n, n);
  const Vec q = (id - projector(lower)) * e2;
  const Vec r = (id - projector(first)) * e2;
  const double qn = q.norm(), rn = r.norm();
  if (qn < 1e-12 || rn < 1e-12) fail(ErrorCode::IllConditioned, "frame vector inside the quotient");
  const double den = e2.dot(q / qn);
  if (std::abs(den) < 1e-12) fail(ErrorCode::IllConditioned, "degenerate identification");
  return e2.dot(r / rn) / den;
}

double identification_map(const System& s, const Point& p) {
  return identification_map(leaf_splitting(s, p), second_block_axis(s));
}

double operator_B(const System& s, const Point& z, const Point& x, double r_scale) {
  if (!(r_scale > 0)) fail(ErrorCode::InvalidParams, "frame scale must be positive");
  const Vec d = s.displacement(x, z);
  if (d.norm() == 0.0) return 1.0 / r_scale;

  // Flow correction: z sits on the stable leaf of x1 = g_s x.
  const Splitting sx = leaf_splitting(s, x);
  const Vec fv = s.flow_vector(x);
  const double sc = sx.component(d, neutral_block(sx)).dot(fv) / fv.squaredNorm();
  const Point x1 = s.flow_lift(x, sc);

  const double Ix1 = identification_map(s, x1);
  const double Iz = identification_map(s, z) * r_scale;
  const double L = holonomy_limit(s, x1, z).value;
  const Vec e = second_block_vector(leaf_splitting(s, x1), second_block_axis(s));
  const double back = (s.tangent_flow(x1, -sc) * e).norm();
  return back * Ix1 / (L * Iz);
}

double apriori_beta(double w_exponent, double lambda_C, double lambda_1) {
  if (!(w_exponent > 0 && lambda_C > 0 && lambda_1 > 0))
    fail(ErrorCode::InvalidParams, "rates must be positive");
  return 2.0 * (w_exponent * lambda_C) / (2.0 * lambda_1);
}

std::pair<double, double> contraction_rates(const System& s) {
  const auto& ex = s.reference_exponents();
  double lc = std::numeric_limits<double>::infinity();
  for (double e : ex)
    if (e < -1e-9) lc = std::min(lc, -e);
  if (!std::isfinite(lc)) fail(ErrorCode::IllConditioned, "no contracting direction");
  return {lc, ex.front()};
}

// ---- second-block growth ----

BlockGrowth::BlockGrowth(const System& s, const Point& x, double horizon, std::uint64_t seed,
                         bool allow_exact)
    : sys_(s), x_(x), seed_(seed), horizon_(horizon) {
  if (allow_exact && s.homogeneous()) {
    exact_ = true;
    rate_ = second_rate(s);
  }
}

void BlockGrowth::build(double horizon) const {
  horizon_ = horizon;
  of_ = std::make_shared<OrbitFrames>(sys_, x_, -25.0, horizon + 25.0, kH, seed_);
  e_ = second_block_vector(of_->splitting(0.0), second_block_axis(sys_));
  norm0_ = of_->lyapunov_norm(0.0, e_);
  v_.assign(1, e_);
  cache_.clear();
}

double BlockGrowth::node(long k) const {
  auto it = cache_.find(k);
  if (it != cache_.end()) return it->second;
  while (static_cast<long>(v_.size()) <= k) {
    const long j = static_cast<long>(v_.size()) - 1;
    // Re-project so round-off in the faster block never takes over.
    const Vec w = of_->jacobian(j * kH, (j + 1) * kH) * v_.back();
    v_.push_back(of_->splitting((j + 1) * kH).component(w, 1));
  }
  const double val = std::log(of_->lyapunov_norm(k * kH, v_[static_cast<std::size_t>(k)]) / norm0_);
  cache_.emplace(k, val);
  return val;
}

double BlockGrowth::operator()(double t) const {
  if (t < 0) fail(ErrorCode::InvalidParams, "growth is tracked forward only");
  if (exact_) return rate_ * t;
  if (!of_ || t > horizon_) {
    double h = std::max(horizon_, 1.0);
    while (h < t) h *= 2.0;
    build(h);
  }
  const double r = t / kH;
  const long k = static_cast<long>(std::floor(r));
  const double f = r - static_cast<double>(k);
  const double a = node(k);
  return f == 0.0 ? a : a + f * (node(k + 1) - a);
}

// ---- transfer pipeline ----

TransferPipeline::TransferPipeline(const System& s, const Point& q1, const Vec& u,
                                   const TransferOptions& opt)
    : sys_(s), q1_(q1), u_(u), opt_(opt) {
  const int nuu = s.flow_dim_split().strong_unstable;
  if (u.size() != nuu) fail(ErrorCode::InvalidParams, "u must be a strong-unstable parameter");
  // Right translations preserve the leaves, so homogeneous work happens at the identity.
  recentered_ = s.homogeneous();
  if (recentered_) q1_ = s.identity_point();
  ChartOptions co;
  co.radius = std::max(4.0 * u.norm(), 1e-3);
  co.seed = opt.seed;
  uu_q1_ = leaf_chart(s, q1_, LeafKind::StrongUnstable, opt.uu_order, co);
  x_ = uu_q1_.point(s, u);
  gx_ = std::make_shared<BlockGrowth>(s, x_, opt.horizon, opt.seed, opt.fast_path);
  gq_ = std::make_shared<BlockGrowth>(s, q1_, opt.horizon, opt.seed, opt.fast_path);
}

Separation TransferPipeline::separation(const Vec& delta1) const {
  const System& s = sys_;
  Separation sep;
  sep.q1_prime = s.exp_at(q1_, delta1);
  const double dn = delta1.norm(), un = u_.norm();
  if (dn == 0.0 || un == 0.0) {
    sep.z = dn == 0.0 ? x_ : sep.q1_prime;
    return sep;
  }

  ChartOptions co;
  co.seed = opt_.seed;
  co.radius = std::max(s.chart_radius(), 4.0 * (un + dn));
  const LeafChart target = leaf_chart(s, sep.q1_prime, LeafKind::Unstable, opt_.cs_order, co);
  const double cs_radius = std::max(10.0 * dn, 1e-12);
  if (!cs_x_ || cs_x_->radius < cs_radius) {
    co.radius = cs_radius;
    cs_x_ = leaf_chart(s, x_, LeafKind::CenterStable, opt_.cs_order, co);
  }
  const double tol = std::max({2.0 * (cs_x_->remainder_bound + target.remainder_bound),
                               1e-15 * (1.0 + max_abs(x_.coords)), 1e-6 * un * dn});
  const Projection proj = stable_projection(s, *cs_x_, target, tol);
  sep.z = proj.z;

  const Splitting sp = leaf_splitting(s, sep.q1_prime, opt_.seed);
  const Vec e = second_block_vector(sp, second_block_axis(s));
  for (int order = opt_.uu_order;; ++order) {
    ChartOptions cu;
    cu.seed = opt_.seed;
    cu.radius = std::max(4.0 * un, 1e-3);
    const LeafChart uu = leaf_chart(s, sep.q1_prime, LeafKind::StrongUnstable, order, cu);
    // Slide along W^uu(q1') until the strong-unstable part of the gap vanishes.
    Vec tau = uu.tangent_coords(s.displacement(sep.q1_prime, sep.z));
    Vec d = s.displacement(uu.point(s, tau), sep.z);
    double lead = sp.component(d, 0).norm();
    for (int it = 0; it < 40 && lead > 0.0; ++it) {
      const Vec tn = tau + uu.tangent_coords(sp.component(d, 0));
      const Vec dnw = s.displacement(uu.point(s, tn), sep.z);
      const double ln = sp.component(dnw, 0).norm();
      if (!(ln < lead)) break;
      tau = tn;
      d = dnw;
      lead = ln;
    }
    const Vec c2 = sp.component(d, 1);
    sep.c = c2.dot(e);
    sep.c_error = uu.remainder_bound + uu_q1_.remainder_bound + proj.residual + lead;
    if (sep.c_error <= 0.05 * std::abs(sep.c)) break;
    if (order >= opt_.order_cap) {
      std::ostringstream m;
      m << "strong-unstable charts of order " << order << " leave error " << sep.c_error
        << " against a separation of " << std::abs(sep.c);
      fail(ErrorCode::ChartOverflow, m.str());
    }
  }
  sep.B = operator_B(s, sep.z, x_);
  return sep;
}

double TransferPipeline::magnitude(const Separation& sep, double t) const {
  return std::abs(sep.B * sep.c) * std::exp((*gx_)(t));
}

// ---- stopping times ----

StoppingRecord stopping_time(const TransferPipeline& p, const Vec& delta1, double ell,
                             double epsilon) {
  if (!(epsilon > 0)) fail(ErrorCode::InvalidParams, "epsilon must be positive");
  if (!(ell > 0)) fail(ErrorCode::InvalidParams, "ell must be positive");
  const auto& opt = p.options();
  const auto [lc, l1] = contraction_rates(p.system());
  const double beta = apriori_beta(opt.w_exponent, lc, l1);

  StoppingRecord r;
  r.q1 = p.q1();
  r.u = p.u();
  r.ell = ell;
  r.epsilon = epsilon;
  r.beta_bound = beta * ell;
  r.window = opt.search_beta.value_or(beta) * ell;

  const Separation sep = p.separation(delta1);
  r.c = sep.c;
  r.B = sep.B;
  auto A = [&](double t) { return p.magnitude(sep, t); };

  const long n = static_cast<long>(std::floor(r.window / opt.dt + 1e-9));
  std::optional<long> cross;
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * opt.dt;
    const double a = A(t);
    r.A_trace.emplace_back(t, a);
    if (!cross && a > epsilon) cross = k;
  }
  if (!cross && r.window > static_cast<double>(n) * opt.dt) {
    const double a = A(r.window);
    r.A_trace.emplace_back(r.window, a);
    if (a > epsilon) cross = n + 1;
  }
  if (!cross) {
    r.never_reaches = true;
    r.tau2 = r.window;
  } else if (*cross == 0) {
    r.tau2 = 0.0;
  } else {
    double lo = static_cast<double>(*cross - 1) * opt.dt;
    double hi = std::min(static_cast<double>(*cross) * opt.dt, r.window);
    for (int i = 0; i < opt.refinements; ++i) {
      const double mid = 0.5 * (lo + hi);
      (A(mid) <= epsilon ? lo : hi) = mid;
    }
    r.tau2 = 0.5 * (lo + hi);
  }
  r.lambda2_at_stop = p.lambda2_x(r.tau2);
  return r;
}

StoppingRecord stopping_time(const System& s, const Point& q1, const Vec& delta1, const Vec& u,
                             double ell, double epsilon, const TransferOptions& opt) {
  return stopping_time(TransferPipeline(s, q1, u, opt), delta1, ell, epsilon);
}

Vec slow_stable_partner(const System& s, const Point& q1, double ell, double r, std::uint64_t seed) {
  if (!(r > 0)) fail(ErrorCode::InvalidParams, "partner distance must be positive");
  if (s.homogeneous()) {
    const Splitting sp = leaf_splitting(s, q1);
    const Vec e = sp.blocks[static_cast<std::size_t>(slowest_stable_block(sp))].basis.col(0);
    return s.transport(q1, r * e, ell).second;
  }
  // Forward transport of a stable displacement drowns in round-off; take the direction
  // at q1 and the size from the backward growth of that direction instead.
  const Splitting sp = leaf_splitting(s, q1, seed);
  const Vec e = sp.blocks[static_cast<std::size_t>(slowest_stable_block(sp))].basis.col(0);
  const double m = r / (s.tangent_flow(q1, -ell) * e).norm();
  ChartOptions co;
  co.radius = 10.0 * m;
  co.seed = seed;
  const LeafChart st = leaf_chart(s, q1, LeafKind::Stable, 3, co);
  return s.displacement(q1, st.point(s, st.tangent_coords(m * e)));
}

double t2_solve(const TransferPipeline& p, double t) {
  if (t < 0) fail(ErrorCode::InvalidParams, "t must be nonnegative");
  if (t == 0.0 || p.u().norm() == 0.0) return t;
  if (p.system().homogeneous() && p.options().fast_path) return t;
  const double target = p.lambda2_x(t);
  double lo = 0.0, hi = std::max(t, 0.25);
  for (int i = 0; p.lambda2_q1(hi) < target; ++i) {
    if (i > 20) fail(ErrorCode::NoRoot, "second-block growth never reaches the target");
    lo = hi;
    hi *= 1.5;
  }
  if (p.lambda2_q1(lo) > target) fail(ErrorCode::NoRoot, "growth is not monotone at the origin");
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (p.lambda2_q1(mid) < target ? lo : hi) = mid;
  }
  const double a = p.lambda2_q1(lo), b = p.lambda2_q1(hi);
  return std::abs(a - target) <= std::abs(b - target) ? lo : hi;
}

BilipschitzResult bilipschitz_check(const TransferPipeline& p, const std::vector<double>& ell_grid,
                                    const std::vector<double>& s_grid, double epsilon, double r) {
  if (ell_grid.size() < 5 || s_grid.size() < 5)
    fail(ErrorCode::InvalidParams, "bilipschitz grids need at least 5 values each");
  const System& sys = p.system();
  std::set<double> ells;
  for (double l : ell_grid)
    for (double s : s_grid) {
      if (s < 0) fail(ErrorCode::InvalidParams, "s must be nonnegative");
      ells.insert(l);
      ells.insert(l + s);
    }

  BilipschitzResult out;
  std::map<double, double> sep_norm;
  bool finite = true;
  for (double l : ells) {
    const Vec d = slow_stable_partner(sys, p.q1(), l, r, p.options().seed);
    sep_norm[l] = d.norm();
    const StoppingRecord rec = stopping_time(p, d, l, epsilon);
    finite = finite && !rec.never_reaches && rec.tau2 > 0;
    out.tau2[l] = rec.tau2;
  }

  out.kappa_F_min = std::numeric_limits<double>::infinity();
  out.kappa_F_max = -out.kappa_F_min;
  for (auto it = sep_norm.begin(); std::next(it) != sep_norm.end(); ++it) {
    const auto nx = std::next(it);
    const double k = -(std::log(nx->second) - std::log(it->second)) / (nx->first - it->first);
    out.kappa_F_min = std::min(out.kappa_F_min, k);
    out.kappa_F_max = std::max(out.kappa_F_max, k);
  }

  double tmin = std::numeric_limits<double>::infinity(), tmax = 0.0;
  for (const auto& [l, t] : out.tau2) {
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  // Node-resolution windows: the interpolant is piecewise linear on an 1/8 grid.
  const double w = 0.125;
  out.lambda2_min = std::numeric_limits<double>::infinity();
  out.lambda2_max = -out.lambda2_min;
  for (double a = std::floor(tmin / w) * w; a < tmax; a += w) {
    const double rate = (p.lambda2_x(a + w) - p.lambda2_x(a)) / w;
    out.lambda2_min = std::min(out.lambda2_min, rate);
    out.lambda2_max = std::max(out.lambda2_max, rate);
  }
  if (!(out.lambda2_min > 0)) fail(ErrorCode::IllConditioned, "second-block growth is not expanding");
  out.kappa1 = out.kappa_F_min / out.lambda2_max;
  out.kappa2 = out.kappa_F_max / out.lambda2_min;

  const double tol = 2.0 * p.options().dt / 16.0;
  out.slope_min = std::numeric_limits<double>::infinity();
  out.slope_max = -out.slope_min;
  for (double l : ell_grid)
    for (double s : s_grid) {
      const double diff = out.tau2.at(l + s) - out.tau2.at(l);
      out.worst_violation = std::max({out.worst_violation, out.kappa1 * s - diff - tol,
                                      diff - out.kappa2 * s - tol});
      if (s > 0) {
        out.slope_min = std::min(out.slope_min, diff / s);
        out.slope_max = std::max(out.slope_max, diff / s);
      }
    }
  out.pass = finite && out.worst_violation <= 0.0 && out.slope_min > 0.0;
  return out;
}

// ---- Y-configurations ----

YConfiguration y_configuration(const System& s, const Point& q, const Vec& delta1, const Vec& u,
                               double ell, double epsilon, const TransferOptions& opt) {
  YConfiguration y;
  y.q = q;
  y.ell = ell;
  y.q1 = s.flow(q, ell);
  const TransferPipeline p(s, y.q1, u, opt);
  if (p.recentered()) {
    ChartOptions co;
    co.radius = std::max(4.0 * u.norm(), 1e-3);
    y.u_q1 = leaf_chart(s, y.q1, LeafKind::StrongUnstable, opt.uu_order, co).point(s, u);
  } else {
    y.u_q1 = p.x();
  }
  const StoppingRecord rec = stopping_time(p, delta1, ell, epsilon);
  y.tau2 = rec.tau2;
  y.t = rec.tau2;
  y.t2 = t2_solve(p, y.t);
  y.q2 = s.flow(y.u_q1, y.t);
  y.q3 = s.flow(y.q1, y.t2);
  y.sync_residual = std::abs(p.lambda2_q1(y.t2) - p.lambda2_x(y.t));
  return y;
}

YConfiguration paired_y_configuration(const System& s, const Point& q, const Vec& delta1,
                                      const Vec& u, double ell, double epsilon,
                                      const TransferOptions& opt) {
  YConfiguration y = y_configuration(s, q, delta1, u, ell, epsilon, opt);
  // The inverse displacement is taken near the identity where it is exact to round-off.
  const Point e = s.homogeneous() ? s.identity_point() : y.q1;
  const Point e1 = s.exp_at(e, delta1);
  const Vec back = s.displacement(e1, e);
  const Point q1p = s.exp_at(y.q1, delta1);
  const Point qp = s.flow(q1p, -ell);
  auto other = std::make_shared<YConfiguration>(y_configuration(s, qp, back, u, ell, epsilon, opt));
  y.tau_gap = std::abs(y.tau2 - other->tau2);
  other->tau_gap = y.tau_gap;
  y.synchronized_with = std::move(other);
  return y;
}

Avoidance top_singular_avoidance(const Mat& A, double rho) {
  if (A.size() == 0 || A.norm() == 0.0) fail(ErrorCode::InvalidParams, "map must be nonzero");
  if (!(rho > 0)) fail(ErrorCode::InvalidParams, "rho must be positive");
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  int top = 1;
  while (top < sv.size() && sv[top] >= sv[0] * (1.0 - 1e-12)) ++top;
  Avoidance a;
  a.subspace = svd.matrixV().rightCols(A.cols() - top);
  a.c_rho = rho;
  return a;
}

ResidualPoint factorization_residual(const TransferPipeline& p, const Vec& delta1, double ell,
                                     double t, double omega) {
  const System& s = p.system();
  const Separation sep = p.separation(delta1);
  ResidualPoint r;
  r.ell = ell;
  r.A = p.magnitude(sep, t);

  auto [xt, d] = s.transport(p.x(), s.displacement(p.x(), sep.q1_prime), t);
  const Point base = p.recentered() ? s.identity_point() : xt;
  const Point other = s.exp_at(base, d);
  ChartOptions co;
  co.seed = p.options().seed;
  co.radius = 1.5 * omega;
  const LeafChart X = leaf_chart(s, base, LeafKind::StrongUnstable, p.options().uu_order, co);
  co.radius = d.norm() + 2.0 * omega;
  const LeafChart Y = leaf_chart(s, other, LeafKind::StrongUnstable, p.options().uu_order, co);
  r.hd = local_hausdorff(s, base, X, Y, omega);
  r.residual = std::abs(r.hd - r.A);
  return r;
}

std::string stopping_json(const StoppingRecord& r) {
  nlohmann::ordered_json j;
  j["q1"] = std::vector<double>(r.q1.coords.data(), r.q1.coords.data() + r.q1.coords.size());
  j["u"] = std::vector<double>(r.u.data(), r.u.data() + r.u.size());
  j["ell"] = r.ell;
  j["epsilon"] = r.epsilon;
  j["tau2"] = r.tau2;
  j["beta_bound"] = r.beta_bound;
  j["window"] = r.window;
  j["lambda2_at_stop"] = r.lambda2_at_stop;
  j["never_reaches"] = r.never_reaches;
  j["c"] = r.c;
  j["B"] = r.B;
  return j.dump(2);
}

std::string a_trace_csv(const StoppingRecord& r) {
  std::ostringstream o;
  o.precision(17);
  o << "t,A_value\n";
  for (const auto& [t, a] : r.A_trace) o << t << ',' << a << '\n';
  return o.str();
}

}  // namespace anosovlab
