#include "anosovlab/leafgeom.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "anosovlab/errors.hpp"
#include "anosovlab/orbit_frames.hpp"

namespace anosovlab {

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

double radical_inverse(long i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// Deterministic Halton points in the radius-r ball of R^n.
std::vector<Vec> ball_points(int n, double r, int count) {
  std::vector<Vec> out;
  for (long i = 1; static_cast<int>(out.size()) < count; ++i) {
    Vec v(n);
    for (int j = 0; j < n; ++j) v[j] = 2.0 * radical_inverse(i, kPrimes[j % 10]) - 1.0;
    if (v.norm() <= 1.0) out.push_back(r * v);
  }
  return out;
}

std::vector<std::vector<int>> monomials_of(int n, int order) {
  std::vector<std::vector<int>> out;
  for (int deg = 2; deg <= order; ++deg) {
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    // Compositions of deg into n parts, lexicographic.
    std::function<void(int, int)> rec = [&](int i, int left) {
      if (i == n - 1) {
        e[static_cast<std::size_t>(i)] = left;
        out.push_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[static_cast<std::size_t>(i)] = k;
        rec(i + 1, left - k);
      }
    };
    if (n > 0) rec(0, deg);
  }
  return out;
}

Vec monomial_row(const std::vector<std::vector<int>>& mons, const Vec& t) {
  Vec r(static_cast<Eigen::Index>(mons.size()));
  for (std::size_t m = 0; m < mons.size(); ++m) {
    double v = 1.0;
    for (std::size_t j = 0; j < mons[m].size(); ++j)
      v *= std::pow(t[static_cast<Eigen::Index>(j)], mons[m][j]);
    r[static_cast<Eigen::Index>(m)] = v;
  }
  return r;
}

int leaf_count(const System& s, LeafKind kind) {
  return static_cast<int>(s.leaf_directions(kind).cols());
}

bool leading(LeafKind k) { return k == LeafKind::Unstable || k == LeafKind::StrongUnstable; }

Mat complement_of(const Mat& l) {
  const int d = static_cast<int>(l.rows());
  Eigen::HouseholderQR<Mat> qr(l);
  const Mat q = qr.householderQ() * Mat::Identity(d, d);
  return q.rightCols(d - l.cols());
}

bool exact_leaf(const System& s, LeafKind kind) {
  if (s.homogeneous()) return true;
  // The perturbation is a central shear commuting with the unstable subgroup, so
  // unstable leaves of the perturbed model stay subgroup orbits.
  return s.kind() == SystemKind::BorelSmalePerturbed && kind == LeafKind::Unstable;
}

// (L, C) at one orbit sample, from the splitting frame ordered by exponent.
std::pair<Mat, Mat> leaf_frame(const Splitting& sp, LeafKind kind, int n) {
  const Mat f = sp.frame();
  const int d = static_cast<int>(f.cols());
  const auto off = sp.offsets();
  const int cut = leading(kind) ? n : d - n;
  if (std::find(off.begin(), off.end(), cut) == off.end() && cut != d)
    fail(ErrorCode::IllConditioned, "leaf dimension does not match the splitting blocks");
  Mat l = leading(kind) ? Mat(f.leftCols(n)) : Mat(f.rightCols(n));
  Mat c = leading(kind) ? Mat(f.rightCols(d - n)) : Mat(f.leftCols(d - n));
  return {orthonormalize(l), orthonormalize(c)};
}

struct TransformResult {
  Mat L, C, coeffs;
  double residual = 0.0;
};

TransformResult graph_transform(const System& s, const OrbitFrames& of, LeafKind kind, int n,
                                const std::vector<std::vector<int>>& mons, double r, int T) {
  const int dir = leading(kind) ? 1 : -1;
  const int m = static_cast<int>(mons.size());
  const int nc = s.dim() - n;
  const int count = std::max(4 * m, 2 * n + 8);
  const std::vector<Vec> targets = ball_points(n, r, count);

  double tau = -dir * static_cast<double>(T);
  auto [L, C] = leaf_frame(of.splitting(tau), kind, n);
  Mat coeffs = Mat::Zero(nc, m);
  double residual = 0.0;
  for (int step = 0; step < T; ++step) {
    const double next = tau + dir;
    auto [L1, C1] = leaf_frame(of.splitting(next), kind, n);
    Mat F1(s.dim(), s.dim());
    F1 << L1, C1;
    const Eigen::PartialPivLU<Mat> lu1(F1);
    const Mat J = of.jacobian(tau, next);
    const Mat B = (lu1.solve(J * L)).topRows(n);
    const Eigen::PartialPivLU<Mat> luB(B);
    const Point p = of.point(tau);

    Mat phi(count, m);
    Mat rhs(count, nc);
    for (int i = 0; i < count; ++i) {
      const Vec t = luB.solve(targets[static_cast<std::size_t>(i)]);
      Vec d = L * t;
      if (m > 0) d += C * (coeffs * monomial_row(mons, t));
      const Vec d1 = s.transport(p, d, dir).second;
      const Vec a = lu1.solve(d1);
      if (m > 0) phi.row(i) = monomial_row(mons, a.head(n)).transpose();
      rhs.row(i) = a.tail(nc).transpose();
    }
    Mat fit = Mat::Zero(nc, m);
    Mat res = rhs;
    if (m > 0) {
      fit = phi.colPivHouseholderQr().solve(rhs).transpose();
      res = rhs - phi * fit.transpose();
    }
    residual = 0.0;
    for (int i = 0; i < count; ++i) residual = std::max(residual, (C1 * res.row(i).transpose()).norm());
    L = L1;
    C = C1;
    coeffs = fit;
    tau = next;
  }
  return {L, C, coeffs, residual};
}

}  // namespace

Vec LeafChart::displacement(const Vec& t) const {
  if (order == 0 || L.cols() == 0) return Vec::Zero(L.rows());
  Vec d = L * t;
  if (!monomials.empty() && coeffs.size() > 0) d += C * (coeffs * monomial_row(monomials, t));
  return d;
}

Point LeafChart::point(const System& s, const Vec& t) const { return s.exp_at(base, displacement(t)); }

LeafChart leaf_chart(const System& s, const Point& x, LeafKind kind, int order,
                     const ChartOptions& opt) {
  if (order < 0) fail(ErrorCode::InvalidParams, "chart order must be nonnegative");
  const int n = leaf_count(s, kind);
  LeafChart ch;
  ch.base = x;
  ch.leaf_kind = kind;
  ch.order = order;
  ch.radius = opt.radius > 0 ? opt.radius : s.chart_radius();

  if (exact_leaf(s, kind)) {
    ch.L = orthonormalize(s.leaf_directions(kind));
    ch.C = complement_of(ch.L);
    ch.remainder_bound = order == 0 ? ch.radius : 0.0;
    return ch;
  }

  if (order == 0) {
    ch.L = orthonormalize(s.leaf_directions(kind));
    ch.C = complement_of(ch.L);
    ch.remainder_bound = ch.radius;
    return ch;
  }

  ch.monomials = monomials_of(n, order);
  const double margin = 30.0;
  const double tmax = static_cast<double>(opt.T_max) + margin;
  const OrbitFrames of = leading(kind) ? OrbitFrames(s, x, -tmax, margin, 1.0, opt.seed)
                                       : OrbitFrames(s, x, -margin, tmax, 1.0, opt.seed);
  const std::vector<Vec> probe = ball_points(n, ch.radius, 32);
  std::optional<TransformResult> prev;
  for (int T = opt.T_start; T <= opt.T_max; T += 10) {
    TransformResult cur = graph_transform(s, of, kind, n, ch.monomials, ch.radius, T);
    if (prev) {
      double change = 0.0;
      for (const Vec& t : probe) {
        const Vec a = cur.C * (cur.coeffs * monomial_row(ch.monomials, t));
        const Vec b = prev->C * (prev->coeffs * monomial_row(ch.monomials, t));
        change = std::max(change, (a - b).norm());
      }
      if (change <= std::max(opt.tol, 1e-3 * cur.residual)) {
        ch.L = cur.L;
        ch.C = cur.C;
        ch.coeffs = cur.coeffs;
        ch.remainder_bound = opt.safety * (cur.residual + change);
        return ch;
      }
    }
    prev = std::move(cur);
  }
  fail(ErrorCode::NoConvergence, "graph transform did not settle by T_max");
}

Splitting leaf_splitting(const System& s, const Point& x, std::uint64_t seed) {
  if (!s.homogeneous()) return OrbitFrames(s, x, -40.0, 40.0, 1.0, seed).splitting(0.0);
  Splitting sp;
  sp.point = x;
  const Mat& f = s.reference_frame();
  for (const auto& blk : s.reference_blocks()) {
    Mat b(s.dim(), static_cast<Eigen::Index>(blk.size()));
    for (std::size_t j = 0; j < blk.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = f.col(blk[j]);
    sp.blocks.push_back({s.reference_exponents()[static_cast<std::size_t>(blk.front())], 0.0,
                         orthonormalize(b)});
  }
  sp.theta = std::numbers::pi / 2;
  for (std::size_t i = 0; i < sp.blocks.size(); ++i)
    for (std::size_t j = i + 1; j < sp.blocks.size(); ++j)
      sp.theta = std::min(sp.theta, subspace_angle(sp.blocks[i].basis, sp.blocks[j].basis));
  return sp;
}

std::pair<Point, Point> halfway_points(const System& s, const Point& q, const Point& q_prime,
                                       double ell) {
  if (ell == 0.0) return {q, q_prime};
  // Carry the displacement along instead of flowing both points, so nearby pairs keep
  // full relative precision.
  auto [a, d] = s.transport(q, s.displacement(q, q_prime), ell / 2);
  Point b = s.exp_at(a, d);
  return {std::move(a), std::move(b)};
}

Projection stable_projection(const System& s, const Point& x, const LeafChart& target, double tol,
                             std::optional<int> cs_order) {
  const LeafChart cs = leaf_chart(s, x, LeafKind::CenterStable, cs_order.value_or(target.order));
  return stable_projection(s, cs, target, tol);
}

Projection stable_projection(const System& s, const LeafChart& cs, const LeafChart& target,
                             double tol) {
  const double floor = cs.remainder_bound + target.remainder_bound;
  if (tol < floor) {
    std::ostringstream m;
    m << "tolerance " << tol << " below chart remainder " << floor;
    fail(ErrorCode::NoIntersection, m.str());
  }
  const int nc = cs.leaf_dim(), nu = target.leaf_dim();
  if (nc + nu != s.dim()) fail(ErrorCode::InvalidParams, "charts are not complementary");
  const double gap = s.dist(target.base, cs.base);
  if (gap > 4.0 * target.radius)
    fail(ErrorCode::NoIntersection, "point too far from the target chart base");

  auto F = [&](const Vec& u) {
    return Vec(s.displacement(target.base, cs.point(s, u.head(nc))) -
               target.displacement(u.tail(nu)));
  };
  Vec u = Vec::Zero(nc + nu);
  u.tail(nu) = target.tangent_coords(s.displacement(target.base, cs.base));
  Vec f = F(u);
  double fn = f.norm();
  int it = 0;
  for (; it < 50 && fn > 1e-3 * tol; ++it) {
    Mat J(s.dim(), nc + nu);
    for (int j = 0; j < nc + nu; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(u[j]));
      Vec up = u, um = u;
      up[j] += h;
      um[j] -= h;
      J.col(j) = (F(up) - F(um)) / (2 * h);
    }
    const Vec step = J.colPivHouseholderQr().solve(-f);
    double a = 1.0;
    bool moved = false;
    for (int k = 0; k < 30; ++k, a *= 0.5) {
      const Vec un = u + a * step;
      const Vec fnew = F(un);
      if (fnew.allFinite() && fnew.norm() < fn) {
        u = un;
        f = fnew;
        fn = fnew.norm();
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (!(fn <= tol)) {
    std::ostringstream m;
    m << "Newton residual stalled at " << fn << " (tol " << tol << ")";
    fail(ErrorCode::NoIntersection, m.str());
  }
  Projection p;
  p.t_cs = u.head(nc);
  p.s_u = u.tail(nu);
  p.z = cs.point(s, p.t_cs);
  p.residual = fn;
  p.iterations = it;
  return p;
}

namespace {

std::vector<Vec> param_grid(int n, double r, int per_dim) {
  std::vector<Vec> out;
  if (n == 0) return {Vec()};
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vec t(n);
    for (int j = 0; j < n; ++j)
      t[j] = per_dim == 1 ? 0.0
                          : -r + 2.0 * r * idx[static_cast<std::size_t>(j)] / (per_dim - 1);
    if (t.norm() <= r * (1 + 1e-12)) out.push_back(t);
    int j = 0;
    while (j < n && ++idx[static_cast<std::size_t>(j)] == per_dim) idx[static_cast<std::size_t>(j++)] = 0;
    if (j == n) break;
  }
  return out;
}

// Distance from a to the chart Y, minimized over the chart parameter.
double dist_to_chart(const System& s, const Point& a, const LeafChart& Y) {
  const int n = Y.leaf_dim();
  auto R = [&](const Vec& t) { return Vec(s.displacement(a, Y.point(s, t))); };
  // Exact leaves extend past the chart radius; graph charts are only valid inside it.
  const bool clamp = !(Y.remainder_bound == 0.0 && Y.order > 0);
  Vec t = Y.tangent_coords(s.displacement(Y.base, a));
  if (clamp && t.norm() > Y.radius) t *= Y.radius / t.norm();
  Vec r = R(t);
  double best = r.norm();
  for (int it = 0; it < 30 && n > 0; ++it) {
    Mat J(r.size(), n);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(t[j]));
      Vec tp = t, tm = t;
      tp[j] += h;
      tm[j] -= h;
      J.col(j) = (R(tp) - R(tm)) / (2 * h);
    }
    const Vec step = J.colPivHouseholderQr().solve(-r);
    double a2 = 1.0;
    bool moved = false;
    for (int k = 0; k < 20; ++k, a2 *= 0.5) {
      Vec tn = t + a2 * step;
      if (clamp && tn.norm() > Y.radius) tn *= Y.radius / tn.norm();
      const Vec rn = R(tn);
      if (rn.norm() < best) {
        t = tn;
        r = rn;
        moved = best - rn.norm() > 1e-15 * std::max(1.0, best);
        best = rn.norm();
        break;
      }
    }
    if (!moved) break;
  }
  return best;
}

double one_sided(const System& s, const Point& p, const LeafChart& X, const LeafChart& Y,
                 double omega, int per_dim) {
  double worst = -1.0;
  for (const Vec& t : param_grid(X.leaf_dim(), X.radius, per_dim)) {
    const Point a = X.point(s, t);
    if (s.dist(p, a) > omega) continue;
    worst = std::max(worst, dist_to_chart(s, a, Y));
  }
  if (worst < 0) fail(ErrorCode::EmptyIntersection, "chart misses the ball");
  return worst;
}

}  // namespace

double local_hausdorff(const System& s, const Point& p, const LeafChart& X, const LeafChart& Y,
                       double omega, const HausdorffOptions& opt) {
  if (!(omega > 0)) fail(ErrorCode::InvalidParams, "omega must be positive");
  const int n = std::max(X.leaf_dim(), Y.leaf_dim());
  auto per_dim_for = [&](int g) {
    int k = g;
    while (n > 1 && k > 2 && std::pow(static_cast<double>(k), n) > opt.max_points) --k;
    return k;
  };
  int g = opt.grid;
  double prev = std::max(one_sided(s, p, X, Y, omega, per_dim_for(g)),
                         one_sided(s, p, Y, X, omega, per_dim_for(g)));
  for (int round = 0; round < opt.max_refine; ++round) {
    const int g2 = 2 * g;
    if (per_dim_for(g2) == per_dim_for(g)) break;
    const double cur = std::max(one_sided(s, p, X, Y, omega, per_dim_for(g2)),
                                one_sided(s, p, Y, X, omega, per_dim_for(g2)));
    const bool settled = std::abs(cur - prev) <= opt.rel_change * std::max(cur, 1e-300);
    prev = cur;
    g = g2;
    if (settled) break;
  }
  return prev;
}

Quadrilateral build_quadrilateral(const System& s, const Point& x, const Vec& s_disp,
                                  const Vec& u_disp, const QuadOptions& opt) {
  ChartOptions co;
  co.seed = opt.seed;
  Quadrilateral q;
  q.x = x;
  const LeafChart st = leaf_chart(s, x, LeafKind::Stable, opt.order, co);
  const LeafChart uu = leaf_chart(s, x, LeafKind::StrongUnstable, opt.order, co);
  q.x_prime = st.point(s, st.tangent_coords(s_disp));
  q.u_x = uu.point(s, uu.tangent_coords(u_disp));
  q.dist_xx = s.dist(x, q.x_prime);
  q.dist_xux = s.dist(x, q.u_x);
  q.ratio = q.dist_xx > 0 ? q.dist_xux / q.dist_xx : std::numeric_limits<double>::infinity();
  q.in_window = q.ratio > opt.c_min && q.ratio < opt.c_max;

  const LeafChart target = leaf_chart(s, q.x_prime, LeafKind::Unstable, opt.order, co);
  const LeafChart cs = leaf_chart(s, q.u_x, LeafKind::CenterStable, opt.order, co);
  const double tol = std::max(opt.tol, 2.0 * (cs.remainder_bound + target.remainder_bound));
  const Projection pr = stable_projection(s, cs, target, tol);
  q.proj = pr.z;
  q.leaf_coord = target.L * pr.s_u;

  const Splitting sp = leaf_splitting(s, q.x_prime, opt.seed);
  q.p_uu = Vec::Zero(s.dim());
  const int nb = std::min(opt.strong_blocks, static_cast<int>(sp.blocks.size()));
  for (int i = 0; i < nb; ++i) q.p_uu += sp.component(q.leaf_coord, i);
  q.p_u = q.leaf_coord - q.p_uu;
  return q;
}

std::vector<double> geometric_grid(double lo, double hi, int n) {
  if (!(lo > 0 && hi > 0) || n < 1) fail(ErrorCode::InvalidParams, "geometric grid needs lo, hi > 0");
  std::vector<double> g;
  for (int i = 0; i < n; ++i)
    g.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

QniEstimate qni_exponent(const System& s, const Point& x, const Vec& s_dir, const Vec& u_dir,
                         const std::vector<double>& scales, const QniOptions& opt) {
  if (scales.empty()) fail(ErrorCode::DegenerateFit, "no scales");
  const auto [mn, mx] = std::minmax_element(scales.begin(), scales.end());
  if (*mn == *mx) fail(ErrorCode::DegenerateFit, "all scales equal; slope is undetermined");
  if (scales.size() < 6 || *mx / *mn < 100.0 * (1 - 1e-9))
    fail(ErrorCode::InvalidParams, "need at least 6 scales spanning 2 decades");
  if (!(s_dir.norm() > 0 && u_dir.norm() > 0)) fail(ErrorCode::InvalidParams, "zero direction");

  QniEstimate est;
  std::vector<double> lx, ly;
  const Vec sd = s_dir.normalized(), ud = u_dir.normalized();
  for (double d : scales) {
    const double us = opt.mode == QniMode::FixedUnstable ? opt.u_size : opt.ratio * d;
    Quadrilateral q = build_quadrilateral(s, x, d * sd, us * ud, opt.quad);
    const double pu = q.p_u.norm();
    if (pu >= 1e-14 && q.dist_xx > 0) {
      lx.push_back(std::log(q.dist_xx));
      ly.push_back(std::log(pu));
    }
    est.quads.push_back(std::move(q));
  }
  if (lx.size() < 2) fail(ErrorCode::DegenerateFit, "p_u vanishes at every scale");
  const LinearFit f = fit_line(lx, ly);
  est.alpha_hat = f.slope;
  est.C_hat = std::exp(f.intercept);
  est.r2 = std::clamp(f.r2, 0.0, 1.0);
  est.scale_range = {std::exp(*std::min_element(lx.begin(), lx.end())),
                     std::exp(*std::max_element(lx.begin(), lx.end()))};
  return est;
}

std::string quadrilaterals_csv(const std::vector<Quadrilateral>& qs) {
  std::ostringstream o;
  o.precision(17);
  o << "dist_xx,dist_xux,ratio,p_uu_norm,p_u_norm\n";
  for (const auto& q : qs)
    o << q.dist_xx << ',' << q.dist_xux << ',' << q.ratio << ',' << q.p_uu.norm() << ','
      << q.p_u.norm() << '\n';
  return o.str();
}

}  // namespace anosovlab
