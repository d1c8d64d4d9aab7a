#include "anosovlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "anosovlab/errors.hpp"
#include "anosovlab/numerics.hpp"
#include "anosovlab/rng.hpp"

namespace anosovlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_quotient(const System& s) {
  if (!s.quotiented())
    fail(ErrorCode::Unsupported, std::string(kind_name(s.kind())) + " is chart-local");
}

Vec strong_unstable_axis(const System& s) {
  const Mat d = s.leaf_directions(LeafKind::StrongUnstable);
  if (d.cols() != 1) fail(ErrorCode::Unsupported, "strong-unstable leaf is not one-dimensional");
  return d.col(0).normalized();
}

// λ1(x, t): exact on homogeneous models, finite-time growth of the strong-unstable
// axis otherwise.
double top_growth(const System& s, const Point& x, const Vec& e, double t) {
  if (s.homogeneous()) return s.reference_exponents().front() * t;
  return std::log((s.tangent_flow(x, t) * e).norm());
}

// Pair (g_t y, g_t h_{α(t)} y) for y on the strong-unstable leaf of x.
struct LeafPair {
  Point a, b;
};

LeafPair leaf_pair(const System& s, const Point& x, const Vec& e, double u, double t) {
  const Point y = s.exp_at(x, u * e);
  const Point yt = s.flow(y, t);
  Vec d = e;
  if (!s.homogeneous()) d = s.tangent_flow(y, t) * e * std::exp(-top_growth(s, x, e, t));
  return {yt, s.exp_at(yt, d)};
}

}  // namespace

EmpiricalMeasure EmpiricalMeasure::from_samples(std::vector<std::pair<double, double>> samples) {
  if (samples.empty()) fail(ErrorCode::InvalidParams, "measure needs at least one sample");
  EmpiricalMeasure m;
  std::stable_sort(samples.begin(), samples.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [p, w] : samples) {
    if (!std::isfinite(p) || !std::isfinite(w) || w < 0)
      fail(ErrorCode::InvalidParams, "positions must be finite and weights nonnegative");
    m.total += w;
  }
  if (!(m.total > 0)) fail(ErrorCode::InvalidParams, "total weight must be positive");
  m.support_min = samples.front().first;
  m.support_max = samples.back().first;
  m.samples = std::move(samples);
  return m;
}

EmpiricalMeasure EmpiricalMeasure::scaled(double c) const {
  if (!(c > 0)) fail(ErrorCode::InvalidParams, "scale must be positive");
  auto s = samples;
  for (auto& p : s) p.second *= c;
  return from_samples(std::move(s));
}

EmpiricalMeasure merge(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  auto s = a.samples;
  s.insert(s.end(), b.samples.begin(), b.samples.end());
  return EmpiricalMeasure::from_samples(std::move(s));
}

double wasserstein_1d(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2) {
  if (mu1.samples.empty() || mu2.samples.empty())
    fail(ErrorCode::InvalidParams, "measures must be nonempty");
  // Walk the union of atoms; both cumulative functions are right-continuous steps.
  std::size_t i = 0, j = 0;
  double c1 = 0.0, c2 = 0.0, acc = 0.0;
  double x = std::min(mu1.samples.front().first, mu2.samples.front().first);
  while (i < mu1.samples.size() || j < mu2.samples.size()) {
    const double n1 = i < mu1.samples.size() ? mu1.samples[i].first : std::numeric_limits<double>::infinity();
    const double n2 = j < mu2.samples.size() ? mu2.samples[j].first : std::numeric_limits<double>::infinity();
    const double nx = std::min(n1, n2);
    const double diff = std::abs(c1 / mu1.total - c2 / mu2.total);
    // Differences at the rounding level of the normalization are not mass.
    if (diff > 64 * std::numeric_limits<double>::epsilon()) acc += diff * (nx - x);
    x = nx;
    while (i < mu1.samples.size() && mu1.samples[i].first == nx) c1 += mu1.samples[i++].second;
    while (j < mu2.samples.size() && mu2.samples[j].first == nx) c2 += mu2.samples[j++].second;
  }
  return acc;
}

EmpiricalMeasure empirical_leaf_measure(const System& s, const Point& x, int n_samples,
                                        double window, std::uint64_t seed,
                                        const LeafMeasureOptions& opt) {
  require_quotient(s);
  if (n_samples < 1 || window < 0) fail(ErrorCode::InvalidParams, "need samples and a window >= 0");
  const Mat dirs = s.leaf_directions(opt.leaf);
  if (dirs.cols() < 1) fail(ErrorCode::InvalidParams, "leaf has no directions");
  const Vec e = dirs.col(0).normalized();

  const int per = 1 << opt.grid_level;
  const std::vector<int> periodic = s.periodic_coords();
  auto box_of = [&](const Point& p) {
    const Vec w = s.fundamental_coords(p);
    long key = 0;
    for (int i : periodic)
      key = key * per + std::min(per - 1, static_cast<int>(std::floor(w[i] * per)));
    return key;
  };

  std::map<long, long> visits;
  const long steps = std::lround(opt.T_visit / opt.dt_visit);
  Point p = s.lattice_reduce(x);
  for (long k = 0; k < steps; ++k) {
    p = s.flow(p, opt.dt_visit);
    ++visits[box_of(p)];
  }
  const double boxes = std::pow(static_cast<double>(per), static_cast<double>(periodic.size()));
  const double mean_count = static_cast<double>(steps) / boxes;

  Rng rng(seed);
  std::vector<std::pair<double, double>> samples;
  const int n = window == 0.0 ? 1 : n_samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = opt.lo + (window == 0.0 ? 0.0 : window * rng.uniform());
    const auto it = visits.find(box_of(s.exp_at(x, t * e)));
    if (it == visits.end()) fail(ErrorCode::EmptyBox, "orbit never visits a sampled box");
    samples.emplace_back(t, static_cast<double>(it->second) / mean_count);
  }
  return EmpiricalMeasure::from_samples(std::move(samples));
}

std::vector<TestFunction> trigonometric_tests() {
  return {
      {"cos(2πw0)", [](const Vec& w) { return std::cos(kTwoPi * w[0]); }, 0.0},
      {"sin(2πw1)", [](const Vec& w) { return std::sin(kTwoPi * w[1]); }, 0.0},
      {"cos(2π(w0+w1))", [](const Vec& w) { return std::cos(kTwoPi * (w[0] + w[1])); }, 0.0},
      {"sin(2π(w0-2w1))", [](const Vec& w) { return std::sin(kTwoPi * (w[0] - 2 * w[1])); }, 0.0},
      {"cos(2πw0)cos(2πw2)",
       [](const Vec& w) { return std::cos(kTwoPi * w[0]) * std::cos(kTwoPi * w[2]); }, 0.0},
  };
}

EquidistributionReport birkhoff_equidistribution(const System& s, const Point& x,
                                                 const std::vector<TestFunction>& tests, double T,
                                                 double dt, const std::string& reference,
                                                 const BirkhoffOptions& opt) {
  require_quotient(s);
  if (reference != "haar") fail(ErrorCode::Unsupported, "unknown reference measure " + reference);
  if (!(T > 0 && dt > 0 && dt <= T)) fail(ErrorCode::InvalidParams, "need 0 < dt <= T");
  if (tests.empty()) fail(ErrorCode::InvalidParams, "no test functions");

  const long steps = std::lround(T / dt);
  const int np = std::max(1, opt.curve_points);
  Point p = s.lattice_reduce(opt.h == 0.0 ? x : s.exp_at(x, opt.h * strong_unstable_axis(s)));
  p = s.flow(p, 0.5 * dt);
  std::vector<double> sums(tests.size(), 0.0);
  EquidistributionReport r;
  long next = 1;
  for (long k = 0; k < steps; ++k) {
    const Vec w = s.fundamental_coords(p);
    for (std::size_t i = 0; i < tests.size(); ++i) sums[i] += tests[i].f(w);
    p = s.flow(p, dt);
    if ((k + 1) * np >= next * steps) {
      const double t = static_cast<double>(k + 1) * dt;
      double sup = 0.0;
      for (std::size_t i = 0; i < tests.size(); ++i)
        sup = std::max(sup, std::abs(sums[i] / static_cast<double>(k + 1) - tests[i].reference));
      r.discrepancy_curve.emplace_back(t, sup);
      ++next;
    }
  }
  for (std::size_t i = 0; i < tests.size(); ++i)
    r.test_values.emplace_back(sums[i] / static_cast<double>(steps), tests[i].reference);
  r.T_final = static_cast<double>(steps) * dt;
  return r;
}

CorrelationEstimate correlation_decay(const System& s, const Point& x, const Observable& phi,
                                      double t, double s_time, int n_u, std::uint64_t seed) {
  require_quotient(s);
  if (n_u < 2) fail(ErrorCode::InvalidParams, "need at least two samples");
  const Vec e = strong_unstable_axis(s);
  Rng rng(seed);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(n_u));
  for (int i = 0; i < n_u; ++i) {
    const double u = rng.uniform();
    const LeafPair a = leaf_pair(s, x, e, u, t);
    const LeafPair b = leaf_pair(s, x, e, u, s_time);
    const double ft = phi(s.fundamental_coords(a.a)) - phi(s.fundamental_coords(a.b));
    const double fs = phi(s.fundamental_coords(b.a)) - phi(s.fundamental_coords(b.b));
    vals.push_back(ft * fs);
  }
  return {mean(vals), sample_stddev(vals) / std::sqrt(static_cast<double>(n_u))};
}

CorrelationFit correlation_fit(const System& s, const Point& x, const Observable& phi,
                               double s_time, const std::vector<double>& gaps, int n_u,
                               std::uint64_t seed) {
  if (gaps.size() < 2) fail(ErrorCode::InvalidParams, "need at least two gaps");
  CorrelationFit f;
  f.gaps = gaps;
  std::vector<double> y;
  for (double g : gaps) {
    f.estimates.push_back(correlation_decay(s, x, phi, s_time + g, s_time, n_u, seed));
    y.push_back(std::abs(f.estimates.back().value));
    if (y.back() > 2 * f.estimates.back().std_error) ++f.significant;
  }
  // For fixed γ the optimal C is closed form; minimize the profile residual over signed γ.
  auto profile = [&](double gamma, double& C) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      const double e = std::exp(-gamma * gaps[i]);
      num += y[i] * e;
      den += e * e;
    }
    C = den > 0 ? num / den : 0.0;
    double rss = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      const double r = y[i] - C * std::exp(-gamma * gaps[i]);
      rss += r * r;
    }
    return rss;
  };
  constexpr double kStep = 0.005;
  double best_g = 0.0, best = std::numeric_limits<double>::infinity(), C = 0.0;
  for (int k = -400; k <= 4000; ++k) {
    const double r = profile(k * kStep, C);
    if (r < best) best = r, best_g = k * kStep;
  }
  double lo = best_g - kStep, hi = best_g + kStep;
  for (int it = 0; it < 60; ++it) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (profile(m1, C) < profile(m2, C)) hi = m2; else lo = m1;
  }
  f.gamma = 0.5 * (lo + hi);
  const double rss = profile(f.gamma, f.C);
  const double ybar = mean(y);
  double tss = 0.0;
  for (double v : y) tss += (v - ybar) * (v - ybar);
  f.r2 = tss > 0 ? 1.0 - rss / tss : 0.0;
  return f;
}

double lln_average(const System& s, const Point& x, const Observable& phi, double T, int n_u,
                   std::uint64_t seed, double dt) {
  require_quotient(s);
  if (!(T > 0 && dt > 0) || n_u < 1) fail(ErrorCode::InvalidParams, "need T, dt > 0 and samples");
  const Vec e = strong_unstable_axis(s);
  const long steps = std::lround(T / dt);
  Rng rng(seed);
  std::vector<double> avgs;
  for (int i = 0; i < n_u; ++i) {
    const double u = rng.uniform();
    Point y = s.flow(s.exp_at(x, u * e), 0.5 * dt);
    Vec v = s.homogeneous() ? e : Vec(s.tangent_flow(s.exp_at(x, u * e), 0.5 * dt) * e);
    Point xt = s.flow(x, 0.5 * dt);
    double lam = top_growth(s, x, e, 0.5 * dt);
    double acc = 0.0;
    for (long k = 0; k < steps; ++k) {
      const Vec d = s.homogeneous() ? e : Vec(v * std::exp(-lam));
      acc += phi(s.fundamental_coords(y)) - phi(s.fundamental_coords(s.exp_at(y, d)));
      if (!s.homogeneous()) {
        v = s.tangent_flow(y, dt) * v;
        const double g = (s.tangent_flow(xt, dt) * e).norm();
        lam += std::log(g);
        xt = s.flow(xt, dt);
      }
      y = s.flow(y, dt);
    }
    avgs.push_back(std::abs(acc / static_cast<double>(steps)));
  }
  return quantile(avgs, 0.95);
}

}  // namespace anosovlab
