#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"

#include "anosovlab/errors.hpp"
#include "anosovlab/rng.hpp"
#include "anosovlab/systems.hpp"

using namespace anosovlab;

namespace {

double max_abs(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

double wrap_gap(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i]);
    m = std::max(m, std::min(d, 1.0 - d));
  }
  return m;
}

std::vector<SystemSpec> all_specs() {
  return {SystemSpec::cat(), SystemSpec::borel_smale(), SystemSpec::borel_smale_perturbed(0.01),
          SystemSpec::asl2(), SystemSpec::sl3()};
}

}  // namespace

TEST_CASE("borel-smale exponents are the signed weights times log lambda") {
  const System s = make_system(SystemSpec::borel_smale(3, -2));
  REQUIRE(s.exact_exponents());
  const double ll = std::log(kGoldenUnit);
  const std::vector<double> want{3 * ll, 2 * ll, ll, 0.0, -ll, -2 * ll, -3 * ll};
  const auto& got = *s.exact_exponents();
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-15));
  const BlockDims d = s.flow_dim_split();
  CHECK(d.total() == s.dim());
  CHECK(d.stable == 3);
  CHECK(d.neutral == 1);
  CHECK(d.strong_unstable == 1);
}

TEST_CASE("invalid specs are rejected") {
  auto code_of = [](const SystemSpec& spec) {
    try {
      (void)make_system(spec);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::NonFinite;
  };
  CHECK(code_of(SystemSpec::borel_smale(1, -1)) == ErrorCode::InvalidParams);
  CHECK(code_of(SystemSpec::borel_smale(3, -2, 1.0)) == ErrorCode::InvalidParams);
  CHECK(code_of(SystemSpec::borel_smale(0, 2)) == ErrorCode::InvalidParams);
  CHECK(code_of(SystemSpec::borel_smale_perturbed(0.2)) == ErrorCode::InvalidParams);
  CHECK(code_of(SystemSpec::borel_smale_perturbed(0.01, 3, -2, 3.0)) == ErrorCode::InvalidParams);
  CHECK(code_of(SystemSpec::cat({1, 1, 0, 1})) == ErrorCode::InvalidParams);
  CHECK(code_of(SystemSpec::cat({2, 1, 1, 2})) == ErrorCode::InvalidParams);
}

TEST_CASE("perturbed model has no exact exponents") {
  const System s = make_system(SystemSpec::borel_smale_perturbed(0.01));
  CHECK_FALSE(s.exact_exponents());
  for (auto spec : {SystemSpec::cat(), SystemSpec::borel_smale(), SystemSpec::asl2(), SystemSpec::sl3()})
    CHECK(make_system(spec).exact_exponents());
}

TEST_CASE("cat suspension exponents match the 2x2 eigenvalues") {
  for (auto m : {std::array<int, 4>{2, 1, 1, 1}, std::array<int, 4>{3, 2, 1, 1}, std::array<int, 4>{5, 2, 2, 1}}) {
    const System s = make_system(SystemSpec::cat(m));
    Eigen::Matrix2d a;
    a << m[0], m[1], m[2], m[3];
    Eigen::EigenSolver<Eigen::Matrix2d> es(a);
    std::vector<double> ev{std::log(std::abs(es.eigenvalues()[0].real())),
                           std::log(std::abs(es.eigenvalues()[1].real()))};
    std::sort(ev.rbegin(), ev.rend());
    const auto& ex = *s.exact_exponents();
    CHECK(ex[0] == doctest::Approx(ev[0]).epsilon(1e-13));
    CHECK(ex[1] == 0.0);
    CHECK(ex[2] == doctest::Approx(ev[1]).epsilon(1e-13));
  }
}

TEST_CASE("flow at time zero is the identity") {
  for (const auto& spec : all_specs()) {
    const System s = make_system(spec);
    const Point x = s.random_point(7);
    CHECK(s.flow(x, 0.0).coords == x.coords);
    CHECK(s.tangent_flow(x, 0.0).isApprox(Mat::Identity(s.dim(), s.dim())));
  }
}

TEST_CASE("ASL2 conjugation scales unipotent coordinates") {
  const System s = make_system(SystemSpec::asl2());
  const Point e = s.base_point();
  Vec v(5);
  v << 0.3, -0.2, 0.0, 0.15, 0.25;
  const double t = 0.7;
  // a_t g a_{-t} = displacement between the flowed identity and the flowed g.
  const Vec d = s.displacement(s.flow(e, t), s.flow(s.exp_at(e, v), t));
  CHECK(d[0] == doctest::Approx(v[0] * std::exp(2 * t)).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(v[1] * std::exp(t)).epsilon(1e-12));
  CHECK(d[3] == doctest::Approx(v[3] * std::exp(-2 * t)).epsilon(1e-12));
  CHECK(d[4] == doctest::Approx(v[4] * std::exp(-t)).epsilon(1e-12));
}

TEST_CASE("SL3 conjugation scales upper unipotent coordinates by e^t, e^4t, e^5t") {
  const System s = make_system(SystemSpec::sl3());
  const Point e = s.base_point();
  Vec v = Vec::Zero(8);
  v[0] = 0.2;
  v[1] = -0.1;
  v[2] = 0.05;
  const double t = 0.4;
  Eigen::Matrix3d g;
  g << 1, v[0], v[2], 0, 1, v[1], 0, 0, 1;
  const Eigen::Matrix3d a = Eigen::Vector3d(std::exp(2 * t), std::exp(t), std::exp(-3 * t)).asDiagonal();
  const Eigen::Matrix3d c = a * g * a.inverse();
  CHECK(c(0, 1) == doctest::Approx(v[0] * std::exp(t)).epsilon(1e-13));
  CHECK(c(1, 2) == doctest::Approx(v[1] * std::exp(4 * t)).epsilon(1e-13));
  CHECK(c(0, 2) == doctest::Approx(v[2] * std::exp(5 * t)).epsilon(1e-13));
  const Vec d = s.displacement(s.flow(e, t), s.flow(s.exp_at(e, v), t));
  CHECK(d[0] == doctest::Approx(c(0, 1)).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(c(1, 2)).epsilon(1e-12));
  CHECK(d[2] == doctest::Approx(c(0, 2)).epsilon(1e-12));
}

TEST_CASE("matrix chart coordinates invert the UDL product") {
  for (auto spec : {SystemSpec::sl3(), SystemSpec::asl2()}) {
    const System s = make_system(spec);
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
      const Vec v = 0.4 * rng.normal_vector(s.dim());
      const Point g = s.exp_at(s.base_point(), v);
      CHECK(max_abs(s.displacement(s.base_point(), g) - v) < 1e-12);
    }
  }
}

TEST_CASE("perturbed tangent flow matches a finite-difference oracle") {
  const System s = make_system(SystemSpec::borel_smale_perturbed(0.01));
  const System lin = make_system(SystemSpec::borel_smale());
  for (int k = 0; k < 10; ++k) {
    const Point x = s.random_point(derive_seed(5, 1, static_cast<std::uint64_t>(k)));
    const double t = 0.8;
    const Mat j = s.tangent_flow(x, t);
    const Point gx = s.flow_lift(x, t);
    Mat fd(7, 7);
    const double h = 1e-6;
    for (int c = 0; c < 7; ++c) {
      Vec e = Vec::Zero(7);
      e[c] = h;
      const Vec plus = s.displacement(gx, s.flow_lift(s.exp_at(x, e), t));
      const Vec minus = s.displacement(gx, s.flow_lift(s.exp_at(x, -e), t));
      fd.col(c) = (plus - minus) / (2 * h);
    }
    CHECK((j - fd).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(j.determinant() == doctest::Approx(lin.tangent_flow(x, t).determinant()).epsilon(1e-9));
    // Off the central fiber coordinate z1 the derivative agrees with the linear model.
    const Mat l = lin.tangent_flow(x, t);
    for (int r = 0; r < 7; ++r) {
      if (r == 2) continue;
      CHECK((j.row(r) - l.row(r)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("flow group law on the cover") {
  for (const auto& spec : all_specs()) {
    const System s = make_system(spec);
    const bool pert = spec.kind == SystemKind::BorelSmalePerturbed;
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> ut(-1.5, 1.5);
    for (int i = 0; i < 100; ++i) {
      const Point x = s.random_point(derive_seed(9, 0, static_cast<std::uint64_t>(i)));
      const double t = ut(eng), u = ut(eng);
      const Point a = s.flow_lift(x, t + u);
      const Point b = s.flow_lift(s.flow_lift(x, u), t);
      const double scale = std::max(1.0, max_abs(a.coords));
      CHECK(max_abs(a.coords - b.coords) / scale < (pert ? 1e-6 : 1e-9));
    }
  }
}

TEST_CASE("reduced flow group law on quotiented models") {
  for (auto spec : {SystemSpec::cat(), SystemSpec::borel_smale(), SystemSpec::borel_smale_perturbed(0.01)}) {
    const System s = make_system(spec);
    // Reduced orbits separate at the top rate, so keep t + u where round-off stays small.
    std::mt19937_64 eng(4);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
      const Point x = s.random_point(derive_seed(10, 0, static_cast<std::uint64_t>(i)));
      const double t = ut(eng), u = ut(eng);
      const Point a = s.flow(x, t + u);
      const Point b = s.flow(s.flow(x, u), t);
      CHECK(a.reduced);
      CHECK(wrap_gap(s.fundamental_coords(a), s.fundamental_coords(b)) < 1e-6);
    }
  }
}

TEST_CASE("tangent cocycle identity") {
  for (const auto& spec : all_specs()) {
    const System s = make_system(spec);
    const bool pert = spec.kind == SystemKind::BorelSmalePerturbed;
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> ut(0.0, 2.5);
    for (int i = 0; i < 100; ++i) {
      const Point x = s.random_point(derive_seed(12, 0, static_cast<std::uint64_t>(i)));
      const double t = ut(eng), u = ut(eng);
      const Mat lhs = s.tangent_flow(x, t + u);
      const Mat rhs = s.tangent_flow(s.flow(x, u), t) * s.tangent_flow(x, u);
      const double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() / scale < (pert ? 1e-6 : 1e-9));
    }
  }
}

TEST_CASE("linear tangent spectrum equals exp of exact exponents") {
  for (auto spec : {SystemSpec::cat(), SystemSpec::borel_smale(), SystemSpec::asl2(), SystemSpec::sl3()}) {
    const System s = make_system(spec);
    const Mat j = s.tangent_flow(s.base_point(), 1.0);
    Eigen::EigenSolver<Mat> es(j);
    std::vector<double> mags;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mags.push_back(std::abs(es.eigenvalues()[i]));
    std::sort(mags.rbegin(), mags.rend());
    const auto& ex = *s.exact_exponents();
    for (std::size_t i = 0; i < mags.size(); ++i)
      CHECK(std::abs(mags[i] - std::exp(ex[i])) < 1e-12 * std::max(1.0, mags[i]));
  }
}

TEST_CASE("torus reduction") {
  const System s = make_system(SystemSpec::cat());
  const Point x = s.from_fundamental(Eigen::Vector3d(0.25, 0.5, 0.0));
  Point y = x;
  y.coords[0] += 1.0;
  y.reduced = false;
  const Point r = s.lattice_reduce(y);
  CHECK(r.reduced);
  CHECK(r.coords[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(r.coords[1] == doctest::Approx(0.5).epsilon(1e-14));
  // Shifting the suspension coordinate by one period lands on the same point.
  Point z = x;
  z.coords[2] += 1.0;
  CHECK(wrap_gap(s.fundamental_coords(z), s.fundamental_coords(x)) < 1e-12);
}

TEST_CASE("lattice_reduce is idempotent and commutes with the flow") {
  for (auto spec : {SystemSpec::cat(), SystemSpec::borel_smale(), SystemSpec::borel_smale_perturbed(0.01)}) {
    const System s = make_system(spec);
    for (int i = 0; i < 50; ++i) {
      const Point x = s.random_point(derive_seed(13, 0, static_cast<std::uint64_t>(i)));
      const Point r = s.lattice_reduce(x);
      CHECK(max_abs(s.lattice_reduce(r).coords - r.coords) < 1e-12);
      for (double f : s.fundamental_coords(r)) {
        CHECK(f >= 0.0);
        CHECK(f < 1.0);
      }
      const Point a = s.lattice_reduce(s.flow_lift(x, 0.6));
      const Point b = s.flow(r, 0.6);
      CHECK(wrap_gap(s.fundamental_coords(a), s.fundamental_coords(b)) < 1e-9);
    }
  }
}

TEST_CASE("borel-smale reduction uses the group law on both Heisenberg factors") {
  const System s = make_system(SystemSpec::borel_smale());
  const double phi = (1 + std::sqrt(5.0)) / 2, phic = (1 - std::sqrt(5.0)) / 2;
  const Point x = s.random_point(21);
  // Right-multiply by a lattice element (gamma, sigma gamma) at level 0, built from
  // explicit integer coordinates in the basis 1, phi.
  auto emb = [&](int m, int n) { return std::pair{m + n * phi, m + n * phic}; };
  const auto [ax, bx] = emb(2, -1);
  const auto [ay, by] = emb(-1, 3);
  const auto [az, bz] = emb(4, 1);
  Vec g(7);
  g << ax, ay, az, bx, by, bz, 0.0;
  // Point·γ: translate in N at the point's level s, i.e. by A^s γ.
  const double s0 = x.coords[6];
  Vec ga = g;
  const double ll = std::log(kGoldenUnit);
  const double w[6] = {3, -2, 1, -3, 2, -1};
  for (int i = 0; i < 6; ++i) ga[i] *= std::exp(w[i] * ll * s0);
  Vec y = x.coords;
  for (int f = 0; f < 6; f += 3) {
    y[f + 2] = x.coords[f + 2] + ga[f + 2] + x.coords[f] * ga[f + 1];
    y[f] += ga[f];
    y[f + 1] += ga[f + 1];
  }
  const Point r1 = s.lattice_reduce(x);
  const Point r2 = s.lattice_reduce(Point{y, false});
  CHECK(max_abs(r1.coords - r2.coords) < 1e-9);
  // Coordinatewise translation (ignoring the z correction) is a different point.
  Vec bad = x.coords;
  for (int i = 0; i < 6; ++i) bad[i] += ga[i];
  CHECK(max_abs(s.lattice_reduce(Point{bad, false}).coords - r1.coords) > 1e-6);
}

TEST_CASE("chart-local models have no lattice") {
  for (auto spec : {SystemSpec::asl2(), SystemSpec::sl3()}) {
    const System s = make_system(spec);
    try {
      (void)s.lattice_reduce(s.base_point());
      FAIL("expected Unsupported");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Unsupported);
    }
  }
}

TEST_CASE("chart-local orbits leaving the chart are reported") {
  const System s = make_system(SystemSpec::sl3());
  try {
    (void)s.flow(s.random_point(1), 20.0);
    FAIL("expected DegenerateOrbit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateOrbit);
  }
}

TEST_CASE("heisenberg reduction examples") {
  Eigen::Vector3d r = heisenberg_reduce({1.2, 0.0, 0.0});
  CHECK(r[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 0.0);
}

TEST_CASE("heisenberg reduction agrees with brute-force lattice words") {
  const std::vector<Eigen::Vector3d> gens{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  auto in_cube = [](const Eigen::Vector3d& p) {
    return (p.array() >= 0.0).all() && (p.array() < 1.0 - 1e-12).all();
  };
  auto brute = [&](const Eigen::Vector3d& p) {
    std::vector<Eigen::Vector3d> found;
    std::function<void(const Eigen::Vector3d&, int)> rec = [&](const Eigen::Vector3d& q, int depth) {
      if (in_cube(q)) found.push_back(q);
      if (depth == 3) return;
      for (const auto& g : gens) rec(heisenberg_mul(q, g), depth + 1);
    };
    rec(p, 0);
    return found;
  };
  for (const Eigen::Vector3d p : {Eigen::Vector3d(1.0, 0.5, 0.0), Eigen::Vector3d(0.3, 1.4, 0.2),
                                  Eigen::Vector3d(1.7, 1.2, 0.9), Eigen::Vector3d(-0.4, 0.6, 1.3),
                                  Eigen::Vector3d(0.5, -0.25, 0.1)}) {
    const auto hits = brute(p);
    REQUIRE_FALSE(hits.empty());
    const Eigen::Vector3d r = heisenberg_reduce(p);
    for (const auto& h : hits) CHECK((h - r).cwiseAbs().maxCoeff() < 1e-12);
  }
  const Eigen::Vector3d r = heisenberg_reduce({1.0, 0.5, 0.0});
  CHECK(r.isApprox(Eigen::Vector3d(0.0, 0.5, 0.0)));
}

TEST_CASE("transport agrees with flowing both points") {
  for (const auto& spec : all_specs()) {
    const System s = make_system(spec);
    const Point x = s.random_point(31);
    Rng rng(2);
    const Vec v = 1e-3 * rng.unit_vector(s.dim());
    const double t = 1.5;
    const auto [gx, d] = s.transport(x, v, t);
    const Vec direct = s.displacement(s.flow_lift(x, t), s.flow_lift(s.exp_at(x, v), t));
    CHECK(max_abs(d - direct) < 1e-9);
  }
}
