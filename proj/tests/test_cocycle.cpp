#include <chrono>
#include <cmath>
#include <numbers>

#include "doctest.h"

#include "anosovlab/cocycle.hpp"
#include "anosovlab/errors.hpp"
#include "anosovlab/orbit_frames.hpp"

using namespace anosovlab;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::NonFinite;
}

}  // namespace

TEST_CASE("borel-smale spectrum from QR") {
  const System s = make_system(SystemSpec::borel_smale());
  const auto t0 = std::chrono::steady_clock::now();
  const LyapunovReport r = lyapunov_spectrum(s, s.base_point(), 1000.0, 1.0, 3);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double ll = std::log(kGoldenUnit);
  const std::vector<double> want{3 * ll, 2 * ll, ll, 0.0, -ll, -2 * ll, -3 * ll};
  REQUIRE(r.exponents.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(std::abs(r.exponents[i] - want[i]) < 1e-6);
  for (double se : r.std_error) CHECK(se >= 0.0);
  CHECK(r.steps == 1000);
  CHECK(secs < 1.0);
}

TEST_CASE("identity cocycle has zero exponents") {
  const LyapunovReport r = qr_spectrum(4, 200, 1.0, [](long) { return Mat(Mat::Identity(4, 4)); }, 1);
  for (double e : r.exponents) CHECK(std::abs(e) < 1e-14);
}

TEST_CASE("cat suspension spectrum") {
  const System s = make_system(SystemSpec::cat());
  const LyapunovReport r = lyapunov_spectrum(s, s.base_point(), 1000.0);
  const double l = std::log((3 + std::sqrt(5.0)) / 2);
  CHECK(std::abs(r.exponents[0] - l) < 1e-3);
  CHECK(std::abs(r.exponents[1]) < 1e-3);
  CHECK(std::abs(r.exponents[2] + l) < 1e-3);
}

TEST_CASE("halving the QR interval does not move linear exponents") {
  for (auto spec : {SystemSpec::borel_smale(), SystemSpec::sl3(), SystemSpec::cat()}) {
    const System s = make_system(spec);
    const auto a = lyapunov_spectrum(s, s.base_point(), 400.0, 1.0, 1);
    const auto b = lyapunov_spectrum(s, s.base_point(), 400.0, 0.5, 1);
    for (std::size_t i = 0; i < a.exponents.size(); ++i) CHECK(std::abs(a.exponents[i] - b.exponents[i]) < 1e-8);
  }
}

TEST_CASE("perturbed spectrum: volume preserving and close to the linear one") {
  const System s = make_system(SystemSpec::borel_smale_perturbed(0.01));
  const auto r = lyapunov_spectrum(s, s.base_point(), 400.0, 1.0, 2);
  const System ls = make_system(SystemSpec::borel_smale());
  const auto& lin = *ls.exact_exponents();
  double sum = 0.0, se_sum = 0.0;
  for (std::size_t i = 0; i < 7; ++i) {
    sum += r.exponents[i];
    se_sum += r.std_error[i];
    CHECK(std::abs(r.exponents[i] - lin[i]) < 0.02);
  }
  // Average log-Jacobian of the unit-time map is zero: the flow preserves Haar measure.
  CHECK(std::abs(sum) <= 10 * se_sum + 1e-9);
}

TEST_CASE("borel-smale splitting is the coordinate axes") {
  const System s = make_system(SystemSpec::borel_smale());
  const Splitting sp = oseledets_splitting(s, s.random_point(4));
  REQUIRE(sp.blocks.size() == 7);
  CHECK(sp.theta == doctest::Approx(std::numbers::pi / 2).epsilon(1e-9));
  const int axis[7] = {0, 4, 2, 6, 5, 1, 3};  // x1, y2, z1, s, z2, y1, x2
  for (int i = 0; i < 7; ++i) {
    CHECK(std::abs(std::abs(sp.blocks[static_cast<std::size_t>(i)].basis(axis[i], 0)) - 1.0) < 1e-9);
  }
}

TEST_CASE("SL3 unstable blocks are z, y, x") {
  const System s = make_system(SystemSpec::sl3());
  const Splitting sp = oseledets_splitting(s, s.base_point());
  REQUIRE(sp.blocks.size() == 7);  // two-dimensional neutral block
  CHECK(std::abs(std::abs(sp.blocks[0].basis(2, 0)) - 1.0) < 1e-9);
  CHECK(std::abs(std::abs(sp.blocks[1].basis(1, 0)) - 1.0) < 1e-9);
  CHECK(std::abs(std::abs(sp.blocks[2].basis(0, 0)) - 1.0) < 1e-9);
  CHECK(sp.blocks[3].basis.cols() == 2);
}

TEST_CASE("rotation-only cocycle has no hyperbolic splitting") {
  const double a = 0.7;
  Mat r(3, 3);
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  const System dummy = make_system(SystemSpec::cat());
  CHECK(code_of([&] { (void)splitting_from_cocycle(3, 1.0, 50, 50, [&](long) { return r; }, 0, dummy.base_point()); }) ==
        ErrorCode::IllConditioned);
}

TEST_CASE("lyapunov norm on a constant cocycle grows exactly at the block rate") {
  const System s = make_system(SystemSpec::borel_smale());
  const Point x = s.base_point();
  const Splitting sp = oseledets_splitting(s, x);
  for (std::size_t i = 0; i < sp.blocks.size(); ++i) {
    const Vec w = sp.blocks[i].basis.col(0);
    const double n0 = lyapunov_norm(s, sp, w);
    CHECK(n0 == doctest::Approx(1.0).epsilon(1e-12));
    for (double t : {0.5, 1.0, 3.0}) {
      const double nt = lyapunov_norm(s, sp, s.tangent_flow(x, t) * w);
      CHECK(std::log(nt / n0) == doctest::Approx(sp.blocks[i].exponent * t).epsilon(1e-10));
    }
    CHECK(lyapunov_norm(s, sp, 2.0 * w) == doctest::Approx(2.0 * n0).epsilon(1e-14));
  }
}

TEST_CASE("regular set density") {
  const System lin = make_system(SystemSpec::borel_smale());
  CHECK(regular_set_density(lin, lin.base_point(), 100.0, std::numbers::pi / 4) == 1.0);
  CHECK(regular_set_density(lin, lin.base_point(), 100.0, 1.6) == 0.0);
  const System p = make_system(SystemSpec::borel_smale_perturbed(0.01));
  CHECK(regular_set_density(p, p.base_point(), 1000.0, 0.1) >= 0.99);
}

TEST_CASE("lambda2 cocycle on borel-smale") {
  const System s = make_system(SystemSpec::borel_smale());
  const Point x = s.random_point(8);
  const double ll = std::log(kGoldenUnit);
  CHECK(cocycle_lambda2(s, x, 0.0) == 0.0);
  for (double t : {0.5, 2.0, 7.0}) CHECK(cocycle_lambda2(s, x, t) == doctest::Approx(2 * t * ll).epsilon(1e-10));
  const double t = 1.3, u = 2.1;
  CHECK(std::abs(cocycle_lambda2(s, x, t + u) - cocycle_lambda2(s, s.flow(x, u), t) - cocycle_lambda2(s, x, u)) < 1e-9);
}

TEST_CASE("splitting equivariance along the orbit") {
  // Blocks are intersections of fast and slow flags; push fast flags forward and pull
  // slow flags back, the numerically stable directions for each.
  auto span = [](const Splitting& sp, std::size_t lo, std::size_t hi) {
    Mat m(sp.frame().rows(), 0);
    for (std::size_t i = lo; i < hi; ++i) {
      Mat n(m.rows(), m.cols() + sp.blocks[i].basis.cols());
      n << m, sp.blocks[i].basis;
      m = n;
    }
    return m;
  };
  for (auto spec : {SystemSpec::borel_smale(), SystemSpec::borel_smale_perturbed(0.01)}) {
    const System s = make_system(spec);
    const bool pert = spec.kind == SystemKind::BorelSmalePerturbed;
    const OrbitFrames of(s, s.base_point(), -30.0, 40.0, 1.0 / 8);
    const Splitting a = of.splitting(0.0);
    const std::size_t nb = a.blocks.size();
    for (double t : {1.0, 5.0, 10.0}) {
      const Splitting b = of.splitting(t);
      const Mat j = of.jacobian(0.0, t);
      const Mat ji = of.jacobian(t, 0.0);
      for (std::size_t i = 1; i < nb; ++i) {
        const Vec fast = principal_angles(j * span(a, 0, i), span(b, 0, i));
        const Vec slow = principal_angles(ji * span(b, i, nb), span(a, i, nb));
        CHECK(fast.maxCoeff() < (pert ? 1e-3 : 1e-6));
        CHECK(slow.maxCoeff() < (pert ? 1e-3 : 1e-6));
      }
    }
  }
}

TEST_CASE("lyapunov norm two-sided growth bound on the perturbed model") {
  const System s = make_system(SystemSpec::borel_smale_perturbed(0.01));
  const OrbitFrames of(s, s.base_point(), -30.0, 45.0, 1.0 / 8);
  const Splitting sp = of.splitting(0.0);
  const double eps = default_epsilon(sp);
  for (std::size_t i = 0; i < sp.blocks.size(); ++i) {
    const Vec w = sp.blocks[i].basis.col(0);
    const double n0 = of.lyapunov_norm(0.0, w);
    for (double t : {1.0, 2.0, 5.0}) {
      const double r = std::log(of.lyapunov_norm(t, of.jacobian(0.0, t) * w) / n0);
      CHECK(r >= (sp.blocks[i].exponent - 2 * eps) * t - 1e-9);
      CHECK(r <= (sp.blocks[i].exponent + 2 * eps) * t + 1e-9);
    }
  }
}
