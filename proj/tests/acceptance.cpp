// One PASS/FAIL line per acceptance criterion. Exit status 0 iff every line passes.
// Usage: acceptance [--cli PATH_TO_anosovlab] [--only N]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "anosovlab/cocycle.hpp"
#include "anosovlab/errors.hpp"
#include "anosovlab/factorize.hpp"
#include "anosovlab/leafgeom.hpp"
#include "anosovlab/measures.hpp"
#include "anosovlab/numerics.hpp"
#include "anosovlab/rng.hpp"

using namespace anosovlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vec axis(int dim, int i, double v = 1.0) {
  Vec e = Vec::Zero(dim);
  e[i] = v;
  return e;
}

Vec one(double v) { return Vec::Constant(1, v); }

Outcome c1() {
  const System s(SystemSpec::borel_smale(3, -2));
  Stopwatch w;
  const LyapunovReport r = lyapunov_spectrum(s, s.base_point(), 1000.0, 1.0, 0);
  const double secs = w.seconds();
  const double l = std::log((3 + std::sqrt(5.0)) / 2);
  const double want[] = {3 * l, 2 * l, l, 0, -l, -2 * l, -3 * l};
  double err = 0;
  for (int i = 0; i < 7; ++i) err = std::max(err, std::abs(r.exponents[i] - want[i]));
  return {r.exponents.size() == 7 && err <= 1e-6 && secs < 1.0,
          fmt("max |error| = %.2e (tol 1e-6), %.3f s (< 1 s)", err, secs)};
}

Outcome c2() {
  const System s(SystemSpec::cat());
  Stopwatch w;
  const LyapunovReport r = lyapunov_spectrum(s, s.base_point(), 1000.0, 1.0, 0);
  const double secs = w.seconds();
  Eigen::Matrix2d A;
  A << 2, 1, 1, 1;
  const Eigen::Vector2d ev = A.eigenvalues().real().cwiseAbs();
  const double l = std::log(ev.maxCoeff());
  const double want[] = {l, 0.0, -l};
  double err = 0;
  for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(r.exponents[i] - want[i]));
  return {err <= 1e-3 && secs < 10.0, fmt("max |error| = %.2e (tol 1e-3), %.3f s (< 10 s)", err, secs)};
}

Outcome c3() {
  const System s3(SystemSpec::sl3());
  Rng rng(derive_seed(0, 3));
  Vec sdir = Vec::Zero(8);
  sdir.tail(3) = rng.unit_vector(3);
  const QniEstimate q = qni_exponent(s3, s3.base_point(), sdir, axis(8, 2), geometric_grid(1e-4, 1e-2, 9));
  const bool sl3_ok = std::abs(q.alpha_hat - 1.0) <= 0.05 && q.r2 >= 0.98;

  const System a(SystemSpec::asl2());
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const double b = rng.uniform(-0.05, 0.05), y = rng.uniform(-0.05, 0.05);
    const Quadrilateral qd = build_quadrilateral(a, a.base_point(), axis(5, 4, y), axis(5, 0, b));
    worst = std::max(worst, std::abs(qd.p_u[1] - (-b * y)));
  }
  bool degenerate = false;
  try {
    qni_exponent(a, a.base_point(), axis(5, 3), axis(5, 0), geometric_grid(1e-4, 1e-2, 9));
  } catch (const Error& e) {
    degenerate = e.code() == ErrorCode::DegenerateFit;
  }
  return {sl3_ok && worst <= 1e-10 && degenerate,
          fmt("SL3 alpha_hat = %.4f (1 +- 0.05), r2 = %.4f (>= 0.98); ASL2 max |p_u E2 + b y| = %.1e "
              "(<= 1e-10); y = 0 -> %s",
              q.alpha_hat, q.r2, worst, degenerate ? "DegenerateFit" : "no error")};
}

Outcome c4() {
  const System s(SystemSpec::borel_smale(3, -2));
  const double ll = std::log((3 + std::sqrt(5.0)) / 2);
  TransferOptions o;
  o.w_exponent = 2;
  Rng rng(derive_seed(0, 4));
  double worst = 0;
  int within = 0;
  for (int i = 0; i < 50; ++i) {
    const double d0 = std::pow(10.0, rng.uniform(-5, -3));
    const double eps = std::pow(10.0, rng.uniform(-2, -1));
    const double ell = rng.uniform(10, 20);
    // Frame x1 y1 z1 x2 y2 z2 s: second block y2, stable y1, x2, z2.
    Vec delta = Vec::Zero(7);
    delta[4] = d0;
    delta[1] = 1e-4 * rng.normal();
    delta[3] = 1e-4 * rng.normal();
    const Point q1 = s.random_point(derive_seed(0, 4, static_cast<std::uint64_t>(i)));
    const StoppingRecord r = stopping_time(s, q1, delta, one(0.05), ell, eps, o);
    worst = std::max(worst, std::abs(r.tau2 - std::log(eps / d0) / (2 * ll)));
    within += !r.never_reaches && r.tau2 <= r.beta_bound;
  }
  return {worst <= 0.05 && within == 50,
          fmt("max |tau2 - closed form| = %.2e over 50 trials (tol 0.05); a-priori bound held in %d/50",
              worst, within)};
}

Outcome c5() {
  TransferOptions o;
  o.search_beta = 1.0;
  const System s(SystemSpec::borel_smale(3, -1));
  const TransferPipeline p(s, s.random_point(derive_seed(0, 5)), one(0.05), o);
  const BilipschitzResult b = bilipschitz_check(p, {6, 7, 8, 9, 10}, {0, 0.5, 1, 1.5, 2.5}, 0.01, 0.1);
  const double predicted = 0.5;  // slowest stable weight over second-block weight
  const double rel = std::max(std::abs(b.slope_min - predicted), std::abs(b.slope_max - predicted)) / predicted;

  const System pert(SystemSpec::borel_smale_perturbed(0.01, 3, -1));
  Stopwatch w;
  const TransferPipeline pp(pert, pert.random_point(derive_seed(0, 5, 1)), one(0.05), o);
  const BilipschitzResult bp = bilipschitz_check(pp, {6, 7, 8, 9, 10}, {0, 0.5, 1, 1.5, 2.5}, 0.01, 0.1);
  const double secs = w.seconds();
  return {rel <= 0.01 && bp.pass && secs < 60.0,
          fmt("BorelSmale slope in [%.5f, %.5f] vs %.2f (rel %.2e, tol 1e-2); perturbed envelope "
              "[%.4f, %.4f] slopes [%.4f, %.4f] %s in %.2f s (< 60 s)",
              b.slope_min, b.slope_max, predicted, rel, bp.kappa1, bp.kappa2, bp.slope_min, bp.slope_max,
              bp.pass ? "holds" : "violated", secs)};
}

Outcome c6() {
  const System s(SystemSpec::borel_smale(3, -1));
  const TransferPipeline p(s, s.random_point(derive_seed(0, 6)), one(0.05));
  std::vector<double> ls, rs;
  for (double ell = 5; ell <= 20; ell += 1) {
    const ResidualPoint r = factorization_residual(p, slow_stable_partner(s, p.q1(), ell, 0.1), ell, 0, 0.02);
    ls.push_back(ell);
    rs.push_back(std::log(r.residual));
  }
  const LinearFit f = fit_line(ls, rs);
  return {f.slope < 0 && f.r2 >= 0.9, fmt("slope = %.4f (< 0), r2 = %.4f (>= 0.9)", f.slope, f.r2)};
}

Outcome c7() {
  const System s(SystemSpec::borel_smale(3, -1));
  TransferOptions o;
  o.search_beta = 1.0;
  double gap = 0, sync = 0;
  for (int i = 0; i < 20; ++i) {
    const Point q = s.random_point(derive_seed(0, 7, static_cast<std::uint64_t>(i)));
    const Vec delta = slow_stable_partner(s, s.flow_lift(q, 20), 20, 0.1);
    const YConfiguration y = paired_y_configuration(s, q, delta, one(0.05), 20, 0.01, o);
    gap = std::max(gap, y.tau_gap.value_or(1e300));
    sync = std::max({sync, y.sync_residual, y.synchronized_with->sync_residual});
  }
  return {gap <= 5 && sync <= 1e-6,
          fmt("max tau gap = %.3f (<= 5), max sync residual = %.1e (<= 1e-6) over 20 pairs", gap, sync)};
}

Outcome c8() {
  const System s(SystemSpec::cat());
  const auto tests = trigonometric_tests();
  Stopwatch w;
  const auto r = birkhoff_equidistribution(s, s.base_point(), tests, 1e4, 0.05);
  const double secs = w.seconds();
  const double final_d = r.discrepancy_curve.back().second;
  int decreased = 0;
  BirkhoffOptions o;
  o.curve_points = 4;
  for (int i = 0; i < 20; ++i) {
    const auto c = birkhoff_equidistribution(s, s.random_point(derive_seed(0, 8, static_cast<std::uint64_t>(i))),
                                             tests, 1e4, 0.05, "haar", o);
    decreased += c.discrepancy_curve.back().second < c.discrepancy_curve.front().second;
  }
  return {final_d < 0.02 && secs < 60 && decreased >= 18,
          fmt("final sup-discrepancy = %.4f (< 0.02) in %.2f s (< 60 s); decreased T=2500 -> 4T on "
              "%d/20 seeds (>= 18)",
              final_d, secs, decreased)};
}

Outcome c9() {
  const System s(SystemSpec::cat());
  const Observable phi = [](const Vec& w) {
    const double c = std::sin(std::numbers::pi * w[2]);
    return c * c * std::cos(2 * std::numbers::pi * w[0]);
  };
  std::vector<double> gaps;
  for (int g = 2; g <= 20; g += 2) gaps.push_back(g);
  const CorrelationFit f = correlation_fit(s, s.base_point(), phi, 0.0, gaps, 100000, 0);
  const double lln = lln_average(s, s.base_point(), phi, 1000, 100, 0);
  return {f.gamma > 0 && f.r2 >= 0.9 && lln <= 0.05,
          fmt("gamma_hat = %.3f (> 0), r2 = %.3f (>= 0.9), %d/%zu gaps above 2 s.e.; LLN 95th "
              "percentile = %.4f (<= 0.05)",
              f.gamma, f.r2, f.significant, gaps.size(), lln)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism(const std::string& cli, std::string& note) {
  if (cli.empty()) {
    note = "CLI not checked (no --cli given)";
    return {false, note};
  }
  const fs::path dir = fs::temp_directory_path() / "anosovlab_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg = dir / "run.yaml";
  std::ofstream(cfg) << "experiment: yconfig\nseed: 11\nsystem: {kind: BorelSmale, b: -1}\n"
                        "params: {ell: 12, n_pairs: 4}\n";
  const fs::path out = dir / "out";
  auto snapshot = [&] {
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& e : fs::directory_iterator(out)) files.emplace_back(e.path().filename().string(), slurp(e.path()));
    std::sort(files.begin(), files.end());
    return files;
  };
  const std::string cmd = "\"" + cli + "\" run \"" + cfg.string() + "\" --out \"" + out.string() + "\" > \"" +
                          (dir / "stdout.txt").string() + "\" 2>&1";
  if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + slurp(dir / "stdout.txt")};
  const auto first = snapshot();
  if (std::system(cmd.c_str()) != 0) return {false, "CLI rerun failed"};
  const auto second = snapshot();
  note = fmt("%zu files byte-identical", first.size());
  return {!first.empty() && first == second, note};
}

Outcome c10(const std::string& cli) {
  Rng rng(derive_seed(0, 10));
  bool sym = true, norm = true;
  double tri = 0;
  auto measure = [&](int n) {
    std::vector<std::pair<double, double>> v;
    for (int i = 0; i < n; ++i) v.emplace_back(rng.uniform(-3, 3), rng.uniform(0.01, 2));
    return EmpiricalMeasure::from_samples(v);
  };
  for (int k = 0; k < 1000; ++k) {
    const auto a = measure(1 + k % 23), b = measure(1 + k % 7), c = measure(2 + k % 11);
    sym = sym && wasserstein_1d(a, b) == wasserstein_1d(b, a);
    tri = std::max(tri, wasserstein_1d(a, c) - wasserstein_1d(a, b) - wasserstein_1d(b, c));
    for (double s : {0.5, 2.0, 10.0}) norm = norm && wasserstein_1d(a, a.scaled(s)) == 0.0;
  }

  // Avoidance against an independent SVD.
  int bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const int n = 2 + k % 5;
    Mat m(n, n);
    for (int r = 0; r < n; ++r) m.row(r) = rng.normal_vector(n).transpose();
    const double rho = rng.uniform(0.05, 0.9);
    const Avoidance av = top_singular_avoidance(m, rho);
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeFullV);
    const double top = svd.singularValues()[0];
    if ((av.subspace.transpose() * svd.matrixV().col(0)).norm() > 1e-8) ++bad;
    const Vec v = rng.unit_vector(n);
    const Vec off = v - av.subspace * (av.subspace.transpose() * v);
    if (off.norm() > rho && (m * v).norm() < av.c_rho * top * (1 - 1e-12)) ++bad;
  }

  // Group laws at the module tolerances.
  double worst_lin = 0, worst_pert = 0;
  for (auto spec : {SystemSpec::cat(), SystemSpec::borel_smale(), SystemSpec::asl2(), SystemSpec::sl3(),
                    SystemSpec::borel_smale_perturbed(0.01)}) {
    const System s(spec);
    double& worst = spec.kind == SystemKind::BorelSmalePerturbed ? worst_pert : worst_lin;
    for (int i = 0; i < 100; ++i) {
      const Point x = s.random_point(derive_seed(0, 10, static_cast<std::uint64_t>(i)));
      const double t = rng.uniform(-1.5, 1.5), u = rng.uniform(-1.5, 1.5);
      const Point a = s.flow_lift(x, t + u), b = s.flow_lift(s.flow_lift(x, u), t);
      worst = std::max(worst, (a.coords - b.coords).cwiseAbs().maxCoeff() /
                                  std::max(1.0, a.coords.cwiseAbs().maxCoeff()));
      const double tp = std::abs(t) + 0.5, up = std::abs(u) + 0.5;
      const Mat lhs = s.tangent_flow(x, tp + up);
      const Mat rhs = s.tangent_flow(s.flow(x, up), tp) * s.tangent_flow(x, up);
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff() / std::max(1.0, lhs.cwiseAbs().maxCoeff()));
    }
  }

  std::string note;
  const Outcome cli_ok = cli_determinism(cli, note);
  const bool pass = sym && tri <= 1e-12 && norm && bad == 0 && worst_lin <= 1e-9 && worst_pert <= 1e-6 && cli_ok.pass;
  return {pass, fmt("W1 symmetry %s, triangle violation %.1e (<= 1e-12), normalization %s; avoidance "
                    "disagreements %d/10000; group laws %.1e (<= 1e-9) / %.1e perturbed (<= 1e-6); CLI: %s",
                    sym ? "exact" : "BROKEN", tri, norm ? "exact" : "BROKEN", bad, worst_lin, worst_pert,
                    cli_ok.detail.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) cli = argv[++i];
    else if (a == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  const std::vector<std::function<Outcome()>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9, [&] { return c10(cli); }};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2zu %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
