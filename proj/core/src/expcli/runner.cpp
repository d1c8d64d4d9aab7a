#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "anosovlab/cocycle.hpp"
#include "anosovlab/expcli.hpp"
#include "anosovlab/factorize.hpp"
#include "anosovlab/leafgeom.hpp"
#include "anosovlab/measures.hpp"
#include "anosovlab/rng.hpp"

namespace anosovlab {

namespace {

using json = nlohmann::ordered_json;

// Stream ids for derive_seed; one per role so roles never share draws.
enum Stream : std::uint64_t { kPointStream = 1, kPartnerStream = 2, kSampleStream = 3 };

// Independent cells run on a small pool; results land in index order.
template <class F>
auto parallel_map(std::size_t n, F f) {
  using R = decltype(f(std::size_t{0}));
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < n;) {
          try {
            out[i] = f(i);
          } catch (...) {
            errs[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream o;
  o.precision(17);
  for (std::size_t i = 0; i < header.size(); ++i) o << (i ? "," : "") << header[i];
  o << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
    o << '\n';
  }
  return o.str();
}

Vec as_vec(const std::vector<double>& v, int dim, const std::string& key) {
  if (static_cast<int>(v.size()) != dim)
    fail(ErrorCode::InvalidParams, key + " needs " + std::to_string(dim) + " entries");
  return Eigen::Map<const Vec>(v.data(), dim);
}

Vec scalar_vec(double u) { return Vec::Constant(1, u); }

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

TransferOptions transfer_options(const ExperimentConfig& c) {
  TransferOptions o;
  o.seed = derive_seed(c.seed, kSampleStream);
  if (c.params.contains("search_beta") && c.num("search_beta") > 0) o.search_beta = c.num("search_beta");
  return o;
}

void run_lyapunov(const ExperimentConfig& c, const System& s, RunReport& r) {
  const LyapunovReport l = lyapunov_spectrum(s, s.base_point(), c.num("T"), c.num("dt_qr"), c.seed);
  const auto& exact = s.exact_exponents();
  json j;
  j["T"] = l.T_total;
  j["exponents"] = l.exponents;
  j["std_error"] = l.std_error;
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (std::size_t i = 0; i < l.exponents.size(); ++i) {
    const double ex = exact ? (*exact)[i] : std::nan("");
    if (exact) worst = std::max(worst, std::abs(l.exponents[i] - ex));
    rows.push_back({static_cast<double>(i), l.exponents[i], l.std_error[i], ex});
  }
  if (exact) {
    j["exact"] = *exact;
    j["max_abs_error"] = worst;
  } else {
    j["exact"] = nullptr;
    j["max_abs_error"] = nullptr;
  }
  r.results = j;
  r.tables["lyapunov.csv"] = csv({"index", "exponent", "std_error", "exact"}, rows);
}

void run_qni(const ExperimentConfig& c, const System& s, RunReport& r) {
  QniOptions o;
  const std::string& mode = c.str("mode");
  if (mode == "fixed") o.mode = QniMode::FixedUnstable;
  else if (mode == "ratio") o.mode = QniMode::Ratio;
  else fail(ErrorCode::InvalidParams, "mode must be fixed or ratio");
  o.u_size = c.num("u_size");
  o.ratio = c.num("ratio");
  o.quad.order = static_cast<int>(c.integer("order"));
  o.quad.seed = c.seed;
  const auto scales = geometric_grid(c.num("scale_min"), c.num("scale_max"), static_cast<int>(c.integer("n_scales")));
  const QniEstimate q = qni_exponent(s, s.base_point(), as_vec(c.list("s_dir"), s.dim(), "s_dir"),
                                     as_vec(c.list("u_dir"), s.dim(), "u_dir"), scales, o);
  json j;
  j["alpha_hat"] = q.alpha_hat;
  j["C_hat"] = q.C_hat;
  j["r2"] = q.r2;
  j["scale_range"] = {q.scale_range.first, q.scale_range.second};
  json pts = json::array();
  for (const auto& qd : q.quads)
    pts.push_back({{"dist_xx", qd.dist_xx}, {"p_u_norm", qd.p_u.norm()}, {"in_window", qd.in_window}});
  j["points"] = pts;
  r.results = j;
  r.tables["qni.csv"] = quadrilaterals_csv(q.quads);
}

Vec stopping_partner(const ExperimentConfig& c, const System& s, const Point& q1) {
  const std::string& kind = c.str("partner");
  if (kind == "block2") return c.num("d0") * second_block_axis(s);
  if (kind == "slow_stable")
    return slow_stable_partner(s, q1, c.num("ell"), c.num("r"), derive_seed(c.seed, kPartnerStream));
  fail(ErrorCode::InvalidParams, "partner must be block2 or slow_stable");
}

void run_stopping(const ExperimentConfig& c, const System& s, RunReport& r) {
  TransferOptions o = transfer_options(c);
  o.dt = c.num("dt");
  o.refinements = static_cast<int>(c.integer("refinements"));
  o.w_exponent = c.num("w_exponent");
  const Point q1 = s.random_point(derive_seed(c.seed, kPointStream));
  const StoppingRecord rec = stopping_time(s, q1, stopping_partner(c, s, q1), scalar_vec(c.num("u")),
                                           c.num("ell"), c.num("epsilon"), o);
  json j = json::parse(stopping_json(rec));
  json trace = json::array();
  for (const auto& [t, a] : rec.A_trace) trace.push_back({t, a});
  j["A_trace"] = trace;
  r.results = j;
  r.tables["a_trace.csv"] = a_trace_csv(rec);
}

void run_bilipschitz(const ExperimentConfig& c, const System& s, RunReport& r) {
  const TransferPipeline p(s, s.random_point(derive_seed(c.seed, kPointStream)), scalar_vec(c.num("u")),
                           transfer_options(c));
  const BilipschitzResult b = bilipschitz_check(p, c.list("ell_grid"), c.list("s_grid"),
                                                c.num("epsilon"), c.num("r"));
  json j;
  j["kappa1"] = b.kappa1;
  j["kappa2"] = b.kappa2;
  j["slope_min"] = b.slope_min;
  j["slope_max"] = b.slope_max;
  j["kappa_F"] = {b.kappa_F_min, b.kappa_F_max};
  j["lambda2_rate"] = {b.lambda2_min, b.lambda2_max};
  j["worst_violation"] = b.worst_violation;
  j["pass"] = b.pass;
  json tau = json::array();
  std::vector<std::vector<double>> rows;
  for (const auto& [ell, t] : b.tau2) {
    tau.push_back({ell, t});
    rows.push_back({ell, t});
  }
  j["tau2"] = tau;
  r.results = j;
  r.tables["tau2.csv"] = csv({"ell", "tau2"}, rows);
}

void run_equidistribution(const ExperimentConfig& c, const System& s, RunReport& r) {
  BirkhoffOptions o;
  o.curve_points = static_cast<int>(c.integer("curve_points"));
  o.h = c.num("h");
  const auto tests = trigonometric_tests();
  const Point x = c.seed == 0 ? s.base_point() : s.random_point(derive_seed(c.seed, kPointStream));
  const EquidistributionReport e = birkhoff_equidistribution(s, x, tests, c.num("T"), c.num("dt"), "haar", o);
  json j;
  json tv = json::array();
  for (std::size_t i = 0; i < tests.size(); ++i)
    tv.push_back({{"name", tests[i].name}, {"average", e.test_values[i].first}, {"reference", e.test_values[i].second}});
  j["tests"] = tv;
  json curve = json::array();
  std::vector<std::vector<double>> rows;
  for (const auto& [T, d] : e.discrepancy_curve) {
    curve.push_back({T, d});
    rows.push_back({T, d});
  }
  j["discrepancy_curve"] = curve;
  j["T_final"] = e.T_final;
  j["final_discrepancy"] = e.discrepancy_curve.back().second;
  r.results = j;
  r.tables["discrepancy.csv"] = csv({"T", "discrepancy"}, rows);
}

void run_correlation(const ExperimentConfig& c, const System& s, RunReport& r) {
  const Point x = c.seed == 0 ? s.base_point() : s.random_point(derive_seed(c.seed, kPointStream));
  const Observable phi = [](const Vec& w) {
    const double cut = std::sin(std::numbers::pi * w[2]);
    return cut * cut * std::cos(2 * std::numbers::pi * w[0]);
  };
  const CorrelationFit f = correlation_fit(s, x, phi, c.num("s_time"), c.list("gaps"),
                                           static_cast<int>(c.integer("n_u")), derive_seed(c.seed, kSampleStream));
  const double lln = lln_average(s, x, phi, c.num("T_lln"), static_cast<int>(c.integer("n_u_lln")),
                                 derive_seed(c.seed, kSampleStream, 1));
  json j;
  j["observable"] = "sin(pi s)^2 cos(2 pi w0)";
  j["gamma_hat"] = f.gamma;
  j["C_hat"] = f.C;
  j["r2"] = f.r2;
  j["significant_gaps"] = f.significant;
  json est = json::array();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < f.gaps.size(); ++i) {
    est.push_back({{"gap", f.gaps[i]}, {"value", f.estimates[i].value}, {"std_error", f.estimates[i].std_error}});
    rows.push_back({f.gaps[i], f.estimates[i].value, f.estimates[i].std_error,
                    f.C * std::exp(-f.gamma * f.gaps[i])});
  }
  j["estimates"] = est;
  j["lln_percentile95"] = lln;
  j["T_lln"] = c.num("T_lln");
  r.results = j;
  r.tables["correlation.csv"] = csv({"gap", "estimate", "std_error", "fit"}, rows);
}

void run_yconfig(const ExperimentConfig& c, const System& s, RunReport& r) {
  const TransferOptions o = transfer_options(c);
  const double ell = c.num("ell");
  const long n = c.integer("n_pairs");
  if (n < 1) fail(ErrorCode::InvalidParams, "n_pairs must be positive");
  const auto ys = parallel_map(static_cast<std::size_t>(n), [&](std::size_t i) {
    const Point q = s.random_point(derive_seed(c.seed, kPointStream, i));
    const Vec delta = slow_stable_partner(s, s.flow_lift(q, ell), ell, c.num("r"),
                                          derive_seed(c.seed, kPartnerStream, i));
    return paired_y_configuration(s, q, delta, scalar_vec(c.num("u")), ell, c.num("epsilon"), o);
  });
  json pairs = json::array();
  std::vector<std::vector<double>> rows;
  double max_gap = 0.0, max_sync = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const YConfiguration& y = ys[i];
    const double sync = std::max(y.sync_residual, y.synchronized_with ? y.synchronized_with->sync_residual : 0.0);
    const double gap = y.tau_gap.value_or(std::nan(""));
    max_gap = std::max(max_gap, gap);
    max_sync = std::max(max_sync, sync);
    pairs.push_back({{"tau2", y.tau2}, {"t2", y.t2}, {"tau_gap", gap}, {"sync_residual", sync}});
    rows.push_back({static_cast<double>(i), y.tau2, gap, sync});
  }
  json j;
  j["ell"] = ell;
  j["pairs"] = pairs;
  j["max_tau_gap"] = max_gap;
  j["max_sync_residual"] = max_sync;
  r.results = j;
  r.tables["yconfig.csv"] = csv({"pair", "tau2", "tau_gap", "sync_residual"}, rows);
}

}  // namespace

std::string version_string() { return ANOSOVLAB_VERSION; }

RunReport run(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport r;
  r.config_echo = c;
  r.version = version_string();
  try {
    const System s(c.system);
    switch (c.experiment) {
      case Experiment::Lyapunov: run_lyapunov(c, s, r); break;
      case Experiment::Qni: run_qni(c, s, r); break;
      case Experiment::Stopping: run_stopping(c, s, r); break;
      case Experiment::Bilipschitz: run_bilipschitz(c, s, r); break;
      case Experiment::Equidistribution: run_equidistribution(c, s, r); break;
      case Experiment::Correlation: run_correlation(c, s, r); break;
      case Experiment::YConfig: run_yconfig(c, s, r); break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), std::string(experiment_name(c.experiment)) + " on " +
                              std::string(kind_name(c.system.kind)) + ": " + e.what());
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

RunReport failed_report(const ExperimentConfig& c, const Error& e) {
  RunReport r;
  r.config_echo = c;
  r.version = version_string();
  r.error = error_json(e, std::string(experiment_name(c.experiment)));
  return r;
}

json error_json(const Error& e, const std::string& context) {
  json j;
  j["error"] = std::string(error_name(e.code()));
  j["exit_status"] = exit_status(e.code());
  j["context"] = context;
  j["message"] = e.what();
  json issues = json::array();
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    for (const auto& i : ce->issues()) issues.push_back(i);
    if (ce->line() >= 0) {
      j["line"] = ce->line();
      j["column"] = ce->column();
    }
  }
  j["issues"] = issues;
  return j;
}

std::string report_json(const RunReport& r) {
  json j;
  j["version"] = r.version;
  j["experiment"] = std::string(experiment_name(r.config_echo.experiment));
  j["status"] = r.error ? "error" : "ok";
  j["config_echo"] = serialize_config(r.config_echo);
  if (r.error) j["error"] = *r.error;
  else j["results"] = r.results;
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_report(const RunReport& r) {
  const std::filesystem::path dir(r.config_echo.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::InvalidParams, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  auto put = [&](const std::string& name, const std::string& text) {
    const auto p = dir / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) fail(ErrorCode::InvalidParams, "cannot write " + p.string());
    files.push_back(p);
  };
  put("report.json", report_json(r));
  for (const auto& [name, text] : r.tables) put(name, text);
  return files;
}

}  // namespace anosovlab
