#include <cmath>
#include <fstream>
#include <sstream>

#include "anosovlab/expcli.hpp"
#include "anosovlab/numerics.hpp"

namespace anosovlab {

namespace {

using json = nlohmann::ordered_json;

struct Writer {
  std::filesystem::path dir;
  std::string kind;
  std::vector<std::filesystem::path> files;

  std::ostringstream open() {
    std::ostringstream o;
    o.precision(17);
    return o;
  }
  void put(const std::string& suffix, const std::ostringstream& o) {
    const auto p = dir / ("plot_" + kind + suffix);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << o.str();
    if (!out) fail(ErrorCode::InvalidParams, "cannot write " + p.string());
    files.push_back(p);
  }
};

void pairs_csv(Writer& w, const json& arr, const std::string& header) {
  auto o = w.open();
  o << header << '\n';
  for (const auto& p : arr) o << p[0].get<double>() << ',' << p[1].get<double>() << '\n';
  w.put(".csv", o);
}

void plot_lyapunov(Writer& w, const json& r) {
  auto o = w.open();
  o << "index,exponent,exact\n";
  const auto& e = r["exponents"];
  for (std::size_t i = 0; i < e.size(); ++i) {
    o << i << ',' << e[i].get<double>() << ',';
    if (r["exact"].is_array()) o << r["exact"][i].get<double>();
    o << '\n';
  }
  w.put(".csv", o);
}

void plot_qni(Writer& w, const json& r) {
  const double alpha = r["alpha_hat"].get<double>(), C = r["C_hat"].get<double>();
  auto o = w.open();
  o << "log_dist,log_p_u,log_fit\n";
  for (const auto& p : r["points"]) {
    const double d = p["dist_xx"].get<double>();
    o << std::log(d) << ',' << std::log(p["p_u_norm"].get<double>()) << ','
      << std::log(C) + alpha * std::log(d) << '\n';
  }
  w.put(".csv", o);
  auto g = w.open();
  g << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set label 1 sprintf('slope = %.6f', " << alpha << ") at graph 0.05, graph 0.92\n"
    << "plot 'plot_qni.csv' using 1:2 with points, '' using 1:3 with lines\n";
  w.put(".gp", g);
}

void plot_stopping(Writer& w, const json& r) {
  pairs_csv(w, r["A_trace"], "t,A");
  std::vector<double> ts, ls;
  for (const auto& p : r["A_trace"]) {
    const double a = p[1].get<double>();
    if (a > 0) {
      ts.push_back(p[0].get<double>());
      ls.push_back(std::log(a));
    }
  }
  auto o = w.open();
  o << "tau2=" << r["tau2"].get<double>() << " epsilon=" << r["epsilon"].get<double>();
  if (ts.size() >= 2) {
    const LinearFit f = fit_line(ts, ls);
    o << " log_A_slope=" << f.slope << " r2=" << f.r2;
  }
  o << '\n';
  w.put("_fit.txt", o);
}

void plot_correlation(Writer& w, const json& r) {
  const double g = r["gamma_hat"].get<double>(), C = r["C_hat"].get<double>();
  auto o = w.open();
  o << "gap,abs_estimate,std_error,fit\n";
  for (const auto& e : r["estimates"]) {
    const double gap = e["gap"].get<double>();
    o << gap << ',' << std::abs(e["value"].get<double>()) << ',' << e["std_error"].get<double>() << ','
      << C * std::exp(-g * gap) << '\n';
  }
  w.put(".csv", o);
}

void plot_yconfig(Writer& w, const json& r) {
  auto o = w.open();
  o << "pair,tau_gap,sync_residual\n";
  std::size_t i = 0;
  for (const auto& p : r["pairs"]) {
    o << i++ << ',';
    if (p["tau_gap"].is_number()) o << p["tau_gap"].get<double>();
    o << ',' << p["sync_residual"].get<double>() << '\n';
  }
  w.put(".csv", o);
}

}  // namespace

std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& report_file,
                                                  const std::string& kind,
                                                  const std::filesystem::path& out_dir) {
  std::ifstream in(report_file, std::ios::binary);
  if (!in) throw ConfigError(ErrorCode::ParseError, {"cannot read " + report_file.string()});
  json rep;
  try {
    rep = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(ErrorCode::ParseError, {report_file.string() + ": " + e.what()});
  }
  if (!parse_experiment(kind)) fail(ErrorCode::KindMismatch, "unknown plot kind \"" + kind + "\"");
  const std::string have = rep.value("experiment", "");
  if (have != kind)
    fail(ErrorCode::KindMismatch, "report holds a " + (have.empty() ? "unknown" : have) +
                                      " run, not " + kind);
  if (rep.value("status", "") != "ok" || !rep.contains("results"))
    fail(ErrorCode::KindMismatch, "report records a failed run; nothing to plot");

  Writer w{out_dir.empty() ? report_file.parent_path() : out_dir, kind, {}};
  if (w.dir.empty()) w.dir = ".";
  std::filesystem::create_directories(w.dir);
  const json& r = rep["results"];
  try {
    switch (*parse_experiment(kind)) {
      case Experiment::Lyapunov: plot_lyapunov(w, r); break;
      case Experiment::Qni: plot_qni(w, r); break;
      case Experiment::Stopping: plot_stopping(w, r); break;
      case Experiment::Bilipschitz: pairs_csv(w, r["tau2"], "ell,tau2"); break;
      case Experiment::Equidistribution: pairs_csv(w, r["discrepancy_curve"], "T,discrepancy"); break;
      case Experiment::Correlation: plot_correlation(w, r); break;
      case Experiment::YConfig: plot_yconfig(w, r); break;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::KindMismatch, std::string("report payload does not match ") + kind + ": " + e.what());
  }
  return w.files;
}

}  // namespace anosovlab
