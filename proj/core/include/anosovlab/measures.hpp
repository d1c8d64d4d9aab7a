#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "anosovlab/systems.hpp"

namespace anosovlab {

struct EmpiricalMeasure {
  std::vector<std::pair<double, double>> samples;  // (position, weight), sorted by position
  double total = 0.0;
  double support_min = 0.0;
  double support_max = 0.0;

  // Sorts, validates weights and fills total and support.
  static EmpiricalMeasure from_samples(std::vector<std::pair<double, double>> samples);
  EmpiricalMeasure scaled(double c) const;
};

EmpiricalMeasure merge(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// Normalized Wasserstein distance of two discrete measures on the line, as the L1
// distance between their normalized cumulative functions.
double wasserstein_1d(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2);

struct LeafMeasureOptions {
  LeafKind leaf = LeafKind::Unstable;
  int grid_level = 2;     // dyadic boxes per periodic coordinate: 2^level
  double T_visit = 2e4;   // orbit length for the visit histogram
  double dt_visit = 0.05;
  double lo = 0.0;        // window is [lo, lo + window] along the leaf parameter
};

// Samples drawn uniformly on a window of the leaf through x, weighted by the
// visit density of a long orbit in the box containing each sample.
EmpiricalMeasure empirical_leaf_measure(const System& s, const Point& x, int n_samples,
                                        double window, std::uint64_t seed,
                                        const LeafMeasureOptions& opt = {});

// Test function on fundamental-domain coordinates, with its integral against the
// reference measure.
struct TestFunction {
  std::string name;
  std::function<double(const Vec&)> f;
  double reference = 0.0;
};

// Five trigonometric tests with zero Haar mean on a 3-dimensional fundamental domain.
std::vector<TestFunction> trigonometric_tests();

struct EquidistributionReport {
  std::vector<std::pair<double, double>> test_values;  // (Birkhoff average, reference)
  std::vector<std::pair<double, double>> discrepancy_curve;  // (T, sup discrepancy)
  double T_final = 0.0;
};

struct BirkhoffOptions {
  int curve_points = 10;
  double h = 0.0;  // strong-unstable offset applied to x before averaging
};

// Birkhoff averages (1/T)∫ f(g_t h x) dt by the midpoint rule with step dt, against the
// Haar reference (the only reference measure supported).
EquidistributionReport birkhoff_equidistribution(const System& s, const Point& x,
                                                 const std::vector<TestFunction>& tests, double T,
                                                 double dt, const std::string& reference = "haar",
                                                 const BirkhoffOptions& opt = {});

// Lipschitz test function on fundamental coordinates.
using Observable = std::function<double(const Vec&)>;

struct CorrelationEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of ∫_0^1 f_t(u) f_s(u) du with
// f_t(u) = φ(g_t u.x) − φ(g_t h_{α(t)} u.x) and α(t) = e^{−λ1(x,t)}.
CorrelationEstimate correlation_decay(const System& s, const Point& x, const Observable& phi,
                                      double t, double s_time, int n_u, std::uint64_t seed = 0);

struct CorrelationFit {
  double gamma = 0.0;
  double C = 0.0;
  double r2 = 0.0;
  int significant = 0;  // gaps whose |estimate| exceeds two standard errors
  std::vector<double> gaps;
  std::vector<CorrelationEstimate> estimates;
};

// Estimates at t = s_time + gap for each gap and a least-squares fit of
// |estimate| ≈ C·e^{−γ·gap} on the linear scale (r² on that scale too). Estimates past the
// Monte Carlo noise floor carry no sign information, so a log-scale fit would regress noise.
CorrelationFit correlation_fit(const System& s, const Point& x, const Observable& phi,
                               double s_time, const std::vector<double>& gaps, int n_u,
                               std::uint64_t seed = 0);

// 95th percentile over sampled u of |(1/T)∫_0^T f_t(u) dt|.
double lln_average(const System& s, const Point& x, const Observable& phi, double T, int n_u,
                   std::uint64_t seed = 0, double dt = 0.05);

}  // namespace anosovlab
