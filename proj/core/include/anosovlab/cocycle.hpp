#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "anosovlab/systems.hpp"

namespace anosovlab {

struct LyapunovReport {
  std::vector<double> exponents;  // descending
  std::vector<double> std_error;  // over orbit blocks
  double T_total = 0.0;
  long steps = 0;
};

struct SplitBlock {
  double exponent = 0.0;
  double std_error = 0.0;
  Mat basis;  // orthonormal columns
};

struct Splitting {
  Point point;
  std::vector<SplitBlock> blocks;  // descending exponent
  double theta = 0.0;              // minimal angle between distinct blocks

  int dim() const;
  Mat frame() const;
  // Component of v in block i along the splitting.
  Vec component(const Vec& v, int block) const;
  std::vector<int> offsets() const;
};

struct LyapunovNormParams {
  double epsilon = 0.0;  // 0 selects min gap / 10
  double T_trunc = 20.0;
  double dtau = 0.5;
};

// k-th step Jacobian of a discretized cocycle.
using StepJacobian = std::function<Mat(long k)>;

// QR recursion over `steps` steps of length dt. Burn-in fraction is discarded and the
// rest split into n_blocks blocks for the standard error.
LyapunovReport qr_spectrum(int dim, long steps, double dt, const StepJacobian& jac,
                           std::uint64_t seed, double burn_in = 0.1, int n_blocks = 10);

LyapunovReport lyapunov_spectrum(const System& s, const Point& x0, double T, double dt_qr = 1.0,
                                 std::uint64_t seed = 0);

// Splitting at the base of a discretized cocycle with steps k in [-n_back, n_fwd).
// Fast flags come from pushing a random frame through the back segment, slow flags
// from pulling one back through the forward segment with inverse steps.
Splitting splitting_from_cocycle(int dim, double dt, long n_back, long n_fwd, const StepJacobian& jac,
                                 std::uint64_t seed, const Point& at);

Splitting oseledets_splitting(const System& s, const Point& x, double T_forward = 50.0,
                              double T_backward = 50.0, std::uint64_t seed = 0);

// Merge adjacent exponents that agree within 3·(se_i + se_j) (plus an absolute floor).
std::vector<std::vector<int>> merge_exponents(const std::vector<double>& exps,
                                              const std::vector<double>& se);

double default_epsilon(const Splitting& sp);

// Truncated Pesin norm. Samples sit at tau = k·dtau for k in [k_lo, k_hi]; step(k, +1)
// maps sample k to k+1 and step(k, -1) maps k to k-1. frame(k) is the splitting frame at
// sample k with the same block layout as sp. Each block is re-projected onto its own
// subspace after every step so round-off never feeds faster blocks.
double lyapunov_norm_walk(const Splitting& sp, const Vec& v, const LyapunovNormParams& p,
                          const std::function<Mat(long, int)>& step,
                          const std::function<Mat(long)>& frame, long k_lo, long k_hi);

double lyapunov_norm(const System& s, const Splitting& sp, const Vec& v, LyapunovNormParams p = {});

double regular_set_density(const System& s, const Point& x, double T, double theta_min = 0.1,
                           std::uint64_t seed = 0);

// log of the Lyapunov-norm growth of E^2 (block index 1) under Dg_t.
double cocycle_lambda2(const System& s, const Point& x, double t);

}  // namespace anosovlab
