#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anosovlab/cocycle.hpp"
#include "anosovlab/leafgeom.hpp"
#include "anosovlab/orbit_frames.hpp"
#include "anosovlab/systems.hpp"

namespace anosovlab {

struct HolonomyResult {
  double value = 1.0;
  double tail_bound = 0.0;
  double T_used = 0.0;
  double decay_rate = 0.0;  // fitted slope of log|increment| per unit time
  std::vector<double> increments;
};

// L(x,z) as the limit of the ratio of E^2 growth along the two forward orbits.
HolonomyResult holonomy_limit(const System& s, const Point& x, const Point& z, double T_max = 60.0,
                              double tol = 1e-13);

// Scalar identifying the quotient lines Q and R at a point, measured against the fixed
// frame vector e2 (unit vector of the second block in the reference frame).
double identification_map(const Splitting& sp, const Vec& e2);
double identification_map(const System& s, const Point& p);

// Frame vector used for both quotient lines.
Vec second_block_axis(const System& s);

// B = g_{-s} I_{x1} L(z,x1)^{-1} I_z^{-1}, with x1 = g_s x the flow correction of x.
// r_scale rescales the frame on R(z).
double operator_B(const System& s, const Point& z, const Point& x, double r_scale = 1.0);

double apriori_beta(double w_exponent, double lambda_C, double lambda_1);

// Slowest stable and top unstable rates of the linear part.
std::pair<double, double> contraction_rates(const System& s);

// Log Lyapunov-norm growth of the second block along an orbit, lambda_2(x, t) for t >= 0.
// Exact on homogeneous models; otherwise read off cached orbit frames on a 1/8 grid and
// interpolated linearly between nodes. allow_exact = false forces the orbit route.
class BlockGrowth {
 public:
  BlockGrowth(const System& s, const Point& x, double horizon = 20.0, std::uint64_t seed = 0,
              bool allow_exact = true);
  double operator()(double t) const;
  bool exact() const { return exact_; }
  double horizon() const { return horizon_; }

 private:
  void build(double horizon) const;
  double node(long k) const;

  System sys_;
  Point x_;
  std::uint64_t seed_;
  bool exact_ = false;
  double rate_ = 0.0;
  mutable double horizon_ = 0.0;
  mutable std::shared_ptr<OrbitFrames> of_;
  mutable Vec e_;
  mutable double norm0_ = 1.0;
  mutable std::vector<Vec> v_;
  mutable std::map<long, double> cache_;
  static constexpr double kH = 0.125;
};

struct TransferOptions {
  double dt = 0.25;
  int refinements = 4;
  double w_exponent = 1.0;
  std::optional<double> search_beta;  // overrides the a-priori window
  bool fast_path = true;              // closed-form growth on homogeneous models
  int uu_order = 5;
  int order_cap = 7;
  int cs_order = 3;
  double horizon = 20.0;
  std::uint64_t seed = 0;
};

// Separation data of one configuration at the q1 level.
struct Separation {
  Point z;            // stable projection of x onto W^u(q1')
  Point q1_prime;
  double c = 0.0;     // signed second-block coefficient transverse to W^uu(q1')
  double c_error = 0.0;
  double B = 1.0;
};

// Fixed (q1, u) with u.q1 on the strong-unstable leaf; partners q1' = exp(delta1) q1 vary.
// Homogeneous models are recentered at the identity.
class TransferPipeline {
 public:
  TransferPipeline(const System& s, const Point& q1, const Vec& u, const TransferOptions& opt = {});

  const System& system() const { return sys_; }
  const Point& q1() const { return q1_; }
  const Point& x() const { return x_; }
  const Vec& u() const { return u_; }
  const TransferOptions& options() const { return opt_; }
  bool recentered() const { return recentered_; }

  Separation separation(const Vec& delta1) const;
  // 𝔄(t) = |B c| e^{lambda_2(x,t)}
  double magnitude(const Separation& sep, double t) const;
  double lambda2_x(double t) const { return (*gx_)(t); }
  double lambda2_q1(double t) const { return (*gq_)(t); }

 private:
  System sys_;
  Point q1_, x_;
  Vec u_;
  TransferOptions opt_;
  bool recentered_ = false;
  std::shared_ptr<BlockGrowth> gx_, gq_;
  LeafChart uu_q1_;
  mutable std::optional<LeafChart> cs_x_;
};

struct StoppingRecord {
  Point q1;
  Vec u;
  double ell = 0.0;
  double epsilon = 0.0;
  double tau2 = 0.0;
  double beta_bound = 0.0;  // beta·ell
  double window = 0.0;      // search window actually used
  double lambda2_at_stop = 0.0;
  bool never_reaches = false;
  double c = 0.0;
  double B = 1.0;
  std::vector<std::pair<double, double>> A_trace;
};

StoppingRecord stopping_time(const TransferPipeline& p, const Vec& delta1, double ell, double epsilon);
StoppingRecord stopping_time(const System& s, const Point& q1, const Vec& delta1, const Vec& u,
                             double ell, double epsilon, const TransferOptions& opt = {});

// Displacement at q1 of the partner of q = g_{-ell} q1 at distance r along the slowest
// stable direction.
Vec slow_stable_partner(const System& s, const Point& q1, double ell, double r,
                        std::uint64_t seed = 0);

// Solves lambda_2(q1, t2) = lambda_2(u.q1, t) by bisection.
double t2_solve(const TransferPipeline& p, double t);

struct BilipschitzResult {
  double kappa1 = 0.0, kappa2 = 0.0;            // predicted envelope
  double slope_min = 0.0, slope_max = 0.0;      // empirical increment slopes
  double kappa_F_min = 0.0, kappa_F_max = 0.0;  // partner contraction rates
  double lambda2_min = 0.0, lambda2_max = 0.0;
  double worst_violation = 0.0;
  bool pass = false;
  std::map<double, double> tau2;  // by ell
};

BilipschitzResult bilipschitz_check(const TransferPipeline& p, const std::vector<double>& ell_grid,
                                    const std::vector<double>& s_grid, double epsilon, double r);

struct YConfiguration {
  Point q, q1, u_q1, q2, q3;
  double ell = 0.0, t = 0.0, t2 = 0.0;
  double tau2 = 0.0;
  double sync_residual = 0.0;
  std::shared_ptr<YConfiguration> synchronized_with;
  std::optional<double> tau_gap;
};

// Y-configuration for q1 = g_ell q and partner displacement delta1 at q1.
YConfiguration y_configuration(const System& s, const Point& q, const Vec& delta1, const Vec& u,
                               double ell, double epsilon, const TransferOptions& opt = {});
// Both configurations of a stably related pair, with the roles of q and q' swapped.
YConfiguration paired_y_configuration(const System& s, const Point& q, const Vec& delta1,
                                      const Vec& u, double ell, double epsilon,
                                      const TransferOptions& opt = {});

struct Avoidance {
  Mat subspace;  // orthonormal columns
  double c_rho = 0.0;
};

// Complement of the top singular direction(s) of A.
Avoidance top_singular_avoidance(const Mat& A, double rho);

struct ResidualPoint {
  double ell = 0.0, hd = 0.0, A = 0.0, residual = 0.0;
};

// |hd - 𝔄| at time t, hd the local Hausdorff distance at g_t u.q1 between the
// strong-unstable leaves of g_t u.q1 and g_t q1'.
ResidualPoint factorization_residual(const TransferPipeline& p, const Vec& delta1, double ell,
                                     double t, double omega);

std::string stopping_json(const StoppingRecord& r);
std::string a_trace_csv(const StoppingRecord& r);

}  // namespace anosovlab
