#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anosovlab/cocycle.hpp"
#include "anosovlab/systems.hpp"

namespace anosovlab {

// Local leaf through `base` as a graph over its tangent block:
//   displacement(t) = L t + C h(t),  h a polynomial with monomials of degree 2..order.
// Order 0 is the constant chart.
struct LeafChart {
  Point base;
  LeafKind leaf_kind = LeafKind::Unstable;
  int order = 1;
  Mat L;  // orthonormal leaf tangent basis
  Mat C;  // complement basis
  std::vector<std::vector<int>> monomials;
  Mat coeffs;  // C-coordinates, one column per monomial
  double radius = 0.0;
  double remainder_bound = 0.0;

  int leaf_dim() const { return static_cast<int>(L.cols()); }
  Vec displacement(const Vec& t) const;
  Point point(const System& s, const Vec& t) const;
  // Tangent coordinates of a frame vector (orthogonal projection onto L).
  Vec tangent_coords(const Vec& v) const { return L.transpose() * v; }
};

struct ChartOptions {
  double radius = 0.0;   // 0 selects the system chart radius
  double tol = 1e-10;    // graph-transform convergence
  int T_start = 20;
  int T_max = 100;
  double safety = 2.0;
  std::uint64_t seed = 0;
};

LeafChart leaf_chart(const System& s, const Point& x, LeafKind kind, int order,
                     const ChartOptions& opt = {});

// Splitting used for leaf decompositions: the exact reference blocks for homogeneous
// models, orbit flags otherwise.
Splitting leaf_splitting(const System& s, const Point& x, std::uint64_t seed = 0);

std::pair<Point, Point> halfway_points(const System& s, const Point& q, const Point& q_prime,
                                       double ell);

struct Projection {
  Point z;
  Vec t_cs;  // parameter on the center-stable chart of x
  Vec s_u;   // parameter on the target chart
  double residual = 0.0;
  int iterations = 0;
};

// z in W^{cs}(x) ∩ target. The center-stable chart of x is built with cs_order
// (defaults to the target order).
Projection stable_projection(const System& s, const Point& x, const LeafChart& target, double tol,
                             std::optional<int> cs_order = std::nullopt);
Projection stable_projection(const System& s, const LeafChart& cs_chart, const LeafChart& target,
                             double tol);

struct HausdorffOptions {
  int grid = 64;
  int max_points = 4096;
  int max_refine = 3;
  double rel_change = 1e-3;
};

// Hausdorff distance between the parts of X and Y inside the omega-ball at p, each
// measured against the whole other chart.
double local_hausdorff(const System& s, const Point& p, const LeafChart& X, const LeafChart& Y,
                       double omega, const HausdorffOptions& opt = {});

struct QuadOptions {
  int order = 3;
  double tol = 1e-10;
  double c_min = 0.5;
  double c_max = 2.0;
  int strong_blocks = 1;  // leading blocks of E^u counted as E^{<m}
  std::uint64_t seed = 0;
};

struct Quadrilateral {
  Point x, x_prime, u_x, proj;
  Vec p_uu, p_u;
  Vec leaf_coord;  // tangent coordinate of proj in E^u(x')
  double dist_xx = 0.0;
  double dist_xux = 0.0;
  double ratio = 0.0;
  bool in_window = false;
};

Quadrilateral build_quadrilateral(const System& s, const Point& x, const Vec& s_disp,
                                  const Vec& u_disp, const QuadOptions& opt = {});

// FixedUnstable keeps |u| fixed while the stable displacement shrinks; Ratio scales both.
enum class QniMode { FixedUnstable, Ratio };

struct QniOptions {
  QniMode mode = QniMode::FixedUnstable;
  double u_size = 0.05;  // FixedUnstable
  double ratio = 1.0;    // Ratio
  QuadOptions quad;
};

struct QniEstimate {
  double alpha_hat = 0.0;
  double C_hat = 0.0;
  double r2 = 0.0;
  std::pair<double, double> scale_range{0.0, 0.0};
  std::vector<Quadrilateral> quads;
};

QniEstimate qni_exponent(const System& s, const Point& x, const Vec& s_dir, const Vec& u_dir,
                         const std::vector<double>& scales, const QniOptions& opt = {});

std::vector<double> geometric_grid(double lo, double hi, int n);

// CSV rows: dist_xx, dist_xux, ratio, p_uu_norm, p_u_norm.
std::string quadrilaterals_csv(const std::vector<Quadrilateral>& qs);

}  // namespace anosovlab
