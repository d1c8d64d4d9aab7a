#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anosovlab/numerics.hpp"

namespace anosovlab {

enum class SystemKind { CatSuspension, BorelSmale, BorelSmalePerturbed, ASL2Model, SL3Model };

std::string_view kind_name(SystemKind k);
std::optional<SystemKind> parse_kind(std::string_view s);

// Golden-ratio square (3+√5)/2, the default unit for the Borel–Smale models.
inline constexpr double kGoldenUnit = 2.6180339887498948482;

struct SystemSpec {
  SystemKind kind = SystemKind::BorelSmale;
  int a = 3;
  int b = -2;
  double lambda = kGoldenUnit;
  double eps_pert = 0.0;
  std::array<int, 4> matrix{2, 1, 1, 1};  // cat map, row major
  double chart_bound = 1e12;             // chart-local models

  static SystemSpec cat(std::array<int, 4> m = {2, 1, 1, 1});
  static SystemSpec borel_smale(int a = 3, int b = -2, double lambda = kGoldenUnit);
  static SystemSpec borel_smale_perturbed(double eps, int a = 3, int b = -2,
                                          double lambda = kGoldenUnit);
  static SystemSpec asl2();
  static SystemSpec sl3();

  bool operator==(const SystemSpec&) const = default;
};

// Dimensions of (stable, neutral, unstable, strong-unstable). The strong-unstable
// block is the top Lyapunov block; `unstable` counts the rest of E^u.
struct BlockDims {
  int stable = 0;
  int neutral = 0;
  int unstable = 0;
  int strong_unstable = 0;
  int total() const { return stable + neutral + unstable + strong_unstable; }
};

enum class Metric { RightInvariant };

struct Point {
  Vec coords;
  bool reduced = false;
};

enum class LeafKind { Stable, Unstable, StrongUnstable, CenterStable };

namespace detail {
class Model;
}

// Points are group elements in second-kind coordinates. Tangent vectors live in
// the right-trivialized frame: v at x is the curve s -> exp(s v)·x. Displacement
// from x to y is the frame vector d with y = exp(d)·x, and distance is |d|.
class System {
 public:
  explicit System(const SystemSpec& spec);
  ~System();
  System(const System&);
  System& operator=(const System&);
  System(System&&) noexcept;
  System& operator=(System&&) noexcept;

  const SystemSpec& spec() const { return spec_; }
  SystemKind kind() const { return spec_.kind; }
  int dim() const;
  int coord_dim() const;
  BlockDims flow_dim_split() const;
  const std::optional<std::vector<double>>& exact_exponents() const { return exact_; }
  Metric metric() const { return Metric::RightInvariant; }

  bool quotiented() const;
  // Dg_t independent of the base point and displacements transported exactly.
  bool homogeneous() const;

  Point flow(const Point& x, double t) const;
  Point flow_lift(const Point& x, double t) const;
  Mat tangent_flow(const Point& x, double t) const;
  Point lattice_reduce(const Point& x) const;

  Point exp_at(const Point& x, const Vec& v) const;
  Vec displacement(const Point& x, const Point& y) const;
  double dist(const Point& x, const Point& y) const { return displacement(x, y).norm(); }

  // Flows x and exp(v)·x for time t; returns (g_t x, displacement at g_t x).
  std::pair<Point, Vec> transport(const Point& x, const Vec& v, double t) const;

  // Generator of the flow at x in the frame.
  Vec flow_vector(const Point& x) const;

  // Eigenframe of the unperturbed linear part, columns ordered by descending
  // weight, together with those weights.
  const Mat& reference_frame() const { return ref_frame_; }
  const std::vector<double>& reference_exponents() const { return ref_exponents_; }
  // Column indices of the reference frame spanning each exponent block.
  std::vector<std::vector<int>> reference_blocks() const;
  // Reference columns spanning the given leaf (exact leaf tangent for linear models).
  Mat leaf_directions(LeafKind kind) const;

  Point base_point() const;
  // Identity of the cover group.
  Point identity_point() const;
  Point random_point(std::uint64_t seed) const;
  // Coordinates in the fundamental domain (periodic ones in [0,1)).
  Vec fundamental_coords(const Point& x) const;
  Point from_fundamental(const Vec& w) const;
  std::vector<int> periodic_coords() const;

  // Chart radius used by default tolerances.
  double chart_radius() const;

  const detail::Model& model() const { return *model_; }

 private:
  Point check(Vec c, bool reduced) const;

  SystemSpec spec_;
  std::shared_ptr<const detail::Model> model_;
  std::optional<std::vector<double>> exact_;
  Mat ref_frame_;
  std::vector<double> ref_exponents_;
};

System make_system(const SystemSpec& spec);

// Integer Heisenberg group in polarized coordinates,
// (x,y,z)(x',y',z') = (x+x', y+y', z+z'+x y').
Eigen::Vector3d heisenberg_mul(const Eigen::Vector3d& p, const Eigen::Vector3d& q);
Eigen::Vector3d heisenberg_inv(const Eigen::Vector3d& p);
// Representative of p·H(Z) with all coordinates in [0,1).
Eigen::Vector3d heisenberg_reduce(const Eigen::Vector3d& p);

}  // namespace anosovlab
