#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "anosovlab/errors.hpp"
#include "anosovlab/systems.hpp"

namespace anosovlab::detail {

// x mod 1 in [0,1), guarding the rounding case floor(-tiny) giving exactly 1.
inline double frac01(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

class Model {
 public:
  virtual ~Model() = default;

  virtual int dim() const = 0;
  virtual int coord_dim() const = 0;
  virtual bool quotiented() const = 0;
  virtual bool homogeneous() const = 0;

  // Flow on the cover. Non-homogeneous models only need |t| <= 1 here.
  virtual Vec flow(const Vec& c, double t) const = 0;
  // Frame Jacobian of the cover flow at c. Same time restriction as flow.
  virtual Mat tangent(const Vec& c, double t) const = 0;
  // Exact transport of a displacement by Dg_t (homogeneous models).
  virtual Vec conjugate(const Vec& d, double t) const { return tangent(Vec(), t) * d; }

  virtual Vec exp_left(const Vec& v, const Vec& c) const = 0;
  // Frame coordinates of q·p^{-1}.
  virtual Vec rel(const Vec& p, const Vec& q) const = 0;

  virtual Vec reduce(const Vec&) const { fail(ErrorCode::Unsupported, "model has no lattice"); }
  virtual Vec fundamental(const Vec&) const {
    fail(ErrorCode::Unsupported, "model has no lattice");
  }
  virtual Vec from_fundamental(const Vec&) const {
    fail(ErrorCode::Unsupported, "model has no lattice");
  }
  virtual std::vector<int> periodic() const { return {}; }

  virtual bool in_chart(const Vec& c) const { return c.allFinite(); }
  virtual Vec generator(const Vec& c) const = 0;

  // Diagonal weights of the linear part in the frame basis.
  virtual std::vector<double> frame_weights() const = 0;
  // Reference eigenframe (columns) matching frame_weights order.
  virtual Mat frame_eigenvectors() const { return Mat::Identity(dim(), dim()); }

  virtual Vec base() const = 0;
  virtual Vec identity() const = 0;
  virtual double chart_radius() const { return 0.1; }
};

std::shared_ptr<const Model> make_cat(const SystemSpec& s);
std::shared_ptr<const Model> make_borel_smale(const SystemSpec& s);
std::shared_ptr<const Model> make_asl2(const SystemSpec& s);
std::shared_ptr<const Model> make_sl3(const SystemSpec& s);

}  // namespace anosovlab::detail
