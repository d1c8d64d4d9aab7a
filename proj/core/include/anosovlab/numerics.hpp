#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace anosovlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

// Ordinary least squares y = intercept + slope * x. r2 is 1 for an exact line.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Orthonormal basis for the column span of a (thin Householder QR).
Mat orthonormalize(const Mat& a);

// Principal angles between column spans, ascending, in radians.
Vec principal_angles(const Mat& a, const Mat& b);

// Smallest principal angle between two subspaces.
double subspace_angle(const Mat& a, const Mat& b);

// Orthonormal basis of span(a) ∩ span(b) of the requested dimension, taken
// from the directions of span(a) closest to span(b).
Mat subspace_intersection(const Mat& a, const Mat& b, int dim);

// Linear-interpolated empirical quantile, q in [0,1].
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> v);
double sample_stddev(std::span<const double> v);

}  // namespace anosovlab
