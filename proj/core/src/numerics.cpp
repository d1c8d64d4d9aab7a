#include "anosovlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace anosovlab {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  LinearFit f;
  f.n = x.size();
  if (f.n < 2) return f;
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < f.n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

Mat orthonormalize(const Mat& a) {
  Eigen::HouseholderQR<Mat> qr(a);
  return qr.householderQ() * Mat::Identity(a.rows(), a.cols());
}

Vec principal_angles(const Mat& a, const Mat& b) {
  const Mat qa = orthonormalize(a);
  const Mat qb = orthonormalize(b);
  Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb);
  Vec s = svd.singularValues();
  Vec ang(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) ang[i] = std::acos(std::clamp(s[i], -1.0, 1.0));
  std::sort(ang.data(), ang.data() + ang.size());
  return ang;
}

double subspace_angle(const Mat& a, const Mat& b) {
  const Vec ang = principal_angles(a, b);
  return ang.size() ? ang[0] : 0.0;
}

Mat subspace_intersection(const Mat& a, const Mat& b, int dim) {
  const Mat qa = orthonormalize(a);
  const Mat qb = orthonormalize(b);
  Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb, Eigen::ComputeThinU);
  return orthonormalize(qa * svd.matrixU().leftCols(dim));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - w) + values[hi] * w;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace anosovlab
