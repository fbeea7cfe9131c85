#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace carnot {

inline constexpr double kRankTol = 1e-10;

// Orthonormal basis of the column span.
inline Eigen::MatrixXd orth(const Eigen::MatrixXd& a, double tol = kRankTol) {
  if (a.cols() == 0) return Eigen::MatrixXd(a.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double scale = std::max(1.0, s.size() ? s[0] : 0.0);
  int r = 0;
  while (r < s.size() && s[r] > tol * scale) ++r;
  return svd.matrixU().leftCols(r);
}

inline int rank(const Eigen::MatrixXd& a, double tol = kRankTol) {
  return static_cast<int>(orth(a, tol).cols());
}

// Orthonormal basis of the null space of a (as columns).
inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, double tol = kRankTol) {
  const auto n = a.cols();
  if (a.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double scale = std::max(1.0, s.size() ? s[0] : 0.0);
  int r = 0;
  while (r < s.size() && s[r] > tol * scale) ++r;
  return svd.matrixV().rightCols(n - r);
}

// Orthonormal basis of the orthogonal complement of span(a) inside span(ambient).
inline Eigen::MatrixXd complement_in(const Eigen::MatrixXd& a, const Eigen::MatrixXd& ambient) {
  Eigen::MatrixXd proj = ambient - a * (a.transpose() * ambient);
  return orth(proj, 1e-8);
}

inline double sqrt_gram_det(const Eigen::MatrixXd& a) {
  if (a.cols() == 0) return 1.0;
  double d = (a.transpose() * a).determinant();
  return d > 0 ? std::sqrt(d) : 0.0;
}

}  // namespace carnot
