#pragma once

#include <Eigen/Dense>

#include "dustlab/rng.hpp"

namespace dustlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Orthonormal basis of the column span, via Householder QR.
inline Mat orthonormal_span(const Mat& basis) {
  if (basis.cols() == 0) return Mat(basis.rows(), 0);
  Eigen::HouseholderQR<Mat> qr(basis);
  Mat q = qr.householderQ() * Mat::Identity(basis.rows(), basis.cols());
  return q;
}

// Orthonormal basis of the orthogonal complement of the column span.
inline Mat orthonormal_complement(const Mat& basis) {
  Eigen::Index d = basis.rows(), p = basis.cols();
  if (p == 0) return Mat::Identity(d, d);
  Eigen::HouseholderQR<Mat> qr(basis);
  Mat full = qr.householderQ() * Mat::Identity(d, d);
  return full.rightCols(d - p);
}

inline Vec random_unit_vector(int d, RngStream& rng) {
  Vec v(d);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
    norm2 = v.squaredNorm();
  } while (norm2 < 1e-300);
  return v / std::sqrt(norm2);
}

// Haar-ish rotation: QR of a Gaussian matrix with the sign of diag(R) fixed,
// then a final column flip to land in SO(d).
inline Mat random_rotation(int d, RngStream& rng) {
  Mat g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(d, d);
  Mat r = q.transpose() * g;
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  if (q.determinant() < 0.0) q.col(d - 1) = -q.col(d - 1);
  return q;
}

}  // namespace dustlab
