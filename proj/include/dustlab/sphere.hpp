#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/geometry.hpp"
#include "dustlab/numerics.hpp"
#include "dustlab/rng.hpp"

namespace dustlab {

// Intersection of m spheres in R^d with affinely independent centers: a
// (d-m)-sphere described by its center, radius, the orthonormal basis of the
// center span (normal directions), and the orthonormal tangent frame.
struct SphereSlice {
  Vec center;
  double radius = 0.0;
  int sphere_dim = 0;   // q = d - m
  Mat normal_basis;     // d x (m-1)
  Mat tangent_frame;    // d x (q+1)
  bool tangency = false;

  double area() const {
    if (tangency || radius <= 0.0) return 0.0;
    return unit_sphere_area(sphere_dim) * std::pow(radius, sphere_dim);
  }
};

// Solves |x - c_i|^2 = t_i simultaneously.  Linearizing against the first
// sphere turns the system into Gram-matrix form: with u_i = c_i - c_1 and
// b_i = (|u_i|^2 + t_1 - t_i) / 2, the slice center is c_1 + U beta where
// (U^T U) beta = b, and the squared radius is t_1 - |U beta|^2.
inline SphereSlice intersect_spheres(const std::vector<Vec>& centers,
                                     const std::vector<double>& t,
                                     double tangency_tol = 1e-12) {
  if (centers.empty() || centers.size() != t.size())
    throw ConfigError("intersect_spheres: need matching centers and radii");
  const int d = static_cast<int>(centers.front().size());
  const int m = static_cast<int>(centers.size());
  if (m > d) throw ConfigError("intersect_spheres: more spheres than dimensions");
  for (const Vec& c : centers)
    if (c.size() != d) throw ConfigError("intersect_spheres: mixed dimensions");
  double t_scale = 0.0;
  for (double ti : t) {
    if (!(ti > 0.0))
      throw ConfigError("intersect_spheres: squared radii must be positive");
    t_scale = std::max(t_scale, ti);
  }

  SphereSlice slice;
  slice.sphere_dim = d - m;
  if (m == 1) {
    slice.center = centers[0];
    slice.radius = std::sqrt(t[0]);
    slice.normal_basis = Mat(d, 0);
    slice.tangent_frame = Mat::Identity(d, d);
    return slice;
  }

  Mat u(d, m - 1);
  Vec b(m - 1);
  for (int i = 1; i < m; ++i) {
    u.col(i - 1) = centers[static_cast<std::size_t>(i)] - centers[0];
    b[i - 1] = 0.5 * (u.col(i - 1).squaredNorm() + t[0] -
                      t[static_cast<std::size_t>(i)]);
  }
  Mat gram = u.transpose() * u;
  Eigen::FullPivLU<Mat> lu(gram);
  lu.setThreshold(1e-12);
  if (lu.rank() < m - 1)
    throw DegenerateCentersError(
        "intersect_spheres: centers are affinely dependent");
  Vec beta = lu.solve(b);
  Vec offset = u * beta;
  slice.center = centers[0] + offset;
  double r2 = t[0] - offset.squaredNorm();
  double tol = tangency_tol * std::max(t_scale, offset.squaredNorm());
  if (r2 < -tol)
    throw EmptyIntersectionError(
        "intersect_spheres: squared radius " + std::to_string(r2) +
        " is negative; the spheres do not meet");
  if (r2 <= tol) {
    slice.radius = 0.0;
    slice.tangency = true;
  } else {
    slice.radius = std::sqrt(r2);
  }
  slice.normal_basis = orthonormal_span(u);
  slice.tangent_frame = orthonormal_complement(u);
  return slice;
}

// Gram data of a configuration point x against sphere centers x_1..x_m:
// T_ij = <x - x_i, x - x_j>, the transversality weight c_T = 2^-m det(T)^-1/2,
// and the parallelotope volume sqrt(det T) spanned by the x - x_i.
struct GramData {
  Mat t_matrix;
  double det = 0.0;
  double weight_c = 0.0;
  double parallelotope_volume = 0.0;
};

inline GramData gram_weight(const Vec& x, const std::vector<Vec>& centers,
                            double det_floor = 1e-14) {
  const int m = static_cast<int>(centers.size());
  if (m == 0) throw ConfigError("gram_weight: no centers");
  GramData g;
  g.t_matrix.resize(m, m);
  double scale2 = 0.0;
  for (int i = 0; i < m; ++i) {
    Vec di = x - centers[static_cast<std::size_t>(i)];
    scale2 = std::max(scale2, di.squaredNorm());
    for (int j = i; j < m; ++j) {
      double v = di.dot(x - centers[static_cast<std::size_t>(j)]);
      g.t_matrix(i, j) = v;
      g.t_matrix(j, i) = v;
    }
  }
  g.det = g.t_matrix.determinant();
  double floor = det_floor * std::pow(scale2, m);
  if (!(g.det > floor))
    throw SingularGramError(
        "gram_weight: det(T) = " + std::to_string(g.det) +
        " is not safely positive; configuration is degenerate");
  g.parallelotope_volume = std::sqrt(g.det);
  g.weight_c = std::pow(2.0, -m) / g.parallelotope_volume;
  return g;
}

// Uniform sample on the slice sphere: Gaussian in the tangent frame,
// projected to radius rho.
inline Vec sample_on_slice(const SphereSlice& slice, RngStream& rng) {
  if (slice.tangency || slice.radius <= 0.0)
    throw EmptySliceError("sample_on_slice: slice has no surface");
  const int q1 = slice.sphere_dim + 1;
  Vec g(q1);
  double n2 = 0.0;
  do {
    for (int i = 0; i < q1; ++i) g[i] = rng.normal();
    n2 = g.squaredNorm();
  } while (n2 < 1e-300);
  g /= std::sqrt(n2);
  return slice.center + slice.radius * (slice.tangent_frame * g);
}

}  // namespace dustlab
