#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/geometry.hpp"

namespace dustlab {

// A (p-1)-simplex in R^d given by p affinely independent vertices, p <= d+1.
class Simplex {
 public:
  explicit Simplex(std::vector<Vec> vertices) : verts_(std::move(vertices)) {
    if (verts_.size() < 2)
      throw ConfigError("simplex: need at least 2 vertices");
    d_ = static_cast<int>(verts_.front().size());
    if (static_cast<int>(verts_.size()) > d_ + 1)
      throw ConfigError("simplex: more than d+1 vertices cannot be affinely independent");
    for (const Vec& v : verts_)
      if (v.size() != d_) throw ConfigError("simplex: mixed vertex dimensions");
  }

  int ambient_dim() const { return d_; }
  int vertex_count() const { return static_cast<int>(verts_.size()); }
  const Vec& vertex(int j) const { return verts_[static_cast<std::size_t>(j)]; }
  const std::vector<Vec>& vertices() const { return verts_; }

  double edge_length(int i, int j) const {
    return (verts_[static_cast<std::size_t>(i)] -
            verts_[static_cast<std::size_t>(j)])
        .norm();
  }

  Simplex scaled(double lambda) const {
    std::vector<Vec> v = verts_;
    for (Vec& x : v) x *= lambda;
    return Simplex(std::move(v));
  }

  Simplex transformed(const Mat& rotation, const Vec& shift) const {
    std::vector<Vec> v;
    v.reserve(verts_.size());
    for (const Vec& x : verts_) v.push_back(rotation * x + shift);
    return Simplex(std::move(v));
  }

  struct Invariants {
    std::vector<double> vertex_hull_distances;  // r_j
    double min_distance = 0.0;                  // r = min_j r_j
    double diameter = 0.0;                      // d = longest edge
    double thickness = 0.0;                     // r / d
  };

  // r_j is the distance from v_j to the affine hull of the other vertices.
  // Affine dependence shows up as some r_j collapsing against the diameter.
  Invariants invariants() const {
    Invariants inv;
    const int p = vertex_count();
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j)
        inv.diameter = std::max(inv.diameter, edge_length(i, j));
    if (inv.diameter <= 0.0)
      throw DegenerateSimplexError("simplex: repeated vertices");
    inv.vertex_hull_distances.resize(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
      inv.vertex_hull_distances[static_cast<std::size_t>(j)] =
          distance_to_hull_of_others(j);
    }
    inv.min_distance = inv.vertex_hull_distances[0];
    for (double r : inv.vertex_hull_distances) {
      // Rank-deficient hulls (repeated vertices) can surface as NaN from the
      // least-squares solve; that is degeneracy, not a finite distance.
      if (!std::isfinite(r))
        throw DegenerateSimplexError(
            "simplex: vertices are affinely dependent within tolerance");
      inv.min_distance = std::min(inv.min_distance, r);
    }
    if (inv.min_distance <= 1e-10 * inv.diameter)
      throw DegenerateSimplexError(
          "simplex: vertices are affinely dependent within tolerance");
    inv.thickness = inv.min_distance / inv.diameter;
    return inv;
  }

 private:
  double distance_to_hull_of_others(int j) const {
    const int p = vertex_count();
    // anchor = first vertex that is not j
    int anchor = j == 0 ? 1 : 0;
    Vec b = verts_[static_cast<std::size_t>(j)] -
            verts_[static_cast<std::size_t>(anchor)];
    Mat dirs(d_, p - 2);
    int col = 0;
    for (int i = 0; i < p; ++i) {
      if (i == j || i == anchor) continue;
      dirs.col(col++) = verts_[static_cast<std::size_t>(i)] -
                        verts_[static_cast<std::size_t>(anchor)];
    }
    if (dirs.cols() == 0) return b.norm();
    Vec coeff = dirs.colPivHouseholderQr().solve(b);
    return (b - dirs * coeff).norm();
  }

  std::vector<Vec> verts_;
  int d_ = 0;
};

}  // namespace dustlab
