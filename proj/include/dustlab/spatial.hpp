#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "dustlab/errors.hpp"

namespace dustlab {

// Uniform hash grid over a flat point array (n x dim, row-major).  Queries
// visit candidate cells in lexicographic order and points within a cell in
// index order, so traversal order is deterministic.
class PointGrid {
 public:
  PointGrid(const double* pts, std::size_t n, int dim, double cell_size)
      : pts_(pts), n_(n), dim_(dim), cell_(cell_size) {
    if (dim_ < 1 || dim_ > 16) throw Error("PointGrid: bad dimension");
    if (!(cell_ > 0.0)) throw Error("PointGrid: cell size must be positive");
    buckets_.reserve(n);
    for (std::size_t i = 0; i < n_; ++i)
      buckets_[key_of(pts_ + i * dim_)].push_back(static_cast<std::uint32_t>(i));
  }

  double cell_size() const { return cell_; }

  // Calls f(index) for every point with |p - center| <= r.
  template <class F>
  void for_each_in_ball(const double* center, double r, F&& f) const {
    for_each_in_shell(center, 0.0, r, static_cast<F&&>(f));
  }

  // Calls f(index) for every point with r_lo <= |p - center| <= r_hi.
  // Rows along axis 0 are clipped to the annulus analytically (outer
  // reach bound plus the run of cells buried inside the inner radius),
  // so the traversal cost tracks the intersecting cells rather than the
  // whole bounding box of the outer ball.
  template <class F>
  void for_each_in_shell(const double* center, double r_lo, double r_hi,
                         F&& f) const {
    if (r_hi < 0.0) return;
    std::int64_t lo[16], hi[16], idx[16];
    for (int a = 1; a < dim_; ++a) {
      lo[a] = cell_coord(center[a] - r_hi);
      hi[a] = cell_coord(center[a] + r_hi);
      idx[a] = lo[a];
    }
    const double lo2 = r_lo > 0.0 ? r_lo * r_lo : 0.0;
    const double hi2 = r_hi * r_hi;
    for (;;) {
      // Corner-distance contribution of the trailing axes for this row.
      double near_rest2 = 0.0, far_rest2 = 0.0;
      for (int a = 1; a < dim_; ++a) {
        const double c_lo = static_cast<double>(idx[a]) * cell_;
        const double c_hi = c_lo + cell_;
        const double below = c_lo - center[a];
        const double above = center[a] - c_hi;
        const double gap = below > 0.0 ? below : (above > 0.0 ? above : 0.0);
        near_rest2 += gap * gap;
        const double reach =
            std::max(std::abs(c_lo - center[a]), std::abs(c_hi - center[a]));
        far_rest2 += reach * reach;
      }
      if (near_rest2 <= hi2) {
        const double half = std::sqrt(hi2 - near_rest2);
        const std::int64_t x_lo = cell_coord(center[0] - half);
        const std::int64_t x_hi = cell_coord(center[0] + half);
        // Cells whose whole box lies strictly inside r_lo; endpoints are
        // re-checked exactly so rounding never drops a boundary cell.
        std::int64_t hole_lo = 1, hole_hi = 0;
        if (far_rest2 < lo2) {
          const double inner = std::sqrt(lo2 - far_rest2);
          hole_lo = cell_coord(center[0] - inner) + 1;
          hole_hi = cell_coord(center[0] + inner) - 1;
          const auto buried = [&](std::int64_t x) {
            const double c_lo = static_cast<double>(x) * cell_;
            const double reach = std::max(std::abs(c_lo - center[0]),
                                          std::abs(c_lo + cell_ - center[0]));
            return far_rest2 + reach * reach < lo2;
          };
          while (hole_lo <= hole_hi && !buried(hole_lo)) ++hole_lo;
          while (hole_lo <= hole_hi && !buried(hole_hi)) --hole_hi;
        }
        for (std::int64_t x = x_lo; x <= x_hi; ++x) {
          if (x >= hole_lo && x <= hole_hi) {
            x = hole_hi;
            continue;
          }
          idx[0] = x;
          const auto it = buckets_.find(pack(idx));
          if (it == buckets_.end()) continue;
          for (std::uint32_t i : it->second) {
            const double* p = pts_ + static_cast<std::size_t>(i) * dim_;
            double d2 = 0.0;
            for (int a = 0; a < dim_; ++a) {
              const double t = p[a] - center[a];
              d2 += t * t;
            }
            if (d2 <= hi2 && d2 >= lo2) f(static_cast<std::size_t>(i));
          }
        }
      }
      int a = dim_ - 1;
      while (a >= 1) {
        if (++idx[a] <= hi[a]) break;
        idx[a] = lo[a];
        --a;
      }
      if (a < 1) break;
    }
  }

  // Distance to the nearest point other than the query index itself
  // (pass n for "no exclusion").  Expands the search radius geometrically.
  double nearest_distance(const double* center, std::size_t exclude) const {
    double r = cell_;
    for (int round = 0; round < 64; ++round) {
      double best = -1.0;
      for_each_in_ball(center, r, [&](std::size_t i) {
        if (i == exclude) return;
        const double* p = pts_ + i * dim_;
        double d2 = 0.0;
        for (int a = 0; a < dim_; ++a) {
          double t = p[a] - center[a];
          d2 += t * t;
        }
        double d = std::sqrt(d2);
        if (best < 0.0 || d < best) best = d;
      });
      if (best >= 0.0 && best <= r) return best;
      r *= 2.0;
    }
    return -1.0;
  }

 private:
  std::int64_t cell_coord(double x) const {
    return static_cast<std::int64_t>(std::floor(x / cell_));
  }

  std::uint64_t key_of(const double* p) const {
    std::int64_t idx[16];
    for (int a = 0; a < dim_; ++a) idx[a] = cell_coord(p[a]);
    return pack(idx);
  }

  std::uint64_t pack(const std::int64_t* idx) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int a = 0; a < dim_; ++a) {
      std::uint64_t v = static_cast<std::uint64_t>(idx[a]);
      v *= 0xbf58476d1ce4e5b9ULL;
      v ^= v >> 31;
      h = (h ^ v) * 0x94d9f49a609c9591ULL;
    }
    return h ^ (h >> 29);
  }

  const double* pts_;
  std::size_t n_;
  int dim_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
};

}  // namespace dustlab
