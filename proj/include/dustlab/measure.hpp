#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/geometry.hpp"
#include "dustlab/rng.hpp"
#include "dustlab/spatial.hpp"

namespace dustlab {

// ---------------------------------------------------------------------------
// Equicontractive iterated function systems on the unit cube.

struct IfsCell {
  double ratio;
  Vec translation;
};

struct IteratedFunctionSystem {
  int ambient_dim = 1;
  std::vector<IfsCell> cells;

  double contraction_ratio() const {
    if (cells.empty()) throw ConfigError("ifs: no cells");
    return cells.front().ratio;
  }

  // s with n * r^s = 1.
  double similarity_dimension() const {
    return std::log(static_cast<double>(cells.size())) /
           std::log(1.0 / contraction_ratio());
  }

  // Every map must send the open unit cube into itself and sibling images
  // must have disjoint open interiors (box overlap test).  Ratios must agree:
  // the depth-level atom weights below assume a single contraction scale.
  void validate() const {
    if (ambient_dim < 1) throw ConfigError("ifs: ambient_dim must be >= 1");
    if (cells.empty()) throw ConfigError("ifs: no cells");
    const double r = cells.front().ratio;
    if (!(r > 0.0 && r < 1.0))
      throw ConfigError("ifs: contraction ratio must lie in (0,1)");
    const double tol = 1e-12;
    for (const IfsCell& c : cells) {
      if (std::abs(c.ratio - r) > tol)
        throw ConfigError("ifs: contraction ratios must all be equal");
      if (c.translation.size() != ambient_dim)
        throw ConfigError("ifs: translation dimension mismatch");
      for (int a = 0; a < ambient_dim; ++a) {
        double t = c.translation[a];
        if (t < -tol || t + r > 1.0 + tol)
          throw ConfigError("ifs: map does not send the unit cube into itself");
      }
    }
    for (std::size_t i = 0; i < cells.size(); ++i)
      for (std::size_t j = i + 1; j < cells.size(); ++j) {
        bool separated = false;
        for (int a = 0; a < ambient_dim; ++a)
          if (std::abs(cells[i].translation[a] - cells[j].translation[a]) >=
              r - tol) {
            separated = true;
            break;
          }
        if (!separated)
          throw OverlapViolationError(
              "ifs: open images of cells " + std::to_string(i) + " and " +
              std::to_string(j) + " overlap");
      }
  }
};

// The usual named examples.  "quadrant" drops the (1,1) quadrant cell.
inline IteratedFunctionSystem cantor_middle_thirds_ifs() {
  IteratedFunctionSystem ifs;
  ifs.ambient_dim = 1;
  ifs.cells = {{1.0 / 3.0, Vec::Zero(1)}, {1.0 / 3.0, Vec::Constant(1, 2.0 / 3.0)}};
  return ifs;
}

inline IteratedFunctionSystem quadrant_dust_ifs(int dim, bool full_cube = false) {
  IteratedFunctionSystem ifs;
  ifs.ambient_dim = dim;
  int corners = 1 << dim;
  for (int c = 0; c < corners; ++c) {
    if (!full_cube && dim > 1 && c == corners - 1)
      continue;  // drop the all-ones corner, leaving 2^dim - 1 cells
    Vec t(dim);
    for (int a = 0; a < dim; ++a) t[a] = (c >> a) & 1 ? 0.5 : 0.0;
    ifs.cells.push_back({0.5, t});
  }
  return ifs;
}

// ---------------------------------------------------------------------------
// Finite atomic approximations of Frostman measures.

class PointMassMeasure {
 public:
  PointMassMeasure() = default;
  PointMassMeasure(int dim, std::vector<double> coords,
                   std::vector<double> weights, double dimension_s)
      : dim_(dim),
        coords_(std::move(coords)),
        weights_(std::move(weights)),
        s_(dimension_s) {
    if (dim_ < 1) throw ConfigError("measure: dimension must be >= 1");
    if (weights_.empty() || coords_.size() != weights_.size() * dim_)
      throw ConfigError("measure: coordinate/weight size mismatch");
    for (double w : weights_)
      if (!(w >= 0.0)) throw ConfigError("measure: negative weight");
  }

  int ambient_dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  double dimension_s() const { return s_; }

  const double* point_data(std::size_t i) const { return coords_.data() + i * dim_; }
  Eigen::Map<const Vec> point(std::size_t i) const {
    return Eigen::Map<const Vec>(point_data(i), dim_);
  }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& coords() const { return coords_; }
  const std::vector<double>& weights() const { return weights_; }

  double total_mass() const {
    double m = 0.0;
    for (double w : weights_) m += w;
    return m;
  }

  void bounding_box(Vec& lo, Vec& hi) const {
    lo = Vec::Constant(dim_, std::numeric_limits<double>::infinity());
    hi = Vec::Constant(dim_, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < size(); ++i)
      for (int a = 0; a < dim_; ++a) {
        double v = point_data(i)[a];
        lo[a] = std::min(lo[a], v);
        hi[a] = std::max(hi[a], v);
      }
  }

  // Upper bound on the support diameter (bounding-box diagonal).
  double diameter_bound() const {
    Vec lo, hi;
    bounding_box(lo, hi);
    double d = (hi - lo).norm();
    return d > 0.0 ? d : 0.0;
  }

  // Exact nearest-neighbor gap between distinct atoms.
  double min_gap() const {
    if (size() < 2) return 0.0;
    double diam = diameter_bound();
    if (diam == 0.0) return 0.0;
    double cell = diam / std::max(2.0, std::pow(static_cast<double>(size()),
                                                1.0 / dim_));
    PointGrid grid(coords_.data(), size(), dim_, cell);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) {
      double d = grid.nearest_distance(point_data(i), i);
      if (d > 0.0 && d < best) best = d;
    }
    return std::isfinite(best) ? best : 0.0;
  }

 private:
  int dim_ = 0;
  std::vector<double> coords_;
  std::vector<double> weights_;
  double s_ = 0.0;
};

// Mass of the closed ball B(center, r).
inline double measure_ball(const PointMassMeasure& mu, const Vec& center,
                           double r) {
  if (center.size() != mu.ambient_dim())
    throw ConfigError("measure_ball: center dimension mismatch");
  if (r < 0.0) return 0.0;
  double r2 = r * r;
  double m = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double d2 = 0.0;
    const double* p = mu.point_data(i);
    for (int a = 0; a < mu.ambient_dim(); ++a) {
      double t = p[a] - center[a];
      d2 += t * t;
    }
    if (d2 <= r2) m += mu.weight(i);
  }
  return m;
}

// Atoms at the centers of all depth-level cells, equal weights.  Atom order
// is depth-first in cell-word order, so output is deterministic.
inline PointMassMeasure build_cantor_dust(const IteratedFunctionSystem& ifs,
                                          int depth,
                                          std::size_t atom_cap = 10'000'000) {
  ifs.validate();
  if (depth < 0) throw ConfigError("build_cantor_dust: negative depth");
  const int k = ifs.ambient_dim;
  const std::size_t ncells = ifs.cells.size();
  double count = std::pow(static_cast<double>(ncells), depth);
  if (count > static_cast<double>(atom_cap))
    throw AtomCapError("build_cantor_dust: " + std::to_string(count) +
                       " atoms exceeds cap " + std::to_string(atom_cap));
  std::vector<double> pts(static_cast<std::size_t>(k), 0.5);
  for (int level = 0; level < depth; ++level) {
    std::vector<double> next;
    next.reserve(pts.size() * ncells);
    for (std::size_t i = 0; i < pts.size() / k; ++i)
      for (const IfsCell& c : ifs.cells)
        for (int a = 0; a < k; ++a)
          next.push_back(c.ratio * pts[i * k + a] + c.translation[a]);
    pts.swap(next);
  }
  std::size_t n = pts.size() / k;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  return PointMassMeasure(k, std::move(pts), std::move(w),
                          ifs.similarity_dimension());
}

// ---------------------------------------------------------------------------
// Frostman constant scan and witness-ball renormalization.

struct FrostmanOptions {
  std::size_t max_centers = 1024;
  // Geometric ladder factor.  Kept tight: the renormalization bound below
  // degrades by factor^s when a ball falls between rungs, and the constant-4
  // target leaves room only for ~2^(s/4) at s <= 4.
  double radius_factor = 1.18920711500272106671;  // 2^(1/4)
  std::vector<double> radii;                      // optional explicit ladder
  double divergence_ceiling = 1e6;
  std::uint64_t seed = 1;
};

struct FrostmanReport {
  double exponent_s = 0.0;
  double constant = 0.0;
  Vec witness_center;
  double witness_radius = 0.0;
  double witness_mass = 0.0;
  std::vector<double> radii;
  bool diverged = false;
};

inline std::vector<double> default_radius_ladder(const PointMassMeasure& mu,
                                                 double factor) {
  double gap = mu.min_gap();
  double diam = mu.diameter_bound();
  if (mu.size() == 1 || diam <= 0.0) return {1.0};
  if (gap <= 0.0) gap = diam * 1e-6;
  std::vector<double> out;
  for (double r = gap; r < diam * factor; r *= factor) out.push_back(r);
  if (out.empty() || out.back() < diam) out.push_back(diam);
  return out;
}

// Scans mu(B(x,r)) / r^s over atom-centered balls and a geometric radius
// ladder.  The ladder floor is the nearest-neighbor gap: below it any atomic
// measure gives a single-atom spike w / r^s that diverges as r -> 0 and says
// nothing about the measure at observable scales.
inline FrostmanReport estimate_frostman_constant(
    const PointMassMeasure& mu, double s, const FrostmanOptions& opt = {}) {
  if (!(s > 0.0)) throw InvalidExponentError("frostman: s must be positive");
  std::vector<double> radii =
      opt.radii.empty() ? default_radius_ladder(mu, opt.radius_factor)
                        : opt.radii;
  if (radii.empty()) throw EmptyRadiiError("frostman: empty radius ladder");
  for (double r : radii)
    if (!(r > 0.0)) throw EmptyRadiiError("frostman: radii must be positive");
  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end());

  const std::size_t n = mu.size();
  std::vector<std::size_t> centers;
  if (n <= opt.max_centers) {
    centers.resize(n);
    for (std::size_t i = 0; i < n; ++i) centers[i] = i;
  } else {
    RngStream rng = RngStream::substream(opt.seed, "frostman-centers", 0);
    centers.resize(opt.max_centers);
    for (std::size_t i = 0; i < opt.max_centers; ++i)
      centers[i] = static_cast<std::size_t>(rng.below(n));
    std::sort(centers.begin(), centers.end());
    centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  }

  FrostmanReport rep;
  rep.exponent_s = s;
  rep.radii = sorted;
  const int k = mu.ambient_dim();
  std::vector<double> cum(sorted.size());
  for (std::size_t ci : centers) {
    const double* c = mu.point_data(ci);
    std::fill(cum.begin(), cum.end(), 0.0);
    // Bucket every atom into the first rung that contains it, then prefix-sum
    // to get ball masses for the whole ladder in one pass.
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = mu.point_data(i);
      double d2 = 0.0;
      for (int a = 0; a < k; ++a) {
        double t = p[a] - c[a];
        d2 += t * t;
      }
      double d = std::sqrt(d2);
      auto it = std::lower_bound(sorted.begin(), sorted.end(), d);
      if (it != sorted.end())
        cum[static_cast<std::size_t>(it - sorted.begin())] += mu.weight(i);
    }
    double mass = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      mass += cum[j];
      double ratio = mass / std::pow(sorted[j], s);
      if (ratio > rep.constant) {
        rep.constant = ratio;
        rep.witness_center = mu.point(ci);
        rep.witness_radius = sorted[j];
        rep.witness_mass = mass;
      }
    }
  }
  if (rep.constant <= 0.0)
    throw NoWitnessError("frostman: no ball with positive mass found");
  rep.diverged = rep.constant > opt.divergence_ceiling;
  return rep;
}

// Witness-ball renormalization: restrict to Q = B(v, rho), recenter, rescale
// to the unit ball, divide by mu(Q).  Because the witness maximizes
// mu(B)/r^s over the scan, the output's own scan constant is bounded by
// 2 * factor^s, under 4 for the default ladder; verified by a fresh scan.
inline PointMassMeasure renormalize(const PointMassMeasure& mu, double s,
                                    const FrostmanReport& report,
                                    double tau = 0.1,
                                    const FrostmanOptions& opt = {},
                                    FrostmanReport* fresh_report = nullptr) {
  if (report.witness_radius <= 0.0 || report.witness_mass <= 0.0)
    throw NoWitnessError("renormalize: report has no usable witness");
  const int k = mu.ambient_dim();
  const Vec& v = report.witness_center;
  const double rho = report.witness_radius;
  std::vector<double> pts, w;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    Eigen::Map<const Vec> p = mu.point(i);
    double d = (p - v).norm();
    if (d <= rho) {
      Vec q = (p - v) / rho;
      for (int a = 0; a < k; ++a) pts.push_back(q[a]);
      w.push_back(mu.weight(i) / report.witness_mass);
    }
  }
  if (w.empty()) throw NoWitnessError("renormalize: empty witness ball");
  PointMassMeasure nu(k, std::move(pts), std::move(w), s);

  FrostmanReport fresh = estimate_frostman_constant(nu, s, opt);
  if (fresh.constant > 4.0 * (1.0 + tau))
    throw NormalizationError(
        "renormalize: fresh scan constant " + std::to_string(fresh.constant) +
        " exceeds 4*(1+tau) = " + std::to_string(4.0 * (1.0 + tau)));
  if (fresh_report) *fresh_report = fresh;
  return nu;
}

}  // namespace dustlab
