#pragma once

// Approximate similar-copy search in atom clouds: seed on a base pair to
// fix the scale, extend vertex by vertex through annulus queries against
// the pattern's predicted slice positions, then refit the scale and
// re-verify every reported match exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/geometry.hpp"
#include "dustlab/graph.hpp"
#include "dustlab/measure.hpp"
#include "dustlab/parallel.hpp"
#include "dustlab/simplex.hpp"
#include "dustlab/spatial.hpp"

namespace dustlab {

// Rigid search template: reference vertices (first at the origin), the
// distance constraints to honor during extension, and the pairs that
// enter the reported residual (all pairs for simplices, edges for graphs).
struct ScanPattern {
  std::vector<Vec> vertices;
  std::vector<std::pair<int, int>> constraints;
  std::vector<double> ref_distances;        // aligned with constraints
  bool residual_over_all_pairs = false;
  std::vector<int> placement;               // vertex order; [0],[1] = base pair
  double base_distance = 0.0;               // reference length of the base pair
};

namespace detail {

inline ScanPattern build_pattern(std::vector<Vec> vertices,
                                 std::vector<std::pair<int, int>> constraints,
                                 bool all_pairs) {
  ScanPattern pat;
  pat.vertices = std::move(vertices);
  pat.constraints = std::move(constraints);
  pat.residual_over_all_pairs = all_pairs;
  pat.ref_distances.reserve(pat.constraints.size());
  int longest = 0;
  for (std::size_t e = 0; e < pat.constraints.size(); ++e) {
    const auto [i, j] = pat.constraints[e];
    const double d = (pat.vertices[static_cast<std::size_t>(i)] -
                      pat.vertices[static_cast<std::size_t>(j)]).norm();
    pat.ref_distances.push_back(d);
    if (d > pat.ref_distances[static_cast<std::size_t>(longest)]) longest = static_cast<int>(e);
  }
  // Placement starts at the longest constraint edge (most accurate scale
  // seed), then repeatedly adds the vertex with the most placed
  // constraint neighbors; ties break on the smaller index.
  const int n = static_cast<int>(pat.vertices.size());
  std::vector<char> placed(static_cast<std::size_t>(n), 0);
  pat.placement = {pat.constraints[static_cast<std::size_t>(longest)].first,
                   pat.constraints[static_cast<std::size_t>(longest)].second};
  pat.base_distance = pat.ref_distances[static_cast<std::size_t>(longest)];
  placed[static_cast<std::size_t>(pat.placement[0])] = 1;
  placed[static_cast<std::size_t>(pat.placement[1])] = 1;
  for (int round = 2; round < n; ++round) {
    int best = -1, best_count = 0;
    for (int v = 0; v < n; ++v) {
      if (placed[static_cast<std::size_t>(v)]) continue;
      int count = 0;
      for (std::size_t e = 0; e < pat.constraints.size(); ++e) {
        const auto [i, j] = pat.constraints[e];
        if ((i == v && placed[static_cast<std::size_t>(j)]) ||
            (j == v && placed[static_cast<std::size_t>(i)]))
          ++count;
      }
      if (count > best_count) {
        best = v;
        best_count = count;
      }
    }
    if (best < 0)
      throw ConfigError("scan pattern: constraint graph does not connect all vertices");
    pat.placement.push_back(best);
    placed[static_cast<std::size_t>(best)] = 1;
  }
  return pat;
}

}  // namespace detail

inline ScanPattern make_scan_pattern(const Simplex& simplex) {
  std::vector<Vec> verts;
  for (int j = 0; j < simplex.vertex_count(); ++j)
    verts.push_back(simplex.vertex(j) - simplex.vertex(0));
  std::vector<std::pair<int, int>> cons;
  for (int i = 0; i < simplex.vertex_count(); ++i)
    for (int j = i + 1; j < simplex.vertex_count(); ++j) cons.emplace_back(i, j);
  return detail::build_pattern(std::move(verts), std::move(cons), true);
}

inline ScanPattern make_scan_pattern(const DistanceGraph& g) {
  return detail::build_pattern(g.vertices(), g.edges(), false);
}

struct MatchResult {
  Vec anchor;                       // mapped position of the pattern origin
  double lambda = 0.0;              // refit scale
  std::vector<Vec> vertices;        // mapped vertices, pattern order
  std::vector<std::size_t> atoms;   // cloud indices, pattern order
  double residual = 0.0;            // max | |y_i-y_j| - lambda * ref_ij |
  double tolerance = 0.0;
};

struct ScanOptions {
  long budget = 100;                 // max matches returned
  long max_seeds = 500000;           // seed pairs examined before giving up
  long max_candidates_per_step = 64; // extension branching cap
  int threads = 1;
};

struct ScanReport {
  std::vector<MatchResult> matches;
  bool tolerance_warning = false;   // tolerance below twice the cloud spacing
  double spacing_estimate = 0.0;    // median nearest-neighbor distance (sampled)
  long seeds_tested = 0;
};

namespace detail {

// Scale refit plus exact residual over the pattern's residual pairs.
inline std::pair<double, double> refit_and_residual(const ScanPattern& pat,
                                                    const std::vector<Vec>& y) {
  double num = 0.0, den = 0.0;
  auto visit_pairs = [&](auto&& f) {
    if (pat.residual_over_all_pairs) {
      const int n = static_cast<int>(pat.vertices.size());
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          f(i, j, (pat.vertices[static_cast<std::size_t>(i)] -
                   pat.vertices[static_cast<std::size_t>(j)]).norm());
    } else {
      for (std::size_t e = 0; e < pat.constraints.size(); ++e)
        f(pat.constraints[e].first, pat.constraints[e].second, pat.ref_distances[e]);
    }
  };
  visit_pairs([&](int i, int j, double ref) {
    const double obs = (y[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)]).norm();
    num += obs * ref;
    den += ref * ref;
  });
  const double lambda = den > 0.0 ? num / den : 0.0;
  double residual = 0.0;
  visit_pairs([&](int i, int j, double ref) {
    const double obs = (y[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)]).norm();
    residual = std::max(residual, std::abs(obs - lambda * ref));
  });
  return {lambda, residual};
}

struct ScanContext {
  const double* atoms = nullptr;
  int dim = 0;
  const ScanPattern* pattern = nullptr;
  const PointGrid* grid = nullptr;
  double lambda_lo = 0.0, lambda_hi = 0.0, tolerance = 0.0;
  long max_candidates = 64;
  // Constraints of each placement step against earlier steps, keyed by
  // the PLACEMENT SLOT of the already-placed endpoint; a constraint back
  // to slot 0 is moved to the front when one exists so the seed loop can
  // prefetch that step's candidates once per anchor.
  std::vector<std::vector<std::pair<int, double>>> back_constraints;  // (slot, ref dist)
};

// Per-anchor candidate cache: atoms in the union of the first extension
// step's annuli over the whole lambda range, sorted by distance to the
// anchor so each seed reduces to a binary search.
using AnchorCandidates = std::vector<std::pair<double, std::size_t>>;  // (distance, atom)

struct ScanScratch {
  std::vector<std::vector<std::size_t>> candidates;  // per placement depth
};

inline void extend_match(const ScanContext& ctx, std::size_t depth, double lambda,
                         std::vector<std::size_t>& atom_idx, std::vector<Vec>& pos,
                         long budget, std::vector<MatchResult>& out,
                         const AnchorCandidates* pre, ScanScratch& scratch) {
  const ScanPattern& pat = *ctx.pattern;
  if (depth == pat.placement.size()) {
    std::vector<Vec> by_vertex(pat.vertices.size());
    std::vector<std::size_t> atoms_by_vertex(pat.vertices.size());
    for (std::size_t k = 0; k < pat.placement.size(); ++k) {
      by_vertex[static_cast<std::size_t>(pat.placement[k])] = pos[k];
      atoms_by_vertex[static_cast<std::size_t>(pat.placement[k])] = atom_idx[k];
    }
    const auto [lam, residual] = refit_and_residual(pat, by_vertex);
    if (residual > ctx.tolerance || lam < ctx.lambda_lo || lam > ctx.lambda_hi) return;
    MatchResult m;
    m.anchor = by_vertex[0];
    m.lambda = lam;
    m.vertices = std::move(by_vertex);
    m.atoms = std::move(atoms_by_vertex);
    m.residual = residual;
    m.tolerance = ctx.tolerance;
    out.push_back(std::move(m));
    return;
  }
  if (static_cast<long>(out.size()) >= 4 * budget) return;  // local cap, pruned later

  const auto& back = ctx.back_constraints[depth];
  const double target = lambda * back[0].second;
  const double slack = 2.0 * ctx.tolerance;
  std::vector<std::size_t>& candidates = scratch.candidates[depth];
  candidates.clear();
  if (pre != nullptr) {
    auto it = std::lower_bound(pre->begin(), pre->end(),
                               std::make_pair(target - slack, std::size_t{0}));
    for (; it != pre->end() && it->first <= target + slack; ++it) {
      if (static_cast<long>(candidates.size()) >= ctx.max_candidates) break;
      candidates.push_back(it->second);
    }
  } else {
    const Vec& center = pos[static_cast<std::size_t>(back[0].first)];
    ctx.grid->for_each_in_shell(center.data(), std::max(0.0, target - slack), target + slack,
                                [&](std::size_t i) {
                                  if (static_cast<long>(candidates.size()) < ctx.max_candidates)
                                    candidates.push_back(i);
                                });
  }
  std::sort(candidates.begin(), candidates.end());
  for (std::size_t cand : candidates) {
    bool fresh = true;
    for (std::size_t k = 0; k < depth; ++k)
      if (atom_idx[k] == cand) {
        fresh = false;
        break;
      }
    if (!fresh) continue;
    Eigen::Map<const Vec> y(ctx.atoms + cand * static_cast<std::size_t>(ctx.dim), ctx.dim);
    bool feasible = true;
    for (std::size_t b = 1; b < back.size(); ++b) {
      const double obs = (y - pos[static_cast<std::size_t>(back[b].first)]).norm();
      if (std::abs(obs - lambda * back[b].second) > slack) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    atom_idx[depth] = cand;
    pos[depth] = y;
    extend_match(ctx, depth + 1, lambda, atom_idx, pos, budget, out, nullptr, scratch);
  }
}

}  // namespace detail

// Budgeted heuristic search for approximate similar copies of the pattern
// inside the cloud.  Sound (every returned match is re-verified against
// its stated residual bound) but deliberately incomplete beyond small
// exhaustive instances.
inline ScanReport find_similar_copy(const double* atoms, std::size_t n_points, int dim,
                                    const ScanPattern& pattern, double lambda_lo,
                                    double lambda_hi, double tolerance,
                                    const ScanOptions& opt = {}) {
  if (!(lambda_hi >= lambda_lo) || !(lambda_lo > 0.0))
    throw ConfigError("similar-copy search: bad lambda range");
  if (!(tolerance > 0.0)) throw ConfigError("similar-copy search: tolerance must be positive");
  if (dim <= 0 || dim != static_cast<int>(pattern.vertices[0].size()))
    throw ConfigError("similar-copy search: dimension mismatch");

  ScanReport report;
  if (n_points < pattern.vertices.size()) return report;

  auto point_at = [&](std::size_t i) {
    return Eigen::Map<const Vec>(atoms + i * static_cast<std::size_t>(dim), dim);
  };
  double diam = 1e-12;
  {
    Vec lo = point_at(0), hi = point_at(0);
    for (std::size_t i = 1; i < n_points; ++i) {
      lo = lo.cwiseMin(point_at(i));
      hi = hi.cwiseMax(point_at(i));
    }
    diam = std::max(diam, (hi - lo).norm());
  }

  // Spacing estimate: median nearest-neighbor distance over a strided
  // sample; warn when the tolerance undercuts twice that resolution.
  const double query_radius = lambda_hi * pattern.base_distance;
  const double cell = std::max(tolerance, std::min(query_radius, diam) / 48.0);
  const PointGrid grid(atoms, n_points, dim, cell);
  {
    const std::size_t stride = std::max<std::size_t>(1, n_points / 512);
    std::vector<double> nn;
    for (std::size_t i = 0; i < n_points; i += stride) {
      const double d = grid.nearest_distance(atoms + i * static_cast<std::size_t>(dim), i);
      if (d > 0.0) nn.push_back(d);
    }
    if (!nn.empty()) {
      std::nth_element(nn.begin(), nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2), nn.end());
      report.spacing_estimate = nn[nn.size() / 2];
      report.tolerance_warning = tolerance < 2.0 * report.spacing_estimate;
    }
  }

  detail::ScanContext ctx;
  ctx.atoms = atoms;
  ctx.dim = dim;
  ctx.pattern = &pattern;
  ctx.grid = &grid;
  ctx.lambda_lo = lambda_lo;
  ctx.lambda_hi = lambda_hi;
  ctx.tolerance = tolerance;
  ctx.max_candidates = opt.max_candidates_per_step;
  ctx.back_constraints.assign(pattern.placement.size(), {});
  for (std::size_t k = 2; k < pattern.placement.size(); ++k) {
    const int v = pattern.placement[k];
    for (std::size_t e = 0; e < pattern.constraints.size(); ++e) {
      const auto [i, j] = pattern.constraints[e];
      const int other = i == v ? j : (j == v ? i : -1);
      if (other < 0) continue;
      for (std::size_t kk = 0; kk < k; ++kk)
        if (pattern.placement[kk] == other)
          ctx.back_constraints[k].emplace_back(static_cast<int>(kk), pattern.ref_distances[e]);
    }
    if (ctx.back_constraints[k].empty())
      throw ConfigError("scan pattern: placement step without back constraints");
    for (std::size_t b = 0; b < ctx.back_constraints[k].size(); ++b)
      if (ctx.back_constraints[k][b].first == 0) {
        std::swap(ctx.back_constraints[k][0], ctx.back_constraints[k][b]);
        break;
      }
  }

  const double base = pattern.base_distance;
  const double slack = 2.0 * tolerance;
  const std::size_t n_place = pattern.placement.size();
  // The first extension step can reuse one fat annulus query per anchor
  // whenever its leading back constraint points at the anchor slot.
  const bool anchor_prefetch =
      n_place > 2 && ctx.back_constraints[2][0].first == 0;
  const double pre_ref = anchor_prefetch ? ctx.back_constraints[2][0].second : 0.0;
  const int n_chunks = sample_chunk_count(n_points);
  std::vector<std::vector<MatchResult>> partial(static_cast<std::size_t>(n_chunks));
  std::vector<long> seeds_in_chunk(static_cast<std::size_t>(n_chunks), 0);
  const long seeds_per_chunk = opt.max_seeds / std::max(1, n_chunks) + 1;

  parallel_chunks(n_chunks, resolve_threads(opt.threads), [&](int c) {
    const auto [begin, end] = chunk_range(n_points, n_chunks, c);
    auto& local = partial[static_cast<std::size_t>(c)];
    detail::ScanScratch scratch;
    scratch.candidates.resize(n_place);
    std::vector<std::size_t> atom_idx(n_place, 0);
    std::vector<Vec> pos(n_place, Vec::Zero(dim));
    detail::AnchorCandidates mates, first_step;
    long seeds = 0;
    for (std::size_t a = begin; a < end && seeds < seeds_per_chunk; ++a) {
      const double* pa = atoms + a * static_cast<std::size_t>(dim);
      const auto collect = [&](detail::AnchorCandidates& dst, double ref) {
        dst.clear();
        grid.for_each_in_shell(
            pa, std::max(0.0, lambda_lo * ref - slack), lambda_hi * ref + slack,
            [&](std::size_t b) {
              if (b == a) return;
              const double* pb = atoms + b * static_cast<std::size_t>(dim);
              double d2 = 0.0;
              for (int ax = 0; ax < dim; ++ax) {
                const double t = pb[ax] - pa[ax];
                d2 += t * t;
              }
              dst.emplace_back(std::sqrt(d2), b);
            });
        std::sort(dst.begin(), dst.end());
      };
      collect(mates, base);
      if (anchor_prefetch) {
        if (pre_ref == base) {
          first_step = mates;
        } else {
          collect(first_step, pre_ref);
        }
      }
      Eigen::Map<const Vec> ya(pa, dim);
      atom_idx[0] = a;
      pos[0] = ya;
      for (const auto& [dist, b] : mates) {
        if (seeds >= seeds_per_chunk) break;
        ++seeds;
        const double lambda = dist / base;
        if (lambda < lambda_lo || lambda > lambda_hi) continue;
        Eigen::Map<const Vec> yb(atoms + b * static_cast<std::size_t>(dim), dim);
        atom_idx[1] = b;
        pos[1] = yb;
        detail::extend_match(ctx, 2, lambda, atom_idx, pos, opt.budget, local,
                             anchor_prefetch ? &first_step : nullptr, scratch);
      }
    }
    seeds_in_chunk[static_cast<std::size_t>(c)] = seeds;
  });

  std::vector<MatchResult> all;
  for (auto& chunk : partial)
    for (auto& m : chunk) all.push_back(std::move(m));
  for (long s : seeds_in_chunk) report.seeds_tested += s;

  // Deterministic order: residual, then the atom tuple; drop exact
  // duplicate tuples.
  std::sort(all.begin(), all.end(), [](const MatchResult& x, const MatchResult& y) {
    if (x.residual != y.residual) return x.residual < y.residual;
    return x.atoms < y.atoms;
  });
  all.erase(std::unique(all.begin(), all.end(),
                        [](const MatchResult& x, const MatchResult& y) {
                          return x.atoms == y.atoms;
                        }),
            all.end());
  if (static_cast<long>(all.size()) > opt.budget) all.resize(static_cast<std::size_t>(opt.budget));

  // Post-hoc soundness pass: recompute the residual from the stored
  // vertices and drop anything that fails its own bound.
  for (auto& m : all) {
    std::vector<Vec> by_vertex = m.vertices;
    const auto [lam, residual] = detail::refit_and_residual(pattern, by_vertex);
    if (residual <= m.tolerance) {
      m.lambda = lam;
      m.residual = residual;
      report.matches.push_back(std::move(m));
    }
  }
  return report;
}

inline ScanReport find_similar_copy(const PointMassMeasure& cloud, const ScanPattern& pattern,
                                    double lambda_lo, double lambda_hi, double tolerance,
                                    const ScanOptions& opt = {}) {
  return find_similar_copy(cloud.coords().data(), cloud.size(), cloud.ambient_dim(), pattern,
                           lambda_lo, lambda_hi, tolerance, opt);
}

inline ScanReport find_similar_copy(const std::vector<Vec>& cloud, const ScanPattern& pattern,
                                    double lambda_lo, double lambda_hi, double tolerance,
                                    const ScanOptions& opt = {}) {
  ScanReport empty;
  if (cloud.empty()) return empty;
  const int dim = static_cast<int>(cloud[0].size());
  std::vector<double> flat;
  flat.reserve(cloud.size() * static_cast<std::size_t>(dim));
  for (const Vec& p : cloud) {
    if (static_cast<int>(p.size()) != dim)
      throw ConfigError("similar-copy search: inconsistent cloud dimensions");
    flat.insert(flat.end(), p.data(), p.data() + dim);
  }
  return find_similar_copy(flat.data(), cloud.size(), dim, pattern, lambda_lo, lambda_hi,
                           tolerance, opt);
}

}  // namespace dustlab
