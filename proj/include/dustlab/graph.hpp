#pragma once

// Distance graphs embedded in Euclidean space, their metric invariants,
// and configuration-space diagnostics (residuals, gradient rank,
// elimination orders for sequential sampling).

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "dustlab/errors.hpp"
#include "dustlab/geometry.hpp"

namespace dustlab {

// Connected graph on vertices v_0..v_n in R^d with v_0 pinned at the
// origin (inputs are translated).  Edge (i,j) carries the squared
// length t_ij of the reference embedding.  The back-neighbor set
// V_j = {v_i : (i,j) in E, i < j} is taken in natural index order.
class DistanceGraph {
 public:
  DistanceGraph(std::vector<Vec> vertices, std::vector<std::pair<int, int>> edges)
      : vertices_(std::move(vertices)), edges_(std::move(edges)) {
    const int n_total = static_cast<int>(vertices_.size());
    if (n_total < 2) throw ConfigError("distance graph needs at least two vertices");
    dim_ = static_cast<int>(vertices_[0].size());
    if (dim_ < 1) throw ConfigError("distance graph: empty vertex coordinates");
    for (const Vec& v : vertices_) {
      if (static_cast<int>(v.size()) != dim_)
        throw ConfigError("distance graph: inconsistent vertex dimensions");
    }
    const Vec origin = vertices_[0];
    for (Vec& v : vertices_) v -= origin;

    if (edges_.empty()) throw ConfigError("distance graph: no edges");
    for (auto& e : edges_) {
      if (e.first == e.second || e.first < 0 || e.second < 0 ||
          e.first >= n_total || e.second >= n_total)
        throw ConfigError("distance graph: invalid edge (" + std::to_string(e.first) +
                          "," + std::to_string(e.second) + ")");
      if (e.first > e.second) std::swap(e.first, e.second);
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

    diameter_ = 0.0;
    for (int i = 0; i < n_total; ++i)
      for (int j = i + 1; j < n_total; ++j)
        diameter_ = std::max(diameter_, (vertices_[i] - vertices_[j]).norm());
    for (int i = 0; i < n_total; ++i)
      for (int j = i + 1; j < n_total; ++j)
        if ((vertices_[i] - vertices_[j]).norm() <= 1e-12 * diameter_)
          throw ConfigError("distance graph: repeated vertices " + std::to_string(i) +
                            "," + std::to_string(j));

    adjacency_.assign(n_total, {});
    squared_lengths_.assign(edges_.size(), 0.0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [i, j] = edges_[e];
      const double t = (vertices_[i] - vertices_[j]).squaredNorm();
      squared_lengths_[e] = t;
      adjacency_[i].push_back(j);
      adjacency_[j].push_back(i);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());

    // Connectivity by breadth-first search from the anchor.
    std::vector<char> seen(n_total, 0);
    std::vector<int> queue{0};
    seen[0] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head)
      for (int nb : adjacency_[queue[head]])
        if (!seen[nb]) {
          seen[nb] = 1;
          queue.push_back(nb);
        }
    if (queue.size() != static_cast<std::size_t>(n_total))
      throw DisconnectedGraphError("distance graph is not connected");
  }

  int ambient_dim() const { return dim_; }
  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const Vec& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  const std::vector<Vec>& vertices() const { return vertices_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adjacency_[static_cast<std::size_t>(i)]; }
  double squared_length(int e) const { return squared_lengths_[static_cast<std::size_t>(e)]; }
  double diameter() const { return diameter_; }

  bool has_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(i, j));
  }

  double squared_length_between(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::make_pair(i, j));
    if (it == edges_.end() || *it != std::make_pair(i, j))
      throw ConfigError("distance graph: no edge (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
    return squared_lengths_[static_cast<std::size_t>(it - edges_.begin())];
  }

  std::vector<int> back_neighbors(int j) const {
    std::vector<int> out;
    for (int nb : adjacency_[static_cast<std::size_t>(j)])
      if (nb < j) out.push_back(nb);
    return out;
  }

 private:
  std::vector<Vec> vertices_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<double> squared_lengths_;
  int dim_ = 0;
  double diameter_ = 0.0;
};

inline DistanceGraph complete_graph(const std::vector<Vec>& vertices) {
  std::vector<std::pair<int, int>> edges;
  const int n = static_cast<int>(vertices.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return DistanceGraph(vertices, std::move(edges));
}

inline DistanceGraph path_graph(const std::vector<Vec>& vertices) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < static_cast<int>(vertices.size()); ++i) edges.emplace_back(i, i + 1);
  return DistanceGraph(vertices, std::move(edges));
}

struct GraphInvariants {
  int degree = 0;       // max back-neighbor count in natural order
  bool proper = false;  // every V_j u {v_j} in general position
  double min_slice_distance = 0.0;  // r: min_j dist(v_j, affine span V_j)
  double longest_edge = 0.0;        // d: max edge length
  double thickness = 0.0;           // delta = r / d
};

namespace detail {

// Distance from p to the affine hull of a nonempty point set, by least
// squares against the difference directions.
inline double distance_to_affine_hull(const Vec& p, const std::vector<const Vec*>& pts) {
  const Vec& base = *pts[0];
  if (pts.size() == 1) return (p - base).norm();
  Mat dirs(base.size(), static_cast<Eigen::Index>(pts.size() - 1));
  for (std::size_t c = 1; c < pts.size(); ++c) dirs.col(static_cast<Eigen::Index>(c - 1)) = *pts[c] - base;
  const Vec rhs = p - base;
  const Vec coeff = dirs.colPivHouseholderQr().solve(rhs);
  return (rhs - dirs * coeff).norm();
}

// General position of a point set: the difference vectors from the first
// point have full rank at threshold 1e-8 relative to the given scale.
inline bool in_general_position(const std::vector<const Vec*>& pts, double scale) {
  if (pts.size() <= 1) return true;
  Mat dirs((*pts[0]).size(), static_cast<Eigen::Index>(pts.size() - 1));
  for (std::size_t c = 1; c < pts.size(); ++c) dirs.col(static_cast<Eigen::Index>(c - 1)) = *pts[c] - *pts[0];
  if (dirs.cols() > dirs.rows()) return false;
  Eigen::JacobiSVD<Mat> svd(dirs);
  return svd.singularValues().minCoeff() > 1e-8 * scale;
}

}  // namespace detail

inline GraphInvariants graph_invariants(const DistanceGraph& g) {
  GraphInvariants inv;
  inv.longest_edge = 0.0;
  for (int e = 0; e < g.edge_count(); ++e)
    inv.longest_edge = std::max(inv.longest_edge, std::sqrt(g.squared_length(e)));
  inv.proper = true;
  double r = std::numeric_limits<double>::infinity();
  for (int j = 1; j < g.vertex_count(); ++j) {
    const std::vector<int> back = g.back_neighbors(j);
    inv.degree = std::max(inv.degree, static_cast<int>(back.size()));
    if (back.empty()) continue;
    std::vector<const Vec*> nbr_pts;
    nbr_pts.reserve(back.size());
    for (int i : back) nbr_pts.push_back(&g.vertex(i));
    r = std::min(r, detail::distance_to_affine_hull(g.vertex(j), nbr_pts));
    std::vector<const Vec*> with_self = nbr_pts;
    with_self.push_back(&g.vertex(j));
    if (!detail::in_general_position(with_self, g.diameter())) inv.proper = false;
  }
  if (!std::isfinite(r)) r = inv.longest_edge;
  inv.min_slice_distance = r;
  inv.thickness = inv.longest_edge > 0 ? r / inv.longest_edge : 0.0;
  return inv;
}

// A candidate configuration x = (x_1..x_n), x_0 = 0 implicit, with its
// per-edge residuals f_ij = |x_i - x_j|^2 - t_ij.
struct ConfigurationPoint {
  std::vector<Vec> x;
  Eigen::VectorXd residuals;
  double max_residual = 0.0;
};

inline Eigen::VectorXd residual_vector(const DistanceGraph& g, const std::vector<Vec>& x) {
  if (static_cast<int>(x.size()) != g.vertex_count() - 1)
    throw ConfigError("configuration size must be vertex count minus the anchor");
  const Vec zero = Vec::Zero(g.ambient_dim());
  auto at = [&](int i) -> const Vec& { return i == 0 ? zero : x[static_cast<std::size_t>(i - 1)]; };
  Eigen::VectorXd out(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.edges()[static_cast<std::size_t>(e)];
    out[e] = (at(i) - at(j)).squaredNorm() - g.squared_length(e);
  }
  return out;
}

inline ConfigurationPoint evaluate_configuration(const DistanceGraph& g, std::vector<Vec> x) {
  ConfigurationPoint cp;
  cp.residuals = residual_vector(g, x);
  cp.x = std::move(x);
  cp.max_residual = cp.residuals.size() ? cp.residuals.cwiseAbs().maxCoeff() : 0.0;
  return cp;
}

struct RankReport {
  bool nonsingular = false;
  double sigma_min = 0.0;
};

// Assembles the |E| x dn gradient of the edge functions at x and reports
// whether it has full row rank (smallest singular value above 1e-8 of
// the largest).  Requires x to lie on the variety within 1e-6.
inline RankReport is_nonsingular(const DistanceGraph& g, const std::vector<Vec>& x) {
  const Eigen::VectorXd res = residual_vector(g, x);
  if (res.size() && res.cwiseAbs().maxCoeff() > 1e-6)
    throw OffVarietyError("configuration residual exceeds 1e-6; not on the variety");
  const int d = g.ambient_dim();
  const int n = g.vertex_count() - 1;
  const Vec zero = Vec::Zero(d);
  auto at = [&](int i) -> const Vec& { return i == 0 ? zero : x[static_cast<std::size_t>(i - 1)]; };
  Mat grad = Mat::Zero(g.edge_count(), static_cast<Eigen::Index>(d) * n);
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.edges()[static_cast<std::size_t>(e)];
    const Vec diff = at(i) - at(j);
    if (i >= 1) grad.block(e, (i - 1) * d, 1, d) = 2.0 * diff.transpose();
    if (j >= 1) grad.block(e, (j - 1) * d, 1, d) = -2.0 * diff.transpose();
  }
  Eigen::JacobiSVD<Mat> svd(grad);
  RankReport rep;
  rep.sigma_min = svd.singularValues().size() ? svd.singularValues().minCoeff() : 0.0;
  const double sigma_max = svd.singularValues().size() ? svd.singularValues().maxCoeff() : 0.0;
  rep.nonsingular = grad.rows() <= grad.cols() && rep.sigma_min > 1e-8 * std::max(sigma_max, 1.0);
  return rep;
}

struct EliminationOrder {
  std::vector<int> order;  // starts at the anchor vertex 0
  int back_degree = 0;     // max earlier-neighbor count realized
};

// Greedy minimum-degree peeling from the end, keeping the remainder
// connected so every placed vertex has at least one earlier neighbor.
inline EliminationOrder elimination_order(const DistanceGraph& g) {
  const int n_total = g.vertex_count();
  std::vector<char> alive(n_total, 1);
  int alive_count = n_total;

  auto connected_without = [&](int skip) {
    int start = -1, want = 0;
    for (int v = 0; v < n_total; ++v)
      if (alive[v] && v != skip) {
        if (start < 0) start = v;
        ++want;
      }
    if (start < 0) return true;
    std::vector<char> seen(n_total, 0);
    std::vector<int> queue{start};
    seen[start] = 1;
    int reached = 1;
    for (std::size_t head = 0; head < queue.size(); ++head)
      for (int nb : g.neighbors(queue[head]))
        if (alive[nb] && nb != skip && !seen[nb]) {
          seen[nb] = 1;
          queue.push_back(nb);
          ++reached;
        }
    return reached == want;
  };

  std::vector<int> peeled;
  while (alive_count > 1) {
    int best = -1, best_deg = -1;
    for (int v = 1; v < n_total; ++v) {
      if (!alive[v]) continue;
      int deg = 0;
      for (int nb : g.neighbors(v))
        if (alive[nb]) ++deg;
      const bool better = best < 0 || deg < best_deg || (deg == best_deg && v > best);
      if (better && connected_without(v)) {
        best = v;
        best_deg = deg;
      }
    }
    if (best < 0) throw DisconnectedGraphError("elimination order: no removable vertex");
    alive[best] = 0;
    --alive_count;
    peeled.push_back(best);
  }

  EliminationOrder out;
  out.order.push_back(0);
  out.order.insert(out.order.end(), peeled.rbegin(), peeled.rend());
  std::vector<int> position(n_total, 0);
  for (int idx = 0; idx < n_total; ++idx) position[out.order[static_cast<std::size_t>(idx)]] = idx;
  for (int idx = 1; idx < n_total; ++idx) {
    const int v = out.order[static_cast<std::size_t>(idx)];
    int back = 0;
    for (int nb : g.neighbors(v))
      if (position[nb] < idx) ++back;
    out.back_degree = std::max(out.back_degree, back);
  }
  return out;
}

}  // namespace dustlab
