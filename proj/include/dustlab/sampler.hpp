#pragma once

// Sequential samplers for the chained sphere-slice measures: uniform
// chains for simplices (unit weight, normalized slice measures) and
// Gram-weighted cutoff chains for distance graphs, plus the Fubini and
// rotation-invariance consistency checks.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/geometry.hpp"
#include "dustlab/graph.hpp"
#include "dustlab/numerics.hpp"
#include "dustlab/rng.hpp"
#include "dustlab/simplex.hpp"
#include "dustlab/sphere.hpp"

namespace dustlab {

// Smooth bump of width eta: value 1 at r = 0, support [0, eta), the
// same compact profile as the mollifier's frequency bump.
inline double cutoff_bump(double r, double eta) {
  if (std::isinf(eta)) return 1.0;
  if (eta <= 0.0) throw ConfigError("cutoff width must be positive");
  const double u = r / eta;
  if (u >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

struct ChainStep {
  int vertex = 0;  // vertex placed at this step
  SphereSlice slice;
};

// One sampled configuration.  points are in placement order (anchor
// x_0 = 0 omitted); weight is 1 for simplex chains and the running
// Gram-times-cutoff product for graph chains; area_product records the
// uniform-sampling normalization (product of slice surface areas).
struct ChainSample {
  std::vector<Vec> points;
  double weight = 1.0;
  double area_product = 1.0;
  std::vector<ChainStep> steps;
};

// Uniform chain for a simplex: x_1 uniform on the sphere |y| = |v_1 - v_0|,
// then x_j uniform on the intersection slice pinned by all earlier points.
// Weights stay 1: the chain measure is the product of normalized slice
// measures by construction.
inline ChainSample sample_simplex_chain(const Simplex& simplex, RngStream& rng) {
  const int p = simplex.vertex_count();
  const int d = simplex.ambient_dim();
  ChainSample sample;
  std::vector<Vec> rel(static_cast<std::size_t>(p - 1));
  for (int j = 1; j < p; ++j) rel[static_cast<std::size_t>(j - 1)] = simplex.vertex(j) - simplex.vertex(0);

  std::vector<Vec> centers;
  centers.push_back(Vec::Zero(d));
  for (int j = 1; j < p; ++j) {
    const Vec& u = rel[static_cast<std::size_t>(j - 1)];
    std::vector<double> t;
    t.push_back(u.squaredNorm());
    for (int i = 1; i < j; ++i) t.push_back((u - rel[static_cast<std::size_t>(i - 1)]).squaredNorm());
    SphereSlice slice = intersect_spheres(centers, t);
    Vec x = sample_on_slice(slice, rng);
    sample.area_product *= slice.area();
    sample.steps.push_back({j, std::move(slice)});
    sample.points.push_back(x);
    centers.push_back(std::move(x));
  }
  return sample;
}

// Graph chain: vertices placed in the given elimination order, each
// uniform on the slice determined by its already-placed neighbors.  The
// importance weight multiplies the step Gram weight c(T_j) and a smooth
// cutoff of width eta centered at the reference position v_j.  An empty
// or tangent slice aborts with an empty-slice error unless the running
// cutoff product has already vanished, in which case the sample is
// returned with weight 0 (remaining points at their reference positions).
inline ChainSample sample_graph_config(const DistanceGraph& g, const std::vector<int>& order,
                                       double eta, RngStream& rng) {
  const int n_total = g.vertex_count();
  const int d = g.ambient_dim();
  if (static_cast<int>(order.size()) != n_total || order[0] != 0)
    throw ConfigError("graph sampling order must start at the anchor and cover all vertices");
  std::vector<char> placed(static_cast<std::size_t>(n_total), 0);
  std::vector<Vec> pos(static_cast<std::size_t>(n_total));
  pos[0] = Vec::Zero(d);
  placed[0] = 1;

  ChainSample sample;
  bool dead = false;
  for (int idx = 1; idx < n_total; ++idx) {
    const int j = order[static_cast<std::size_t>(idx)];
    if (j <= 0 || j >= n_total || placed[static_cast<std::size_t>(j)])
      throw ConfigError("graph sampling order is not a permutation");
    std::vector<Vec> centers;
    std::vector<double> t;
    for (int nb : g.neighbors(j))
      if (placed[static_cast<std::size_t>(nb)]) {
        centers.push_back(pos[static_cast<std::size_t>(nb)]);
        t.push_back(g.squared_length_between(nb, j));
      }
    if (centers.empty())
      throw ConfigError("vertex " + std::to_string(j) + " has no earlier neighbor in the order");

    if (dead) {
      // Cutoff already vanished: keep shapes consistent without sampling.
      pos[static_cast<std::size_t>(j)] = g.vertex(j);
      placed[static_cast<std::size_t>(j)] = 1;
      sample.points.push_back(g.vertex(j));
      continue;
    }

    SphereSlice slice;
    bool empty = false;
    try {
      slice = intersect_spheres(centers, t);
    } catch (const EmptyIntersectionError&) {
      empty = true;
    }
    if (!empty && slice.tangency) empty = true;
    if (empty) {
      if (sample.weight == 0.0) {
        dead = true;
        pos[static_cast<std::size_t>(j)] = g.vertex(j);
        placed[static_cast<std::size_t>(j)] = 1;
        sample.points.push_back(g.vertex(j));
        continue;
      }
      throw EmptySliceError("empty slice at vertex " + std::to_string(j) +
                            " with positive cutoff weight");
    }

    Vec x = sample_on_slice(slice, rng);
    const GramData gram = gram_weight(x, centers);
    const double phi = cutoff_bump((x - g.vertex(j)).norm(), eta);
    sample.weight *= gram.weight_c * phi;
    sample.area_product *= slice.area();
    sample.steps.push_back({j, std::move(slice)});
    sample.points.push_back(x);
    pos[static_cast<std::size_t>(j)] = std::move(x);
    placed[static_cast<std::size_t>(j)] = 1;
  }
  return sample;
}

// Rebuilds the by-vertex layout (index 0 = anchor at the origin) from a
// chain sample produced with the given order.
inline std::vector<Vec> assemble_by_vertex(const DistanceGraph& g, const std::vector<int>& order,
                                           const ChainSample& sample) {
  std::vector<Vec> out(static_cast<std::size_t>(g.vertex_count()));
  out[0] = Vec::Zero(g.ambient_dim());
  for (std::size_t idx = 0; idx < sample.points.size(); ++idx)
    out[static_cast<std::size_t>(order[idx + 1])] = sample.points[idx];
  return out;
}

using ConfigStatistic = std::function<double(const std::vector<Vec>&)>;

struct FubiniReport {
  double joint = 0.0;
  double joint_se = 0.0;
  double nested = 0.0;
  double nested_se = 0.0;
  double z_score = 0.0;
  long n_joint = 0;
  long n_outer = 0;
  long inner_per_outer = 0;
};

struct FubiniOptions {
  double eta = std::numeric_limits<double>::infinity();
  long inner_per_outer = 32;
  std::uint64_t seed = 1;
};

namespace detail {

// Places one vertex given already-placed neighbors; returns false when the
// slice is empty or tangent (caller decides based on the running weight).
inline bool extend_configuration(const DistanceGraph& g, int j, double eta,
                                 std::vector<Vec>& pos, std::vector<char>& placed,
                                 RngStream& rng, double& weight, double& area_product) {
  std::vector<Vec> centers;
  std::vector<double> t;
  for (int nb : g.neighbors(j))
    if (placed[static_cast<std::size_t>(nb)]) {
      centers.push_back(pos[static_cast<std::size_t>(nb)]);
      t.push_back(g.squared_length_between(nb, j));
    }
  if (centers.empty()) throw ConfigError("vertex has no earlier neighbor in the partition order");
  SphereSlice slice;
  try {
    slice = intersect_spheres(centers, t);
  } catch (const EmptyIntersectionError&) {
    return false;
  }
  if (slice.tangency) return false;
  Vec x = sample_on_slice(slice, rng);
  const GramData gram = gram_weight(x, centers);
  const double phi = cutoff_bump((x - g.vertex(j)).norm(), eta);
  weight *= gram.weight_c * phi;
  area_product *= slice.area();
  pos[static_cast<std::size_t>(j)] = std::move(x);
  placed[static_cast<std::size_t>(j)] = 1;
  return true;
}

// Greedy placement order over a vertex subset: each chosen vertex must
// have a placed neighbor; smallest index first for determinism.
inline std::vector<int> subset_order(const DistanceGraph& g, std::vector<char> placed,
                                     const std::vector<int>& subset, const char* label) {
  std::vector<int> order;
  std::vector<char> todo(static_cast<std::size_t>(g.vertex_count()), 0);
  for (int v : subset) todo[static_cast<std::size_t>(v)] = 1;
  for (std::size_t round = 0; round < subset.size(); ++round) {
    int pick = -1;
    for (int v = 1; v < g.vertex_count(); ++v) {
      if (!todo[static_cast<std::size_t>(v)]) continue;
      for (int nb : g.neighbors(v))
        if (placed[static_cast<std::size_t>(nb)]) {
          pick = v;
          break;
        }
      if (pick >= 0) break;
    }
    if (pick < 0)
      throw InadmissiblePartitionError(std::string(label) +
                                       " block admits no sequential placement order");
    order.push_back(pick);
    todo[static_cast<std::size_t>(pick)] = 0;
    placed[static_cast<std::size_t>(pick)] = 1;
  }
  return order;
}

inline void require_full_row_rank(const Mat& block, const char* label) {
  if (block.rows() == 0) return;
  if (block.rows() > block.cols())
    throw InadmissiblePartitionError(std::string(label) + " gradient block has too many rows");
  Eigen::JacobiSVD<Mat> svd(block);
  const double smax = svd.singularValues().maxCoeff();
  if (svd.singularValues().minCoeff() <= 1e-8 * std::max(smax, 1.0))
    throw InadmissiblePartitionError(std::string(label) + " gradient block is rank deficient");
}

}  // namespace detail

// Splits the configuration variables into (z, y) and checks that the
// iterated (sample z, then y given z) Monte Carlo agrees with joint
// sampling of g times the importance weights.  The partition must admit
// sequential orders for both blocks and both gradient blocks must have
// full row rank at the reference configuration.
inline FubiniReport fubini_check(const DistanceGraph& g, const std::vector<int>& y_block,
                                 const ConfigStatistic& statistic, long n_samples,
                                 const FubiniOptions& opt = {}) {
  const int n_total = g.vertex_count();
  std::vector<char> in_y(static_cast<std::size_t>(n_total), 0);
  for (int v : y_block) {
    if (v <= 0 || v >= n_total) throw InadmissiblePartitionError("y block vertex out of range");
    if (in_y[static_cast<std::size_t>(v)]) throw InadmissiblePartitionError("duplicate y block vertex");
    in_y[static_cast<std::size_t>(v)] = 1;
  }
  if (y_block.empty() || static_cast<int>(y_block.size()) == n_total - 1)
    throw InadmissiblePartitionError("partition must split the non-anchor vertices");

  std::vector<int> z_block;
  for (int v = 1; v < n_total; ++v)
    if (!in_y[static_cast<std::size_t>(v)]) z_block.push_back(v);

  std::vector<char> anchor_only(static_cast<std::size_t>(n_total), 0);
  anchor_only[0] = 1;
  const std::vector<int> order_z = detail::subset_order(g, anchor_only, z_block, "z");
  std::vector<char> z_placed = anchor_only;
  for (int v : z_block) z_placed[static_cast<std::size_t>(v)] = 1;
  const std::vector<int> order_y = detail::subset_order(g, z_placed, y_block, "y");

  // Gradient blocks at the reference embedding: internal z edges over z
  // variables, y-incident edges over y variables.
  const int d = g.ambient_dim();
  std::vector<int> zcol(static_cast<std::size_t>(n_total), -1), ycol(zcol);
  for (std::size_t c = 0; c < z_block.size(); ++c) zcol[static_cast<std::size_t>(z_block[c])] = static_cast<int>(c);
  for (std::size_t c = 0; c < y_block.size(); ++c) ycol[static_cast<std::size_t>(y_block[c])] = static_cast<int>(c);
  std::vector<int> z_edges, y_edges;
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [i, j] = g.edges()[static_cast<std::size_t>(e)];
    (in_y[static_cast<std::size_t>(i)] || in_y[static_cast<std::size_t>(j)] ? y_edges : z_edges).push_back(e);
  }
  Mat grad_z = Mat::Zero(static_cast<Eigen::Index>(z_edges.size()), static_cast<Eigen::Index>(d) * static_cast<Eigen::Index>(z_block.size()));
  for (std::size_t r = 0; r < z_edges.size(); ++r) {
    const auto [i, j] = g.edges()[static_cast<std::size_t>(z_edges[r])];
    const Vec diff = g.vertex(i) - g.vertex(j);
    if (zcol[static_cast<std::size_t>(i)] >= 0) grad_z.block(static_cast<Eigen::Index>(r), zcol[static_cast<std::size_t>(i)] * d, 1, d) = 2.0 * diff.transpose();
    if (zcol[static_cast<std::size_t>(j)] >= 0) grad_z.block(static_cast<Eigen::Index>(r), zcol[static_cast<std::size_t>(j)] * d, 1, d) = -2.0 * diff.transpose();
  }
  Mat grad_y = Mat::Zero(static_cast<Eigen::Index>(y_edges.size()), static_cast<Eigen::Index>(d) * static_cast<Eigen::Index>(y_block.size()));
  for (std::size_t r = 0; r < y_edges.size(); ++r) {
    const auto [i, j] = g.edges()[static_cast<std::size_t>(y_edges[r])];
    const Vec diff = g.vertex(i) - g.vertex(j);
    if (ycol[static_cast<std::size_t>(i)] >= 0) grad_y.block(static_cast<Eigen::Index>(r), ycol[static_cast<std::size_t>(i)] * d, 1, d) = 2.0 * diff.transpose();
    if (ycol[static_cast<std::size_t>(j)] >= 0) grad_y.block(static_cast<Eigen::Index>(r), ycol[static_cast<std::size_t>(j)] * d, 1, d) = -2.0 * diff.transpose();
  }
  detail::require_full_row_rank(grad_z, "z");
  detail::require_full_row_rank(grad_y, "y");

  std::vector<int> joint_order{0};
  joint_order.insert(joint_order.end(), order_z.begin(), order_z.end());
  joint_order.insert(joint_order.end(), order_y.begin(), order_y.end());

  FubiniReport rep;

  // Joint route.
  SumAccumulator joint_acc;
  RngStream rng_joint = RngStream::substream(opt.seed, "fubini-joint", 0);
  for (long i = 0; i < n_samples; ++i) {
    const ChainSample s = sample_graph_config(g, joint_order, opt.eta, rng_joint);
    const double val = s.weight == 0.0
                           ? 0.0
                           : statistic(assemble_by_vertex(g, joint_order, s)) * s.weight * s.area_product;
    joint_acc.add(val);
  }
  rep.joint = joint_acc.mean();
  rep.joint_se = joint_acc.std_error();
  rep.n_joint = n_samples;

  // Nested route: outer z chains, inner y completions.
  const long inner = std::max<long>(1, opt.inner_per_outer);
  const long outer = std::max<long>(1, n_samples / inner);
  SumAccumulator nested_acc;
  RngStream rng_nested = RngStream::substream(opt.seed, "fubini-nested", 0);
  for (long o = 0; o < outer; ++o) {
    std::vector<Vec> pos(static_cast<std::size_t>(n_total));
    std::vector<char> placed(static_cast<std::size_t>(n_total), 0);
    pos[0] = Vec::Zero(d);
    placed[0] = 1;
    double w_z = 1.0, area_z = 1.0;
    bool ok = true;
    for (int v : order_z)
      if (!detail::extend_configuration(g, v, opt.eta, pos, placed, rng_nested, w_z, area_z)) {
        if (w_z == 0.0) { ok = false; break; }
        throw EmptySliceError("empty slice in the z block with positive cutoff weight");
      }
    if (!ok || w_z == 0.0) {
      nested_acc.add(0.0);
      continue;
    }
    SumAccumulator inner_acc;
    for (long r = 0; r < inner; ++r) {
      std::vector<Vec> pos_in = pos;
      std::vector<char> placed_in = placed;
      double w_y = 1.0, area_y = 1.0;
      bool dead = false;
      for (int v : order_y)
        if (!detail::extend_configuration(g, v, opt.eta, pos_in, placed_in, rng_nested, w_y, area_y)) {
          if (w_y == 0.0) { dead = true; break; }
          throw EmptySliceError("empty slice in the y block with positive cutoff weight");
        }
      if (dead) {
        inner_acc.add(0.0);
        continue;
      }
      std::vector<Vec> by_vertex = pos_in;
      inner_acc.add(statistic(by_vertex) * w_y * area_y);
    }
    nested_acc.add(w_z * area_z * inner_acc.mean());
  }
  rep.nested = nested_acc.mean();
  rep.nested_se = nested_acc.std_error();
  rep.n_outer = outer;
  rep.inner_per_outer = inner;

  const double se = std::sqrt(rep.joint_se * rep.joint_se + rep.nested_se * rep.nested_se);
  rep.z_score = se > 0 ? std::abs(rep.joint - rep.nested) / se : 0.0;
  return rep;
}

struct RotationCheckEntry {
  double mean_identity = 0.0;
  double se_identity = 0.0;
  double mean_rotated = 0.0;
  double se_rotated = 0.0;
  double z_score = 0.0;
};

struct RotationCheckReport {
  std::vector<RotationCheckEntry> entries;
  double max_z = 0.0;
  bool pass(double z_limit = 3.0) const { return max_z <= z_limit; }
};

// Compares Monte Carlo means of each statistic on a chain x versus the
// rotated chain Ux, on independent streams.  The sampler callable maps an
// RngStream to (points, scalar weight); simplex chains use weight 1.
template <typename Sampler>
RotationCheckReport rotation_invariance_check(Sampler&& sampler, const Mat& rotation,
                                              const std::vector<ConfigStatistic>& statistics,
                                              long n_samples, std::uint64_t seed) {
  if (rotation.rows() != rotation.cols()) throw ConfigError("rotation matrix must be square");
  if ((rotation * rotation.transpose() - Mat::Identity(rotation.rows(), rotation.cols())).cwiseAbs().maxCoeff() > 1e-10 ||
      rotation.determinant() < 0.0)
    throw ConfigError("rotation check requires an orthogonal matrix with determinant +1");

  std::vector<SumAccumulator> acc_id(statistics.size()), acc_rot(statistics.size());
  RngStream rng_id = RngStream::substream(seed, "rotcheck-id", 0);
  RngStream rng_rot = RngStream::substream(seed, "rotcheck-rot", 0);
  for (long i = 0; i < n_samples; ++i) {
    {
      const auto [points, weight] = sampler(rng_id);
      for (std::size_t s = 0; s < statistics.size(); ++s)
        acc_id[s].add(weight == 0.0 ? 0.0 : statistics[s](points) * weight);
    }
    {
      auto [points, weight] = sampler(rng_rot);
      for (Vec& p : points) p = rotation * p;
      for (std::size_t s = 0; s < statistics.size(); ++s)
        acc_rot[s].add(weight == 0.0 ? 0.0 : statistics[s](points) * weight);
    }
  }
  RotationCheckReport rep;
  for (std::size_t s = 0; s < statistics.size(); ++s) {
    RotationCheckEntry e;
    e.mean_identity = acc_id[s].mean();
    e.se_identity = acc_id[s].std_error();
    e.mean_rotated = acc_rot[s].mean();
    e.se_rotated = acc_rot[s].std_error();
    const double se = std::sqrt(e.se_identity * e.se_identity + e.se_rotated * e.se_rotated);
    e.z_score = se > 0 ? std::abs(e.mean_identity - e.mean_rotated) / se : 0.0;
    rep.max_z = std::max(rep.max_z, e.z_score);
    rep.entries.push_back(e);
  }
  return rep;
}

inline RotationCheckReport rotation_invariance_check(const Simplex& simplex, const Mat& rotation,
                                                     const std::vector<ConfigStatistic>& statistics,
                                                     long n_samples, std::uint64_t seed) {
  auto sampler = [&simplex](RngStream& rng) {
    ChainSample s = sample_simplex_chain(simplex, rng);
    return std::make_pair(std::move(s.points), 1.0);
  };
  return rotation_invariance_check(sampler, rotation, statistics, n_samples, seed);
}

inline RotationCheckReport rotation_invariance_check(const DistanceGraph& g, double eta,
                                                     const Mat& rotation,
                                                     const std::vector<ConfigStatistic>& statistics,
                                                     long n_samples, std::uint64_t seed) {
  const std::vector<int> order = elimination_order(g).order;
  auto sampler = [&g, &order, eta](RngStream& rng) {
    ChainSample s = sample_graph_config(g, order, eta, rng);
    std::vector<Vec> by_vertex = assemble_by_vertex(g, order, s);
    by_vertex.erase(by_vertex.begin());
    return std::make_pair(std::move(by_vertex), s.weight * s.area_product);
  };
  return rotation_invariance_check(sampler, rotation, statistics, n_samples, seed);
}

}  // namespace dustlab
