// Count estimates for a scaled triangle against a planar dust, two ways:
// the simplex chain sampler and the complete-graph sampler with the
// cutoff disabled. The two routes pin different slice normalizations, so
// the graph value sits at a fixed multiple of the simplex value: the
// product of the per-step Gram factor and slice area. A complete graph
// pins every pairwise distance, making that product the same for every
// sample, so one probe chain recovers it and shared seeds make the
// rescaled comparison sharp.

#include <cstdio>
#include <limits>

#include "dustlab/estimators.hpp"
#include "dustlab/graph.hpp"
#include "dustlab/measure.hpp"
#include "dustlab/mollifier.hpp"
#include "dustlab/simplex.hpp"

int main() {
  using namespace dustlab;

  const PointMassMeasure dust = build_cantor_dust(quadrant_dust_ifs(2), 6);
  const double lambda = 0.4, epsilon = 0.125;
  const long n = 200000;
  const std::uint64_t seed = 7;

  std::vector<Vec> verts = {Vec::Zero(2), Vec::Unit(2, 0), Vec::Unit(2, 1)};
  const Simplex triangle(verts);
  const DistanceGraph complete = complete_graph(verts);

  MollifierSpec spec;
  spec.epsilon = epsilon;
  const ScaledKernel kern(2, spec);
  const GridSpec gspec = auto_grid_spec(dust, lambda * chain_reach(complete), epsilon / 4.0,
                                        kern.cutoff_radius(1e-9));
  const GridFunction grid = mollify(dust, spec, gspec);

  const double eta = std::numeric_limits<double>::infinity();
  const CountEstimate via_simplex = estimate_T_simplex(grid, triangle, lambda, n, seed);
  const CountEstimate via_graph = estimate_T_graph(grid, complete, lambda, eta, n, seed);

  // One probe chain recovers the constant slice normalization of the
  // graph route (c(T_j) * area per step, constant because the complete
  // graph pins all distances).
  RngStream probe_rng(seed);
  const ChainSample probe =
      sample_graph_config(complete, elimination_order(complete).order, eta, probe_rng);
  const double gauge = probe.weight * probe.area_product;

  std::printf("T(lambda=%.2f, eps=%.3f) on %zu atoms\n", lambda, epsilon, dust.size());
  std::printf("  simplex chains:       %.8g +- %.3g\n", via_simplex.value, via_simplex.std_error);
  std::printf("  complete graph:       %.8g +- %.3g\n", via_graph.value, via_graph.std_error);
  std::printf("  graph / gauge %.5f: %.8g  (matches simplex)\n", gauge, via_graph.value / gauge);

  // Paired scale differences for the planar member of the pattern family
  // (a segment; its final slice is a circle). The magnitude shrinks with
  // eps while the signed value may cross zero at coarse scales.
  const Simplex segment({Vec::Zero(2), Vec::Unit(2, 0)});
  std::printf("\npaired scale differences, segment pattern:\n");
  for (double eps = 0.25; eps >= 0.0625; eps *= 0.5) {
    const TelescopeResult r = telescoping_difference(dust, segment, lambda, eps, n, seed);
    std::printf("  eps=%-8.4f T(2eps)-T(eps) = %.8g +- %.3g\n", eps, r.difference_signed,
                r.std_error);
  }
  return 0;
}
