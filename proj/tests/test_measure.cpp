// Atomic measures, IFS dust construction, ball-mass scans, and witness-ball
// renormalization.  The scan oracles here are brute force: every atom center
// against explicit radius families, recomputed with measure_ball.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <dustlab/measure.hpp>
#include <dustlab/numerics.hpp>
#include <dustlab/rng.hpp>

using namespace dustlab;

namespace {

// Exhaustive sup of mu(B(x,r))/r^s over atom centers and a radius family.
double scan_oracle(const PointMassMeasure& mu, double s,
                   const std::vector<double>& radii) {
  double best = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (double r : radii) {
      double ratio = measure_ball(mu, mu.point(i), r) / std::pow(r, s);
      best = std::max(best, ratio);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("ifs dust construction hits the advertised counts and dimensions") {
  const PointMassMeasure cantor = build_cantor_dust(cantor_middle_thirds_ifs(), 5);
  CHECK(cantor.size() == 32);
  CHECK(cantor.ambient_dim() == 1);
  CHECK(cantor.dimension_s() == Catch::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-14));
  CHECK(cantor.total_mass() == Catch::Approx(1.0).margin(1e-14));
  for (std::size_t i = 0; i < cantor.size(); ++i) {
    CHECK(cantor.point(i)[0] >= 0.0);
    CHECK(cantor.point(i)[0] <= 1.0);
    CHECK(cantor.weight(i) == Catch::Approx(1.0 / 32.0));
  }
  // Sibling cell centers at depth 5 sit 2/3^5 apart.
  CHECK(cantor.min_gap() == Catch::Approx(2.0 / 243.0).epsilon(1e-13));

  const PointMassMeasure corner = build_cantor_dust(quadrant_dust_ifs(2), 6);
  CHECK(corner.size() == 729);
  CHECK(corner.dimension_s() == Catch::Approx(std::log(3.0) / std::log(2.0)).epsilon(1e-14));

  const PointMassMeasure grid2 = build_cantor_dust(quadrant_dust_ifs(2, true), 3);
  CHECK(grid2.size() == 64);
  CHECK(grid2.dimension_s() == Catch::Approx(2.0).epsilon(1e-14));
  // Full-cube dust is the uniform dyadic grid: atom (i+1/2)/8 per axis.
  Vec lo, hi;
  grid2.bounding_box(lo, hi);
  CHECK(lo[0] == Catch::Approx(1.0 / 16.0));
  CHECK(hi[1] == Catch::Approx(15.0 / 16.0));
}

TEST_CASE("ifs validation rejects malformed systems") {
  IteratedFunctionSystem bad;
  bad.ambient_dim = 1;
  bad.cells = {{2.0 / 3.0, Vec::Zero(1)}, {2.0 / 3.0, Vec::Constant(1, 1.0 / 3.0)}};
  CHECK_THROWS_AS(bad.validate(), OverlapViolationError);

  IteratedFunctionSystem expanding;
  expanding.ambient_dim = 1;
  expanding.cells = {{1.0, Vec::Zero(1)}};
  CHECK_THROWS_AS(expanding.validate(), ConfigError);

  IteratedFunctionSystem escaping;
  escaping.ambient_dim = 1;
  escaping.cells = {{1.0 / 3.0, Vec::Constant(1, 0.9)}};
  CHECK_THROWS_AS(escaping.validate(), ConfigError);

  IteratedFunctionSystem mixed;
  mixed.ambient_dim = 1;
  mixed.cells = {{1.0 / 3.0, Vec::Zero(1)}, {1.0 / 4.0, Vec::Constant(1, 0.5)}};
  CHECK_THROWS_AS(mixed.validate(), ConfigError);

  CHECK_THROWS_AS(build_cantor_dust(cantor_middle_thirds_ifs(), 20, 1000), AtomCapError);
  CHECK_THROWS_AS(build_cantor_dust(cantor_middle_thirds_ifs(), -1), ConfigError);
}

TEST_CASE("point mass measure basics and validation") {
  CHECK_THROWS_AS(PointMassMeasure(2, {0.0, 0.0}, {-1.0}, 1.0), ConfigError);
  CHECK_THROWS_AS(PointMassMeasure(2, {0.0, 0.0, 1.0}, {1.0}, 1.0), ConfigError);
  CHECK_THROWS_AS(PointMassMeasure(2, {}, {}, 1.0), ConfigError);

  PointMassMeasure mu(2, {0.0, 0.0, 3.0, 4.0}, {0.25, 0.75}, 1.0);
  CHECK(mu.total_mass() == Catch::Approx(1.0));
  CHECK(mu.diameter_bound() >= 5.0 - 1e-12);
  CHECK(mu.min_gap() == Catch::Approx(5.0));

  // min_gap against the quadratic brute force on random clouds.
  RngStream rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 40, d = 3;
    std::vector<double> pts;
    for (int i = 0; i < n * d; ++i) pts.push_back(rng.uniform(-1.0, 1.0));
    PointMassMeasure cloud(d, pts, std::vector<double>(n, 1.0 / n), 1.5);
    double best = 1e300;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        double d2 = 0.0;
        for (int a = 0; a < d; ++a) {
          double t = pts[i * d + a] - pts[j * d + a];
          d2 += t * t;
        }
        best = std::min(best, std::sqrt(d2));
      }
    CHECK(cloud.min_gap() == Catch::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("measure_ball is the closed-ball mass") {
  const PointMassMeasure dust = build_cantor_dust(cantor_middle_thirds_ifs(), 3);
  REQUIRE(dust.size() == 8);

  CHECK(measure_ball(dust, Vec::Constant(1, 0.5), 0.0) == 0.0);
  CHECK(measure_ball(dust, Vec::Constant(1, 0.3), 2.0) == Catch::Approx(1.0).margin(1e-14));

  // Leftmost atom sits at 3^-3/2; a radius-1/3 ball captures exactly the left
  // half of the construction.
  const Vec corner = dust.point(0);
  CHECK(corner[0] == Catch::Approx(0.5 / 27.0).epsilon(1e-14));
  CHECK(measure_ball(dust, corner, 1.0 / 3.0) == Catch::Approx(0.5).margin(1e-14));

  // Closed-ball semantics: radius exactly the atom distance includes it.
  PointMassMeasure two(1, {0.0, 1.0}, {0.5, 0.5}, 1.0);
  CHECK(measure_ball(two, Vec::Zero(1), 1.0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(measure_ball(two, Vec::Zero(1), 0.999999) == Catch::Approx(0.5).margin(1e-15));

  // Monotone in r.
  RngStream rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Vec c = Vec::Constant(1, rng.uniform(-0.2, 1.2));
    double r1 = rng.uniform(0.0, 0.6), r2 = r1 + rng.uniform(0.0, 0.6);
    CHECK(measure_ball(dust, c, r1) <= measure_ball(dust, c, r2) + 1e-15);
  }
}

TEST_CASE("frostman scan matches the exhaustive oracle on a uniform grid") {
  // Uniform dyadic atoms on [0,1].  The covering heuristic says K ~ 2; the
  // exhaustive closed-ball scan at inter-atom radii tops out at 3 because the
  // gap-radius ball grabs both neighbors.  The scan must reproduce that.
  const PointMassMeasure grid = build_cantor_dust(quadrant_dust_ifs(1), 8);
  REQUIRE(grid.size() == 256);
  const double h = 1.0 / 256.0;

  std::vector<double> inter_atom;
  for (int m = 1; m < 256; ++m) inter_atom.push_back(m * h);
  const double oracle = scan_oracle(grid, 1.0, inter_atom);
  CHECK(oracle == Catch::Approx(3.0).epsilon(1e-12));

  const FrostmanReport rep = estimate_frostman_constant(grid, 1.0);
  CHECK(rep.constant >= 2.0);
  CHECK(rep.constant <= oracle + 1e-9);
  CHECK_FALSE(rep.diverged);
  CHECK(rep.witness_mass == Catch::Approx(measure_ball(grid, rep.witness_center,
                                                       rep.witness_radius))
                                .margin(1e-14));
}

TEST_CASE("frostman scan flags single-atom divergence") {
  PointMassMeasure atom(2, {0.3, 0.4}, {1.0}, 1.0);
  FrostmanOptions opt;
  opt.radii = {1e-8, 1e-4, 1.0};
  const FrostmanReport rep = estimate_frostman_constant(atom, 1.0, opt);
  CHECK(rep.constant >= 1e8 * (1.0 - 1e-12));
  CHECK(rep.diverged);

  CHECK_THROWS_AS(estimate_frostman_constant(atom, 0.0), InvalidExponentError);
  FrostmanOptions badr;
  badr.radii = {0.5, -1.0};
  CHECK_THROWS_AS(estimate_frostman_constant(atom, 1.0, badr), EmptyRadiiError);
}

TEST_CASE("cantor dust constant stays in the advertised window") {
  const double s = std::log(2.0) / std::log(3.0);
  const PointMassMeasure dust = build_cantor_dust(cantor_middle_thirds_ifs(), 7);

  std::vector<double> triadic;
  for (int j = 0; j <= 7; ++j) triadic.push_back(std::pow(3.0, -j));
  const double oracle = scan_oracle(dust, s, triadic);
  CHECK(oracle >= 1.0);
  CHECK(oracle <= 4.0);

  const FrostmanReport rep = estimate_frostman_constant(dust, s);
  CHECK(rep.constant >= 1.0);
  CHECK(rep.constant <= 4.0);
  // The default geometric ladder can only probe between the triadic rungs, so
  // it must dominate any ball the triadic oracle found, up to rung spacing.
  CHECK(rep.constant >= oracle / std::pow(FrostmanOptions{}.radius_factor, s) - 1e-9);
}

TEST_CASE("renormalize lands inside the unit ball with constant at most 4(1+tau)") {
  const double tau = 0.1;

  // Corner dust in the plane, the main acceptance measure family.
  const double s2 = std::log(3.0) / std::log(2.0);
  const PointMassMeasure corner = build_cantor_dust(quadrant_dust_ifs(2), 6);
  FrostmanReport rep = estimate_frostman_constant(corner, s2);
  FrostmanReport fresh;
  const PointMassMeasure out = renormalize(corner, s2, rep, tau, {}, &fresh);
  CHECK(fresh.constant <= 4.0 * (1.0 + tau));
  CHECK(out.total_mass() == Catch::Approx(1.0).margin(1e-12));
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.point(i).norm() <= 1.0 + 1e-12);

  // Scaling covariance: balls of the output are restricted balls of the input
  // scaled by the witness, as long as they stay inside the witness ball.
  RngStream rng(3);
  for (int t = 0; t < 10; ++t) {
    Vec x = Vec::Zero(2);
    x[0] = rng.uniform(-0.5, 0.5);
    x[1] = rng.uniform(-0.5, 0.5);
    double r = rng.uniform(0.0, 1.0 - x.norm());
    double lhs = measure_ball(out, x, r);
    double rhs = measure_ball(corner, rep.witness_center + rep.witness_radius * x,
                              rep.witness_radius * r) /
                 rep.witness_mass;
    CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
  }
}

TEST_CASE("renormalize examples: uniform input, tame input, small cluster") {
  // Uniform grid: output constant <= 4 by rerun scan.
  const PointMassMeasure grid = build_cantor_dust(quadrant_dust_ifs(1), 8);
  FrostmanReport rep = estimate_frostman_constant(grid, 1.0);
  FrostmanReport fresh;
  renormalize(grid, 1.0, rep, 0.1, {}, &fresh);
  CHECK(fresh.constant <= 4.0);

  // Already tame: two atoms at unit distance have K = 1; stays well under 4.
  PointMassMeasure tame(1, {0.0, 1.0}, {0.5, 0.5}, 1.0);
  FrostmanReport trep = estimate_frostman_constant(tame, 1.0);
  CHECK(trep.constant <= 1.0 + 1e-12);
  FrostmanReport tfresh;
  const PointMassMeasure tout = renormalize(tame, 1.0, trep, 0.1, {}, &tfresh);
  CHECK(tfresh.constant <= 4.0);
  CHECK(tout.total_mass() == Catch::Approx(1.0).margin(1e-14));

  // Tight cluster: every output atom inside the closed unit ball.
  RngStream rng(17);
  std::vector<double> pts;
  for (int i = 0; i < 30; ++i) {
    double ang = rng.uniform(0.0, kTwoPi), rad = rng.uniform(0.0, 1.0 / 8.0);
    pts.push_back(0.5 + rad * std::cos(ang));
    pts.push_back(-0.25 + rad * std::sin(ang));
  }
  PointMassMeasure cluster(2, pts, std::vector<double>(30, 1.0 / 30.0), 1.0);
  FrostmanReport crep = estimate_frostman_constant(cluster, 1.0);
  const PointMassMeasure cout = renormalize(cluster, 1.0, crep);
  for (std::size_t i = 0; i < cout.size(); ++i) CHECK(cout.point(i).norm() <= 1.0 + 1e-12);

  // Inconsistent report: no usable witness.
  FrostmanReport empty;
  CHECK_THROWS_AS(renormalize(tame, 1.0, empty), NoWitnessError);
}
