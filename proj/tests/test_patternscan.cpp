// Similar-copy search: planted-copy recovery, exhaustive agreement on a
// small grid, soundness of every reported residual, equivariance under
// rigid motions, and the budget/threading contracts.

#include <catch2/catch_amalgamated.hpp>

#include <dustlab/geometry.hpp>
#include <dustlab/graph.hpp>
#include <dustlab/patternscan.hpp>
#include <dustlab/rng.hpp>
#include <dustlab/simplex.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace dustlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vec v2(double x, double y) { return (Vec(2) << x, y).finished(); }

// Residual contract from the match struct: refit scale by least squares
// over the pattern's residual pairs, then take the worst absolute gap.
std::pair<double, double> oracle_refit(const ScanPattern& pat,
                                       const std::vector<Vec>& y) {
  std::vector<std::pair<std::pair<int, int>, double>> pairs;
  if (pat.residual_over_all_pairs) {
    const int n = static_cast<int>(pat.vertices.size());
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        pairs.push_back({{i, j},
                         (pat.vertices[static_cast<std::size_t>(i)] -
                          pat.vertices[static_cast<std::size_t>(j)]).norm()});
  } else {
    for (std::size_t e = 0; e < pat.constraints.size(); ++e)
      pairs.push_back({pat.constraints[e], pat.ref_distances[e]});
  }
  double num = 0.0, den = 0.0;
  for (const auto& [ij, ref] : pairs) {
    const double obs = (y[static_cast<std::size_t>(ij.first)] -
                        y[static_cast<std::size_t>(ij.second)]).norm();
    num += obs * ref;
    den += ref * ref;
  }
  const double lambda = num / den;
  double residual = 0.0;
  for (const auto& [ij, ref] : pairs) {
    const double obs = (y[static_cast<std::size_t>(ij.first)] -
                        y[static_cast<std::size_t>(ij.second)]).norm();
    residual = std::max(residual, std::abs(obs - lambda * ref));
  }
  return {lambda, residual};
}

void check_sound(const ScanPattern& pat, const ScanReport& report,
                 double lambda_lo, double lambda_hi) {
  for (const MatchResult& m : report.matches) {
    REQUIRE(m.vertices.size() == pat.vertices.size());
    REQUIRE(m.atoms.size() == pat.vertices.size());
    REQUIRE(m.anchor == m.vertices[0]);
    REQUIRE(m.lambda >= lambda_lo);
    REQUIRE(m.lambda <= lambda_hi);
    for (std::size_t i = 0; i < m.atoms.size(); ++i)
      for (std::size_t j = i + 1; j < m.atoms.size(); ++j)
        REQUIRE(m.atoms[i] != m.atoms[j]);
    const auto [lam, res] = oracle_refit(pat, m.vertices);
    REQUIRE(res <= m.tolerance);
    REQUIRE_THAT(res, WithinAbs(m.residual, 1e-12));
    REQUIRE_THAT(lam, WithinAbs(m.lambda, 1e-12));
  }
  for (std::size_t k = 1; k < report.matches.size(); ++k)
    REQUIRE(report.matches[k - 1].residual <= report.matches[k].residual);
}

}  // namespace

TEST_CASE("pattern construction: anchoring, constraints, placement order") {
  const Simplex tri({v2(0.2, 0.1), v2(1.2, 0.1), v2(0.2, 1.1)});
  const ScanPattern sp = make_scan_pattern(tri);
  REQUIRE(sp.vertices.size() == 3);
  REQUIRE(sp.vertices[0].norm() == 0.0);
  REQUIRE(sp.constraints.size() == 3);
  REQUIRE(sp.residual_over_all_pairs);
  // longest pair is the hypotenuse between vertices 1 and 2
  REQUIRE_THAT(sp.base_distance, WithinRel(std::sqrt(2.0), 1e-15));
  REQUIRE(sp.placement.size() == 3);
  REQUIRE(sp.placement[0] == 1);
  REQUIRE(sp.placement[1] == 2);
  REQUIRE(sp.placement[2] == 0);
  for (std::size_t e = 0; e < sp.constraints.size(); ++e) {
    const auto [i, j] = sp.constraints[e];
    REQUIRE_THAT(sp.ref_distances[e],
                 WithinRel((sp.vertices[static_cast<std::size_t>(i)] -
                            sp.vertices[static_cast<std::size_t>(j)]).norm(),
                           1e-15));
  }

  const DistanceGraph path({v2(0, 0), v2(1, 0), v2(1, 1.5)}, {{0, 1}, {1, 2}});
  const ScanPattern gp = make_scan_pattern(path);
  REQUIRE_FALSE(gp.residual_over_all_pairs);
  REQUIRE(gp.constraints.size() == 2);
  REQUIRE(gp.base_distance == 1.5);
  REQUIRE(gp.placement[0] == 1);
  REQUIRE(gp.placement[1] == 2);
}

TEST_CASE("planted similar copy is recovered exactly from a random cloud") {
  // scalene template so the labeling of a true copy is unambiguous
  const Simplex tri({v2(0, 0), v2(0.3, 0), v2(0.1, 0.22)});
  const ScanPattern pat = make_scan_pattern(tri);

  RngStream rng(814);
  std::vector<Vec> cloud;
  for (int i = 0; i < 1000; ++i)
    cloud.push_back(v2(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)));

  const double lambda0 = 0.8;
  const double theta = 0.7;
  Mat rot(2, 2);
  rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  const Vec shift = v2(0.45, 0.4);
  std::vector<std::size_t> planted;
  for (int j = 0; j < 3; ++j) {
    planted.push_back(cloud.size());
    cloud.push_back(rot * (lambda0 * (tri.vertex(j) - tri.vertex(0))) + shift);
  }

  const ScanReport report = find_similar_copy(cloud, pat, 0.7, 0.9, 1e-9);
  check_sound(pat, report, 0.7, 0.9);
  REQUIRE(report.matches.size() == 1);
  const MatchResult& m = report.matches.front();
  REQUIRE(m.atoms == planted);
  REQUIRE(m.residual <= 1e-12);
  REQUIRE_THAT(m.lambda, WithinAbs(lambda0, 1e-12));
  for (int j = 0; j < 3; ++j)
    REQUIRE((m.vertices[static_cast<std::size_t>(j)] -
             cloud[planted[static_cast<std::size_t>(j)]]).norm() == 0.0);

  // a hairline tolerance against a coarse cloud should be flagged
  REQUIRE(report.tolerance_warning);
  REQUIRE(report.spacing_estimate > 0.001);
  REQUIRE(report.spacing_estimate < 0.2);
  REQUIRE(report.seeds_tested > 1000);

  SECTION("rigid motion of the cloud preserves the match") {
    RngStream rot_rng(9);
    const Mat q = random_rotation(2, rot_rng);
    const Vec t = v2(-1.3, 2.2);
    std::vector<Vec> moved;
    for (const Vec& p : cloud) moved.push_back(q * p + t);
    const ScanReport moved_report = find_similar_copy(moved, pat, 0.7, 0.9, 1e-9);
    REQUIRE(moved_report.matches.size() == 1);
    const MatchResult& mm = moved_report.matches.front();
    REQUIRE(mm.atoms == planted);
    REQUIRE_THAT(mm.lambda, WithinAbs(m.lambda, 1e-12));
    REQUIRE_THAT(mm.residual, WithinAbs(m.residual, 1e-12));
  }

  SECTION("seed budget caps the work") {
    ScanOptions opt;
    opt.max_seeds = 10;
    const ScanReport capped = find_similar_copy(cloud, pat, 0.7, 0.9, 1e-9, opt);
    REQUIRE(capped.seeds_tested <= 10 + 256);
    REQUIRE(capped.seeds_tested < report.seeds_tested);
  }
}

TEST_CASE("scan agrees with the exhaustive oracle on a small grid") {
  // 9 x 9 lattice, right isoceles template at the lattice scale: small
  // enough that brute force over ordered triples is the ground truth
  const double h = 0.125;
  std::vector<Vec> cloud;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) cloud.push_back(v2(i * h, j * h));

  const Simplex tri({v2(0, 0), v2(h, 0), v2(0, h)});
  const ScanPattern pat = make_scan_pattern(tri);

  ScanOptions opt;
  opt.budget = 10000;
  const ScanReport report = find_similar_copy(cloud, pat, 0.9, 1.1, 1e-9, opt);
  check_sound(pat, report, 0.9, 1.1);

  std::vector<std::vector<std::size_t>> expected;
  const std::size_t n = cloud.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c) {
        if (a == b || a == c || b == c) continue;
        const auto [lam, res] = oracle_refit(pat, {cloud[a], cloud[b], cloud[c]});
        if (res <= 1e-9 && lam >= 0.9 && lam <= 1.1)
          expected.push_back({a, b, c});
      }

  std::vector<std::vector<std::size_t>> got;
  for (const MatchResult& m : report.matches)
    got.push_back({m.atoms[0], m.atoms[1], m.atoms[2]});
  std::sort(expected.begin(), expected.end());
  std::sort(got.begin(), got.end());
  REQUIRE(got.size() == expected.size());
  REQUIRE(got == expected);

  SECTION("results do not depend on the thread count") {
    ScanOptions four = opt;
    four.threads = 4;
    const ScanReport rep4 = find_similar_copy(cloud, pat, 0.9, 1.1, 1e-9, four);
    REQUIRE(rep4.matches.size() == report.matches.size());
    REQUIRE(rep4.seeds_tested == report.seeds_tested);
    for (std::size_t k = 0; k < report.matches.size(); ++k) {
      REQUIRE(rep4.matches[k].atoms == report.matches[k].atoms);
      REQUIRE(rep4.matches[k].lambda == report.matches[k].lambda);
      REQUIRE(rep4.matches[k].residual == report.matches[k].residual);
    }
  }

  SECTION("match budget truncates the sorted list") {
    ScanOptions tight = opt;
    tight.budget = 3;
    const ScanReport small = find_similar_copy(cloud, pat, 0.9, 1.1, 1e-9, tight);
    REQUIRE(small.matches.size() == 3);
    check_sound(pat, small, 0.9, 1.1);
  }

  SECTION("generous tolerance clears the resolution warning") {
    ScanOptions tiny = opt;
    tiny.budget = 50;
    const ScanReport loose = find_similar_copy(cloud, pat, 0.9, 1.1, 0.5, tiny);
    REQUIRE_FALSE(loose.tolerance_warning);
    REQUIRE_THAT(loose.spacing_estimate, WithinRel(h, 1e-12));
  }
}

TEST_CASE("edge-only patterns accept bent copies that simplex patterns reject") {
  // straight chain of unit edges: matches the path template exactly, but
  // the bent triangle template constrains the third pairwise distance too
  const std::vector<Vec> cloud = {v2(0, 0), v2(1, 0), v2(2, 0),
                                  v2(0.31, 0.77), v2(5.1, 4.2)};

  const std::vector<Vec> bent = {v2(0, 0), v2(1, 0), v2(1, 1)};
  const DistanceGraph path(bent, {{0, 1}, {1, 2}});
  const ScanPattern gp = make_scan_pattern(path);
  const ScanReport graph_report = find_similar_copy(cloud, gp, 0.95, 1.05, 1e-9);
  check_sound(gp, graph_report, 0.95, 1.05);
  REQUIRE(graph_report.matches.size() >= 1);
  bool straight_chain = false;
  for (const MatchResult& m : graph_report.matches)
    straight_chain = straight_chain ||
                     (m.atoms == std::vector<std::size_t>{0, 1, 2}) ||
                     (m.atoms == std::vector<std::size_t>{2, 1, 0});
  REQUIRE(straight_chain);

  const Simplex tri(bent);
  const ScanPattern sp = make_scan_pattern(tri);
  const ScanReport simplex_report = find_similar_copy(cloud, sp, 0.95, 1.05, 1e-9);
  REQUIRE(simplex_report.matches.empty());
}

TEST_CASE("two-point patterns, small clouds, and argument guards") {
  const Simplex seg({v2(0, 0), v2(0.5, 0)});
  const ScanPattern pat = make_scan_pattern(seg);

  const PointMassMeasure two(2, {0.1, 0.2, 0.6, 0.2}, {0.5, 0.5}, 1.0);
  const ScanReport report = find_similar_copy(two, pat, 1.0, 1.0, 1e-9);
  check_sound(pat, report, 1.0, 1.0);
  // both orientations of the segment count as distinct ordered matches
  REQUIRE(report.matches.size() == 2);
  REQUIRE(report.matches[0].lambda == 1.0);
  REQUIRE(report.matches[1].lambda == 1.0);

  const std::vector<Vec> empty_cloud;
  REQUIRE(find_similar_copy(empty_cloud, pat, 0.5, 1.0, 1e-6).matches.empty());
  const std::vector<Vec> lone = {v2(0.3, 0.4)};
  REQUIRE(find_similar_copy(lone, pat, 0.5, 1.0, 1e-6).matches.empty());

  const std::vector<Vec> cloud = {v2(0, 0), v2(1, 0), v2(0, 1)};
  REQUIRE_THROWS_AS(find_similar_copy(cloud, pat, 1.0, 0.5, 1e-6), ConfigError);
  REQUIRE_THROWS_AS(find_similar_copy(cloud, pat, 0.0, 1.0, 1e-6), ConfigError);
  REQUIRE_THROWS_AS(find_similar_copy(cloud, pat, -1.0, -0.5, 1e-6), ConfigError);
  REQUIRE_THROWS_AS(find_similar_copy(cloud, pat, 0.5, 1.0, 0.0), ConfigError);

  const Simplex tri3({(Vec(3) << 0, 0, 0).finished(), (Vec(3) << 1, 0, 0).finished(),
                      (Vec(3) << 0, 1, 0).finished()});
  REQUIRE_THROWS_AS(find_similar_copy(cloud, make_scan_pattern(tri3), 0.5, 1.0, 1e-6),
                    ConfigError);

  std::vector<Vec> mixed = {v2(0, 0), (Vec(3) << 1, 0, 0).finished()};
  REQUIRE_THROWS_AS(find_similar_copy(mixed, pat, 0.5, 1.0, 1e-6), ConfigError);
}
