// Plant one rotated, scaled copy of a triangle inside a random cloud and
// recover it: the search seeds on atom pairs at a compatible scale, then
// grows each seed through annulus queries until the whole pattern fits.

#include <cstdio>

#include "dustlab/geometry.hpp"
#include "dustlab/patternscan.hpp"
#include "dustlab/rng.hpp"
#include "dustlab/simplex.hpp"

int main() {
  using namespace dustlab;

  const Simplex triangle({Vec::Zero(2), Vec::Unit(2, 0), 0.5 * Vec::Unit(2, 0) + 0.8 * Vec::Unit(2, 1)});
  const double lambda = 0.31;

  RngStream rng = RngStream::substream(2024, "demo-cloud", 0);
  std::vector<Vec> cloud;
  for (int i = 0; i < 5000; ++i) {
    Vec p(2);
    p << rng.uniform(), rng.uniform();
    cloud.push_back(p);
  }

  const Mat rot = random_rotation(2, rng);
  Vec shift(2);
  shift << 0.35, 0.55;
  const std::size_t planted_at = cloud.size();
  for (int j = 0; j < triangle.vertex_count(); ++j)
    cloud.push_back(rot * (lambda * (triangle.vertex(j) - triangle.vertex(0))) + shift);

  // The tolerance separates the planted copy (residual at rounding level)
  // from near-coincidences in the random cloud; the seed cap is sized so
  // every compatible atom pair gets examined.
  ScanOptions opt;
  opt.max_seeds = 50000000;
  opt.threads = 4;
  const ScanPattern pattern = make_scan_pattern(triangle);
  const ScanReport report =
      find_similar_copy(cloud, pattern, 0.9 * lambda, 1.1 * lambda, 1e-9, opt);

  std::printf("cloud: %zu random atoms + 3 planted at indices %zu..%zu\n", planted_at,
              planted_at, planted_at + 2);
  std::printf("seeds tested: %ld, matches: %zu\n", report.seeds_tested, report.matches.size());
  for (const MatchResult& m : report.matches) {
    std::printf("  lambda %.6f residual %.3g atoms", m.lambda, m.residual);
    for (std::size_t idx : m.atoms) std::printf(" %zu", idx);
    std::printf("%s\n", m.atoms.front() >= planted_at ? "   <- the planted copy" : "");
  }
  return 0;
}
