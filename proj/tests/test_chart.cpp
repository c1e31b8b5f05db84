// Chart quadrature over sphere-constraint varieties.  The measure weights
// each surface element by the Gram factor, so quadrature of 1 must equal
// c_T times the slice area; closed-form circles pin the normalization.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <dustlab/numerics.hpp>
#include <dustlab/rng.hpp>
#include <dustlab/sphere.hpp>
#include <dustlab/variety.hpp>

using namespace dustlab;

namespace {

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

Vec v3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

double one(const Vec&) { return 1.0; }

}  // namespace

TEST_CASE("circle mass is pi for every radius") {
  // One constraint in the plane: c = 1/(2r), area = 2 pi r, so the weighted
  // mass is pi no matter the radius.
  for (double r : {0.5, 1.0, 2.0}) {
    SphereVariety circle{{v2(0.3, -0.7)}, {r * r}};
    ChartQuadratureResult res = chart_integrate(circle, one);
    CAPTURE(r);
    CHECK(res.value == Catch::Approx(kPi).epsilon(1e-8));
    CHECK(res.error_estimate < 1e-6);
    CHECK(res.n_nodes > 0);
  }
}

TEST_CASE("circle second moment has the closed form") {
  // g = (x0 - cx)^2 on a circle of radius r: c * integral = pi r^2 / 2.
  const double r = 1.3;
  const Vec c = v2(0.4, 0.1);
  SphereVariety circle{{c}, {r * r}};
  auto g = [&](const Vec& x) { return (x[0] - c[0]) * (x[0] - c[0]); };
  ChartQuadratureResult res = chart_integrate(circle, g);
  CHECK(res.value == Catch::Approx(0.5 * kPi * r * r).epsilon(1e-8));
}

TEST_CASE("half-space indicator picks up half the mass") {
  SphereVariety circle{{v2(0.0, 0.0)}, {1.0}};
  // Boundary direction chosen off the chart axes so no node sits on it.
  Vec u = v2(std::cos(0.37), std::sin(0.37));
  auto g = [&](const Vec& x) { return x.dot(u) > 0.0 ? 1.0 : 0.0; };
  ChartQuadratureResult res = chart_integrate(circle, g);
  CHECK(res.value == Catch::Approx(0.5 * kPi).epsilon(1e-6));
}

TEST_CASE("two-sphere circle matches the constant-weight closed form") {
  std::vector<Vec> centers{v3(0.0, 0.0, 0.0), v3(1.0, 0.0, 0.0)};
  std::vector<double> t{1.0, 1.0};
  SphereVariety variety{centers, t};
  SphereSlice slice = intersect_spheres(centers, t);

  // The Gram data is constant along the slice; sample it anywhere on it.
  Vec probe = slice.center + slice.radius * slice.tangent_frame.col(0);
  GramData gram = gram_weight(probe, centers);
  const double expected = gram.weight_c * slice.area();

  ChartQuadratureResult res = chart_integrate(variety, one);
  CHECK(res.value == Catch::Approx(expected).epsilon(1e-8));
}

TEST_CASE("value is independent of the chart") {
  std::vector<Vec> centers{v3(0.0, 0.0, 0.0), v3(1.0, 0.1, -0.2)};
  std::vector<double> t{1.1, 0.9};
  SphereVariety variety{centers, t};
  auto g = [](const Vec& x) { return 1.0 + 0.5 * x[0] + x[1] * x[2]; };

  ChartOptions a, b, autoc;
  a.chart = {0, 1};
  b.chart = {0, 2};
  ChartQuadratureResult ra = chart_integrate(variety, g, a);
  ChartQuadratureResult rb = chart_integrate(variety, g, b);
  ChartQuadratureResult rc = chart_integrate(variety, g, autoc);
  CHECK(ra.value == Catch::Approx(rb.value).epsilon(1e-6));
  CHECK(ra.value == Catch::Approx(rc.value).epsilon(1e-6));
  CHECK(ra.chart != rb.chart);
}

TEST_CASE("random instances reproduce gram weight times area") {
  // Constant-weight identity on random admissible systems: seed the variety
  // with a known point so the slice is never empty.
  RngStream rng(2025);
  int done = 0;
  while (done < 8) {
    const int d = 3 + static_cast<int>(rng.below(3));  // 3..5
    const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - 1)));
    Vec xstar(d);
    for (int a = 0; a < d; ++a) xstar[a] = rng.uniform(-1.0, 1.0);
    std::vector<Vec> centers;
    std::vector<double> t;
    for (int i = 0; i < m; ++i) {
      Vec c(d);
      for (int a = 0; a < d; ++a) c[a] = rng.uniform(-1.0, 1.0);
      centers.push_back(c);
      t.push_back((xstar - c).squaredNorm());
    }
    SphereVariety variety{centers, t};
    SphereSlice slice;
    try {
      slice = variety.slice();
    } catch (const DegenerateCentersError&) {
      continue;
    }
    if (slice.tangency || slice.radius < 0.3) continue;  // keep conditioning sane

    Vec probe = slice.center + slice.radius * slice.tangent_frame.col(0);
    GramData gram = gram_weight(probe, centers);
    ChartQuadratureResult res = chart_integrate(variety, one);
    CAPTURE(d, m, slice.radius);
    CHECK(res.value == Catch::Approx(gram.weight_c * slice.area()).epsilon(1e-4));
    ++done;
  }
}

TEST_CASE("zero-dimensional slices sum the two weighted points") {
  // Two circles in the plane intersect in two points; the integral reduces
  // to a weighted two-point sum.
  std::vector<Vec> centers{v2(0.0, 0.0), v2(1.0, 0.0)};
  std::vector<double> t{1.0, 1.0};
  SphereVariety variety{centers, t};

  const double y = 0.5 * std::sqrt(3.0);
  auto g = [](const Vec& x) { return 1.0 + x[1]; };
  double expected = 0.0;
  for (double s : {1.0, -1.0}) {
    Vec p = v2(0.5, s * y);
    expected += gram_weight(p, centers).weight_c * g(p);
  }
  ChartQuadratureResult res = chart_integrate(variety, g);
  CHECK(res.value == Catch::Approx(expected).epsilon(1e-10));
  CHECK(res.n_nodes == 2);
}

TEST_CASE("tangent systems integrate to zero and bad charts are rejected") {
  SphereVariety kiss{{v2(0.0, 0.0), v2(2.0, 0.0)}, {1.0, 1.0}};
  CHECK(chart_integrate(kiss, one).value == 0.0);

  SphereVariety circle{{v3(0, 0, 0), v3(1, 0, 0)}, {1.0, 1.0}};
  ChartOptions bad;
  bad.chart = {0, 7};
  CHECK_THROWS_AS(chart_integrate(circle, one, bad), ConfigError);
  bad.chart = {1, 1};
  CHECK_THROWS_AS(chart_integrate(circle, one, bad), ConfigError);
  bad.chart = {0};
  CHECK_THROWS_AS(chart_integrate(circle, one, bad), ConfigError);
}
