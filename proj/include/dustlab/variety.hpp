#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/geometry.hpp"
#include "dustlab/numerics.hpp"
#include "dustlab/sphere.hpp"

namespace dustlab {

// The zero set of F_i(x) = |x - c_i|^2 - t_i, i = 1..m, in R^d.
struct SphereVariety {
  std::vector<Vec> centers;
  std::vector<double> t;

  int ambient_dim() const {
    return centers.empty() ? 0 : static_cast<int>(centers.front().size());
  }
  int constraint_count() const { return static_cast<int>(centers.size()); }

  Vec residual(const Vec& x) const {
    Vec r(constraint_count());
    for (int i = 0; i < constraint_count(); ++i)
      r[i] = (x - centers[static_cast<std::size_t>(i)]).squaredNorm() -
             t[static_cast<std::size_t>(i)];
    return r;
  }

  // Gradient rows 2(x - c_i).
  Mat gradient(const Vec& x) const {
    Mat g(constraint_count(), ambient_dim());
    for (int i = 0; i < constraint_count(); ++i)
      g.row(i) = 2.0 * (x - centers[static_cast<std::size_t>(i)]).transpose();
    return g;
  }

  // det of the gradient columns J (the chart Jacobian j_F,J).
  double chart_jacobian(const Vec& x, const std::vector<int>& chart) const {
    const int m = constraint_count();
    Mat sub(m, m);
    for (int j = 0; j < m; ++j)
      sub.col(j) = gradient_column(x, chart[static_cast<std::size_t>(j)]);
    return sub.determinant();
  }

  Vec gradient_column(const Vec& x, int col) const {
    Vec g(constraint_count());
    for (int i = 0; i < constraint_count(); ++i)
      g[i] = 2.0 * (x[col] - centers[static_cast<std::size_t>(i)][col]);
    return g;
  }

  SphereSlice slice() const { return intersect_spheres(centers, t); }
};

// Product quadrature on the unit sphere S^{q-1} in R^q.  Nodes and weights
// are deterministic; weights integrate the surface measure (total = area).
struct SphereNodes {
  std::vector<Vec> nodes;
  std::vector<double> weights;
};

inline SphereNodes sphere_quadrature(int q, int level) {
  SphereNodes out;
  if (q < 1) throw ConfigError("sphere_quadrature: q must be >= 1");
  if (q == 1) {
    out.nodes = {Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
    out.weights = {1.0, 1.0};
    return out;
  }
  if (q == 2) {
    int n = std::max(4, level);
    out.nodes.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double a = kTwoPi * (i + 0.5) / n;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.nodes.push_back(v);
      out.weights.push_back(kTwoPi / n);
    }
    return out;
  }
  // Recursive product: omega = (cos b, sin b * omega_sub), with the polar
  // weight sin^{q-2} b integrated by Gauss-Legendre in b.
  SphereNodes sub = sphere_quadrature(q - 1, level);
  const QuadratureRule& rule = gauss_legendre(std::max(8, level));
  for (std::size_t ib = 0; ib < rule.nodes.size(); ++ib) {
    double beta = 0.5 * kPi * (rule.nodes[ib] + 1.0);
    double wb = 0.5 * kPi * rule.weights[ib] *
                std::pow(std::sin(beta), q - 2);
    for (std::size_t is = 0; is < sub.nodes.size(); ++is) {
      Vec v(q);
      v[0] = std::cos(beta);
      v.tail(q - 1) = std::sin(beta) * sub.nodes[is];
      out.nodes.push_back(v);
      out.weights.push_back(wb * sub.weights[is]);
    }
  }
  return out;
}

struct ChartOptions {
  std::vector<int> chart;   // empty = auto-select
  int radial_nodes = 48;
  int angular_nodes = 48;
  double jacobian_floor = 1e-10;
  bool with_error_estimate = true;
};

struct ChartQuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t n_nodes = 0;
  std::vector<int> chart;
};

// Greedy chart selection: grow J one coordinate at a time, each time keeping
// the column whose addition maximizes the smallest singular value of the
// gradient submatrix at the seed point.
inline std::vector<int> auto_chart(const SphereVariety& variety,
                                   const Vec& seed) {
  const int d = variety.ambient_dim();
  const int m = variety.constraint_count();
  Mat grad = variety.gradient(seed);
  std::vector<int> chart;
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  for (int step = 0; step < m; ++step) {
    int best = -1;
    double best_sv = -1.0;
    for (int c = 0; c < d; ++c) {
      if (used[static_cast<std::size_t>(c)]) continue;
      Mat sub(m, step + 1);
      for (int j = 0; j < step; ++j)
        sub.col(j) = grad.col(chart[static_cast<std::size_t>(j)]);
      sub.col(step) = grad.col(c);
      Eigen::JacobiSVD<Mat> svd(sub);
      double sv = svd.singularValues().tail(1)[0];
      if (sv > best_sv) {
        best_sv = sv;
        best = c;
      }
    }
    chart.push_back(best);
    used[static_cast<std::size_t>(best)] = true;
  }
  std::sort(chart.begin(), chart.end());
  return chart;
}

namespace detail {

struct ChartGeometry {
  std::vector<int> chart;     // J, size m
  std::vector<int> free_set;  // I, size q = d - m
  Mat w_free;                 // rows I of the tangent frame, q x (q+1)
  Mat d_sqrt;                 // sqrt(rho^2 W_I W_I^T), q x q
  double d_det = 0.0;
  Vec kernel;                 // unit kernel of W_I, in R^{q+1}
};

inline ChartGeometry chart_geometry(const SphereVariety& variety,
                                    const SphereSlice& slice,
                                    const std::vector<int>& chart) {
  const int d = variety.ambient_dim();
  const int m = variety.constraint_count();
  const int q = d - m;
  ChartGeometry geo;
  geo.chart = chart;
  std::vector<bool> in_chart(static_cast<std::size_t>(d), false);
  for (int c : chart) {
    if (c < 0 || c >= d)
      throw ConfigError("chart_integrate: chart index out of range");
    if (in_chart[static_cast<std::size_t>(c)])
      throw ConfigError("chart_integrate: repeated chart index");
    in_chart[static_cast<std::size_t>(c)] = true;
  }
  if (static_cast<int>(chart.size()) != m)
    throw ConfigError("chart_integrate: chart size must equal constraint count");
  for (int c = 0; c < d; ++c)
    if (!in_chart[static_cast<std::size_t>(c)]) geo.free_set.push_back(c);

  if (q == 0) return geo;
  geo.w_free.resize(q, q + 1);
  for (int i = 0; i < q; ++i)
    geo.w_free.row(i) = slice.tangent_frame.row(geo.free_set[static_cast<std::size_t>(i)]);
  Mat gram = slice.radius * slice.radius * geo.w_free * geo.w_free.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0) ||
      es.eigenvalues().minCoeff() < 1e-20 * top)
    throw ChartBoundaryError(
        "chart_integrate: slice projects degenerately onto the free "
        "coordinates; chart is inadmissible");
  Vec sq = es.eigenvalues().cwiseSqrt();
  geo.d_sqrt = es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().transpose();
  geo.d_det = sq.prod();
  // Unit kernel of W_I via the full QR of its transpose.
  Mat ker = orthonormal_complement(geo.w_free.transpose());
  geo.kernel = ker.col(0);
  if (geo.kernel[0] < 0.0) geo.kernel = -geo.kernel;
  return geo;
}

}  // namespace detail

// Integral over the variety, in chart J, of g against the chart weight
// |j_F,J|^{-1}:  sum over sheets of  int g(x(x_I)) / |j_F,J| dx_I.
// This equals the delta-measure pairing int g c_T dsigma and is therefore
// chart-independent; for a test function g == 1 it is c_T * area since T is
// constant on a sphere slice.
//
// The projected domain is the filled ellipsoid x_I = z_I + D z, |z| <= 1,
// with D = sqrt(rho^2 W_I W_I^T).  Writing z = sin(phi) w for w in S^{q-1}
// kills the fold singularity: |j| vanishes like cos(phi) at the ellipsoid
// boundary and the polar volume element contributes the matching cos(phi),
// so each sheet's integrand extends smoothly to phi = pi/2 and plain
// Gauss-Legendre in phi converges spectrally.
inline ChartQuadratureResult chart_integrate(
    const SphereVariety& variety, const std::function<double(const Vec&)>& g,
    const ChartOptions& opt = {}) {
  const int d = variety.ambient_dim();
  const int m = variety.constraint_count();
  if (m < 1 || m > d) throw ConfigError("chart_integrate: need 1 <= m <= d");
  const int q = d - m;
  SphereSlice slice = variety.slice();

  double t_scale = 0.0;
  for (double ti : variety.t) t_scale = std::max(t_scale, ti);
  // Jacobian scale: det of an m x m matrix with rows of length ~ 2 sqrt(t).
  double j_scale = std::pow(2.0 * std::sqrt(t_scale), m);

  ChartQuadratureResult res;
  if (slice.tangency) {
    res.chart = opt.chart;
    return res;  // zero-measure slice
  }

  std::vector<int> chart = opt.chart;
  if (chart.empty()) {
    Vec seed = slice.center +
               slice.radius * slice.tangent_frame.col(slice.sphere_dim);
    chart = auto_chart(variety, seed);
  }
  detail::ChartGeometry geo = detail::chart_geometry(variety, slice, chart);
  res.chart = chart;

  auto solve_on_sheet = [&](const Vec& theta) -> double {
    // Seed on the slice, then Newton-polish x_J so the residual is pinned at
    // zero with x_I held exact.
    Vec x = slice.center + slice.radius * (slice.tangent_frame * theta);
    for (int iter = 0; iter < 12; ++iter) {
      Vec f = variety.residual(x);
      if (f.lpNorm<Eigen::Infinity>() <= 1e-13 * std::max(1.0, t_scale)) break;
      Mat jac(m, m);
      for (int j = 0; j < m; ++j)
        jac.col(j) = variety.gradient_column(x, chart[static_cast<std::size_t>(j)]);
      Eigen::PartialPivLU<Mat> lu(jac);
      Vec step = lu.solve(f);
      if (!step.allFinite())
        throw NewtonDivergenceError("chart_integrate: Newton step blew up");
      for (int j = 0; j < m; ++j)
        x[chart[static_cast<std::size_t>(j)]] -= step[j];
      if (iter == 11 &&
          variety.residual(x).lpNorm<Eigen::Infinity>() >
              1e-10 * std::max(1.0, t_scale))
        throw NewtonDivergenceError(
            "chart_integrate: Newton failed to converge on the sheet");
    }
    double jac_det = variety.chart_jacobian(x, chart);
    if (std::abs(jac_det) < opt.jacobian_floor * j_scale)
      throw ChartBoundaryError(
          "chart_integrate: chart Jacobian below floor; node too close to "
          "the fold");
    return g(x) / std::abs(jac_det);
  };

  if (q == 0) {
    // 0-sphere: two points, no quadrature.
    double acc = 0.0;
    for (double sign : {1.0, -1.0}) {
      Vec theta = Vec::Constant(1, sign);
      acc += solve_on_sheet(theta);
    }
    res.value = acc;
    res.n_nodes = 2;
    return res;
  }

  SphereNodes angular = sphere_quadrature(q, opt.angular_nodes);
  Eigen::LLT<Mat> d_llt(geo.d_sqrt);

  auto run_pass = [&](int n_radial) -> std::pair<double, std::size_t> {
    const QuadratureRule& rule = gauss_legendre(n_radial);
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t ir = 0; ir < rule.nodes.size(); ++ir) {
      double phi = 0.25 * kPi * (rule.nodes[ir] + 1.0);
      double wphi = 0.25 * kPi * rule.weights[ir];
      double sn = std::sin(phi), cs = std::cos(phi);
      double polar = wphi * cs * (q == 1 ? 1.0 : std::pow(sn, q - 1));
      for (std::size_t ia = 0; ia < angular.nodes.size(); ++ia) {
        Vec z = sn * angular.nodes[ia];
        // theta_parallel = rho W_I^T D^{-1} z; its norm equals |z| = sin(phi)
        // because D^2 = rho^2 W_I W_I^T, so theta lands on the unit sphere.
        Vec theta_par =
            slice.radius * (geo.w_free.transpose() * d_llt.solve(z));
        for (double sheet : {1.0, -1.0}) {
          Vec theta = theta_par + sheet * cs * geo.kernel;
          double v = solve_on_sheet(theta);
          acc += polar * angular.weights[ia] * geo.d_det * v;
          ++used;
        }
      }
    }
    return {acc, used};
  };

  auto [value, used] = run_pass(opt.radial_nodes);
  res.value = value;
  res.n_nodes = used;
  if (opt.with_error_estimate) {
    int reduced = std::max(8, (2 * opt.radial_nodes) / 3);
    auto [value2, used2] = run_pass(reduced);
    res.error_estimate = std::abs(value - value2);
    res.n_nodes += used2;
  }
  return res;
}

}  // namespace dustlab
