// Acceptance gate: thirteen end-to-end checks, one printed line each,
// with every tolerance pinned in this file.  Exits nonzero if any line
// fails.  argv[1] must name the command line binary; the determinism
// check runs it at 1 and 8 workers and byte-compares the outputs.

#include <dustlab/dustlab.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace dustlab;

namespace {

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

struct Check {
  bool pass = false;
  std::string detail;
};

Vec v2(double x, double y) { return (Vec(2) << x, y).finished(); }

Vec v3(double x, double y, double z) { return (Vec(3) << x, y, z).finished(); }

// ---------------------------------------------------------------------------
// 1 & 2: chart quadrature against the closed-form weight x area, and
// agreement between two different coordinate charts.

struct SliceInstance {
  SphereVariety variety;
  Vec point;  // a point on the slice
};

SliceInstance random_instance(int d, int m, RngStream& rng) {
  for (;;) {
    std::vector<Vec> centers;
    for (int i = 0; i < m; ++i) {
      Vec c(d);
      for (int a = 0; a < d; ++a) c[a] = rng.uniform(-0.4, 0.4);
      centers.push_back(std::move(c));
    }
    const Vec x = random_unit_vector(d, rng) * rng.uniform(0.9, 1.4);
    std::vector<double> t;
    double t_max = 0.0;
    for (const Vec& c : centers) {
      t.push_back((x - c).squaredNorm());
      t_max = std::max(t_max, t.back());
    }
    SphereVariety variety{std::move(centers), std::move(t)};
    SphereSlice slice;
    try {
      slice = variety.slice();
    } catch (const Error&) {
      continue;
    }
    // keep transversal geometry: slice radius comparable to sphere radii
    if (slice.tangency || slice.radius * slice.radius < 0.25 * t_max) continue;
    return {std::move(variety), x};
  }
}

Check criterion_chart_weight() {
  RngStream rng(101);
  const int combos[9][2] = {{3, 1}, {3, 2}, {4, 1}, {4, 2}, {4, 3},
                            {5, 1}, {5, 2}, {5, 3}, {5, 4}};
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const SliceInstance inst = random_instance(combos[i % 9][0], combos[i % 9][1], rng);
    const GramData gram = gram_weight(inst.point, inst.variety.centers);
    const double expected = gram.weight_c * inst.variety.slice().area();
    ChartOptions opt;
    opt.radial_nodes = 24;
    opt.angular_nodes = 16;
    const ChartQuadratureResult res =
        chart_integrate(inst.variety, [](const Vec&) { return 1.0; }, opt);
    worst = std::max(worst, std::abs(res.value - expected) / expected);
  }
  return {worst <= 1e-4, strf("20 instances, max relative gap %.2e (tol 1e-4)", worst)};
}

std::vector<int> best_other_chart(const SphereVariety& variety, const Vec& x,
                                  std::vector<int> first, double* sigma_ratio) {
  const int d = variety.ambient_dim();
  const int m = variety.constraint_count();
  const Mat grad = variety.gradient(x);
  std::sort(first.begin(), first.end());
  auto sigma_min = [&](const std::vector<int>& cols) {
    Mat sub(m, m);
    for (int j = 0; j < m; ++j) sub.col(j) = grad.col(cols[static_cast<std::size_t>(j)]);
    return Eigen::JacobiSVD<Mat>(sub).singularValues().minCoeff();
  };
  const double sigma_first = sigma_min(first);
  std::vector<int> best;
  double best_sigma = -1.0;
  for (int mask = 0; mask < (1 << d); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != m) continue;
    std::vector<int> cols;
    for (int a = 0; a < d; ++a)
      if ((mask >> a) & 1) cols.push_back(a);
    if (cols == first) continue;
    const double sigma = sigma_min(cols);
    if (sigma > best_sigma) {
      best_sigma = sigma;
      best = cols;
    }
  }
  *sigma_ratio = sigma_first > 0.0 ? best_sigma / sigma_first : 0.0;
  return best;
}

Check criterion_chart_independence() {
  RngStream rng(202);
  const int combos[5][2] = {{3, 1}, {3, 2}, {4, 2}, {5, 1}, {5, 3}};
  double worst = 0.0;
  int done = 0;
  while (done < 10) {
    const SliceInstance inst = random_instance(combos[done % 5][0], combos[done % 5][1], rng);
    const std::vector<int> chart1 = auto_chart(inst.variety, inst.point);
    double ratio = 0.0;
    const std::vector<int> chart2 = best_other_chart(inst.variety, inst.point, chart1, &ratio);
    if (chart2.empty() || ratio < 0.15) continue;  // no healthy second chart here
    ChartOptions opt;
    opt.radial_nodes = 32;
    opt.angular_nodes = 24;
    opt.chart = chart1;
    const double a = chart_integrate(inst.variety, [](const Vec&) { return 1.0; }, opt).value;
    opt.chart = chart2;
    const double b = chart_integrate(inst.variety, [](const Vec&) { return 1.0; }, opt).value;
    worst = std::max(worst, std::abs(a - b) / std::abs(a));
    ++done;
  }
  return {worst <= 1e-6, strf("10 instances, max relative gap %.2e (tol 1e-6)", worst)};
}

// ---------------------------------------------------------------------------
// 3: nested (sample z, then y given z) versus joint sampling.

Check criterion_fubini() {
  const DistanceGraph path({v3(0, 0, 0), v3(1, 0, 0), v3(1, 1, 0)}, {{0, 1}, {1, 2}});
  FubiniOptions opt;
  opt.seed = 2101;
  const FubiniReport pr = fubini_check(
      path, {2}, [](const std::vector<Vec>& x) { return x[2].norm(); }, 1'000'000, opt);

  const DistanceGraph tri({v3(0, 0, 0), v3(1, 0, 0), v3(0.5, std::sqrt(3.0) / 2, 0)},
                          {{0, 1}, {0, 2}, {1, 2}});
  opt.seed = 2102;
  const FubiniReport tr = fubini_check(
      tri, {2},
      [](const std::vector<Vec>& x) { return std::abs(x[1][0]) + x[2][1] * x[2][1]; },
      1'000'000, opt);

  const double worst = std::max(std::abs(pr.z_score), std::abs(tr.z_score));
  return {worst <= 3.0,
          strf("path z = %.2f, triangle z = %.2f (limit 3)", pr.z_score, tr.z_score)};
}

// ---------------------------------------------------------------------------
// 4: chain-measure moments under random rotations.

Check criterion_rotation() {
  const std::vector<ConfigStatistic> stats = {
      [](const std::vector<Vec>& p) { return p[0][0]; },
      [](const std::vector<Vec>& p) { return p.back()[1]; },
      [](const std::vector<Vec>& p) { return p[0][0] * p[0][0]; },
      [](const std::vector<Vec>& p) { return p[0].dot(p.back()); }};

  const Simplex tri({v2(0, 0), v2(1, 0), v2(0.5, std::sqrt(3.0) / 2)});
  const Simplex tet({v3(0, 0, 0), v3(1, 0, 0), v3(0.5, std::sqrt(3.0) / 2, 0),
                     v3(0.5, std::sqrt(3.0) / 6, std::sqrt(2.0 / 3.0))});
  RngStream rot_rng(404);
  double worst = 0.0;
  for (int r = 0; r < 5; ++r) {
    const Mat q2 = random_rotation(2, rot_rng);
    const Mat q3 = random_rotation(3, rot_rng);
    worst = std::max(worst,
                     rotation_invariance_check(tri, q2, stats, 30000, 500 + r).max_z);
    worst = std::max(worst,
                     rotation_invariance_check(tet, q3, stats, 30000, 600 + r).max_z);
  }
  return {worst <= 3.0, strf("5 rotations x 4 moments x 2 patterns, max z = %.2f", worst)};
}

// ---------------------------------------------------------------------------
// 5: witness-ball renormalization lands under the constant-4 target.

Check criterion_renormalize() {
  double worst = 0.0;
  for (int which = 0; which < 2; ++which) {
    const PointMassMeasure mu =
        which == 0 ? build_cantor_dust(cantor_middle_thirds_ifs(), 7)
                   : build_cantor_dust(quadrant_dust_ifs(2, false), 6);
    const double s = mu.dimension_s();
    FrostmanOptions opt;
    opt.seed = 11;
    const FrostmanReport before = estimate_frostman_constant(mu, s, opt);
    FrostmanReport after;
    renormalize(mu, s, before, 0.1, opt, &after);  // throws if over 4.4
    worst = std::max(worst, after.constant);
  }
  return {worst <= 4.4, strf("rescanned constants <= %.3f (bound 4.4)", worst)};
}

// ---------------------------------------------------------------------------
// 6: sup-norm scaling exponent of the mollified density.

double sup_slope(const PointMassMeasure& mu, const std::vector<double>& eps_list) {
  std::vector<double> log_eps, log_sup;
  for (double eps : eps_list) {
    MollifierSpec spec;
    spec.epsilon = eps;
    const ScaledKernel kern(mu.ambient_dim(), spec);
    MollifyOptions mopt;
    const GridSpec gspec =
        auto_grid_spec(mu, 0.0, eps / 4.0, kern.cutoff_radius(mopt.tail_tol), 0.0);
    const GridFunction grid = mollify(mu, spec, gspec, mopt);
    log_eps.push_back(std::log(eps));
    log_sup.push_back(std::log(grid.max_value()));
  }
  return fit_line(log_eps, log_sup).slope;
}

Check criterion_sup_scaling() {
  const std::vector<double> eps_list = {0.125, 0.0625, 0.03125, 0.015625};
  const PointMassMeasure uniform = build_cantor_dust(quadrant_dust_ifs(2, true), 8);
  const PointMassMeasure corner = build_cantor_dust(quadrant_dust_ifs(2, false), 9);
  const double slope_u = sup_slope(uniform, eps_list);
  const double slope_c = sup_slope(corner, eps_list);
  const double target_c = corner.dimension_s() - 2.0;  // log2(3) - 2
  const bool ok = std::abs(slope_u) <= 0.15 && std::abs(slope_c - target_c) <= 0.15;
  return {ok, strf("uniform slope %.3f (target 0), corner slope %.3f (target %.3f), tol 0.15",
                   slope_u, slope_c, target_c)};
}

// ---------------------------------------------------------------------------
// 7: frequency-side and measure-side energy routes.

Check criterion_spectral_identity() {
  const PointMassMeasure pair(1, {0.0, 0.5}, {0.5, 0.5}, 1.0);
  const PointMassMeasure dust = build_cantor_dust(cantor_middle_thirds_ifs(), 5);
  const IdentityReport a = spectral_identity_check(pair, 0.25);
  const IdentityReport b = spectral_identity_check(dust, 0.25);
  const double worst = std::max(a.relative_gap, b.relative_gap);
  return {worst <= 0.01,
          strf("two-atom gap %.2e, dust gap %.2e (tol 1e-2)", a.relative_gap, b.relative_gap)};
}

// ---------------------------------------------------------------------------
// 8: decay of the rotation-averaged final-slice energy.

Check criterion_energy_decay() {
  const Simplex tri({v3(0, 0, 0), v3(1, 0, 0), v3(0.5, std::sqrt(3.0) / 2, 0)});
  std::vector<double> mags;
  for (int p = 0; p <= 6; ++p) mags.push_back(std::pow(2.0, p));
  const IlambdaCurve curve = i_lambda_curve(tri, 1.0, mags, 100000, 808);
  return {curve.fit.slope <= -0.8,
          strf("log-log slope %.3f over |xi| in [1,64] (limit -0.8)", curve.fit.slope)};
}

// ---------------------------------------------------------------------------
// 9: paired coarse/fine differences down the scale ladder.

Check criterion_difference_decay() {
  const PointMassMeasure mu = build_cantor_dust(quadrant_dust_ifs(2, false), 7);
  const Simplex segment({v2(0, 0), v2(1, 0)});
  const double lambda = 0.3;
  const std::vector<double> eps_list = {0.125, 0.0625, 0.03125};

  std::vector<TelescopeResult> rows;
  for (double eps : eps_list)
    rows.push_back(telescoping_difference(mu, segment, lambda, eps, 200000, 909));

  bool positive = true, ordered = true;
  for (const TelescopeResult& r : rows) positive = positive && r.difference > 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double slack = 3.0 * std::hypot(rows[i - 1].std_error, rows[i].std_error);
    ordered = ordered && rows[i].difference <= rows[i - 1].difference + slack;
  }

  std::vector<double> log_eps, log_diff;
  for (const TelescopeResult& r : rows) {
    log_eps.push_back(std::log(r.epsilon));
    log_diff.push_back(std::log(std::max(r.difference, 1e-300)));
  }
  const LineFit fit = fit_line(log_eps, log_diff);
  const double predicted = predicted_difference_exponent(2.0, mu.dimension_s());
  // the predicted exponent is an upper bound on the decay requirement, so
  // the one-sided check only demands no growth beyond noise
  const bool slope_ok = fit.slope >= -3.0 * fit.slope_std_error;

  return {positive && ordered && slope_ok,
          strf("D = {%.3g, %.3g, %.3g}, slope %.3f +- %.3f, bound exponent %.4f",
               rows[0].difference, rows[1].difference, rows[2].difference, fit.slope,
               fit.slope_std_error, predicted)};
}

// ---------------------------------------------------------------------------
// 10: the two estimator routes against each other and a dense oracle.

Check criterion_cross_validation() {
  const PointMassMeasure mu = build_cantor_dust(quadrant_dust_ifs(2, true), 5);

  // (a) full-pattern route vs edge-graph route on shared seeds.  With the
  // cutoff disabled the graph weight x slice-area product is a constant
  // gauge factor; one probe chain measures it.
  const std::vector<Vec> tri_verts = {v2(0, 0), v2(1, 0), v2(0, 1)};
  const Simplex tri(tri_verts);
  const DistanceGraph complete(tri_verts, {{0, 1}, {0, 2}, {1, 2}});
  const double lambda = 0.3;
  const double inf = std::numeric_limits<double>::infinity();

  MollifierSpec spec;
  spec.epsilon = 0.25;
  const ScaledKernel kern(2, spec);
  MollifyOptions mopt;
  const GridSpec gspec = auto_grid_spec(mu, lambda * chain_reach(complete), spec.epsilon / 4.0,
                                        kern.cutoff_radius(mopt.tail_tol), 0.0);
  const GridFunction grid = mollify(mu, spec, gspec, mopt);

  const CountEstimate est_s = estimate_T_simplex(grid, tri, lambda, 200000, 31);
  const CountEstimate est_g = estimate_T_graph(grid, complete, lambda, inf, 200000, 31);
  RngStream probe_rng(7);
  const std::vector<int> order = elimination_order(complete).order;
  const ChainSample probe = sample_graph_config(complete, order, inf, probe_rng);
  const double gauge = probe.weight * probe.area_product;
  const double gap_routes = std::abs(est_s.value - est_g.value / gauge);
  const double se_routes =
      std::hypot(est_s.std_error, est_g.std_error / gauge);
  const bool routes_ok = gap_routes <= 3.0 * se_routes;

  // (b) Monte Carlo vs dense midpoint x angle quadrature for a segment.
  const Simplex segment({v2(0, 0), v2(1, 0)});
  MollifierSpec spec_b;
  spec_b.epsilon = 0.5;
  const ScaledKernel kern_b(2, spec_b);
  const double lam_b = 0.8;
  const GridSpec gspec_b = auto_grid_spec(mu, lam_b, spec_b.epsilon / 4.0,
                                          kern_b.cutoff_radius(mopt.tail_tol), 0.0);
  const GridFunction grid_b = mollify(mu, spec_b, gspec_b, mopt);
  const CountEstimate est_b = estimate_T_simplex(grid_b, segment, lam_b, 150000, 41);

  const int n = grid_b.points_per_axis();
  const double h = grid_b.spacing();
  const int refine = 8, n_angles = 512;
  double oracle = 0.0;
  Vec x(2), y(2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (int ri = 0; ri < refine; ++ri)
        for (int rj = 0; rj < refine; ++rj) {
          x[0] = grid_b.coordinate(i) + (ri + 0.5) / refine * h - 0.5 * h;
          x[1] = grid_b.coordinate(j) + (rj + 0.5) / refine * h - 0.5 * h;
          const double fx = grid_b.interpolate(x);
          if (fx == 0.0) continue;
          double angle_sum = 0.0;
          for (int a = 0; a < n_angles; ++a) {
            const double th = kTwoPi * a / n_angles;
            y[0] = x[0] - lam_b * std::cos(th);
            y[1] = x[1] - lam_b * std::sin(th);
            angle_sum += grid_b.interpolate(y);
          }
          oracle += fx * angle_sum / n_angles;
        }
    }
  oracle *= h * h / (refine * refine);
  const double gap_oracle = std::abs(est_b.value - oracle);
  const bool oracle_ok = gap_oracle <= 3.0 * est_b.std_error;

  return {routes_ok && oracle_ok,
          strf("route gap %.2e (3se %.2e), oracle gap %.2e (3se %.2e)", gap_routes,
               3.0 * se_routes, gap_oracle, 3.0 * est_b.std_error)};
}

// ---------------------------------------------------------------------------
// 11: superlevel sets keep at least half the guaranteed mass.

Check criterion_superlevel() {
  const std::vector<double> eps_list = {0.25, 0.125};
  std::vector<PointMassMeasure> measures;
  measures.push_back(build_cantor_dust(cantor_middle_thirds_ifs(), 6));
  measures.push_back(build_cantor_dust(quadrant_dust_ifs(2, false), 5));
  measures.push_back(build_cantor_dust(quadrant_dust_ifs(2, true), 5));

  double worst_margin = 1e300;
  bool ok = true;
  for (const PointMassMeasure& mu : measures) {
    const double s = mu.dimension_s();
    std::vector<GridFunction> grids;
    std::vector<std::pair<double, const GridFunction*>> levels;
    for (double eps : eps_list) {
      MollifierSpec spec;
      spec.epsilon = eps;
      const ScaledKernel kern(mu.ambient_dim(), spec);
      MollifyOptions mopt;
      const GridSpec gspec =
          auto_grid_spec(mu, 0.0, eps / 4.0, kern.cutoff_radius(mopt.tail_tol), 0.0);
      grids.push_back(mollify(mu, spec, gspec, mopt));
    }
    for (std::size_t i = 0; i < eps_list.size(); ++i) levels.emplace_back(eps_list[i], &grids[i]);
    const double c = normalizing_constant(levels, s);
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
      const SuperlevelResult res = superlevel_set(grids[i], s, eps_list[i], c, 1e-3);
      const double margin = res.measure - 0.5 * res.alpha;
      worst_margin = std::min(worst_margin, margin);
      ok = ok && margin >= -1e-3;
    }
  }
  return {ok, strf("3 measures x 2 scales, worst measure - alpha/2 = %.4f (tol -1e-3)",
                   worst_margin)};
}

// ---------------------------------------------------------------------------
// 12: planted similar copies in large clouds.

Check criterion_search() {
  const Simplex tri({v2(0, 0), v2(0.27, 0), v2(0.06, 0.21)});
  const ScanPattern pat = make_scan_pattern(tri);
  RngStream rng(1212);
  int recovered = 0;
  long verified = 0;
  double worst_residual = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec> cloud;
    cloud.reserve(10003);
    for (int i = 0; i < 10000; ++i)
      cloud.push_back(v2(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)));
    const double lambda0 = rng.uniform(0.25, 0.4);
    const double theta = rng.uniform(0.0, kTwoPi);
    Mat rot(2, 2);
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    const Vec shift = v2(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8));
    std::vector<std::size_t> planted;
    for (int j = 0; j < 3; ++j) {
      planted.push_back(cloud.size());
      cloud.push_back(rot * (lambda0 * (tri.vertex(j) - tri.vertex(0))) + shift);
    }

    ScanOptions opt;
    opt.budget = 10;
    opt.max_seeds = 30'000'000;
    const ScanReport report =
        find_similar_copy(cloud, pat, 0.9 * lambda0, 1.1 * lambda0, 1e-9, opt);

    bool found = false;
    for (const MatchResult& m : report.matches) {
      // independent re-verification from the atom indices alone
      double num = 0.0, den = 0.0, residual = 0.0;
      const int nv = static_cast<int>(pat.vertices.size());
      for (int i = 0; i < nv; ++i)
        for (int j = i + 1; j < nv; ++j) {
          const double ref = (pat.vertices[static_cast<std::size_t>(i)] -
                              pat.vertices[static_cast<std::size_t>(j)]).norm();
          const double obs =
              (cloud[m.atoms[static_cast<std::size_t>(i)]] -
               cloud[m.atoms[static_cast<std::size_t>(j)]]).norm();
          num += obs * ref;
          den += ref * ref;
        }
      const double lam = num / den;
      for (int i = 0; i < nv; ++i)
        for (int j = i + 1; j < nv; ++j) {
          const double ref = (pat.vertices[static_cast<std::size_t>(i)] -
                              pat.vertices[static_cast<std::size_t>(j)]).norm();
          const double obs =
              (cloud[m.atoms[static_cast<std::size_t>(i)]] -
               cloud[m.atoms[static_cast<std::size_t>(j)]]).norm();
          residual = std::max(residual, std::abs(obs - lam * ref));
        }
      if (residual > m.tolerance) return {false, "a reported match failed re-verification"};
      ++verified;
      if (m.atoms == planted && m.residual <= 1e-9) {
        found = true;
        worst_residual = std::max(worst_residual, m.residual);
      }
    }
    recovered += found ? 1 : 0;
  }
  return {recovered == 10,
          strf("%d/10 planted copies found (worst residual %.1e), %ld matches re-verified",
               recovered, worst_residual, verified)};
}

// ---------------------------------------------------------------------------
// 13: worker count must not change any output byte.

int run_cli(const std::string& cli, const std::string& sub, const fs::path& config,
            const fs::path& out, int threads) {
  const std::string cmd = cli + " " + sub + " --config " + config.string() + " --out " +
                          out.string() + " --seed 7 --threads " + std::to_string(threads) +
                          " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

Check criterion_determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no command line binary given (argv[1])"};
  const fs::path root =
      fs::temp_directory_path() / ("dustlab_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  const std::vector<std::pair<std::string, std::string>> jobs = {
      {"gen-measure",
       "[measure]\nkind = corner\ndim = 2\ndepth = 5\n"},
      {"estimate",
       "[measure]\nkind = corner\ndim = 2\ndepth = 5\n[mollify]\nepsilon = 0.25\n"
       "[estimate]\nlambda = 0.5\nsamples = 200000\n"},
      {"telescope",
       "[measure]\nkind = corner\ndim = 2\ndepth = 5\n[simplex]\nvertices = 0 0; 1 0\n"
       "[telescope]\nlambda = 0.3\nsamples = 100000\nepsilon_hi = 0.125\nlevels = 2\n"},
      {"lambda-scan",
       "[measure]\nkind = corner\ndim = 2\ndepth = 5\n[mollify]\nepsilon = 0.25\n"
       "[scan]\nlambda_lo = 0.25\nlambda_hi = 0.75\npoints = 3\nsamples = 50000\n"},
      {"spectral",
       "[measure]\nkind = corner\ndim = 2\ndepth = 5\n"
       "[spectral]\nmax_freq = 4\nper_axis = 9\nidentity_epsilon = 0.5\n"}};

  for (const auto& [sub, cfg_text] : jobs) {
    const fs::path cfg = root / (sub + ".cfg");
    std::ofstream(cfg) << cfg_text;
    for (int threads : {1, 8}) {
      const fs::path out = root / ("t" + std::to_string(threads)) / sub;
      if (run_cli(cli, sub, cfg, out, threads) != 0) {
        fs::remove_all(root);
        return {false, strf("%s exited nonzero at %d workers", sub.c_str(), threads)};
      }
    }
  }

  auto read_all = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "t1")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "t1");
    const fs::path twin = root / "t8" / rel;
    if (rel.filename() == "run.json") continue;  // records the worker count
    if (!fs::exists(twin) || read_all(entry.path()) != read_all(twin)) {
      fs::remove_all(root);
      return {false, strf("output %s differs between 1 and 8 workers", rel.string().c_str())};
    }
    ++compared;
  }
  fs::remove_all(root);
  return {compared >= 6,
          strf("5 runs, %zu output files byte-identical at 1 and 8 workers", compared)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  struct Row {
    const char* name;
    std::function<Check()> fn;
    double budget_s;  // wall-clock limit; 0 = none pinned
  };
  const Row rows[] = {
      {"chart quadrature matches weight x slice area", criterion_chart_weight, 60.0},
      {"chart value independent of coordinate choice", criterion_chart_independence, 0.0},
      {"nested and joint sampling agree", criterion_fubini, 120.0},
      {"chain moments invariant under rotation", criterion_rotation, 0.0},
      {"renormalized scaling constant under 4.4", criterion_renormalize, 0.0},
      {"mollified sup-norm scales like eps^(s-k)", criterion_sup_scaling, 300.0},
      {"frequency and space energy routes agree", criterion_spectral_identity, 0.0},
      {"final-slice energy decays along frequency rays", criterion_energy_decay, 120.0},
      {"paired differences positive, decreasing, not growing", criterion_difference_decay, 0.0},
      {"estimator routes cross-validate", criterion_cross_validation, 0.0},
      {"superlevel sets keep half the pigeonhole mass", criterion_superlevel, 0.0},
      {"planted copies recovered and re-verified", criterion_search, 0.0},
      {"outputs bitwise identical across worker counts",
       [&cli] { return criterion_determinism(cli); }, 0.0},
  };

  int failures = 0;
  int idx = 0;
  for (const Row& row : rows) {
    ++idx;
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c = row.fn();
    } catch (const std::exception& e) {
      c = {false, strf("exception: %s", e.what())};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.pass && row.budget_s > 0.0 && elapsed >= row.budget_s) {
      c.pass = false;
      c.detail += strf(" [over the %.0f s budget]", row.budget_s);
    }
    std::printf("[%s] %2d  %-52s %s [%.1fs]\n", c.pass ? "PASS" : "FAIL", idx, row.name,
                c.detail.c_str(), elapsed);
    std::fflush(stdout);
    failures += c.pass ? 0 : 1;
  }
  if (failures > 0) std::printf("%d of 13 checks failed\n", failures);
  else std::printf("all 13 checks passed\n");
  return failures == 0 ? 0 : 1;
}
