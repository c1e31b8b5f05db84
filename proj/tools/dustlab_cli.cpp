// Command line front end. Every subcommand reads a key=value config,
// writes its tables into --out, and drops a run.json recording the
// version and settings. Exit codes: 0 ok, 2 rejected input, 3 a
// numerical invariant failed mid-run.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dustlab/dustlab.hpp"

namespace {

using namespace dustlab;

struct GlobalArgs {
  std::string config_path;
  std::string out = "out";
  std::uint64_t seed = 1;
  int threads = 0;  // 0: DUSTLAB_THREADS, then hardware
};

std::vector<double> parse_list(const std::string& text, char sep, const std::string& what) {
  std::vector<double> out;
  std::string cur;
  auto flush = [&] {
    if (cur.find_first_not_of(" \t") == std::string::npos) return;
    out.push_back(detail::parse_double(cur.substr(cur.find_first_not_of(" \t")), what));
  };
  for (char ch : text) {
    if (ch == sep) {
      flush();
      cur.clear();
    } else {
      cur += ch;
    }
  }
  flush();
  return out;
}

std::vector<Vec> parse_vertex_rows(const std::string& text) {
  std::vector<Vec> rows;
  std::string row;
  auto flush = [&] {
    std::vector<double> coords;
    std::string cur;
    for (char ch : row + " ") {
      if (ch == ' ' || ch == '\t') {
        if (!cur.empty()) coords.push_back(detail::parse_double(cur, "vertex list"));
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (coords.empty()) return;
    Vec v(static_cast<int>(coords.size()));
    for (std::size_t a = 0; a < coords.size(); ++a) v[static_cast<int>(a)] = coords[a];
    rows.push_back(std::move(v));
  };
  for (char ch : text) {
    if (ch == ';') {
      flush();
      row.clear();
    } else {
      row += ch;
    }
  }
  flush();
  return rows;
}

PointMassMeasure measure_from_config(const ExperimentConfig& cfg) {
  const std::string input = cfg.get("measure", "input", "");
  if (!input.empty()) {
    if (!cfg.has("measure", "s"))
      throw ConfigError("[measure] input requires an explicit s");
    return read_measure_csv(input, cfg.get_double("measure", "s", 0.0));
  }
  const std::string kind = cfg.get("measure", "kind", "corner");
  const int dim = static_cast<int>(cfg.get_long("measure", "dim", 2));
  const int depth = static_cast<int>(cfg.get_long("measure", "depth", 5));
  const std::size_t cap =
      static_cast<std::size_t>(cfg.get_long("measure", "atom_cap", 10'000'000));
  if (kind == "cantor") return build_cantor_dust(cantor_middle_thirds_ifs(), depth, cap);
  if (kind == "corner") return build_cantor_dust(quadrant_dust_ifs(dim, false), depth, cap);
  if (kind == "cube") return build_cantor_dust(quadrant_dust_ifs(dim, true), depth, cap);
  throw ConfigError("[measure] kind must be cantor, corner, or cube (or set input=)");
}

// Default pattern: half-unit corner simplex matching the measure dimension.
Simplex simplex_from_config(const ExperimentConfig& cfg, int dim) {
  std::vector<Vec> verts;
  if (cfg.has("simplex", "vertices")) {
    verts = parse_vertex_rows(cfg.get("simplex", "vertices", ""));
  } else {
    verts.push_back(Vec::Zero(dim));
    for (int a = 0; a < dim; ++a) verts.push_back(Vec::Unit(dim, a));
  }
  const double scale = cfg.get_double("simplex", "scale", cfg.has("simplex", "vertices") ? 1.0 : 0.5);
  for (Vec& v : verts) v *= scale;
  return Simplex(std::move(verts));
}

bool graph_requested(const ExperimentConfig& cfg) {
  return cfg.has("graph", "file") || cfg.has("graph", "vertices");
}

DistanceGraph graph_from_config(const ExperimentConfig& cfg) {
  if (cfg.has("graph", "file")) return read_graph_file(cfg.get("graph", "file", ""));
  std::vector<Vec> verts = parse_vertex_rows(cfg.get("graph", "vertices", ""));
  std::vector<std::pair<int, int>> edges;
  for (const Vec& row : parse_vertex_rows(cfg.get("graph", "edges", ""))) {
    if (row.size() != 2) throw ConfigError("[graph] edges must be 'i j' pairs");
    edges.emplace_back(static_cast<int>(row[0]), static_cast<int>(row[1]));
  }
  return DistanceGraph(std::move(verts), std::move(edges));
}

MollifierSpec spec_from_config(const ExperimentConfig& cfg, double epsilon) {
  MollifierSpec spec;
  spec.epsilon = epsilon;
  spec.bump_support_radius = cfg.get_double("mollify", "bump_radius", spec.bump_support_radius);
  spec.truncation_c = cfg.get_double("mollify", "truncation_c", spec.truncation_c);
  return spec;
}

const std::vector<std::string> kMeasureKeys = {"kind", "input", "s", "dim", "depth", "atom_cap"};
const std::vector<std::string> kMollifyKeys = {"epsilon", "bump_radius", "truncation_c",
                                               "tail_tol", "margin", "truncate", "csv"};
const std::vector<std::string> kSimplexKeys = {"vertices", "scale"};
const std::vector<std::string> kGraphKeys = {"file", "vertices", "edges"};

GridFunction mollified_for(const PointMassMeasure& mu, const MollifierSpec& spec, double reach,
                           const ExperimentConfig& cfg, int threads) {
  const ScaledKernel kern(mu.ambient_dim(), spec);
  MollifyOptions mopt;
  mopt.tail_tol = cfg.get_double("mollify", "tail_tol", mopt.tail_tol);
  mopt.threads = threads;
  const GridSpec gspec =
      auto_grid_spec(mu, reach, spec.epsilon / 4.0, kern.cutoff_radius(mopt.tail_tol),
                     cfg.get_double("mollify", "margin", 0.0));
  return mollify(mu, spec, gspec, mopt);
}

// ---------------------------------------------------------------------------

void run_gen_measure(const GlobalArgs& g, const ExperimentConfig& cfg) {
  cfg.require_known({{"measure", kMeasureKeys}});
  const PointMassMeasure mu = measure_from_config(cfg);
  write_measure_csv(g.out + "/measure.csv", mu);
  nlohmann::json extra;
  extra["atoms"] = mu.size();
  extra["s"] = mu.dimension_s();
  extra["min_gap"] = mu.min_gap();
  write_run_metadata(g.out, "gen-measure", cfg, g.seed, g.threads, extra);
  std::printf("wrote %zu atoms (s = %.6g, gap = %.6g) to %s/measure.csv\n", mu.size(),
              mu.dimension_s(), mu.min_gap(), g.out.c_str());
}

void run_frostman(const GlobalArgs& g, const ExperimentConfig& cfg) {
  cfg.require_known({{"measure", kMeasureKeys},
                     {"frostman", {"tau", "max_centers", "radius_factor"}}});
  const PointMassMeasure mu = measure_from_config(cfg);
  FrostmanOptions opt;
  opt.max_centers = static_cast<std::size_t>(cfg.get_long("frostman", "max_centers", 1024));
  opt.radius_factor = cfg.get_double("frostman", "radius_factor", opt.radius_factor);
  opt.seed = g.seed;
  const double tau = cfg.get_double("frostman", "tau", 0.1);
  const double s = mu.dimension_s();
  const FrostmanReport before = estimate_frostman_constant(mu, s, opt);
  FrostmanReport after;
  const PointMassMeasure nu = renormalize(mu, s, before, tau, opt, &after);
  write_measure_csv(g.out + "/renormalized.csv", nu);
  nlohmann::json extra;
  extra["constant_before"] = before.constant;
  extra["constant_after"] = after.constant;
  extra["bound"] = 4.0 * (1.0 + tau);
  extra["witness_radius"] = before.witness_radius;
  extra["witness_mass"] = before.witness_mass;
  write_run_metadata(g.out, "frostman", cfg, g.seed, g.threads, extra);
  std::printf("scaling constant %.6g -> %.6g (bound %.6g)\n", before.constant, after.constant,
              4.0 * (1.0 + tau));
}

void run_mollify(const GlobalArgs& g, const ExperimentConfig& cfg) {
  cfg.require_known({{"measure", kMeasureKeys}, {"mollify", kMollifyKeys}});
  const PointMassMeasure mu = measure_from_config(cfg);
  const double epsilon = cfg.get_double("mollify", "epsilon", 0.125);
  const MollifierSpec spec = spec_from_config(cfg, epsilon);
  const GridFunction grid = mollified_for(mu, spec, 0.0, cfg, g.threads);
  grid.save_binary(g.out + "/density.bin");
  nlohmann::json extra;
  extra["mass"] = grid.quadrature_mass();
  extra["sup"] = grid.max_value();
  extra["points_per_axis"] = grid.points_per_axis();
  extra["halfwidth"] = grid.halfwidth();
  if (cfg.get_bool("mollify", "truncate", false)) {
    MollifyOptions mopt;
    mopt.tail_tol = cfg.get_double("mollify", "tail_tol", mopt.tail_tol);
    mopt.threads = g.threads;
    const GridFunction trunc = truncate(grid, mu, spec, mopt);
    trunc.save_binary(g.out + "/truncated.bin");
    extra["truncated_mass"] = trunc.quadrature_mass();
  }
  if (cfg.get_bool("mollify", "csv", false)) write_grid_csv(g.out + "/density.csv", grid);
  write_run_metadata(g.out, "mollify", cfg, g.seed, g.threads, extra);
  std::printf("density on %d^%d grid: mass %.6g, sup %.6g\n", grid.points_per_axis(), grid.dim(),
              grid.quadrature_mass(), grid.max_value());
}

void run_estimate(const GlobalArgs& g, const ExperimentConfig& cfg) {
  cfg.require_known({{"measure", kMeasureKeys},
                     {"mollify", kMollifyKeys},
                     {"simplex", kSimplexKeys},
                     {"graph", kGraphKeys},
                     {"estimate", {"lambda", "samples", "eta"}}});
  const PointMassMeasure mu = measure_from_config(cfg);
  const double lambda = cfg.get_double("estimate", "lambda", 0.5);
  const long samples = cfg.get_long("estimate", "samples", 200000);
  const double epsilon = cfg.get_double("mollify", "epsilon", 0.125);
  const MollifierSpec spec = spec_from_config(cfg, epsilon);

  CountEstimate est;
  if (graph_requested(cfg)) {
    const DistanceGraph graph = graph_from_config(cfg);
    const double eta = cfg.get_double("estimate", "eta",
                                      std::numeric_limits<double>::infinity());
    const GridFunction grid =
        mollified_for(mu, spec, lambda * chain_reach(graph), cfg, g.threads);
    est = estimate_T_graph(grid, graph, lambda, eta, samples, g.seed, g.threads);
  } else {
    const Simplex simplex = simplex_from_config(cfg, mu.ambient_dim());
    const GridFunction grid =
        mollified_for(mu, spec, lambda * chain_reach(simplex), cfg, g.threads);
    est = estimate_T_simplex(grid, simplex, lambda, samples, g.seed, g.threads);
  }
  est.lambda = lambda;
  est.epsilon = epsilon;
  write_estimates_csv(g.out + "/estimates.csv", {est});
  write_run_metadata(g.out, "estimate", cfg, g.seed, g.threads);
  std::printf("T(lambda=%.6g, eps=%.6g) = %.8g +- %.3g  (n = %ld)\n", lambda, epsilon, est.value,
              est.std_error, est.n_samples);
}

void run_telescope(const GlobalArgs& g, const ExperimentConfig& cfg) {
  cfg.require_known({{"measure", kMeasureKeys},
                     {"mollify", kMollifyKeys},
                     {"simplex", kSimplexKeys},
                     {"graph", kGraphKeys},
                     {"telescope", {"lambda", "samples", "epsilon_hi", "levels", "eta", "margin"}}});
  const PointMassMeasure mu = measure_from_config(cfg);
  const double lambda = cfg.get_double("telescope", "lambda", 0.3);
  const long samples = cfg.get_long("telescope", "samples", 200000);
  const double eps_hi = cfg.get_double("telescope", "epsilon_hi", 0.125);
  const int levels = static_cast<int>(cfg.get_long("telescope", "levels", 3));
  if (levels < 1) throw ConfigError("[telescope] levels must be >= 1");

  TelescopeOptions topt;
  topt.spec = spec_from_config(cfg, eps_hi);
  topt.eta = cfg.get_double("telescope", "eta", topt.eta);
  topt.threads = g.threads;
  topt.tail_tol = cfg.get_double("mollify", "tail_tol", topt.tail_tol);
  topt.box_margin = cfg.get_double("telescope", "margin", 0.0);

  const bool use_graph = graph_requested(cfg);
  Simplex simplex = use_graph ? Simplex({Vec::Zero(1), Vec::Unit(1, 0)})
                              : simplex_from_config(cfg, mu.ambient_dim());
  std::vector<TelescopeResult> rows;
  if (use_graph) {
    const DistanceGraph graph = graph_from_config(cfg);
    for (int l = 0; l < levels; ++l)
      rows.push_back(telescoping_difference(mu, graph, lambda, eps_hi * std::pow(0.5, l),
                                            samples, g.seed, topt));
  } else {
    for (int l = 0; l < levels; ++l)
      rows.push_back(telescoping_difference(mu, simplex, lambda, eps_hi * std::pow(0.5, l),
                                            samples, g.seed, topt));
  }

  std::vector<CountEstimate> scale_rows;
  {
    auto out = detail::open_out(g.out + "/differences.csv");
    out << "epsilon,difference,std_error,n_samples\n";
    for (const auto& r : rows) {
      out << fmt17(r.epsilon) << "," << fmt17(r.difference_signed) << ","
          << fmt17(r.std_error) << "," << r.fine.n_samples << "\n";
      CountEstimate coarse = r.coarse, fine = r.fine;
      coarse.lambda = fine.lambda = lambda;
      coarse.epsilon = 2.0 * r.epsilon;
      fine.epsilon = r.epsilon;
      scale_rows.push_back(coarse);
      scale_rows.push_back(fine);
    }
  }
  write_estimates_csv(g.out + "/estimates.csv", scale_rows);

  nlohmann::json extra;
  const double predicted = predicted_difference_exponent(mu.ambient_dim(), mu.dimension_s());
  extra["predicted_exponent"] = predicted;
  std::vector<std::pair<double, double>> decay;
  for (const auto& r : rows)
    if (r.difference > 0.0) decay.emplace_back(r.epsilon, r.difference);
  if (decay.size() >= 4) {
    const DecayRegression reg = decay_regression(decay, predicted);
    extra["slope"] = reg.fit.slope;
    extra["slope_ci95"] = reg.fit.slope_ci95;
  }
  write_run_metadata(g.out, "telescope", cfg, g.seed, g.threads, extra);

  ChartSeries series{"difference", {}};
  for (const auto& r : rows) series.points.emplace_back(r.epsilon, std::max(r.difference, 0.0));
  write_svg_chart(g.out + "/decay.svg", "telescoping difference", "epsilon", "difference",
                  {series}, true, true);
  for (const auto& r : rows)
    std::printf("eps=%.6g  diff=%.8g +- %.3g\n", r.epsilon, r.difference_signed, r.std_error);
}

void run_lambda_scan(const GlobalArgs& g, const ExperimentConfig& cfg) {
  cfg.require_known({{"measure", kMeasureKeys},
                     {"mollify", kMollifyKeys},
                     {"simplex", kSimplexKeys},
                     {"graph", kGraphKeys},
                     {"scan", {"lambda_lo", "lambda_hi", "points", "samples", "eta"}}});
  const PointMassMeasure mu = measure_from_config(cfg);
  const double lo = cfg.get_double("scan", "lambda_lo", 0.1);
  const double hi = cfg.get_double("scan", "lambda_hi", 0.9);
  const int points = static_cast<int>(cfg.get_long("scan", "points", 9));
  const long samples = cfg.get_long("scan", "samples", 100000);
  if (points < 1) throw ConfigError("[scan] points must be >= 1");
  std::vector<double> grid_lambda;
  for (int i = 0; i < points; ++i)
    grid_lambda.push_back(points == 1 ? lo : lo + (hi - lo) * i / (points - 1));

  const double epsilon = cfg.get_double("mollify", "epsilon", 0.125);
  const MollifierSpec spec = spec_from_config(cfg, epsilon);
  LambdaScanOptions sopt;
  sopt.threads = g.threads;
  sopt.epsilon_tag = epsilon;
  sopt.eta = cfg.get_double("scan", "eta", sopt.eta);

  LambdaScan scan;
  if (graph_requested(cfg)) {
    const DistanceGraph graph = graph_from_config(cfg);
    const GridFunction grid =
        mollified_for(mu, spec, hi * chain_reach(graph), cfg, g.threads);
    scan = lambda_scan(grid, graph, grid_lambda, samples, g.seed, sopt);
  } else {
    const Simplex simplex = simplex_from_config(cfg, mu.ambient_dim());
    const GridFunction grid =
        mollified_for(mu, spec, hi * chain_reach(simplex), cfg, g.threads);
    scan = lambda_scan(grid, simplex, grid_lambda, samples, g.seed, sopt);
  }
  write_estimates_csv(g.out + "/estimates.csv", scan.estimates);
  nlohmann::json extra;
  extra["integral"] = scan.integral;
  extra["integral_se"] = scan.integral_se;
  extra["zero_width"] = scan.zero_width;
  write_run_metadata(g.out, "lambda-scan", cfg, g.seed, g.threads, extra);

  ChartSeries series{"T(lambda)", {}};
  for (const auto& e : scan.estimates) series.points.emplace_back(e.lambda, e.value);
  write_svg_chart(g.out + "/scan.svg", "count against scale", "lambda", "T", {series});
  std::printf("scanned %d scales: integral %.8g +- %.3g\n", points, scan.integral,
              scan.integral_se);
}

void run_spectral(const GlobalArgs& g, const ExperimentConfig& cfg) {
  cfg.require_known({{"measure", kMeasureKeys},
                     {"spectral",
                      {"max_freq", "per_axis", "identity_epsilon", "nodes_per_panel",
                       "panel_width"}}});
  const PointMassMeasure mu = measure_from_config(cfg);
  const double max_freq = cfg.get_double("spectral", "max_freq", 8.0);
  const int per_axis = static_cast<int>(cfg.get_long("spectral", "per_axis", 17));
  const std::vector<Vec> lattice = frequency_lattice(mu.ambient_dim(), max_freq, per_axis);
  const std::vector<SpectrumPoint> spectrum = measure_spectrum(mu, lattice, g.threads);
  write_spectrum_csv(g.out + "/spectrum.csv", spectrum);

  nlohmann::json extra;
  extra["points"] = spectrum.size();
  if (cfg.has("spectral", "identity_epsilon")) {
    SpectralQuadOptions qopt;
    qopt.threads = g.threads;
    qopt.nodes_per_panel =
        static_cast<int>(cfg.get_long("spectral", "nodes_per_panel", qopt.nodes_per_panel));
    qopt.panel_width = cfg.get_double("spectral", "panel_width", qopt.panel_width);
    const double eps = cfg.get_double("spectral", "identity_epsilon", 0.125);
    const IdentityReport rep = spectral_identity_check(mu, eps, MollifierSpec{}, qopt);
    extra["identity"] = {{"lhs", rep.lhs}, {"rhs", rep.rhs}, {"gap", rep.relative_gap}};
    std::printf("identity: lhs %.8g vs rhs %.8g (gap %.3g)\n", rep.lhs, rep.rhs,
                rep.relative_gap);
  }
  write_run_metadata(g.out, "spectral", cfg, g.seed, g.threads, extra);
  std::printf("wrote %zu spectrum points to %s/spectrum.csv\n", spectrum.size(), g.out.c_str());
}

void run_omega_verify(const GlobalArgs& g, const ExperimentConfig& cfg) {
  cfg.require_known({{"measure", kMeasureKeys},
                     {"mollify", kMollifyKeys},
                     {"verify", {"epsilons", "gap_tol", "superlevel_tol", "tau",
                                 "nodes_per_panel"}}});
  const PointMassMeasure raw = measure_from_config(cfg);
  const double tau = cfg.get_double("verify", "tau", 0.1);
  const double gap_tol = cfg.get_double("verify", "gap_tol", 0.01);
  const double sup_tol = cfg.get_double("verify", "superlevel_tol", 1e-3);
  std::vector<double> epsilons =
      parse_list(cfg.get("verify", "epsilons", "0.25,0.125"), ',', "[verify] epsilons");
  if (epsilons.empty()) throw ConfigError("[verify] epsilons must be nonempty");
  const double s = raw.dimension_s();

  bool ok = true;
  nlohmann::json checks = nlohmann::json::array();
  auto record = [&](const std::string& name, bool pass, const nlohmann::json& detail) {
    std::printf("[%s] %s\n", pass ? "OK" : "VIOLATION", name.c_str());
    ok = ok && pass;
    nlohmann::json e = detail;
    e["check"] = name;
    e["pass"] = pass;
    checks.push_back(std::move(e));
  };

  {
    // Two unit spheres in R^3 meeting in a circle: the chart integral of 1
    // must reproduce the closed-form weight times circumference.
    SphereVariety circle;
    Vec c(3);
    c << -0.5, 0.0, 0.0;
    circle.centers.push_back(c);
    c << 0.5, 0.0, 0.0;
    circle.centers.push_back(c);
    circle.t = {1.0, 1.0};
    Vec probe(3);
    probe << 0.0, std::sqrt(0.75), 0.0;
    const double expected = gram_weight(probe, circle.centers).weight_c * circle.slice().area();
    const double got = chart_integrate(circle, [](const Vec&) { return 1.0; }).value;
    const double gap = std::abs(got - expected) / expected;
    record("chart weight on the two-sphere circle", gap <= 1e-4,
           {{"value", got}, {"expected", expected}, {"gap", gap}});
  }

  FrostmanOptions fopt;
  fopt.seed = g.seed;
  const FrostmanReport before = estimate_frostman_constant(raw, s, fopt);
  FrostmanReport after;
  const PointMassMeasure mu = renormalize(raw, s, before, tau, fopt, &after);
  record("scaling constant within 4(1+tau)", after.constant <= 4.0 * (1.0 + tau) + 1e-12,
         {{"constant", after.constant}, {"bound", 4.0 * (1.0 + tau)}});

  std::vector<GridFunction> grids;
  std::vector<std::pair<double, const GridFunction*>> levels;
  for (double eps : epsilons) {
    const MollifierSpec spec = spec_from_config(cfg, eps);

    SpectralQuadOptions qopt;
    qopt.threads = g.threads;
    qopt.nodes_per_panel =
        static_cast<int>(cfg.get_long("verify", "nodes_per_panel", qopt.nodes_per_panel));
    const IdentityReport rep = spectral_identity_check(mu, eps, spec, qopt);
    record("spectral identity at eps " + fmt17(eps), rep.relative_gap <= gap_tol,
           {{"lhs", rep.lhs}, {"rhs", rep.rhs}, {"gap", rep.relative_gap}});

    MollifyOptions mopt;
    mopt.tail_tol = cfg.get_double("mollify", "tail_tol", mopt.tail_tol);
    mopt.threads = g.threads;
    const GridSpec gspec = auto_grid_spec(
        mu, 0.0, eps / 4.0, ScaledKernel(mu.ambient_dim(), spec).cutoff_radius(mopt.tail_tol),
        cfg.get_double("mollify", "margin", 0.0));
    GridFunction dens = mollify(mu, spec, gspec, mopt);
    GridFunction trunc = truncate(dens, mu, spec, mopt);
    double worst_excess = 0.0;
    for (std::size_t i = 0; i < trunc.size(); ++i)
      worst_excess = std::max(worst_excess, trunc.values()[i] - dens.values()[i]);
    const double mass = trunc.quadrature_mass();
    record("truncation bounds at eps " + fmt17(eps), worst_excess <= 0.0 && mass >= 0.5,
           {{"mass", mass}, {"worst_excess", worst_excess}});
    grids.push_back(std::move(trunc));
  }
  for (std::size_t i = 0; i < grids.size(); ++i) levels.emplace_back(epsilons[i], &grids[i]);
  const double c = normalizing_constant(levels, s);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    bool pass = true;
    nlohmann::json detail;
    try {
      const SuperlevelResult sup = superlevel_set(grids[i], s, epsilons[i], c, sup_tol);
      detail = {{"alpha", sup.alpha}, {"measure", sup.measure}};
    } catch (const DomainError& e) {
      pass = false;
      detail = {{"error", e.what()}};
    }
    record("superlevel mass at eps " + fmt17(epsilons[i]), pass, detail);
  }

  nlohmann::json extra;
  extra["checks"] = std::move(checks);
  extra["normalizing_constant"] = c;
  write_run_metadata(g.out, "omega-verify", cfg, g.seed, g.threads, extra);
  if (!ok) throw InvariantViolationError("verification found violations; see run.json");
}

void run_search(const GlobalArgs& g, const ExperimentConfig& cfg) {
  cfg.require_known({{"measure", kMeasureKeys},
                     {"simplex", kSimplexKeys},
                     {"graph", kGraphKeys},
                     {"search",
                      {"lambda_lo", "lambda_hi", "tolerance", "budget", "max_seeds",
                       "max_candidates"}}});
  const PointMassMeasure cloud = measure_from_config(cfg);
  const ScanPattern pattern = graph_requested(cfg)
                                  ? make_scan_pattern(graph_from_config(cfg))
                                  : make_scan_pattern(simplex_from_config(cfg, cloud.ambient_dim()));
  ScanOptions sopt;
  sopt.budget = cfg.get_long("search", "budget", sopt.budget);
  sopt.max_seeds = cfg.get_long("search", "max_seeds", sopt.max_seeds);
  sopt.max_candidates_per_step =
      cfg.get_long("search", "max_candidates", sopt.max_candidates_per_step);
  sopt.threads = g.threads;
  const double lo = cfg.get_double("search", "lambda_lo", 0.2);
  const double hi = cfg.get_double("search", "lambda_hi", 0.8);
  const double tol = cfg.get_double("search", "tolerance", 1e-6);

  const ScanReport report = find_similar_copy(cloud, pattern, lo, hi, tol, sopt);
  write_matches_csv(g.out + "/matches.csv", report.matches, cloud.ambient_dim(),
                    static_cast<int>(pattern.vertices.size()));
  nlohmann::json extra;
  extra["matches"] = report.matches.size();
  extra["seeds_tested"] = report.seeds_tested;
  extra["spacing_estimate"] = report.spacing_estimate;
  extra["tolerance_warning"] = report.tolerance_warning;
  write_run_metadata(g.out, "search", cfg, g.seed, g.threads, extra);
  if (report.tolerance_warning)
    std::printf("warning: tolerance %.3g is below twice the cloud spacing %.3g\n", tol,
                report.spacing_estimate);
  if (report.matches.empty()) {
    std::printf("no matches (%ld seeds tested)\n", report.seeds_tested);
  } else {
    std::printf("%zu matches; best residual %.3g at lambda %.6g (%ld seeds tested)\n",
                report.matches.size(), report.matches.front().residual,
                report.matches.front().lambda, report.seeds_tested);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"atomic-measure laboratory: dust generators, mollified densities, "
               "pattern-count estimators, and similarity search"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "key=value config file with [section] headers");
  app.add_option("--out", g.out, "output directory (default: out)");
  app.add_option("--seed", g.seed, "master random seed (default: 1)");
  app.add_option("--threads", g.threads,
                 "worker threads; 0 uses DUSTLAB_THREADS or the hardware count");

  struct Sub {
    const char* name;
    const char* blurb;
    void (*fn)(const GlobalArgs&, const ExperimentConfig&);
  };
  const Sub subs[] = {
      {"gen-measure", "build a self-similar dust and write its atom table", run_gen_measure},
      {"frostman", "measure the scaling constant and renormalize onto a witness ball",
       run_frostman},
      {"mollify", "rasterize the band-limited density (optionally truncated)", run_mollify},
      {"estimate", "Monte Carlo count estimate at one scale pair", run_estimate},
      {"telescope", "paired coarse/fine differences down a scale ladder", run_telescope},
      {"lambda-scan", "count estimates across a grid of pattern scales", run_lambda_scan},
      {"spectral", "exponential-sum spectrum and the two-route identity check", run_spectral},
      {"omega-verify", "check the chart-weight identity and every measure-side invariant",
       run_omega_verify},
      {"search", "find approximate scaled copies of a pattern in a cloud", run_search},
  };
  for (const Sub& s : subs) app.add_subcommand(s.name, s.blurb);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return dustlab::run_guarded([&] {
    ExperimentConfig cfg;
    if (!g.config_path.empty()) cfg = ExperimentConfig::parse_file(g.config_path);
    for (const Sub& s : subs)
      if (app.got_subcommand(s.name)) {
        s.fn(g, cfg);
        return;
      }
  });
}
