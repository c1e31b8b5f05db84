#pragma once

// Monte Carlo estimators for the configuration-counting functionals:
// simplex and graph counts against a mollified measure, paired
// telescoping differences on common random numbers, decay regressions,
// superlevel sets, and scale scans over the similarity parameter.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/graph.hpp"
#include "dustlab/grid.hpp"
#include "dustlab/measure.hpp"
#include "dustlab/mollifier.hpp"
#include "dustlab/numerics.hpp"
#include "dustlab/parallel.hpp"
#include "dustlab/rng.hpp"
#include "dustlab/sampler.hpp"
#include "dustlab/simplex.hpp"

namespace dustlab {

struct CountEstimate {
  double value = 0.0;      // >= 0: mean integrand times box volume
  double std_error = 0.0;  // sample standard deviation / sqrt(n)
  long n_samples = 0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Product integrand mu(x) * prod_j mu(x - lambda x_j), multilinear
// interpolation, zero outside the grid box.
inline double chain_integrand(const GridFunction& grid, const Vec& x,
                              const std::vector<Vec>& chain, double lambda) {
  double value = grid.interpolate(x);
  if (value <= 0.0) return 0.0;
  for (const Vec& p : chain) {
    value *= grid.interpolate(x - lambda * p);
    if (value <= 0.0) return 0.0;
  }
  return value;
}

inline void check_box_coverage(const GridFunction& grid, double lambda, double chain_radius) {
  const double supp = grid.support_radius(0.0);
  if (supp + lambda * chain_radius > grid.halfwidth() * (1.0 + 1e-12) + 1e-12)
    throw BoxCoverageError("grid box does not cover the support padded by the chain radius");
}

// Shared Monte Carlo core.  chain_fn(rng) must return a pair of the
// chain points and the scalar sampling weight (importance weight times
// any recorded normalization; 1 for simplex chains).  Streams are fixed
// 256-way chunked and independent of the thread count; the tags are
// shared across estimators so common seeds give common draws.
template <typename ChainFn>
CountEstimate estimate_T_core(const GridFunction& grid, double lambda, long n_samples,
                              std::uint64_t seed, int threads, ChainFn&& chain_fn) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  if (n_samples <= 0) throw ConfigError("sample count must be positive");

  const int dim = grid.dim();
  const double halfwidth = grid.halfwidth();
  const int n_chunks = sample_chunk_count(n_samples);
  std::vector<SumAccumulator> partial(static_cast<std::size_t>(n_chunks));

  parallel_chunks(n_chunks, resolve_threads(threads), [&](int c) {
    const auto [begin, end] = chunk_range(n_samples, n_chunks, c);
    RngStream rng_x = RngStream::substream(seed, "count-x", static_cast<std::uint64_t>(c));
    RngStream rng_chain = RngStream::substream(seed, "count-chain", static_cast<std::uint64_t>(c));
    SumAccumulator acc;
    Vec x(dim);
    for (std::size_t i = begin; i < end; ++i) {
      for (int a = 0; a < dim; ++a) x[a] = rng_x.uniform(-halfwidth, halfwidth);
      const auto [chain, weight] = chain_fn(rng_chain);
      acc.add(weight == 0.0 ? 0.0 : weight * chain_integrand(grid, x, chain, lambda));
    }
    partial[static_cast<std::size_t>(c)] = acc;
  });

  SumAccumulator total;
  for (const SumAccumulator& acc : partial) total.merge(acc);
  const double volume = std::pow(2.0 * halfwidth, dim);
  CountEstimate est;
  est.value = volume * total.mean();
  est.std_error = volume * total.std_error();
  est.n_samples = n_samples;
  est.lambda = lambda;
  return est;
}

// Upper bound on |x_j| over chain points: exact for simplex chains,
// conservative (total edge length) for graphs.
inline double chain_radius(const Simplex& simplex) {
  double r = 0.0;
  for (int j = 1; j < simplex.vertex_count(); ++j)
    r = std::max(r, (simplex.vertex(j) - simplex.vertex(0)).norm());
  return r;
}

inline double chain_radius(const DistanceGraph& g) {
  double r = 0.0;
  for (int e = 0; e < g.edge_count(); ++e) r += std::sqrt(g.squared_length(e));
  return r;
}

}  // namespace detail

// Bound on how far a chain extends from its anchor; pairs with
// auto_grid_spec when sizing boxes by hand.
inline double chain_reach(const Simplex& simplex) { return detail::chain_radius(simplex); }
inline double chain_reach(const DistanceGraph& g) { return detail::chain_radius(g); }

// Count estimate for a simplex: x uniform on the grid box (times its
// volume), chains from sample_simplex_chain, integrand
// mu_eps(x) * prod_j mu_eps(x - lambda x_j).
inline CountEstimate estimate_T_simplex(const GridFunction& mu_eps, const Simplex& simplex,
                                        double lambda, long n_samples, std::uint64_t seed,
                                        int threads = 1) {
  // Reject bad scales before blaming the box for them.
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  detail::check_box_coverage(mu_eps, lambda, detail::chain_radius(simplex));
  auto chain_fn = [&simplex](RngStream& rng) {
    ChainSample s = sample_simplex_chain(simplex, rng);
    return std::make_pair(std::move(s.points), 1.0);
  };
  return detail::estimate_T_core(mu_eps, lambda, n_samples, seed, threads, chain_fn);
}

// Count estimate for a distance graph: chains from sample_graph_config,
// weighted by the Gram-times-cutoff importance weight and the recorded
// uniform-sampling normalization (product of slice areas).
inline CountEstimate estimate_T_graph(const GridFunction& mu_eps, const DistanceGraph& g,
                                      double lambda, double eta, long n_samples,
                                      std::uint64_t seed, int threads = 1) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  detail::check_box_coverage(mu_eps, lambda, detail::chain_radius(g));
  const std::vector<int> order = elimination_order(g).order;
  auto chain_fn = [&g, &order, eta](RngStream& rng) {
    ChainSample s = sample_graph_config(g, order, eta, rng);
    return std::make_pair(std::move(s.points), s.weight * s.area_product);
  };
  return detail::estimate_T_core(mu_eps, lambda, n_samples, seed, threads, chain_fn);
}

struct TelescopeOptions {
  MollifierSpec spec;  // epsilon field ignored; scale pair comes from the call
  double eta = std::numeric_limits<double>::infinity();  // graph cutoff width
  int threads = 1;
  double tail_tol = 1e-9;
  double box_margin = 0.0;  // extra halfwidth beyond the automatic bound
};

struct TelescopeResult {
  CountEstimate coarse;         // T at 2 epsilon
  CountEstimate fine;           // T at epsilon
  double difference = 0.0;      // |T(2e) - T(e)|
  double difference_signed = 0.0;
  double std_error = 0.0;       // paired standard error of the difference
  double epsilon = 0.0;
};

// Smallest grid box that keeps the mollified measure and every shifted
// copy within reach strictly inside: atom extent, plus the shift reach,
// plus the kernel tail, plus two cells of slop, rounded up to whole cells.
inline GridSpec auto_grid_spec(const PointMassMeasure& mu, double reach, double h,
                               double cutoff_radius, double margin = 0.0) {
  double atom_extent = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a)
    for (int c = 0; c < mu.ambient_dim(); ++c)
      atom_extent = std::max(atom_extent, std::abs(mu.point_data(a)[c]));
  const double need = reach + cutoff_radius + margin + 2.0 * h;
  const int n_axis = static_cast<int>(std::ceil(2.0 * (atom_extent + need) / h));
  return GridSpec{0.5 * h * n_axis, n_axis};
}

namespace detail {

template <typename ChainFn>
TelescopeResult telescope_core(const PointMassMeasure& mu, double lambda, double epsilon,
                               long n_samples, std::uint64_t seed, const TelescopeOptions& opt,
                               double chain_r, ChainFn&& chain_fn) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  if (n_samples <= 0) throw ConfigError("sample count must be positive");
  const double gap = mu.min_gap();
  if (gap > 0.0 && epsilon < gap * (1.0 - 1e-9))
    throw ResolutionError("epsilon below the resolution floor (nearest-atom gap)");

  // One grid serves both scales: spacing from the finer scale, box from
  // the coarser kernel plus the chain excursion.
  MollifierSpec spec_fine = opt.spec;
  spec_fine.epsilon = epsilon;
  MollifierSpec spec_coarse = opt.spec;
  spec_coarse.epsilon = 2.0 * epsilon;
  const ScaledKernel kern_coarse(mu.ambient_dim(), spec_coarse);
  const double h = epsilon / 4.0;
  const GridSpec gspec = auto_grid_spec(mu, lambda * chain_r, h,
                                        kern_coarse.cutoff_radius(opt.tail_tol), opt.box_margin);

  MollifyOptions mopt;
  mopt.tail_tol = opt.tail_tol;
  mopt.threads = opt.threads;
  const GridFunction grid_fine = mollify(mu, spec_fine, gspec, mopt);
  const GridFunction grid_coarse = mollify(mu, spec_coarse, gspec, mopt);

  const int dim = grid_fine.dim();
  const double halfwidth = grid_fine.halfwidth();
  const int n_chunks = sample_chunk_count(n_samples);
  std::vector<SumAccumulator> part_fine(static_cast<std::size_t>(n_chunks));
  std::vector<SumAccumulator> part_coarse(static_cast<std::size_t>(n_chunks));
  std::vector<SumAccumulator> part_diff(static_cast<std::size_t>(n_chunks));

  parallel_chunks(n_chunks, resolve_threads(opt.threads), [&](int c) {
    const auto [begin, end] = chunk_range(n_samples, n_chunks, c);
    RngStream rng_x = RngStream::substream(seed, "count-x", static_cast<std::uint64_t>(c));
    RngStream rng_chain = RngStream::substream(seed, "count-chain", static_cast<std::uint64_t>(c));
    SumAccumulator acc_f, acc_c, acc_d;
    Vec x(dim);
    for (std::size_t i = begin; i < end; ++i) {
      for (int a = 0; a < dim; ++a) x[a] = rng_x.uniform(-halfwidth, halfwidth);
      const auto [chain, weight] = chain_fn(rng_chain);
      double vf = 0.0, vc = 0.0;
      if (weight != 0.0) {
        vf = weight * chain_integrand(grid_fine, x, chain, lambda);
        vc = weight * chain_integrand(grid_coarse, x, chain, lambda);
      }
      acc_f.add(vf);
      acc_c.add(vc);
      acc_d.add(vc - vf);
    }
    part_fine[static_cast<std::size_t>(c)] = acc_f;
    part_coarse[static_cast<std::size_t>(c)] = acc_c;
    part_diff[static_cast<std::size_t>(c)] = acc_d;
  });

  SumAccumulator fine, coarse, diff;
  for (int c = 0; c < n_chunks; ++c) {
    fine.merge(part_fine[static_cast<std::size_t>(c)]);
    coarse.merge(part_coarse[static_cast<std::size_t>(c)]);
    diff.merge(part_diff[static_cast<std::size_t>(c)]);
  }
  const double volume = std::pow(2.0 * halfwidth, dim);
  TelescopeResult out;
  out.fine = {volume * fine.mean(), volume * fine.std_error(), n_samples, lambda, epsilon};
  out.coarse = {volume * coarse.mean(), volume * coarse.std_error(), n_samples, lambda, 2.0 * epsilon};
  out.difference_signed = volume * diff.mean();
  out.difference = std::abs(out.difference_signed);
  out.std_error = volume * diff.std_error();
  out.epsilon = epsilon;
  return out;
}

}  // namespace detail

// Paired estimate of T at 2*epsilon and epsilon with common random
// numbers: identical x and chain streams feed both scales, so the
// difference carries the paired (much smaller) standard error.
inline TelescopeResult telescoping_difference(const PointMassMeasure& mu, const Simplex& simplex,
                                              double lambda, double epsilon, long n_samples,
                                              std::uint64_t seed, const TelescopeOptions& opt = {}) {
  auto chain_fn = [&simplex](RngStream& rng) {
    ChainSample s = sample_simplex_chain(simplex, rng);
    return std::make_pair(std::move(s.points), 1.0);
  };
  return detail::telescope_core(mu, lambda, epsilon, n_samples, seed, opt,
                                detail::chain_radius(simplex), chain_fn);
}

inline TelescopeResult telescoping_difference(const PointMassMeasure& mu, const DistanceGraph& g,
                                              double lambda, double epsilon, long n_samples,
                                              std::uint64_t seed, const TelescopeOptions& opt = {}) {
  const std::vector<int> order = elimination_order(g).order;
  auto chain_fn = [&g, &order, eta = opt.eta](RngStream& rng) {
    ChainSample s = sample_graph_config(g, order, eta, rng);
    return std::make_pair(std::move(s.points), s.weight * s.area_product);
  };
  return detail::telescope_core(mu, lambda, epsilon, n_samples, seed, opt,
                                detail::chain_radius(g), chain_fn);
}

// Predicted log-log slope of the telescoping difference for ambient
// dimension k and measure exponent s.
inline double predicted_difference_exponent(double k, double s) {
  return (k - 0.5) * (s - k) + 0.25;
}

struct DecayRegression {
  LineFit fit;  // slope of log|difference| against log epsilon
  double predicted = std::numeric_limits<double>::quiet_NaN();
};

// Least-squares decay rate of telescoping differences.  Requires at
// least four points spanning two octaves in epsilon.
inline DecayRegression decay_regression(const std::vector<std::pair<double, double>>& pairs,
                                        double predicted = std::numeric_limits<double>::quiet_NaN()) {
  if (pairs.size() < 4) throw InsufficientSpanError("decay regression needs at least 4 points");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& [eps, diff] : pairs) {
    if (!(eps > 0.0)) throw ConfigError("decay regression: epsilon must be positive");
    if (!(diff > 0.0)) throw ConfigError("decay regression: differences must be positive");
    lo = std::min(lo, eps);
    hi = std::max(hi, eps);
  }
  if (hi < 4.0 * lo * (1.0 - 1e-12))
    throw InsufficientSpanError("decay regression needs two octaves of epsilon span");
  std::vector<double> xs, ys;
  xs.reserve(pairs.size());
  ys.reserve(pairs.size());
  for (const auto& [eps, diff] : pairs) {
    xs.push_back(std::log(eps));
    ys.push_back(std::log(diff));
  }
  DecayRegression out;
  out.fit = fit_line(xs, ys);
  out.predicted = predicted;
  return out;
}

// Normalizing constant c for the density f_eps = c eps^{k-s} mu~_eps:
// the reciprocal of the largest scaled sup over the experiment schedule
// (the coarsest scale dominates in the regular case; taking the whole
// schedule keeps sup f_eps <= 1 across it).
inline double normalizing_constant(const std::vector<std::pair<double, const GridFunction*>>& levels,
                                   double s) {
  if (levels.empty()) throw ConfigError("normalizing constant needs at least one grid");
  double worst = 0.0;
  for (const auto& [eps, grid] : levels) {
    if (!(eps > 0.0) || grid == nullptr) throw ConfigError("normalizing constant: bad level");
    worst = std::max(worst, std::pow(eps, grid->dim() - s) * grid->max_value());
  }
  if (!(worst > 0.0)) throw NormalizationError("normalizing constant: all grids vanish");
  return 1.0 / worst;
}

struct SuperlevelResult {
  GridFunction indicator;
  double measure = 0.0;   // Lebesgue measure of the superlevel set
  double alpha = 0.0;     // integral of f_eps
  double sup_f = 0.0;
  double threshold = 0.0; // alpha / 2 in f units
};

// Superlevel set A = {f_eps >= alpha/2} of the normalized density.
// Fails loudly if the normalization lets f exceed 1, or if the measure
// lower bound |A| >= alpha/2 - tol is violated.
inline SuperlevelResult superlevel_set(const GridFunction& mu_tilde, double s, double epsilon,
                                       double c, double tol = 1e-3) {
  if (!(epsilon > 0.0) || !(c > 0.0)) throw ConfigError("superlevel set: bad scale or constant");
  const double scale = c * std::pow(epsilon, mu_tilde.dim() - s);
  SuperlevelResult out{GridFunction(mu_tilde.dim(), mu_tilde.halfwidth(), mu_tilde.points_per_axis()),
                       0.0, 0.0, 0.0, 0.0};
  out.sup_f = scale * mu_tilde.max_value();
  if (out.sup_f > 1.0 + 1e-9)
    throw NormalizationError("superlevel set: sup f exceeds 1 under the documented constant");
  out.alpha = scale * mu_tilde.quadrature_mass();
  out.threshold = 0.5 * out.alpha;
  long count = 0;
  const std::vector<double>& vals = mu_tilde.values();
  std::vector<double>& ind = out.indicator.values();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (scale * vals[i] >= out.threshold) {
      ind[i] = 1.0;
      ++count;
    }
  }
  out.measure = static_cast<double>(count) * mu_tilde.cell_volume();
  if (out.measure < 0.5 * out.alpha - tol)
    throw InvariantViolationError("superlevel set smaller than alpha/2 despite the mass identity");
  return out;
}

struct LambdaScan {
  std::vector<CountEstimate> estimates;
  double integral = 0.0;     // trapezoid of sqrt(lambda) T(lambda)
  double integral_se = 0.0;
  bool zero_width = false;   // single-point grid: no integral
};

struct LambdaScanOptions {
  double eta = std::numeric_limits<double>::infinity();
  int threads = 1;
  double epsilon_tag = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

template <typename EstimateFn>
LambdaScan lambda_scan_core(const std::vector<double>& lambda_grid, long n_samples,
                            const LambdaScanOptions& opt, EstimateFn&& estimate_fn) {
  if (lambda_grid.empty()) throw ConfigError("lambda scan needs a nonempty grid");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0 && lambda_grid[i] <= 1.0))
      throw ConfigError("lambda grid must lie in (0, 1]");
    if (i && lambda_grid[i] <= lambda_grid[i - 1])
      throw ConfigError("lambda grid must be strictly increasing");
  }
  LambdaScan scan;
  for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
    CountEstimate est = estimate_fn(lambda_grid[li], li);
    est.epsilon = opt.epsilon_tag;
    scan.estimates.push_back(est);
  }
  if (lambda_grid.size() < 2) {
    scan.zero_width = true;
    return scan;
  }
  double total = 0.0, var = 0.0;
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    const double left = i ? lambda_grid[i] - lambda_grid[i - 1] : 0.0;
    const double right = i + 1 < lambda_grid.size() ? lambda_grid[i + 1] - lambda_grid[i] : 0.0;
    const double coeff = 0.5 * (left + right) * std::sqrt(lambda_grid[i]);
    total += coeff * scan.estimates[i].value;
    var += coeff * coeff * scan.estimates[i].std_error * scan.estimates[i].std_error;
  }
  scan.integral = total;
  scan.integral_se = std::sqrt(var);
  return scan;
}

}  // namespace detail

// Scale scan: per-lambda count estimates on independent streams plus the
// sqrt(lambda)-weighted trapezoidal integral over the given grid.
inline LambdaScan lambda_scan(const GridFunction& mu_eps, const Simplex& simplex,
                              const std::vector<double>& lambda_grid, long n_samples,
                              std::uint64_t seed, const LambdaScanOptions& opt = {}) {
  return detail::lambda_scan_core(lambda_grid, n_samples, opt, [&](double lambda, std::size_t li) {
    return estimate_T_simplex(mu_eps, simplex, lambda, n_samples,
                              splitmix_fold(seed, static_cast<std::uint64_t>(li)), opt.threads);
  });
}

inline LambdaScan lambda_scan(const GridFunction& mu_eps, const DistanceGraph& g,
                              const std::vector<double>& lambda_grid, long n_samples,
                              std::uint64_t seed, const LambdaScanOptions& opt = {}) {
  return detail::lambda_scan_core(lambda_grid, n_samples, opt, [&](double lambda, std::size_t li) {
    return estimate_T_graph(mu_eps, g, lambda, opt.eta, n_samples,
                            splitmix_fold(seed, static_cast<std::uint64_t>(li)), opt.threads);
  });
}

}  // namespace dustlab
