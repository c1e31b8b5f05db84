#pragma once

// Fourier-side diagnostics: exact exponential-sum transforms of atomic
// measures, the frequency/space identity for the mollified mass, the
// Fourier transform of slice surface measures, and the rotation-averaged
// decay curve over chain prefixes.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/estimators.hpp"
#include "dustlab/geometry.hpp"
#include "dustlab/measure.hpp"
#include "dustlab/mollifier.hpp"
#include "dustlab/numerics.hpp"
#include "dustlab/parallel.hpp"
#include "dustlab/rng.hpp"
#include "dustlab/sampler.hpp"
#include "dustlab/simplex.hpp"
#include "dustlab/sphere.hpp"

namespace dustlab {

// Fourier convention: e^{-2 pi i x.xi}, so a probability measure has
// transform 1 at the origin and modulus <= 1 everywhere.
inline std::complex<double> measure_fourier(const PointMassMeasure& mu, const Vec& xi) {
  if (static_cast<int>(xi.size()) != mu.ambient_dim())
    throw ConfigError("frequency dimension mismatch");
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t a = 0; a < mu.size(); ++a) {
    const double* p = mu.point_data(a);
    double phase = 0.0;
    for (int c = 0; c < mu.ambient_dim(); ++c) phase += p[c] * xi[c];
    phase *= -kTwoPi;
    acc += mu.weight(a) * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return acc;
}

struct SpectrumPoint {
  Vec xi;
  std::complex<double> value;
};

// Centered lattice, symmetric about the origin on every axis.
inline std::vector<Vec> frequency_lattice(int dim, double max_freq, int per_axis) {
  if (dim < 1 || dim > 6) throw ConfigError("frequency lattice: dimension out of range");
  if (per_axis < 2 || !(max_freq > 0.0)) throw ConfigError("frequency lattice: bad shape");
  const double step = 2.0 * max_freq / (per_axis - 1);
  std::vector<Vec> out;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  const long total = static_cast<long>(std::pow(static_cast<double>(per_axis), dim));
  if (total > 20000000L) throw ConfigError("frequency lattice: too many points");
  for (long f = 0; f < total; ++f) {
    long rem = f;
    Vec xi(dim);
    for (int a = dim - 1; a >= 0; --a) {
      xi[a] = -max_freq + static_cast<double>(rem % per_axis) * step;
      rem /= per_axis;
    }
    out.push_back(std::move(xi));
  }
  return out;
}

// Exact atomic exponential sums at each requested frequency; no grids,
// no aliasing.  Parallel over frequency chunks, slot-ordered output.
inline std::vector<SpectrumPoint> measure_spectrum(const PointMassMeasure& mu,
                                                   const std::vector<Vec>& frequencies,
                                                   int threads = 1) {
  std::vector<SpectrumPoint> out(frequencies.size());
  const long n = static_cast<long>(frequencies.size());
  const int n_chunks = sample_chunk_count(n);
  parallel_chunks(n_chunks, resolve_threads(threads), [&](int c) {
    const auto [begin, end] = chunk_range(n, n_chunks, c);
    for (std::size_t i = begin; i < end; ++i) {
      out[static_cast<std::size_t>(i)].xi = frequencies[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)].value =
          measure_fourier(mu, frequencies[static_cast<std::size_t>(i)]);
    }
  });
  return out;
}

struct SpectralQuadOptions {
  double panel_width = 0.0;  // 0: automatic, 1/(4 * support diameter)
  int nodes_per_panel = 12;
  int threads = 1;
};

namespace detail {

struct AxisNode {
  double t = 0.0;
  double w = 0.0;
};

// Composite Gauss-Legendre panels over [lo, hi].
inline std::vector<AxisNode> panel_nodes(double lo, double hi, double panel_width, int per_panel) {
  const int n_panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / panel_width)));
  const QuadratureRule& rule = gauss_legendre(per_panel);
  std::vector<AxisNode> out;
  out.reserve(static_cast<std::size_t>(n_panels) * rule.nodes.size());
  for (int p = 0; p < n_panels; ++p) {
    const double a = lo + (hi - lo) * p / n_panels;
    const double b = lo + (hi - lo) * (p + 1) / n_panels;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
      out.push_back({mid + half * rule.nodes[q], half * rule.weights[q]});
  }
  return out;
}

// Tensor quadrature of |mu_hat(xi)|^2 * factor(|xi|) over the centered box
// of radius box_radius, folding the xi -> -xi symmetry into axis 0 and
// pruning subtrees outside the factor's support.  Per-axis atom phase
// tables keep the inner work to one complex multiply per atom per node.
inline double frequency_quadrature(const PointMassMeasure& mu, double box_radius,
                                   const std::function<double(double)>& factor,
                                   double factor_support_radius,
                                   const SpectralQuadOptions& opt) {
  const int dim = mu.ambient_dim();
  const std::size_t n_atoms = mu.size();
  const double diam = std::max(mu.diameter_bound(), 1e-9);
  const double auto_width = std::min(1.0 / (4.0 * diam), box_radius / 8.0);
  double width = opt.panel_width > 0.0 ? opt.panel_width : auto_width;
  if (width > 1.0 / (4.0 * diam) * (1.0 + 1e-12))
    throw UnderResolvedGridError("frequency panels wider than a quarter oscillation period");

  std::vector<std::vector<AxisNode>> nodes(static_cast<std::size_t>(dim));
  nodes[0] = panel_nodes(0.0, box_radius, width, opt.nodes_per_panel);
  for (int a = 1; a < dim; ++a)
    nodes[static_cast<std::size_t>(a)] = panel_nodes(-box_radius, box_radius, width, opt.nodes_per_panel);

  // phases[a][node * n_atoms + atom] = exp(-2 pi i coord_a(atom) * t_node)
  std::vector<std::vector<std::complex<double>>> phases(static_cast<std::size_t>(dim));
  for (int a = 0; a < dim; ++a) {
    const auto& axis = nodes[static_cast<std::size_t>(a)];
    auto& table = phases[static_cast<std::size_t>(a)];
    table.resize(axis.size() * n_atoms);
    for (std::size_t i = 0; i < axis.size(); ++i)
      for (std::size_t at = 0; at < n_atoms; ++at) {
        const double ph = -kTwoPi * mu.point_data(at)[a] * axis[i].t;
        table[i * n_atoms + at] = {std::cos(ph), std::sin(ph)};
      }
  }

  const double sup2 = factor_support_radius * factor_support_radius;
  const long n0 = static_cast<long>(nodes[0].size());
  std::vector<double> partial(static_cast<std::size_t>(n0), 0.0);

  parallel_chunks(static_cast<int>(std::min<long>(n0, 256)), resolve_threads(opt.threads), [&](int c) {
    const auto [begin, end] = chunk_range(n0, static_cast<int>(std::min<long>(n0, 256)), c);
    std::vector<std::vector<std::complex<double>>> work(static_cast<std::size_t>(dim));
    for (auto& w : work) w.resize(n_atoms);
    for (std::size_t i0 = begin; i0 < end; ++i0) {
      const AxisNode& nd0 = nodes[0][static_cast<std::size_t>(i0)];
      const double r2_0 = nd0.t * nd0.t;
      if (r2_0 > sup2) continue;
      auto& p0 = work[0];
      for (std::size_t at = 0; at < n_atoms; ++at)
        p0[at] = mu.weight(at) * phases[0][static_cast<std::size_t>(i0) * n_atoms + at];
      // Iterative descent over the remaining axes.
      double acc = 0.0;
      std::vector<long> idx(static_cast<std::size_t>(dim), 0);
      std::vector<double> r2(static_cast<std::size_t>(dim), r2_0);
      std::vector<double> wt(static_cast<std::size_t>(dim), 2.0 * nd0.w);
      int axis = 1;
      if (dim == 1) {
        const double f = factor(std::sqrt(r2_0));
        if (f != 0.0) {
          std::complex<double> s(0.0, 0.0);
          for (std::size_t at = 0; at < n_atoms; ++at) s += p0[at];
          acc += 2.0 * nd0.w * f * std::norm(s);
        }
      } else {
        while (axis >= 1) {
          auto& axis_nodes = nodes[static_cast<std::size_t>(axis)];
          long& i = idx[static_cast<std::size_t>(axis)];
          if (i >= static_cast<long>(axis_nodes.size())) {
            i = 0;
            --axis;
            if (axis >= 1) ++idx[static_cast<std::size_t>(axis)];
            continue;
          }
          const AxisNode& nd = axis_nodes[static_cast<std::size_t>(i)];
          const double r2_here = r2[static_cast<std::size_t>(axis - 1)] + nd.t * nd.t;
          if (r2_here > sup2) {
            ++i;
            continue;
          }
          const auto& prev = work[static_cast<std::size_t>(axis - 1)];
          auto& cur = work[static_cast<std::size_t>(axis)];
          const auto* row = &phases[static_cast<std::size_t>(axis)][static_cast<std::size_t>(i) * n_atoms];
          for (std::size_t at = 0; at < n_atoms; ++at) cur[at] = prev[at] * row[at];
          const double w_here = wt[static_cast<std::size_t>(axis - 1)] * nd.w;
          if (axis == dim - 1) {
            const double f = factor(std::sqrt(r2_here));
            if (f != 0.0) {
              std::complex<double> s(0.0, 0.0);
              for (std::size_t at = 0; at < n_atoms; ++at) s += cur[at];
              acc += w_here * f * std::norm(s);
            }
            ++i;
          } else {
            r2[static_cast<std::size_t>(axis)] = r2_here;
            wt[static_cast<std::size_t>(axis)] = w_here;
            ++axis;
          }
        }
      }
      partial[static_cast<std::size_t>(i0)] = acc;
    }
  });

  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

}  // namespace detail

struct IdentityReport {
  double lhs = 0.0;  // frequency side: integral of |mu_hat|^2 psi_hat(eps xi)
  double rhs = 0.0;  // atom side: sum_a w_a mu_eps(a)
  double relative_gap = 0.0;
};

// Checks the two independent routes to the mollified self-energy.  The
// frequency side uses the autocorrelation table of psi_hat; the atom side
// the space-side kernel table; the two tables are built by unrelated
// constructions, so agreement is a real consistency statement.
inline IdentityReport spectral_identity_check(const PointMassMeasure& mu, double epsilon,
                                              const MollifierSpec& base = {},
                                              const SpectralQuadOptions& opt = {}) {
  if (!(epsilon > 0.0)) throw ConfigError("identity check: epsilon must be positive");
  MollifierSpec spec = base;
  spec.epsilon = epsilon;
  const ScaledKernel kern(mu.ambient_dim(), spec);

  // psi_hat_eps vanishes for |xi| >= sigma / eps.
  const double band = 2.0 * spec.bump_support_radius / epsilon;
  IdentityReport rep;
  rep.lhs = detail::frequency_quadrature(
      mu, band, [&kern](double r) { return kern.hat(r); }, band, opt);

  double rhs = 0.0;
  const double cutoff = kern.cutoff_radius(1e-15);
  for (std::size_t a = 0; a < mu.size(); ++a) {
    double inner = 0.0;
    for (std::size_t b = 0; b < mu.size(); ++b) {
      double d2 = 0.0;
      for (int c = 0; c < mu.ambient_dim(); ++c) {
        const double diff = mu.point_data(a)[c] - mu.point_data(b)[c];
        d2 += diff * diff;
      }
      const double r = std::sqrt(d2);
      if (r <= cutoff) inner += mu.weight(b) * kern(r);
    }
    rhs += mu.weight(a) * inner;
  }
  rep.rhs = rhs;
  rep.relative_gap = std::abs(rep.lhs - rep.rhs) / std::max(std::abs(rep.rhs), 1e-300);
  return rep;
}

// Fourier transform of the normalized uniform surface measure on a sphere
// slice: translation phase times the real radial factor for the slice's
// sphere dimension, evaluated at 2 pi rho |projection of xi onto the
// slice's tangent space|.  Closed forms cover dimensions with elementary
// transforms; higher dimensions use adaptive quadrature at 1e-10.
inline std::complex<double> sphere_fourier(const SphereSlice& slice, const Vec& xi) {
  const double phase = -kTwoPi * slice.center.dot(xi);
  const std::complex<double> rotation(std::cos(phase), std::sin(phase));
  if (slice.radius <= 0.0) return rotation;  // tangency: point mass
  const Vec tangential = slice.tangent_frame.transpose() * xi;
  const double t = kTwoPi * slice.radius * tangential.norm();
  return rotation * radial_phase_avg(slice.sphere_dim + 1, t);
}

// Squared-modulus average of the final-slice transform over chain
// prefixes at a single frequency.
inline CountEstimate i_lambda_estimate(const Simplex& simplex, double lambda, const Vec& xi,
                                       long n_chains, std::uint64_t seed, int threads = 1) {
  if (!(lambda >= 0.0)) throw ConfigError("i_lambda: lambda must be nonnegative");
  const Vec scaled = lambda * xi;
  const int n_chunks = sample_chunk_count(n_chains);
  std::vector<SumAccumulator> partial(static_cast<std::size_t>(n_chunks));
  parallel_chunks(n_chunks, resolve_threads(threads), [&](int c) {
    const auto [begin, end] = chunk_range(n_chains, n_chunks, c);
    RngStream rng = RngStream::substream(seed, "ilambda-chain", static_cast<std::uint64_t>(c));
    SumAccumulator acc;
    for (std::size_t i = begin; i < end; ++i) {
      const ChainSample chain = sample_simplex_chain(simplex, rng);
      acc.add(std::norm(sphere_fourier(chain.steps.back().slice, scaled)));
    }
    partial[static_cast<std::size_t>(c)] = acc;
  });
  SumAccumulator total;
  for (const SumAccumulator& acc : partial) total.merge(acc);
  CountEstimate est;
  est.value = total.mean();
  est.std_error = total.std_error();
  est.n_samples = n_chains;
  est.lambda = lambda;
  return est;
}

struct IlambdaCurve {
  std::vector<double> xi_mags;
  std::vector<CountEstimate> estimates;
  LineFit fit;                      // log mean vs log |xi|
  double bound_exponent = -1.0;     // reference decay rate
};

// Decay curve along a fixed direction, all magnitudes sharing the same
// chain draws.  The chain measure is rotation invariant, so the curve is
// a function of |xi| alone up to Monte Carlo error.
inline IlambdaCurve i_lambda_curve(const Simplex& simplex, double lambda,
                                   const std::vector<double>& xi_mags, long n_chains,
                                   std::uint64_t seed, int threads = 1,
                                   Vec direction = Vec()) {
  if (xi_mags.empty()) throw ConfigError("i_lambda curve: empty magnitude grid");
  for (double m : xi_mags)
    if (!(m > 0.0)) throw ConfigError("i_lambda curve: magnitudes must be positive");
  const int d = simplex.ambient_dim();
  if (direction.size() == 0) {
    direction = Vec::Zero(d);
    direction[0] = 1.0;
  }
  if (static_cast<int>(direction.size()) != d) throw ConfigError("i_lambda curve: bad direction");
  direction.normalize();

  const std::size_t n_mags = xi_mags.size();
  const int n_chunks = sample_chunk_count(n_chains);
  std::vector<std::vector<SumAccumulator>> partial(static_cast<std::size_t>(n_chunks),
                                                   std::vector<SumAccumulator>(n_mags));
  parallel_chunks(n_chunks, resolve_threads(threads), [&](int c) {
    const auto [begin, end] = chunk_range(n_chains, n_chunks, c);
    RngStream rng = RngStream::substream(seed, "ilambda-chain", static_cast<std::uint64_t>(c));
    auto& acc = partial[static_cast<std::size_t>(c)];
    for (std::size_t i = begin; i < end; ++i) {
      const ChainSample chain = sample_simplex_chain(simplex, rng);
      const SphereSlice& slice = chain.steps.back().slice;
      for (std::size_t m = 0; m < n_mags; ++m)
        acc[m].add(std::norm(sphere_fourier(slice, (lambda * xi_mags[m]) * direction)));
    }
  });

  IlambdaCurve curve;
  curve.xi_mags = xi_mags;
  std::vector<double> xs, ys;
  for (std::size_t m = 0; m < n_mags; ++m) {
    SumAccumulator total;
    for (int c = 0; c < n_chunks; ++c) total.merge(partial[static_cast<std::size_t>(c)][m]);
    CountEstimate est;
    est.value = total.mean();
    est.std_error = total.std_error();
    est.n_samples = n_chains;
    est.lambda = lambda;
    curve.estimates.push_back(est);
    if (est.value > 0.0) {
      xs.push_back(std::log(xi_mags[m]));
      ys.push_back(std::log(est.value));
    }
  }
  if (xs.size() >= 2) curve.fit = fit_line(xs, ys);
  return curve;
}

struct JDiagnosticOptions {
  int radial_points = 48;      // resolution of the radial I_lambda table
  long chains = 20000;
  std::uint64_t seed = 1;
  SpectralQuadOptions quad;
};

// Optional diagnostic: the full frequency-side difference energy
// J = integral of |mu_hat|^2 (psi_hat(2 eps xi) - psi_hat(eps xi))^2
// I_lambda(xi) d xi, with I_lambda interpolated from a radial table.
inline double j_diagnostic(const PointMassMeasure& mu, const Simplex& simplex, double lambda,
                           double epsilon, const MollifierSpec& base = {},
                           const JDiagnosticOptions& opt = {}) {
  if (!(epsilon > 0.0)) throw ConfigError("j diagnostic: epsilon must be positive");
  MollifierSpec spec_f = base, spec_c = base;
  spec_f.epsilon = epsilon;
  spec_c.epsilon = 2.0 * epsilon;
  const ScaledKernel kern_f(mu.ambient_dim(), spec_f);
  const ScaledKernel kern_c(mu.ambient_dim(), spec_c);
  const double band = 2.0 * base.bump_support_radius / epsilon;

  // Radial table on a geometric grid (plus zero).
  std::vector<double> mags(static_cast<std::size_t>(opt.radial_points));
  const double lo = band * 1e-3;
  for (int i = 0; i < opt.radial_points; ++i)
    mags[static_cast<std::size_t>(i)] =
        lo * std::pow(band / lo, static_cast<double>(i) / (opt.radial_points - 1));
  const IlambdaCurve curve =
      i_lambda_curve(simplex, lambda, mags, opt.chains, opt.seed, opt.quad.threads);

  auto i_of = [&](double r) {
    if (r <= mags.front()) return curve.estimates.front().value;
    if (r >= mags.back()) return curve.estimates.back().value;
    auto it = std::lower_bound(mags.begin(), mags.end(), r);
    const std::size_t hi = static_cast<std::size_t>(it - mags.begin());
    const double t = (r - mags[hi - 1]) / (mags[hi] - mags[hi - 1]);
    return (1.0 - t) * curve.estimates[hi - 1].value + t * curve.estimates[hi].value;
  };
  auto factor = [&](double r) {
    const double diff = kern_c.hat(r) - kern_f.hat(r);
    return diff * diff * i_of(r);
  };
  return detail::frequency_quadrature(mu, band, factor, band, opt.quad);
}

}  // namespace dustlab
