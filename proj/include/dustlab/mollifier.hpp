#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/grid.hpp"
#include "dustlab/measure.hpp"
#include "dustlab/numerics.hpp"
#include "dustlab/parallel.hpp"

namespace dustlab {

struct MollifierSpec {
  double epsilon = 0.25;
  // Support radius of the frequency-side bump; psi_hat is then supported in
  // the ball of twice this radius.  1/2 keeps supp psi_hat inside B(0,1).
  double bump_support_radius = 0.5;
  // Truncation sharpness c in phi(c * eps^-1/2 * x).
  double truncation_c = 0.25;
};

// Frequency-side bump: exp(-1/(1-(2 rho)^2)) for |rho| < 1/2, else 0.
inline double freq_bump(double rho) {
  double t = 2.0 * rho;
  double q = 1.0 - t * t;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

// Radial cutoff profile: 1 on [0, 1/2], 0 on [2, inf), smooth monotone
// in between.
inline double cutoff_profile(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 2.0) return 0.0;
  auto h = [](double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; };
  double u = (2.0 - t) / 1.5;
  double a = h(u), b = h(1.0 - u);
  return a / (a + b);
}

// Canonical mollifier tables for one ambient dimension, built once and
// cached.  Two independent routes are tabulated on purpose:
//   amp:      P(r), the radial inverse transform of the bump, so that
//             psi = P^2 / ||bump||_2^2 is nonnegative by construction and
//             has unit mass by Plancherel;
//   psi_hat:  the bump autocorrelation (cylindrical-coordinate quadrature),
//             normalized to 1 at the origin.
// Space-side and frequency-side evaluations therefore never share data, and
// the spectral identity check exercises their consistency end to end.
class MollifierKernel {
 public:
  static const MollifierKernel& get(int dim) {
    static std::map<int, std::unique_ptr<MollifierKernel>> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(dim);
    if (it == cache.end())
      it = cache.emplace(dim, std::unique_ptr<MollifierKernel>(
                                  new MollifierKernel(dim)))
               .first;
    return *it->second;
  }

  int dim() const { return k_; }
  double r_max() const { return r_max_; }

  // Radial amplitude P(r); psi(r) = P(r)^2 / ||chi||^2 up to the final mass
  // normalization.  Exposed for cross-checks.
  double amplitude(double r) const { return r >= r_max_ ? 0.0 : amp_(r); }

  double psi(double r) const {
    if (r >= r_max_) return 0.0;
    double p = amp_(r);
    return p * p * psi_scale_;
  }

  double psi_hat(double u) const {
    u = std::abs(u);
    if (u >= 1.0) return 0.0;
    double v = hat_(u);
    return v > 0.0 ? v : 0.0;
  }

  // Smallest radius containing all but tail_tol of the unit mass.
  double effective_radius(double tail_tol) const {
    double target = 1.0 - tail_tol;
    auto it = std::lower_bound(cum_mass_.begin(), cum_mass_.end(), target);
    if (it == cum_mass_.end()) return r_max_;
    return dr_ * static_cast<double>(it - cum_mass_.begin());
  }

  double chi_sq_integral() const { return chi_sq_; }

 private:
  explicit MollifierKernel(int k) : k_(k) {
    if (k < 1 || k > 6) throw ConfigError("mollifier: dimension out of range");
    const double area = unit_sphere_area(k - 1);

    // || chi ||_2^2 over R^k, radial.
    chi_sq_ = area * gauss_legendre_integrate(
                         [k](double rho) {
                           double c = freq_bump(rho);
                           return c * c * std::pow(rho, k - 1);
                         },
                         0.0, 0.5, 96);

    // Amplitude table.  P is band-limited to |xi| <= 1/2, so wavelength >= 2
    // and dr = 1/32 leaves cubic interpolation error ~1e-8 of the peak.
    // The table is extended in blocks until the kernel tail is negligible.
    dr_ = 1.0 / 32.0;
    std::vector<double> amp;
    amp.reserve(4096);
    const int block = 512;
    const double peak = radial_amp(0.0);
    double block_max = peak;
    while (true) {
      std::size_t start = amp.size();
      for (int i = 0; i < block; ++i)
        amp.push_back(radial_amp(dr_ * static_cast<double>(start + i)));
      block_max = 0.0;
      for (std::size_t i = amp.size() - block; i < amp.size(); ++i)
        block_max = std::max(block_max, std::abs(amp[i]));
      if (block_max < 1e-11 * peak || amp.size() >= 16384) break;
    }
    r_max_ = dr_ * static_cast<double>(amp.size() - 1);

    // Unit mass: Plancherel makes the raw integral 1 up to quadrature error;
    // the residual is folded into psi_scale_ so downstream mass checks can
    // pin 1 exactly.
    psi_scale_ = 1.0 / chi_sq_;
    double mass = 0.0;
    cum_mass_.resize(amp.size());
    for (std::size_t i = 0; i < amp.size(); ++i) {
      double r = dr_ * static_cast<double>(i);
      double f = amp[i] * amp[i] * psi_scale_ * area * std::pow(r, k - 1);
      // composite trapezoid; dr is fine enough that this is ~1e-10 accurate
      mass += (i == 0 || i + 1 == amp.size()) ? 0.5 * f * dr_ : f * dr_;
      cum_mass_[i] = mass;
    }
    if (std::abs(mass - 1.0) > 1e-3)
      throw Error("mollifier: internal mass normalization failed");
    psi_scale_ /= mass;
    for (double& c : cum_mass_) c /= mass;
    amp_ = CubicTable(0.0, dr_, std::move(amp));

    // Autocorrelation table for psi_hat on [0, 1].
    const int nu = 2048;
    std::vector<double> hat(nu + 1);
    for (int i = 0; i <= nu; ++i)
      hat[i] = autocorrelation(static_cast<double>(i) / nu);
    double a0 = hat[0];
    if (!(a0 > 0.0)) throw Error("mollifier: autocorrelation vanished");
    for (double& v : hat) v /= a0;
    hat_ = CubicTable(0.0, 1.0 / nu, std::move(hat));
  }

  // P(r): inverse transform of the frequency bump at radius r.
  double radial_amp(double r) const {
    const double area = unit_sphere_area(k_ - 1);
    int panels = std::max(8, static_cast<int>(std::ceil(0.5 * r)));
    double acc = 0.0;
    double h = 0.5 / panels;
    for (int p = 0; p < panels; ++p)
      acc += gauss_legendre_integrate(
          [this, r](double rho) {
            return freq_bump(rho) * std::pow(rho, k_ - 1) *
                   radial_phase_avg_bessel(k_, kTwoPi * rho * r);
          },
          p * h, (p + 1) * h, 16);
    return area * acc;
  }

  // (chi * chi)(u e_1) by cylindrical coordinates: the overlap of two balls
  // of radius 1/2 at distance u, integrated with the transverse sphere area
  // folded in.
  double autocorrelation(double u) const {
    if (u >= 1.0) return 0.0;
    if (k_ == 1) {
      return gauss_legendre_integrate(
          [u](double a) { return freq_bump(std::abs(a)) * freq_bump(std::abs(a - u)); },
          u - 0.5, 0.5, 128);
    }
    const double tarea = unit_sphere_area(k_ - 2);
    return tarea * gauss_legendre_integrate(
                       [this, u](double a) {
                         return gauss_legendre_integrate(
                             [this, u, a](double b) {
                               double r1 = std::sqrt(a * a + b * b);
                               double r2 = std::sqrt((a - u) * (a - u) + b * b);
                               double base =
                                   k_ == 2 ? 1.0 : std::pow(b, k_ - 2);
                               return freq_bump(r1) * freq_bump(r2) * base;
                             },
                             0.0, 0.5, 64);
                       },
                       u - 0.5, 0.5, 64);
  }

  int k_;
  CubicTable amp_;
  CubicTable hat_;
  double chi_sq_ = 0.0;
  double psi_scale_ = 0.0;
  std::vector<double> cum_mass_;
  double dr_ = 0.0;
  double r_max_ = 0.0;
};

// psi_eps for one MollifierSpec: psi_eps(x) = (sigma/eps)^k psi_1(sigma|x|/eps)
// where sigma = 2 * bump_support_radius rescales the canonical tables.
class ScaledKernel {
 public:
  ScaledKernel(int dim, const MollifierSpec& spec)
      : tab_(&MollifierKernel::get(dim)),
        eps_(spec.epsilon),
        sigma_(2.0 * spec.bump_support_radius) {
    if (!(eps_ > 0.0)) throw ConfigError("mollifier: epsilon must be positive");
    if (!(sigma_ > 0.0))
      throw ConfigError("mollifier: bump support radius must be positive");
    scale_ = std::pow(sigma_ / eps_, dim);
  }

  double operator()(double r) const {
    return scale_ * tab_->psi(sigma_ * r / eps_);
  }
  // psi_hat_eps(xi) = psi_hat_1(eps |xi| / sigma); support |xi| <= sigma/eps.
  double hat(double xi_norm) const {
    return tab_->psi_hat(eps_ * xi_norm / sigma_);
  }
  double cutoff_radius(double tail_tol) const {
    return tab_->effective_radius(tail_tol) * eps_ / sigma_;
  }
  double epsilon() const { return eps_; }

 private:
  const MollifierKernel* tab_;
  double eps_, sigma_, scale_;
};

// Evaluate psi_eps at a point (radial profile against |x|).
inline double kernel_profile(int dim, const MollifierSpec& spec, double r) {
  return ScaledKernel(dim, spec)(r);
}

struct MollifyOptions {
  double tail_tol = 1e-9;
  int threads = 1;
  bool enforce_resolution = true;  // require h <= eps/4
};

namespace detail {

// Shared accumulation loop for mollify and truncate.  Bands over axis-0 rows
// are the parallel unit; the band count and the in-band atom order (sorted by
// axis-0 coordinate) are fixed, so cell sums are independent of the thread
// count.  Kernel must map squared distance to a value.
template <class Kernel>
void accumulate_kernel_sums(const PointMassMeasure& mu, GridFunction& grid,
                            double cutoff, int threads, const Kernel& kern) {
  const int k = mu.ambient_dim();
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  const double L = grid.halfwidth();

  std::vector<std::size_t> order(mu.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double xa = mu.point_data(a)[0], xb = mu.point_data(b)[0];
    return xa != xb ? xa < xb : a < b;
  });
  std::vector<double> sorted_x0(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    sorted_x0[i] = mu.point_data(order[i])[0];

  const int n_bands = std::min(n, 256);
  const double cutoff2 = cutoff * cutoff;
  double* values = grid.values().data();

  parallel_chunks(n_bands, threads, [&](int band) {
    int row_lo = n * band / n_bands;
    int row_hi = n * (band + 1) / n_bands;
    double x_lo = -L + (row_lo + 0.5) * h - cutoff;
    double x_hi = -L + (row_hi - 0.5) * h + cutoff;
    auto a_lo = std::lower_bound(sorted_x0.begin(), sorted_x0.end(), x_lo);
    auto a_hi = std::upper_bound(sorted_x0.begin(), sorted_x0.end(), x_hi);

    int idx[6];
    int box_lo[6], box_hi[6];
    for (auto it = a_lo; it != a_hi; ++it) {
      std::size_t atom = order[static_cast<std::size_t>(it - sorted_x0.begin())];
      const double* p = mu.point_data(atom);
      double w = mu.weight(atom);
      if (w == 0.0) continue;
      bool empty = false;
      for (int a = 0; a < k; ++a) {
        double lo = (p[a] - cutoff + L) / h - 0.5;
        double hi = (p[a] + cutoff + L) / h - 0.5;
        box_lo[a] = std::max(0, static_cast<int>(std::ceil(lo)));
        box_hi[a] = std::min(n - 1, static_cast<int>(std::floor(hi)));
        if (a == 0) {
          box_lo[0] = std::max(box_lo[0], row_lo);
          box_hi[0] = std::min(box_hi[0], row_hi - 1);
        }
        if (box_lo[a] > box_hi[a]) {
          empty = true;
          break;
        }
      }
      if (empty) continue;
      // Iterate the index sub-box with partial squared distances; the last
      // axis runs as a tight inner loop.
      double part[7];
      part[0] = 0.0;
      idx[0] = box_lo[0];
      int axis = 0;
      while (axis >= 0) {
        if (axis == k - 1) {
          double d_rest = part[axis];
          std::size_t base = 0;
          for (int a = 0; a < axis; ++a)
            base = base * n + static_cast<std::size_t>(idx[a]);
          base *= static_cast<std::size_t>(n);
          for (int i = box_lo[axis]; i <= box_hi[axis]; ++i) {
            double u = -L + (i + 0.5) * h - p[axis];
            double d2 = d_rest + u * u;
            if (d2 <= cutoff2)
              values[base + static_cast<std::size_t>(i)] += w * kern(d2);
          }
          --axis;
          if (axis >= 0) ++idx[axis];
          continue;
        }
        if (idx[axis] > box_hi[axis]) {
          --axis;
          if (axis >= 0) ++idx[axis];
          continue;
        }
        double t = -L + (idx[axis] + 0.5) * h - p[axis];
        part[axis + 1] = part[axis] + t * t;
        ++axis;
        if (axis < k - 1) idx[axis] = box_lo[axis];
      }
    }
  });
}

}  // namespace detail

// mu * psi_eps sampled on the grid.  The grid box must contain the support
// of mu padded by the effective kernel radius, and the grid must resolve the
// kernel (h <= eps/4), otherwise band-limited mass conservation is lost.
inline GridFunction mollify(const PointMassMeasure& mu,
                            const MollifierSpec& spec, const GridSpec& gspec,
                            const MollifyOptions& opt = {}) {
  const int k = mu.ambient_dim();
  ScaledKernel kern(k, spec);
  const double cutoff = kern.cutoff_radius(opt.tail_tol);
  GridFunction grid(k, gspec.halfwidth, gspec.points_per_axis);
  if (opt.enforce_resolution && grid.spacing() > spec.epsilon / 4.0 * (1.0 + 1e-12))
    throw UnderResolvedGridError(
        "mollify: grid spacing exceeds eps/4; kernel mass is not preserved");
  Vec lo, hi;
  mu.bounding_box(lo, hi);
  for (int a = 0; a < k; ++a)
    if (lo[a] - cutoff < -gspec.halfwidth || hi[a] + cutoff > gspec.halfwidth)
      throw BoxTooSmallError(
          "mollify: support plus kernel radius exceeds the grid box");
  detail::accumulate_kernel_sums(mu, grid, cutoff, opt.threads,
                                 [&](double d2) { return kern(std::sqrt(d2)); });
  return grid;
}

// Truncated mollification mu * (psi_eps . phi_eps) on the same grid geometry
// as mu_eps.  Every term is the mollify term scaled by phi in [0,1], with the
// identical summation order, so 0 <= result <= mu_eps holds cell by cell.
inline GridFunction truncate(const GridFunction& mu_eps,
                             const PointMassMeasure& mu,
                             const MollifierSpec& spec,
                             const MollifyOptions& opt = {}) {
  const int k = mu.ambient_dim();
  if (mu_eps.dim() != k) throw ConfigError("truncate: dimension mismatch");
  ScaledKernel kern(k, spec);
  if (!(spec.truncation_c > 0.0))
    throw ConfigError("truncate: truncation constant must be positive");
  const double phi_radius =
      2.0 * std::sqrt(spec.epsilon) / spec.truncation_c;
  const double cutoff = std::min(kern.cutoff_radius(opt.tail_tol), phi_radius);
  const double inv_scale = spec.truncation_c / std::sqrt(spec.epsilon);
  GridFunction out(k, mu_eps.halfwidth(), mu_eps.points_per_axis());
  detail::accumulate_kernel_sums(
      mu, out, cutoff, opt.threads, [&](double d2) {
        double r = std::sqrt(d2);
        return kern(r) * cutoff_profile(inv_scale * r);
      });
  double mass = out.quadrature_mass();
  if (mass < 0.5 * mu.total_mass())
    throw MassCollapseError(
        "truncate: truncated mass " + std::to_string(mass) +
        " fell below half the total; epsilon too coarse for this support");
  return out;
}

struct SupNormScan {
  std::vector<double> epsilons;
  std::vector<double> sup_values;
  LineFit fit;             // log sup against log eps
  double predicted_slope;  // s - k
};

struct SupNormOptions {
  double tail_tol = 1e-7;
  int threads = 1;
  double box_margin = 0.0;
};

// sup-norm growth scan: mollify at each epsilon on a grid with h = eps/4 and
// record the maximum value.  The epsilon floor is 4x the atom gap; below it
// the sup is dominated by single-atom spikes w * eps^-k that say nothing
// about the measure's dimension.
inline SupNormScan sup_norm_scaling(const PointMassMeasure& mu, double s,
                                    const std::vector<double>& epsilons,
                                    const MollifierSpec& base_spec = {},
                                    const SupNormOptions& opt = {}) {
  if (epsilons.size() < 2)
    throw InsufficientSpanError("sup_norm_scaling: need at least 2 epsilons");
  double gap = mu.min_gap();
  SupNormScan scan;
  scan.predicted_slope = s - mu.ambient_dim();
  std::vector<double> log_eps, log_sup;
  for (double eps : epsilons) {
    if (eps < 4.0 * gap * (1.0 - 1e-12))
      throw ResolutionError(
          "sup_norm_scaling: eps " + std::to_string(eps) +
          " below 4x atom gap " + std::to_string(gap));
    MollifierSpec spec = base_spec;
    spec.epsilon = eps;
    ScaledKernel kern(mu.ambient_dim(), spec);
    double cutoff = kern.cutoff_radius(opt.tail_tol);
    Vec lo, hi;
    mu.bounding_box(lo, hi);
    double need = 0.0;
    for (int a = 0; a < mu.ambient_dim(); ++a)
      need = std::max({need, std::abs(lo[a] - cutoff), std::abs(hi[a] + cutoff)});
    double h = eps / 4.0;
    int n = static_cast<int>(std::ceil(2.0 * (need + opt.box_margin) / h)) + 2;
    GridSpec gspec{0.5 * h * n, n};
    GridFunction g = mollify(mu, spec, gspec, {opt.tail_tol, opt.threads, true});
    scan.epsilons.push_back(eps);
    scan.sup_values.push_back(g.max_value());
    log_eps.push_back(std::log(eps));
    log_sup.push_back(std::log(g.max_value()));
  }
  scan.fit = fit_line(log_eps, log_sup);
  return scan;
}

}  // namespace dustlab
