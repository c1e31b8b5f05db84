#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dustlab/errors.hpp"

namespace dustlab {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kTwoPi = 2.0 * kPi;

// Surface area of the unit q-sphere S^q embedded in R^{q+1}.
inline double unit_sphere_area(int q) {
  return 2.0 * std::pow(kPi, 0.5 * (q + 1)) / std::tgamma(0.5 * (q + 1));
}

inline double unit_ball_volume(int k) {
  return std::pow(kPi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [-1, 1], cached per node count.

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline const QuadratureRule& gauss_legendre(int n) {
  static std::map<int, QuadratureRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from Chebyshev-like initial guesses.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  auto [pos, ok] = cache.emplace(n, std::move(rule));
  (void)ok;
  return pos->second;
}

template <class F>
double gauss_legendre_integrate(const F& f, double a, double b, int n) {
  const QuadratureRule& rule = gauss_legendre(n);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return acc * half;
}

// ---------------------------------------------------------------------------
// Adaptive Simpson with Richardson correction.

namespace detail {
template <class F>
double simpson_step(const F& f, double a, double fa, double b, double fb,
                    double m, double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol,
                        int max_depth = 40) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// Integrates an oscillatory f over [a, b] by pre-splitting into roughly one
// panel per oscillation before going adaptive, so the error estimator never
// sees a full period cancel to zero.
template <class F>
double oscillatory_integral(const F& f, double a, double b, double osc_count,
                            double tol) {
  int panels = std::max(1, static_cast<int>(std::ceil(osc_count)));
  if (panels > 4096) panels = 4096;
  double acc = 0.0;
  double h = (b - a) / panels;
  for (int i = 0; i < panels; ++i)
    acc += adaptive_simpson(f, a + i * h, a + (i + 1) * h, tol / panels);
  return acc;
}

// ---------------------------------------------------------------------------
// Spherical phase averages: mean of exp(-i t <x, e>) over x in S^{m-1}.
// The imaginary part vanishes by symmetry; these return the real part.

// Closed forms for m <= 3, Bessel route for the rest.
inline double radial_phase_avg_bessel(int m, double t) {
  if (m == 1) return std::cos(t);
  t = std::abs(t);
  if (t < 1e-8) {
    // Series: 1 - t^2/(2m) + O(t^4).
    return 1.0 - t * t / (2.0 * m);
  }
  double nu = 0.5 * m - 1.0;
  return std::tgamma(0.5 * m) * std::pow(2.0 / t, nu) * std::cyl_bessel_j(nu, t);
}

// Quadrature route: int_0^pi cos(t cos u) sin^{m-2} u du, normalized.
inline double radial_phase_avg_quad(int m, double t) {
  if (m == 1) return std::cos(t);
  if (m == 2 && t == 0.0) return 1.0;
  double norm = std::sqrt(kPi) * std::tgamma(0.5 * (m - 1)) / std::tgamma(0.5 * m);
  auto integrand = [m, t](double u) {
    double s = std::sin(u);
    double base = m == 2 ? 1.0 : std::pow(s, m - 2);
    return std::cos(t * std::cos(u)) * base;
  };
  double osc = std::abs(t) / kPi + 2.0;
  return oscillatory_integral(integrand, 0.0, kPi, osc, 1e-10) / norm;
}

inline double radial_phase_avg(int m, double t) {
  switch (m) {
    case 1:
      return std::cos(t);
    case 2:
      return std::abs(t) < 1e-8 ? 1.0 - 0.25 * t * t : std::cyl_bessel_j(0.0, std::abs(t));
    case 3: {
      double at = std::abs(t);
      return at < 1e-6 ? 1.0 - t * t / 6.0 : std::sin(at) / at;
    }
    default:
      return radial_phase_avg_quad(m, t);
  }
}

// ---------------------------------------------------------------------------
// Uniform-grid cubic interpolation (Catmull-Rom), clamped at the ends.

class CubicTable {
 public:
  CubicTable() = default;
  CubicTable(double x0, double dx, std::vector<double> y)
      : x0_(x0), dx_(dx), y_(std::move(y)) {
    if (y_.size() < 4) throw Error("CubicTable: need at least 4 samples");
  }

  double x_max() const { return x0_ + dx_ * (y_.size() - 1); }

  double operator()(double x) const {
    double u = (x - x0_) / dx_;
    if (u <= 0.0) return y_.front();
    std::size_t last = y_.size() - 1;
    if (u >= static_cast<double>(last)) return y_.back();
    std::size_t i = static_cast<std::size_t>(u);
    if (i >= last) i = last - 1;
    double t = u - static_cast<double>(i);
    double ym = i == 0 ? y_[0] : y_[i - 1];
    double y0 = y_[i];
    double y1 = y_[i + 1];
    double yp = i + 2 <= last ? y_[i + 2] : y_[last];
    double a = -0.5 * ym + 1.5 * y0 - 1.5 * y1 + 0.5 * yp;
    double b = ym - 2.5 * y0 + 2.0 * y1 - 0.5 * yp;
    double c = 0.5 * (y1 - ym);
    return ((a * t + b) * t + c) * t + y0;
  }

 private:
  double x0_ = 0.0;
  double dx_ = 1.0;
  std::vector<double> y_;
};

// ---------------------------------------------------------------------------
// Plain sum accumulator for Monte Carlo means.  merge() in a fixed chunk
// order keeps parallel reductions bitwise deterministic.

struct SumAccumulator {
  double sum = 0.0;
  double sumsq = 0.0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  void merge(const SumAccumulator& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    n += o.n;
  }
  double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
  double variance() const {
    if (n < 2) return 0.0;
    double m = mean();
    double v = (sumsq - static_cast<double>(n) * m * m) /
               static_cast<double>(n - 1);
    return v > 0.0 ? v : 0.0;
  }
  double std_error() const {
    return n == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n));
  }
};

// ---------------------------------------------------------------------------
// Ordinary least squares line fit with a 95% band on the slope.

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  double slope_ci95 = 0.0;  // halfwidth
  std::size_t n = 0;
};

inline double student_t_975(std::size_t df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447,
                                 2.365,  2.306, 2.262, 2.228, 2.201, 2.179,
                                 2.160,  2.145, 2.131, 2.120, 2.110, 2.101,
                                 2.093,  2.086, 2.080, 2.074, 2.069, 2.064,
                                 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) return 12.706;
  if (df <= 30) return table[df - 1];
  return 1.96;
}

inline LineFit fit_line(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw InsufficientSpanError("fit_line: need at least 2 points");
  std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InsufficientSpanError("fit_line: zero x spread");
  LineFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_std_error = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    fit.slope_ci95 = student_t_975(n - 2) * fit.slope_std_error;
  }
  return fit;
}

}  // namespace dustlab
