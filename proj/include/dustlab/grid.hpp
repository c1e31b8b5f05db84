#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/geometry.hpp"

namespace dustlab {

struct GridSpec {
  double halfwidth = 2.0;
  int points_per_axis = 256;
};

// Scalar field sampled at the cell centers of a uniform grid on [-L, L]^k,
// row-major with the last axis fastest.  Values are zero outside the box.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(int dim, double halfwidth, int points_per_axis)
      : dim_(dim), halfwidth_(halfwidth), n_(points_per_axis) {
    if (dim_ < 1 || dim_ > 6) throw ConfigError("grid: dimension out of range");
    if (n_ < 2) throw ConfigError("grid: need at least 2 points per axis");
    if (!(halfwidth_ > 0.0)) throw ConfigError("grid: halfwidth must be positive");
    double cells = std::pow(static_cast<double>(n_), dim_);
    if (cells > 1.6e8) throw ConfigError("grid: too many cells");
    values_.assign(static_cast<std::size_t>(cells), 0.0);
  }

  int dim() const { return dim_; }
  int points_per_axis() const { return n_; }
  double halfwidth() const { return halfwidth_; }
  double spacing() const { return 2.0 * halfwidth_ / n_; }
  std::size_t size() const { return values_.size(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double coordinate(int i) const { return -halfwidth_ + (i + 0.5) * spacing(); }

  std::size_t flat_index(const int* idx) const {
    std::size_t f = 0;
    for (int a = 0; a < dim_; ++a) f = f * n_ + static_cast<std::size_t>(idx[a]);
    return f;
  }

  double cell_volume() const { return std::pow(spacing(), dim_); }

  double quadrature_mass() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * cell_volume();
  }

  double max_value() const {
    double m = values_.empty() ? 0.0 : values_[0];
    for (double v : values_)
      if (v > m) m = v;
    return m;
  }

  // Largest sup-norm coordinate radius of any cell center with value above
  // the threshold, plus half a cell.
  double support_radius(double threshold) const {
    double h = spacing();
    double best = -1.0;
    for (std::size_t f = 0; f < values_.size(); ++f) {
      if (values_[f] > threshold) {
        std::size_t rem = f;
        double radius = 0.0;
        for (int a = dim_ - 1; a >= 0; --a) {
          int i = static_cast<int>(rem % n_);
          rem /= n_;
          radius = std::max(radius, std::abs(coordinate(i)));
        }
        if (radius > best) best = radius;
      }
    }
    return best < 0.0 ? 0.0 : best + 0.5 * h;
  }

  // Multilinear interpolation between cell centers; zero outside.
  double interpolate(const double* x) const {
    double frac[6];
    int base[6];
    for (int a = 0; a < dim_; ++a) {
      double u = (x[a] + halfwidth_) / spacing() - 0.5;
      if (u <= -1.0 || u >= static_cast<double>(n_)) return 0.0;
      double fl = std::floor(u);
      base[a] = static_cast<int>(fl);
      frac[a] = u - fl;
    }
    double acc = 0.0;
    int corners = 1 << dim_;
    for (int c = 0; c < corners; ++c) {
      double w = 1.0;
      std::size_t f = 0;
      bool inside = true;
      for (int a = 0; a < dim_; ++a) {
        int bit = (c >> a) & 1;
        int i = base[a] + bit;
        w *= bit ? frac[a] : 1.0 - frac[a];
        if (i < 0 || i >= n_) {
          inside = false;
          break;
        }
        f = f * n_ + static_cast<std::size_t>(i);
      }
      if (inside && w != 0.0) acc += w * values_[f];
    }
    return acc;
  }

  double interpolate(const Vec& x) const { return interpolate(x.data()); }

  // Binary format: one text header line "k N L", then N^k doubles, row-major,
  // native little-endian.
  void save_binary(const std::string& path) const {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("grid: cannot open " + path + " for writing");
    char header[80];
    std::snprintf(header, sizeof(header), "%d %d %.17g\n", dim_, n_, halfwidth_);
    out << header;
    out.write(reinterpret_cast<const char*>(values_.data()),
              static_cast<std::streamsize>(values_.size() * sizeof(double)));
    if (!out) throw Error("grid: write failed for " + path);
  }

  static GridFunction load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("grid: cannot open " + path);
    std::string header;
    std::getline(in, header);
    int k = 0, n = 0;
    double hw = 0.0;
    if (std::sscanf(header.c_str(), "%d %d %lg", &k, &n, &hw) != 3)
      throw Error("grid: bad header in " + path);
    GridFunction g(k, hw, n);
    in.read(reinterpret_cast<char*>(g.values_.data()),
            static_cast<std::streamsize>(g.values_.size() * sizeof(double)));
    if (!in) throw Error("grid: truncated data in " + path);
    return g;
  }

 private:
  int dim_ = 0;
  double halfwidth_ = 0.0;
  int n_ = 0;
  std::vector<double> values_;
};

}  // namespace dustlab
