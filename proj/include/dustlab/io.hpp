#pragma once

// File formats: CSV writers use %.17g so doubles round-trip exactly and
// byte-identical reruns can be diffed. Readers reject malformed rows
// rather than guessing.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dustlab/errors.hpp"
#include "dustlab/estimators.hpp"
#include "dustlab/geometry.hpp"
#include "dustlab/graph.hpp"
#include "dustlab/grid.hpp"
#include "dustlab/measure.hpp"
#include "dustlab/patternscan.hpp"
#include "dustlab/spectral.hpp"

namespace dustlab {

inline constexpr const char* kVersion = "0.3.0";

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  return in;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric field '" + s + "' in " + path);
  }
}

}  // namespace detail

// Atom list: one row per atom, coordinates then weight.
inline void write_measure_csv(const std::string& path, const PointMassMeasure& mu) {
  auto out = detail::open_out(path);
  for (int a = 0; a < mu.ambient_dim(); ++a) out << "x" << (a + 1) << ",";
  out << "weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (int a = 0; a < mu.ambient_dim(); ++a)
      out << fmt17(mu.point_data(i)[a]) << ",";
    out << fmt17(mu.weight(i)) << "\n";
  }
}

// The scaling exponent is run metadata, not part of the atom table, so it
// comes back in as an argument.
inline PointMassMeasure read_measure_csv(const std::string& path, double dimension_s) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty measure file: " + path);
  const auto header = detail::split_csv(line);
  if (header.size() < 2 || header.back() != "weight")
    throw ConfigError("measure file header must end in 'weight': " + path);
  const int dim = static_cast<int>(header.size()) - 1;
  std::vector<double> coords, weights;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (static_cast<int>(fields.size()) != dim + 1)
      throw ConfigError("measure row arity mismatch in " + path);
    for (int a = 0; a < dim; ++a) coords.push_back(detail::parse_double(fields[static_cast<std::size_t>(a)], path));
    weights.push_back(detail::parse_double(fields.back(), path));
  }
  return PointMassMeasure(dim, std::move(coords), std::move(weights), dimension_s);
}

inline void write_estimates_csv(const std::string& path,
                                const std::vector<CountEstimate>& estimates) {
  auto out = detail::open_out(path);
  out << "lambda,epsilon,T,std_err,n_samples\n";
  for (const auto& e : estimates)
    out << fmt17(e.lambda) << "," << fmt17(e.epsilon) << "," << fmt17(e.value) << ","
        << fmt17(e.std_error) << "," << e.n_samples << "\n";
}

inline void write_spectrum_csv(const std::string& path,
                               const std::vector<SpectrumPoint>& points) {
  auto out = detail::open_out(path);
  if (points.empty()) throw ConfigError("spectrum write: no points");
  const int dim = static_cast<int>(points.front().xi.size());
  for (int a = 0; a < dim; ++a) out << "xi" << (a + 1) << ",";
  out << "re,im,abs2\n";
  for (const auto& p : points) {
    for (int a = 0; a < dim; ++a) out << fmt17(p.xi[a]) << ",";
    out << fmt17(p.value.real()) << "," << fmt17(p.value.imag()) << ","
        << fmt17(std::norm(p.value)) << "\n";
  }
}

// Matches: scale and residual, then the mapped vertices flattened in
// pattern order.
inline void write_matches_csv(const std::string& path, const std::vector<MatchResult>& matches,
                              int dim, int n_vertices) {
  auto out = detail::open_out(path);
  out << "lambda,residual";
  for (int v = 0; v < n_vertices; ++v)
    for (int a = 0; a < dim; ++a) out << ",v" << v << "_x" << (a + 1);
  out << "\n";
  for (const auto& m : matches) {
    out << fmt17(m.lambda) << "," << fmt17(m.residual);
    for (const auto& vert : m.vertices)
      for (int a = 0; a < dim; ++a) out << "," << fmt17(vert[a]);
    out << "\n";
  }
}

// Graph file: vertex rows carry coordinates, edge rows carry index pairs.
inline void write_graph_file(const std::string& path, const DistanceGraph& g) {
  auto out = detail::open_out(path);
  for (int v = 0; v < g.vertex_count(); ++v) {
    out << "vertex";
    for (int a = 0; a < g.ambient_dim(); ++a) out << "," << fmt17(g.vertex(v)[a]);
    out << "\n";
  }
  for (const auto& [i, j] : g.edges()) out << "edge," << i << "," << j << "\n";
}

inline DistanceGraph read_graph_file(const std::string& path) {
  auto in = detail::open_in(path);
  std::vector<Vec> vertices;
  std::vector<std::pair<int, int>> edges;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields[0] == "vertex") {
      Vec v(static_cast<int>(fields.size()) - 1);
      for (std::size_t a = 1; a < fields.size(); ++a)
        v[static_cast<int>(a) - 1] = detail::parse_double(fields[a], path);
      vertices.push_back(std::move(v));
    } else if (fields[0] == "edge") {
      if (fields.size() != 3) throw ConfigError("edge row arity mismatch in " + path);
      edges.emplace_back(static_cast<int>(detail::parse_double(fields[1], path)),
                         static_cast<int>(detail::parse_double(fields[2], path)));
    } else {
      throw ConfigError("unknown row tag '" + fields[0] + "' in " + path);
    }
  }
  return DistanceGraph(std::move(vertices), std::move(edges));
}

// Raw sample dump: id, point coordinates, weight.
inline void write_samples_csv(const std::string& path, const std::vector<Vec>& points,
                              const std::vector<double>& weights) {
  if (points.size() != weights.size())
    throw ConfigError("sample dump: points/weights length mismatch");
  auto out = detail::open_out(path);
  const int dim = points.empty() ? 0 : static_cast<int>(points.front().size());
  out << "sample_id";
  for (int a = 0; a < dim; ++a) out << ",x" << (a + 1);
  out << ",weight\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << i;
    for (int a = 0; a < dim; ++a) out << "," << fmt17(points[i][a]);
    out << "," << fmt17(weights[i]) << "\n";
  }
}

// Readable export for small grids; the binary format in grid.hpp covers
// everything else.
inline void write_grid_csv(const std::string& path, const GridFunction& grid,
                           std::size_t max_cells = 1u << 20) {
  if (grid.size() > max_cells)
    throw ConfigError("grid too large for CSV export; use the binary format");
  auto out = detail::open_out(path);
  for (int a = 0; a < grid.dim(); ++a) out << "x" << (a + 1) << ",";
  out << "value\n";
  std::vector<int> idx(static_cast<std::size_t>(grid.dim()), 0);
  const int n = grid.points_per_axis();
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    for (int a = 0; a < grid.dim(); ++a) out << fmt17(grid.coordinate(idx[static_cast<std::size_t>(a)])) << ",";
    out << fmt17(grid.values()[flat]) << "\n";
    for (int a = grid.dim() - 1; a >= 0; --a) {
      if (++idx[static_cast<std::size_t>(a)] < n) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
  }
}

}  // namespace dustlab
