#pragma once

// Experiment-driver plumbing shared by the command line tool and the
// demo programs: config files, run metadata, exit-code policy, and a
// small SVG chart writer for quick looks at decay curves.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dustlab/errors.hpp"
#include "dustlab/io.hpp"

namespace dustlab {

// Plain key=value files with [section] headers. Duplicate keys and keys
// outside the caller's declared schema are rejected outright; silently
// ignored settings are how experiments go quietly wrong.
class ExperimentConfig {
 public:
  ExperimentConfig() = default;

  static ExperimentConfig parse(std::istream& in, const std::string& origin = "<config>") {
    ExperimentConfig cfg;
    std::string line, section;
    long line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string t = trim(line.substr(0, line.find('#')));
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section");
        section = trim(t.substr(1, t.size() - 2));
        cfg.sections_.try_emplace(section);
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
      if (!cfg.sections_[section].emplace(key, value).second)
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    return cfg;
  }

  static ExperimentConfig parse_file(const std::string& path) {
    auto in = detail::open_in(path);
    return parse(in, path);
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    return detail::parse_double(get(section, key, ""), "config [" + section + "] " + key);
  }

  long get_long(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    const double v = get_double(section, key, 0.0);
    const long n = static_cast<long>(v);
    if (static_cast<double>(n) != v)
      throw ConfigError("config [" + section + "] " + key + ": expected an integer");
    return n;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key, "");
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("config [" + section + "] " + key + ": expected a boolean");
  }

  // Every present section/key must appear in the schema.
  void require_known(
      const std::map<std::string, std::vector<std::string>>& schema) const {
    for (const auto& [section, kv] : sections_) {
      const auto s = schema.find(section);
      if (s == schema.end())
        throw ConfigError("config: unknown section [" + section + "]");
      for (const auto& [key, value] : kv)
        if (std::find(s->second.begin(), s->second.end(), key) == s->second.end())
          throw ConfigError("config: unknown key '" + key + "' in section [" + section + "]");
    }
  }

  nlohmann::json echo() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [section, kv] : sections_) {
      nlohmann::json s = nlohmann::json::object();
      for (const auto& [key, value] : kv) s[key] = value;
      j[section.empty() ? "(top)" : section] = std::move(s);
    }
    return j;
  }

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Every output directory gets a metadata file recording the tool version
// and the exact settings, so results stay attributable.
inline void write_run_metadata(const std::string& out_dir, const std::string& command,
                               const ExperimentConfig& config, std::uint64_t seed,
                               int threads,
                               const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["threads"] = threads;
  j["config"] = config.echo();
  if (!extra.empty()) j["extra"] = extra;
  auto out = detail::open_out(out_dir + "/run.json");
  out << j.dump(2) << "\n";
}

// Exit policy: 0 success, 2 rejected input, 3 a numerical invariant or
// domain precondition failed mid-run, 1 anything unforeseen.
template <typename Fn>
int run_guarded(Fn&& fn, std::ostream& err = std::cerr) {
  try {
    fn();
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Minimal self-contained line chart. Log axes drop nonpositive points.
inline void write_svg_chart(const std::string& path, const std::string& title,
                            const std::string& x_label, const std::string& y_label,
                            const std::vector<ChartSeries>& series, bool log_x = false,
                            bool log_y = false) {
  constexpr double kW = 640, kH = 400, kL = 64, kR = 20, kT = 40, kB = 52;
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
  auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };

  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  bool seen = false;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if ((log_x && x <= 0.0) || (log_y && y <= 0.0)) continue;
      if (!seen) {
        x_lo = x_hi = tx(x);
        y_lo = y_hi = ty(y);
        seen = true;
      } else {
        x_lo = std::min(x_lo, tx(x)); x_hi = std::max(x_hi, tx(x));
        y_lo = std::min(y_lo, ty(y)); y_hi = std::max(y_hi, ty(y));
      }
    }
  if (x_hi - x_lo < 1e-12) { x_lo -= 0.5; x_hi += 0.5; }
  if (y_hi - y_lo < 1e-12) { y_lo -= 0.5; y_hi += 0.5; }
  const double x_pad = 0.04 * (x_hi - x_lo), y_pad = 0.06 * (y_hi - y_lo);
  x_lo -= x_pad; x_hi += x_pad; y_lo -= y_pad; y_hi += y_pad;

  auto px = [&](double x) { return kL + (tx(x) - x_lo) / (x_hi - x_lo) * (kW - kL - kR); };
  auto py = [&](double y) { return kH - kB - (ty(y) - y_lo) / (y_hi - y_lo) * (kH - kT - kB); };
  auto fmt2 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };
  auto fmt_tick = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return std::string(buf);
  };

  auto out = detail::open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
         "font-family=\"sans-serif\">" << title << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x_lo + (x_hi - x_lo) * t / 4.0;
    const double fy = y_lo + (y_hi - y_lo) * t / 4.0;
    const double gx = kL + (kW - kL - kR) * t / 4.0;
    const double gy = kH - kB - (kH - kT - kB) * t / 4.0;
    out << "<line x1=\"" << fmt2(gx) << "\" y1=\"" << kT << "\" x2=\"" << fmt2(gx) << "\" y2=\""
        << kH - kB << "\" stroke=\"#ddd\"/>\n"
        << "<line x1=\"" << kL << "\" y1=\"" << fmt2(gy) << "\" x2=\"" << kW - kR << "\" y2=\""
        << fmt2(gy) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << fmt2(gx) << "\" y=\"" << kH - kB + 18
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << fmt_tick(log_x ? std::pow(10.0, fx) : fx) << "</text>\n"
        << "<text x=\"" << kL - 6 << "\" y=\"" << fmt2(gy + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
        << fmt_tick(log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  out << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR << "\" height=\""
      << kH - kT - kB << "\" fill=\"none\" stroke=\"#444\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << x_label
      << "</text>\n"
      << "<text x=\"16\" y=\"" << kH / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 16 " << kH / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % 6];
    std::string poly;
    for (const auto& [x, y] : series[s].points) {
      if ((log_x && x <= 0.0) || (log_y && y <= 0.0)) continue;
      poly += fmt2(px(x)) + "," + fmt2(py(y)) + " ";
    }
    out << "<polyline points=\"" << poly << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.6\"/>\n";
    for (const auto& [x, y] : series[s].points) {
      if ((log_x && x <= 0.0) || (log_y && y <= 0.0)) continue;
      out << "<circle cx=\"" << fmt2(px(x)) << "\" cy=\"" << fmt2(py(y))
          << "\" r=\"2.4\" fill=\"" << color << "\"/>\n";
    }
    out << "<text x=\"" << kW - kR - 8 << "\" y=\"" << kT + 16 + 15 * static_cast<double>(s)
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\" fill=\"" << color
        << "\">" << series[s].name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace dustlab
