#pragma once

// Depth sweeps: (depth, model time, simulated time) series and their CSV,
// JSON and SVG renderings.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bpl/model.hpp"

namespace bpl {

struct SweepRow {
  std::int64_t depth = 0;
  double model_time = 0.0;
  std::optional<double> simulated_time;
  std::string label;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  void validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].depth <= rows[i - 1].depth)
        throw invalid_config("sweep depths must be strictly increasing");
      if (rows[i].model_time < 0.0 || rows[i].simulated_time.value_or(0.0) < 0.0)
        throw invalid_config("sweep times must be >= 0");
    }
  }

  /// Depth with the smallest model time (first one on ties).
  std::int64_t model_argmin() const {
    auto it = std::min_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return a.model_time < b.model_time;
    });
    return it == rows.end() ? 0 : it->depth;
  }

  std::optional<std::int64_t> simulated_argmin() const {
    std::optional<std::int64_t> best;
    double best_t = 0.0;
    for (const auto& r : rows)
      if (r.simulated_time && (!best || *r.simulated_time < best_t)) {
        best = r.depth;
        best_t = *r.simulated_time;
      }
    return best;
  }
};

namespace detail {

// Shortest decimal form that round-trips.
inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// `depth,model_time,simulated_time,label`; simulated_time empty when absent.
inline std::string to_csv(const SweepResult& r) {
  std::ostringstream os;
  os << "depth,model_time,simulated_time,label\n";
  for (const auto& row : r.rows) {
    os << row.depth << ',' << detail::format_number(row.model_time) << ',';
    if (row.simulated_time) os << detail::format_number(*row.simulated_time);
    os << ',' << row.label << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json to_json(const SweepResult& r) {
  nlohmann::ordered_json j;
  j["metadata"] = r.metadata;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["depth"] = row.depth;
    o["model_time"] = row.model_time;
    o["simulated_time"] = row.simulated_time ? nlohmann::ordered_json(*row.simulated_time)
                                             : nlohmann::ordered_json(nullptr);
    o["label"] = row.label;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  return j;
}

inline SweepResult sweep_from_json(const nlohmann::ordered_json& j) {
  SweepResult r;
  r.metadata = j.at("metadata");
  for (const auto& o : j.at("rows")) {
    SweepRow row;
    row.depth = o.at("depth").get<std::int64_t>();
    row.model_time = o.at("model_time").get<double>();
    if (!o.at("simulated_time").is_null()) row.simulated_time = o.at("simulated_time").get<double>();
    row.label = o.at("label").get<std::string>();
    r.rows.push_back(std::move(row));
  }
  r.validate();
  return r;
}

namespace detail {

// Round a span up to 1, 2 or 5 times a power of ten.
inline double nice_step(double span, int target_ticks) {
  const double raw = span / std::max(1, target_ticks);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

}  // namespace detail

/// 800x500 plot: model curve as a polyline, simulated values as circles.
inline std::string to_svg(const SweepResult& r, const std::string& time_unit) {
  constexpr double W = 800, H = 500, L = 80, R = 30, T = 40, B = 60;
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
        "viewBox=\"0 0 800 500\">\n";
  os << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  if (r.rows.empty()) {
    os << "</svg>\n";
    return os.str();
  }

  double x_lo = static_cast<double>(r.rows.front().depth);
  double x_hi = static_cast<double>(r.rows.back().depth);
  if (x_hi == x_lo) x_hi = x_lo + 1;
  double y_lo = r.rows.front().model_time;
  double y_hi = y_lo;
  for (const auto& row : r.rows) {
    y_lo = std::min(y_lo, row.model_time);
    y_hi = std::max(y_hi, row.model_time);
    if (row.simulated_time) {
      y_lo = std::min(y_lo, *row.simulated_time);
      y_hi = std::max(y_hi, *row.simulated_time);
    }
  }
  const double pad = (y_hi - y_lo) > 0 ? (y_hi - y_lo) * 0.05 : std::max(1.0, y_hi * 0.05);
  y_lo = std::max(0.0, y_lo - pad);
  y_hi += pad;

  auto sx = [&](double x) { return L + (x - x_lo) / (x_hi - x_lo) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y_lo) / (y_hi - y_lo) * (H - T - B); };

  // Axes
  os << "<g stroke=\"black\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\"/>\n";
  os << "</g>\n";

  os << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";
  const double xstep = std::max(1.0, detail::nice_step(x_hi - x_lo, 10));
  for (double x = std::ceil(x_lo / xstep) * xstep; x <= x_hi + 1e-9; x += xstep) {
    os << "<line x1=\"" << sx(x) << "\" y1=\"" << H - B << "\" x2=\"" << sx(x) << "\" y2=\""
       << H - B + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << sx(x) << "\" y=\"" << H - B + 20 << "\" text-anchor=\"middle\">" << x
       << "</text>\n";
  }
  const double ystep = detail::nice_step(y_hi - y_lo, 8);
  for (double y = std::ceil(y_lo / ystep) * ystep; y <= y_hi + 1e-9; y += ystep) {
    os << "<line x1=\"" << L - 5 << "\" y1=\"" << sy(y) << "\" x2=\"" << L << "\" y2=\"" << sy(y)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << L - 8 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << y
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15
     << "\" text-anchor=\"middle\">depth p (stages)</text>\n";
  os << "<text x=\"20\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
     << (T + H - B) / 2 << ")\">time (" << time_unit << ")</text>\n";
  os << "</g>\n";

  os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
  for (const auto& row : r.rows)
    os << sx(static_cast<double>(row.depth)) << ',' << sy(row.model_time) << ' ';
  os << "\"/>\n";
  for (const auto& row : r.rows)
    if (row.simulated_time)
      os << "<circle cx=\"" << sx(static_cast<double>(row.depth)) << "\" cy=\""
         << sy(*row.simulated_time) << "\" r=\"4\" fill=\"none\" stroke=\"black\"/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace bpl
