#pragma once

// Cycle-accurate reservation tables for the bounded pipeline.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bpl/model.hpp"

namespace bpl {

/// Stage x cycle occupancy matrix. cell(s, c) is the 1-based element index
/// processed by stage s at cycle c, or 0 when the stage is idle.
class ReservationTable {
 public:
  ReservationTable() = default;
  ReservationTable(std::int64_t depth, std::int64_t devices, std::int64_t elements)
      : depth_(depth), devices_(devices), elements_(elements) {}

  std::int64_t depth() const { return depth_; }
  std::int64_t devices() const { return devices_; }
  std::int64_t elements() const { return elements_; }
  std::int64_t cycles() const { return static_cast<std::int64_t>(columns_.size()); }

  std::int64_t cell(std::int64_t stage, std::int64_t cycle) const {
    return columns_.at(static_cast<std::size_t>(cycle - 1)).at(static_cast<std::size_t>(stage - 1));
  }

  /// Occupied stages in a column.
  std::int64_t active(std::int64_t cycle) const {
    const auto& col = columns_.at(static_cast<std::size_t>(cycle - 1));
    return std::count_if(col.begin(), col.end(), [](std::int64_t e) { return e != 0; });
  }

  const std::vector<std::vector<std::int64_t>>& columns() const { return columns_; }

  void push_column(std::vector<std::int64_t> col) { columns_.push_back(std::move(col)); }

  /// Returns a description of the first violated invariant, if any.
  std::optional<std::string> check() const {
    std::vector<std::int64_t> last_cycle(static_cast<std::size_t>(elements_) + 1, 0);
    std::vector<std::int64_t> last_stage(static_cast<std::size_t>(elements_) + 1, 0);
    for (std::int64_t c = 1; c <= cycles(); ++c) {
      const auto& col = columns_[static_cast<std::size_t>(c - 1)];
      if (static_cast<std::int64_t>(col.size()) != depth_) return "column width mismatch";
      if (active(c) > devices_) return "capacity exceeded at cycle " + std::to_string(c);
      std::vector<bool> seen(static_cast<std::size_t>(elements_) + 1, false);
      for (std::int64_t s = 1; s <= depth_; ++s) {
        const auto e = col[static_cast<std::size_t>(s - 1)];
        if (e == 0) continue;
        if (e < 0 || e > elements_) return "element index out of range";
        auto ei = static_cast<std::size_t>(e);
        if (seen[ei]) return "element in two stages of one column";
        seen[ei] = true;
        if (last_stage[ei] != s - 1 || last_cycle[ei] >= c)
          return "element " + std::to_string(e) + " visits stage " + std::to_string(s) +
                 " out of order";
        last_stage[ei] = s;
        last_cycle[ei] = c;
      }
    }
    for (std::int64_t e = 1; e <= elements_; ++e)
      if (last_stage[static_cast<std::size_t>(e)] != depth_)
        return "element " + std::to_string(e) + " does not traverse every stage";
    return std::nullopt;
  }

  friend bool operator==(const ReservationTable&, const ReservationTable&) = default;

 private:
  std::int64_t depth_ = 0;
  std::int64_t devices_ = 0;
  std::int64_t elements_ = 0;
  std::vector<std::vector<std::int64_t>> columns_;
};

/// Busy stage-slots split by the concurrency level of their column.
struct ActivityProfile {
  std::vector<std::int64_t> busy_slots;  // index i-1 holds level i
  std::int64_t total_slots = 0;

  std::vector<double> fractions() const {
    std::vector<double> g;
    g.reserve(busy_slots.size());
    for (auto s : busy_slots)
      g.push_back(static_cast<double>(s) / static_cast<double>(total_slots));
    return g;
  }
};

/// Greedy cycle-by-cycle schedule. Each cycle starts at most q ready
/// operations, deeper stages first; new elements enter stage 1 last.
inline ReservationTable build_table(std::int64_t p, std::int64_t q, std::int64_t n) {
  if (p < 1 || q < 1 || n < 1) throw invalid_config("p, q and n must all be >= 1");
  const auto cap = std::min(q, p);
  ReservationTable table(p, cap, n);

  // next[s]: next element waiting for stage s; finished[s]: last element that
  // completed stage s in an earlier cycle.
  std::vector<std::int64_t> next(static_cast<std::size_t>(p) + 1, 1);
  std::vector<std::int64_t> finished(static_cast<std::size_t>(p) + 1, 0);
  std::int64_t remaining = n * p;
  for (std::int64_t cycle = 1; remaining > 0; ++cycle) {
    std::vector<std::int64_t> col(static_cast<std::size_t>(p), 0);
    std::int64_t started = 0;
    for (std::int64_t s = p; s >= 1 && started < cap; --s) {
      const auto si = static_cast<std::size_t>(s);
      const auto e = next[si];
      if (e > n) continue;
      // Element e left stage s-1 in an earlier cycle?
      if (s > 1 && finished[si - 1] < e) continue;
      col[si - 1] = e;
      ++next[si];
      ++started;
    }
    // Commit completions after the column is decided.
    for (std::int64_t s = 1; s <= p; ++s) {
      const auto e = col[static_cast<std::size_t>(s - 1)];
      if (e != 0) finished[static_cast<std::size_t>(s)] = e;
    }
    remaining -= started;
    table.push_column(std::move(col));
  }
  return table;
}

/// Index of the last nonempty column.
inline std::int64_t completion_cycles(const ReservationTable& t) {
  for (auto c = t.cycles(); c >= 1; --c)
    if (t.active(c) > 0) return c;
  return 0;
}

inline ActivityProfile concurrency_fractions(const ReservationTable& t) {
  ActivityProfile prof;
  prof.busy_slots.assign(static_cast<std::size_t>(t.devices()), 0);
  for (std::int64_t c = 1; c <= t.cycles(); ++c) {
    const auto a = t.active(c);
    if (a == 0) continue;
    prof.busy_slots[static_cast<std::size_t>(a - 1)] += a;
    prof.total_slots += a;
  }
  return prof;
}

enum class TableFormat { text, csv };

inline TableFormat parse_table_format(std::string_view name) {
  if (name == "text") return TableFormat::text;
  if (name == "csv") return TableFormat::csv;
  throw invalid_config("unknown table format '" + std::string(name) + "'");
}

namespace detail {

inline std::size_t digits(std::int64_t v) { return std::to_string(v).size(); }

inline std::string pad_left(std::string s, std::size_t width, char fill = ' ') {
  if (s.size() < width) s.insert(0, width - s.size(), fill);
  return s;
}

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(' ');
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(' ');
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Text: bordered grid in the layout of a printed reservation table, cycle
/// numbers zero-padded in the header row. CSV: header of cycle indices, one
/// row per stage, empty fields for idle slots.
inline std::string render_table(const ReservationTable& t, TableFormat format) {
  std::ostringstream os;
  const auto cycles = t.cycles();
  if (format == TableFormat::csv) {
    for (std::int64_t c = 1; c <= cycles; ++c) os << (c > 1 ? "," : "") << c;
    os << '\n';
    for (std::int64_t s = 1; s <= t.depth(); ++s) {
      for (std::int64_t c = 1; c <= cycles; ++c) {
        if (c > 1) os << ',';
        if (auto e = t.cell(s, c)) os << e;
      }
      os << '\n';
    }
    return os.str();
  }

  const auto w = std::max({std::size_t{2}, detail::digits(cycles), detail::digits(t.elements())});
  const auto lw = detail::digits(t.depth());
  os << std::string(lw, ' ') << " |";
  for (std::int64_t c = 1; c <= cycles; ++c)
    os << detail::pad_left(std::to_string(c), w, '0') << '|';
  os << '\n';
  for (std::int64_t s = 1; s <= t.depth(); ++s) {
    os << detail::pad_left(std::to_string(s), lw) << " |";
    for (std::int64_t c = 1; c <= cycles; ++c) {
      const auto e = t.cell(s, c);
      os << detail::pad_left(e ? std::to_string(e) : std::string(), w) << '|';
    }
    os << '\n';
  }
  return os.str();
}

/// Inverse of render_table. The device count is not part of the rendering and
/// must be supplied.
inline ReservationTable parse_table(std::string_view rendered, TableFormat format,
                                    std::int64_t devices) {
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < rendered.size()) {
    auto pos = rendered.find('\n', start);
    auto line = rendered.substr(start, pos == std::string_view::npos ? pos : pos - start);
    if (format == TableFormat::csv) {
      rows.push_back(detail::split(line, ','));
    } else {
      auto fields = detail::split(line, '|');
      // Leading label and trailing empty field after the closing border.
      fields.erase(fields.begin());
      if (!fields.empty() && fields.back().empty()) fields.pop_back();
      rows.push_back(std::move(fields));
    }
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (rows.empty()) throw invalid_config("empty table rendering");
  const auto cycles = rows.front().size();
  const auto depth = static_cast<std::int64_t>(rows.size() - 1);
  std::vector<std::vector<std::int64_t>> cols(cycles,
                                              std::vector<std::int64_t>(static_cast<std::size_t>(depth), 0));
  std::int64_t elements = 0;
  for (std::size_t s = 1; s < rows.size(); ++s) {
    if (rows[s].size() != cycles) throw invalid_config("ragged table rendering");
    for (std::size_t c = 0; c < cycles; ++c) {
      auto cell = detail::trim(rows[s][c]);
      if (cell.empty()) continue;
      const std::int64_t e = std::stoll(cell);
      cols[c][s - 1] = e;
      elements = std::max(elements, e);
    }
  }
  ReservationTable t(depth, devices, elements);
  for (auto& c : cols) t.push_column(std::move(c));
  return t;
}

}  // namespace bpl
