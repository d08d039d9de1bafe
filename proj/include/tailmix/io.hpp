#pragma once

// Tabular output shared by the command-line tool.
//
// CSV: one header row, comma separated, '\n' line ends, '.' decimal point.
// Numbers use the shortest representation that round-trips; fixed notation
// for decimal exponents in (-6, 6), scientific otherwise. Empty cells stand
// for "not available".
//
// JSON: {"schema_version": 1, "command": ..., "columns": [...], "rows": [[...]]}
// with null for empty cells.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tailmix/errors.hpp"
#include "tailmix/mc_oracle.hpp"

namespace tailmix {

inline constexpr int schema_version = 1;

using Cell = std::variant<std::monostate, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  friend bool operator==(const Table&, const Table&) = default;
};

inline std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  std::to_chars_result res;
  if (!std::isfinite(v)) {
    res = std::to_chars(buf, buf + sizeof buf, v);
  } else {
    const int exponent = static_cast<int>(std::floor(std::log10(std::fabs(v))));
    const auto fmt = (exponent >= 6 || exponent <= -6) ? std::chars_format::scientific
                                                       : std::chars_format::fixed;
    res = std::to_chars(buf, buf + sizeof buf, v, fmt);
  }
  return std::string(buf, res.ptr);
}

inline std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return {};
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_cell(row[i]);
    os << '\n';
  }
}

namespace detail {

inline Cell parse_cell(std::string_view s) {
  if (s.empty()) return std::monostate{};
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
  return std::string(s);
}

}  // namespace detail

inline Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    for (;;) {
      const auto pos = rest.find(',');
      fields.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (header) {
      for (auto f : fields) t.columns.emplace_back(f);
      header = false;
      continue;
    }
    if (fields.size() != t.columns.size())
      throw parse_error("CSV row has " + std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(t.columns.size()));
    std::vector<Cell> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(detail::parse_cell(f));
    t.rows.push_back(std::move(row));
  }
  if (header) throw parse_error("empty CSV input");
  return t;
}

inline nlohmann::json cell_to_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isfinite(*d)) return *d;
    return format_number(*d);  // "inf", "-inf", "nan"
  }
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return nullptr;
}

inline nlohmann::json to_json(const Table& t, std::string_view command) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : r) row.push_back(cell_to_json(c));
    rows.push_back(std::move(row));
  }
  return {{"schema_version", schema_version},
          {"command", command},
          {"columns", t.columns},
          {"rows", std::move(rows)}};
}

inline Table table_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != schema_version)
    throw parse_error("unsupported schema_version");
  Table t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<Cell> row;
    for (const auto& c : r) {
      if (c.is_null())
        row.emplace_back(std::monostate{});
      else if (c.is_number())
        row.emplace_back(c.get<double>());
      else
        row.push_back(detail::parse_cell(c.get<std::string>()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace detail {

inline nlohmann::json estimate_json(const Estimate& e) {
  return {{"estimate", e.value}, {"se", e.standard_error}, {"reliable", e.reliable}};
}

}  // namespace detail

inline nlohmann::json to_json(const MomentsReport& r) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& m : r.moments) {
    auto j = detail::estimate_json(m.estimate);
    j["kind"] = "moment";
    j["order"] = m.order;
    targets.push_back(std::move(j));
  }
  for (const auto& e : r.exceedances) {
    auto j = detail::estimate_json(e.estimate);
    j["kind"] = "exceedance";
    j["threshold"] = e.threshold;
    targets.push_back(std::move(j));
  }
  auto k = detail::estimate_json(r.kurtosis);
  k["kind"] = "kurtosis";
  targets.push_back(std::move(k));
  return {{"schema_version", schema_version},
          {"n", r.n},
          {"seed", r.seed},
          {"targets", std::move(targets)}};
}

inline MomentsReport report_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != schema_version)
    throw parse_error("unsupported schema_version");
  MomentsReport r;
  r.n = j.at("n").get<std::uint64_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("targets")) {
    const Estimate e{t.at("estimate").get<double>(), t.at("se").get<double>(),
                     t.at("reliable").get<bool>()};
    const auto kind = t.at("kind").get<std::string>();
    if (kind == "moment")
      r.moments.push_back({t.at("order").get<int>(), e});
    else if (kind == "exceedance")
      r.exceedances.push_back({t.at("threshold").get<double>(), e});
    else if (kind == "kurtosis")
      r.kurtosis = e;
    else
      throw parse_error("unknown target kind '" + kind + "'");
  }
  return r;
}

}  // namespace tailmix
