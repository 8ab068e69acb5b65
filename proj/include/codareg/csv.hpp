#pragma once

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "codareg/dataset.hpp"
#include "codareg/errors.hpp"

namespace codareg {

/// Maps CSV header names onto dataset fields. Column order in the file is
/// irrelevant; matching is by name.
struct ColumnMapping {
  std::vector<std::string> parts;
  std::string response;
  std::optional<std::string> moderator;
  std::optional<std::string> offset;
  std::optional<std::string> group;
  std::optional<std::string> time;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

inline double parse_double(const std::string& s, std::size_t line_no,
                           const std::string& col) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty())
    throw ParseError(line_no, col, "'" + s + "' is not a number");
  return v;
}

}  // namespace detail

/// Write a dataset as CSV with the standard synthetic-data header layout:
/// parts, response, then moderator/offset/group/time as present.
inline void write_dataset_csv(const std::string& path, const Dataset& data,
                              const std::vector<std::string>& part_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  const bool moderator = !data.rows.empty() && data.rows.front().moderator.has_value();
  const bool offset = !data.rows.empty() && data.rows.front().offset.has_value();
  const bool keys = !data.rows.empty() && data.rows.front().group.has_value() &&
                    data.rows.front().time.has_value();
  char buf[40];
  for (const auto& p : part_names) out << p << ',';
  out << "response";
  if (moderator) out << ",moderator";
  if (offset) out << ",offset";
  if (keys) out << ",group,time";
  out << '\n';
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : data.rows) {
    for (int j = 0; j < r.comp.size(); ++j) out << num(r.comp[j]) << ',';
    out << num(r.response);
    if (moderator) out << ',' << num(r.moderator.value_or(0.0));
    if (offset) out << ',' << num(r.offset.value_or(1.0));
    if (keys) out << ',' << *r.group << ',' << *r.time;
    out << '\n';
  }
}

/// Load a UTF-8 CSV with a header row. Rows with any mapped field empty are
/// dropped and counted in Dataset::rows_dropped_missing; compositions are
/// validated part by part so a zero pollutant reading names its row and
/// column.
inline Dataset load_csv(const std::string& path, const ColumnMapping& map) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  const auto header = detail::split_csv_line(line);

  const auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw MissingColumn(name);
  };
  std::vector<int> part_idx;
  for (const auto& p : map.parts) part_idx.push_back(index_of(p));
  const int resp_idx = index_of(map.response);
  const int mod_idx = map.moderator ? index_of(*map.moderator) : -1;
  const int off_idx = map.offset ? index_of(*map.offset) : -1;
  const int grp_idx = map.group ? index_of(*map.group) : -1;
  const int time_idx = map.time ? index_of(*map.time) : -1;

  Dataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const auto get = [&](int i) -> const std::string& {
      static const std::string empty;
      return i >= 0 && i < static_cast<int>(fields.size()) ? fields[i] : empty;
    };
    bool missing = get(resp_idx).empty();
    for (int i : part_idx) missing = missing || get(i).empty();
    if (mod_idx >= 0) missing = missing || get(mod_idx).empty();
    if (off_idx >= 0) missing = missing || get(off_idx).empty();
    if (grp_idx >= 0) missing = missing || get(grp_idx).empty();
    if (time_idx >= 0) missing = missing || get(time_idx).empty();
    if (missing) {
      ++data.rows_dropped_missing;
      continue;
    }

    VectorXd parts(static_cast<Eigen::Index>(part_idx.size()));
    for (std::size_t j = 0; j < part_idx.size(); ++j) {
      parts[j] = detail::parse_double(get(part_idx[j]), line_no, map.parts[j]);
      if (!(parts[j] > 0.0))
        throw NonPositivePart(static_cast<int>(j), "row " + std::to_string(line_no) +
                                                       ", column '" + map.parts[j] + "'");
    }
    Observation obs{Composition(parts)};
    obs.response = detail::parse_double(get(resp_idx), line_no, map.response);
    if (mod_idx >= 0)
      obs.moderator = detail::parse_double(get(mod_idx), line_no, *map.moderator);
    if (off_idx >= 0)
      obs.offset = detail::parse_double(get(off_idx), line_no, *map.offset);
    if (grp_idx >= 0) obs.group = get(grp_idx);
    if (time_idx >= 0) {
      const double t = detail::parse_double(get(time_idx), line_no, *map.time);
      obs.time = static_cast<long long>(t);
    }
    data.rows.push_back(std::move(obs));
  }
  data.check_consistent();
  return data;
}

}  // namespace codareg
