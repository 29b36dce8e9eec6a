#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "weatkit/bias.hpp"
#include "weatkit/error.hpp"

namespace weatkit {

// Group-level covariates joined onto the bias records: TSV or CSV with a
// leading group_id column. String-valued columns are treated as categorical
// and one-hot encoded (reference level dropped, dummies flagged so the
// regressions leave them unstandardized). Rows with any missing value are
// dropped at load, i.e. before the join.
struct CovariateTable {
  std::vector<std::string> columns;
  std::set<std::string> indicator_columns;
  std::map<std::string, std::vector<double>> rows;  // group_id -> values
  std::uint64_t dropped_incomplete = 0;
};

namespace detail {

inline std::string trim_field(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_line(const std::string& line,
                                           char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      fields.push_back(trim_field(
          std::string_view(line).substr(start, i - start)));
      start = i + 1;
    }
  }
  return fields;
}

inline bool missing_field(const std::string& s) {
  if (s.empty()) return true;
  std::string low = s;
  for (char& c : low) c = char(std::tolower(static_cast<unsigned char>(c)));
  return low == "na" || low == "nan" || low == "null";
}

inline bool parse_field_double(const std::string& s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

}  // namespace detail

inline CovariateTable load_covariates(std::istream& is,
                                      const std::string& origin,
                                      char sep) {
  std::string line;
  if (!std::getline(is, line))
    throw DataError(origin + ": empty covariates file");
  std::vector<std::string> header = detail::split_line(line, sep);
  if (header.empty() || header[0] != "group_id")
    throw DataError(origin + ": first column must be group_id");
  const std::size_t ncols = header.size();
  if (ncols < 2) throw DataError(origin + ": no covariate columns");

  std::vector<std::string> group_ids;
  std::vector<std::vector<std::string>> raw(ncols - 1);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = detail::split_line(line, sep);
    if (fields.size() != ncols)
      throw DataError(origin + " line " + std::to_string(lineno) + ": " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(ncols));
    group_ids.push_back(fields[0]);
    for (std::size_t j = 1; j < ncols; ++j)
      raw[j - 1].push_back(fields[j]);
  }

  // Classify columns: numeric if every non-missing cell parses.
  const std::size_t nrows = group_ids.size();
  struct Col {
    std::string name;
    bool numeric = true;
    std::vector<double> values;        // when numeric
    std::vector<std::string> labels;   // when categorical
  };
  std::vector<Col> cols(ncols - 1);
  std::vector<bool> incomplete(nrows, false);
  for (std::size_t j = 0; j < ncols - 1; ++j) {
    Col& c = cols[j];
    c.name = header[j + 1];
    c.values.resize(nrows);
    c.labels.resize(nrows);
    for (std::size_t i = 0; i < nrows; ++i) {
      const std::string& cell = raw[j][i];
      if (detail::missing_field(cell)) {
        incomplete[i] = true;
        continue;
      }
      c.labels[i] = cell;
      if (c.numeric && !detail::parse_field_double(cell, c.values[i]))
        c.numeric = false;
    }
  }

  CovariateTable table;
  // Expanded column list: numeric columns as-is, categorical columns as
  // dummies (sorted levels, first = reference, dropped).
  struct Expanded {
    std::size_t src;
    bool numeric;
    std::string level;  // for dummies
  };
  std::vector<Expanded> expanded;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].numeric) {
      table.columns.push_back(cols[j].name);
      expanded.push_back({j, true, ""});
    } else {
      std::set<std::string> levels;
      for (std::size_t i = 0; i < nrows; ++i)
        if (!incomplete[i] && !cols[j].labels[i].empty())
          levels.insert(cols[j].labels[i]);
      if (levels.size() < 2)
        throw DataError(origin + ": categorical column " + cols[j].name +
                        " has fewer than 2 levels");
      bool first = true;
      for (const auto& level : levels) {
        if (first) {  // reference level
          first = false;
          continue;
        }
        std::string name = cols[j].name + "=" + level;
        table.columns.push_back(name);
        table.indicator_columns.insert(name);
        expanded.push_back({j, false, level});
      }
    }
  }

  for (std::size_t i = 0; i < nrows; ++i) {
    if (incomplete[i]) {
      ++table.dropped_incomplete;
      continue;
    }
    std::vector<double> values;
    values.reserve(expanded.size());
    for (const auto& e : expanded)
      values.push_back(e.numeric ? cols[e.src].values[i]
                                 : (cols[e.src].labels[i] == e.level ? 1.0
                                                                     : 0.0));
    auto [it, inserted] = table.rows.emplace(group_ids[i],
                                             std::move(values));
    if (!inserted)
      throw DataError(origin + ": duplicate group_id " + group_ids[i]);
  }
  return table;
}

inline CovariateTable load_covariates_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open covariates file: " + path);
  char sep = path.size() >= 4 && path.substr(path.size() - 4) == ".csv"
                 ? ','
                 : '\t';
  return load_covariates(is, path, sep);
}

struct JoinReport {
  std::uint64_t joined = 0;
  std::uint64_t records_without_covariates = 0;
  std::uint64_t covariate_rows_dropped_incomplete = 0;
};

// Attaches covariate columns to the records; records whose group has no
// (complete) covariate row are dropped and counted.
inline JoinReport join_covariates(std::vector<GroupBiasRecord>& records,
                                  const CovariateTable& table) {
  JoinReport report;
  report.covariate_rows_dropped_incomplete = table.dropped_incomplete;
  std::vector<GroupBiasRecord> kept;
  kept.reserve(records.size());
  for (auto& rec : records) {
    auto it = table.rows.find(rec.group_id);
    if (it == table.rows.end()) {
      ++report.records_without_covariates;
      continue;
    }
    for (std::size_t j = 0; j < table.columns.size(); ++j)
      rec.covariates[table.columns[j]] = it->second[j];
    kept.push_back(std::move(rec));
  }
  records = std::move(kept);
  report.joined = records.size();
  return report;
}

}  // namespace weatkit
