#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "weatkit/bias.hpp"
#include "weatkit/error.hpp"
#include "weatkit/numfmt.hpp"
#include "weatkit/stats.hpp"

namespace weatkit {

// group_id, mean, one column per repetition, relative B-name frequency.
inline void write_group_bias_tsv(std::ostream& os,
                                 const std::vector<GroupBiasRecord>&
                                     records) {
  if (records.empty()) throw DataError("group bias TSV: no records");
  std::size_t reps = records[0].weat_values.size();
  os << "group_id\tweat_mean";
  for (std::size_t r = 1; r <= reps; ++r) os << "\tweat_rep_" << r;
  os << "\trel_b_name_freq\n";
  for (const auto& rec : records) {
    if (rec.weat_values.size() != reps)
      throw DataError("group bias TSV: repetition count differs for group " +
                      rec.group_id);
    os << rec.group_id << '\t' << format_double(rec.weat_mean);
    for (double v : rec.weat_values) os << '\t' << format_double(v);
    os << '\t' << format_double(rec.rel_b_name_freq) << '\n';
  }
}

// Human-oriented layout: one row per outcome, "beta stars" per control set.
inline void write_association_tsv(std::ostream& os,
                                  const AssociationTable& table) {
  os << "outcome";
  for (const auto& label : table.control_labels) os << '\t' << label;
  os << '\n';
  for (std::size_t i = 0; i < table.outcomes.size(); ++i) {
    os << table.outcomes[i];
    for (const auto& cell : table.cells[i]) {
      os << '\t';
      if (cell.ok())
        os << format_fixed(cell.beta, 2) << cell.stars;
      else
        os << "NA";
    }
    os << '\n';
  }
}

// Machine-readable variant with exact beta/p per cell.
inline nlohmann::json association_to_json(const AssociationTable& table) {
  nlohmann::json j;
  j["columns"] = table.control_labels;
  j["outcomes"] = table.outcomes;
  j["n"] = table.n_rows;
  nlohmann::json cells = nlohmann::json::object();
  for (std::size_t i = 0; i < table.outcomes.size(); ++i) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t c = 0; c < table.control_labels.size(); ++c) {
      const AssociationCell& cell = table.cells[i][c];
      nlohmann::json jc;
      if (cell.ok()) {
        jc["beta"] = cell.beta;
        jc["p"] = cell.p;
        jc["stars"] = cell.stars;
      } else {
        jc["error"] = cell.error;
      }
      row[table.control_labels[c]] = std::move(jc);
    }
    cells[table.outcomes[i]] = std::move(row);
  }
  j["cells"] = std::move(cells);
  return j;
}

inline void write_lowess_tsv(std::ostream& os, std::span<const double> x,
                             std::span<const double> y,
                             std::span<const double> fitted) {
  if (x.size() != y.size() || x.size() != fitted.size())
    throw DataError("lowess TSV: length mismatch");
  os << "x\ty\tfitted\n";
  for (std::size_t i = 0; i < x.size(); ++i)
    os << format_double(x[i]) << '\t' << format_double(y[i]) << '\t'
       << format_double(fitted[i]) << '\n';
}

inline nlohmann::json weat_score_to_json(const WeatScore& score,
                                         const std::vector<std::string>&
                                             dropped = {}) {
  nlohmann::json j;
  j["value"] = score.value;
  if (!score.group_id.empty()) j["group_id"] = score.group_id;
  nlohmann::json pa = nlohmann::json::object();
  for (const auto& [tok, s] : score.pleasant_assoc) pa[tok] = s;
  nlohmann::json ua = nlohmann::json::object();
  for (const auto& [tok, s] : score.unpleasant_assoc) ua[tok] = s;
  j["pleasant_associations"] = std::move(pa);
  j["unpleasant_associations"] = std::move(ua);
  if (!dropped.empty()) j["dropped"] = dropped;
  return j;
}

}  // namespace weatkit
