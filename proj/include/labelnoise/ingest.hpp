#pragma once

// Tabular CSV to Dataset conversion.

#include <cmath>
#include <cstddef>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include "labelnoise/csv.hpp"
#include "labelnoise/distributions.hpp"
#include "labelnoise/errors.hpp"
#include "labelnoise/format.hpp"

namespace labelnoise {

/// Every column except `label_column` is a numeric feature; labels must be
/// integers forming the contiguous range 1..K with K >= 2.
inline Dataset ingest_csv(std::istream& in, const std::string& label_column) {
  const CsvTable table = read_csv(in);
  const auto label_col = table.column(label_column);
  if (!label_col) throw ValidationError("no column named '" + label_column + "'");
  if (table.header.size() < 2) throw ValidationError("need at least one feature column");
  if (table.rows.empty()) throw ValidationError("CSV has no data rows");

  const std::size_t dim = table.header.size() - 1;
  std::vector<double> features;
  std::vector<std::size_t> labels;
  features.reserve(table.rows.size() * dim);
  std::set<std::int64_t> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.row_lines[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == *label_col) continue;
      const auto v = parse_double(row[c]);
      if (!v) {
        throw ParseError(line, "row " + std::to_string(r + 1) + ", column '" + table.header[c] +
                                   "': not numeric ('" + row[c] + "')");
      }
      features.push_back(*v);
    }
    const auto label = parse_int(row[*label_col]);
    if (!label) {
      throw ParseError(line, "row " + std::to_string(r + 1) + ", column '" + label_column +
                                 "': label must be an integer ('" + row[*label_col] + "')");
    }
    seen.insert(*label);
    labels.push_back(static_cast<std::size_t>(*label));
  }
  const std::int64_t k = static_cast<std::int64_t>(seen.size());
  if (*seen.begin() != 1 || *seen.rbegin() != k) {
    throw ValidationError("labels must be contiguous 1..K");
  }
  if (k < 2) throw ValidationError("labels must cover at least 2 classes");
  for (auto& l : labels) --l;
  return Dataset(dim, static_cast<std::size_t>(k), std::move(features), std::move(labels));
}

}  // namespace labelnoise
