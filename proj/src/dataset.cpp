#include "hcace/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "hcace/errors.hpp"

namespace hcace {

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_missing(const std::string& raw) { return trimmed(raw).empty(); }

double parse_number(const std::string& raw, const std::string& column,
                    std::size_t data_row) {
  std::string t = trimmed(raw);
  const char* first = t.data();
  const char* last = t.data() + t.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw DataError("column '" + column + "', data row " +
                    std::to_string(data_row) + ": '" + t + "' is not a number");
  return value;
}

int parse_binary(const std::string& raw, const std::string& column,
                 std::size_t data_row) {
  if (is_missing(raw))
    throw DataError("column '" + column + "', data row " +
                    std::to_string(data_row) + ": missing value");
  double value = parse_number(raw, column, data_row);
  if (value != 0.0 && value != 1.0)
    throw DataError("column '" + column + "', data row " +
                    std::to_string(data_row) + ": expected 0 or 1, got '" +
                    trimmed(raw) + "'");
  return static_cast<int>(value);
}

double median_of(std::vector<double> values) {
  // callers guarantee non-empty
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

Dataset ingest_table(const CsvTable& table, const Schema& schema) {
  const std::size_t width = table.header.size();
  std::optional<std::size_t> id_col;
  if (schema.id) id_col = table.column(*schema.id);
  const std::size_t z_col = table.column(schema.instrument);
  const std::size_t d_col = table.column(schema.treatment);
  const std::size_t r_col = table.column(schema.response);
  std::vector<std::size_t> cov_cols;
  cov_cols.reserve(schema.covariates.size());
  for (const std::string& name : schema.covariates)
    cov_cols.push_back(table.column(name));
  std::vector<bool> categorical(schema.covariates.size(), false);
  for (const std::string& name : schema.categorical) {
    auto it = std::find(schema.covariates.begin(), schema.covariates.end(), name);
    if (it == schema.covariates.end())
      throw DataError("categorical column '" + name +
                      "' is not a declared covariate");
    categorical[static_cast<std::size_t>(it - schema.covariates.begin())] = true;
  }

  Dataset out;
  std::vector<std::size_t> kept;  // indices into table.rows
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const CsvRow& row = table.rows[i];
    const std::size_t data_row = i + 1;
    if (row.size() != width)
      throw DataError("data row " + std::to_string(data_row) + " has " +
                      std::to_string(row.size()) + " fields, header has " +
                      std::to_string(width));
    if (is_missing(row[r_col])) {
      ++out.rejected_rows;
      continue;
    }
    Unit unit;
    unit.id = id_col ? trimmed(row[*id_col]) : "r" + std::to_string(data_row);
    unit.z = parse_binary(row[z_col], schema.instrument, data_row);
    unit.d = parse_binary(row[d_col], schema.treatment, data_row);
    unit.r = parse_number(row[r_col], schema.response, data_row);
    out.units.push_back(std::move(unit));
    kept.push_back(i);
  }

  // Encode covariates column by column over the kept rows.
  const std::size_t n = kept.size();
  std::vector<std::vector<double>> encoded;   // one vector per emitted column
  std::vector<std::vector<double>> indicators;
  std::vector<std::string> indicator_names;
  for (std::size_t c = 0; c < cov_cols.size(); ++c) {
    const std::string& name = schema.covariates[c];
    const std::size_t col = cov_cols[c];
    std::vector<double> values(n, 0.0);
    std::vector<bool> missing(n, false);
    std::vector<std::string> dict;
    if (categorical[c]) {
      std::map<std::string, int> codes;
      std::vector<std::string> raw(n);
      for (std::size_t i = 0; i < n; ++i) {
        raw[i] = trimmed(table.rows[kept[i]][col]);
        if (raw[i].empty())
          missing[i] = true;
        else
          codes.emplace(raw[i], 0);
      }
      // Sorted dictionary of observed levels; the missing level goes last so
      // real level codes do not depend on whether missingness occurred.
      for (const auto& [level, _] : codes) dict.push_back(level);
      for (std::size_t k = 0; k < dict.size(); ++k) codes[dict[k]] = static_cast<int>(k);
      bool any_missing = std::find(missing.begin(), missing.end(), true) != missing.end();
      int missing_code = static_cast<int>(dict.size());
      if (any_missing) dict.push_back("(missing)");
      for (std::size_t i = 0; i < n; ++i)
        values[i] = missing[i] ? missing_code : codes[raw[i]];
    } else {
      std::vector<double> present;
      for (std::size_t i = 0; i < n; ++i) {
        const std::string& cell = table.rows[kept[i]][col];
        if (is_missing(cell)) {
          missing[i] = true;
        } else {
          values[i] = parse_number(cell, name, kept[i] + 1);
          present.push_back(values[i]);
        }
      }
      bool any_missing = std::find(missing.begin(), missing.end(), true) != missing.end();
      if (any_missing) {
        if (present.empty())
          throw DataError("column '" + name + "' has no usable values");
        double fill = median_of(std::move(present));
        for (std::size_t i = 0; i < n; ++i)
          if (missing[i]) values[i] = fill;
      }
    }
    out.covariate_names.push_back(name);
    out.covariate_kinds.push_back(categorical[c] ? CovariateKind::categorical
                                                 : CovariateKind::numeric);
    out.levels.push_back(std::move(dict));
    encoded.push_back(std::move(values));
    if (std::find(missing.begin(), missing.end(), true) != missing.end()) {
      std::vector<double> flag(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) flag[i] = missing[i] ? 1.0 : 0.0;
      indicators.push_back(std::move(flag));
      indicator_names.push_back(name + "_missing");
    }
  }
  for (std::size_t k = 0; k < indicators.size(); ++k) {
    out.covariate_names.push_back(indicator_names[k]);
    out.covariate_kinds.push_back(CovariateKind::numeric);
    out.levels.emplace_back();
    encoded.push_back(std::move(indicators[k]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.units[i].x.resize(encoded.size());
    for (std::size_t j = 0; j < encoded.size(); ++j)
      out.units[i].x[j] = encoded[j][i];
  }
  return out;
}

Dataset ingest_csv(const std::string& path, const Schema& schema) {
  return ingest_table(read_csv_file(path), schema);
}

CsvTable pairs_to_table(std::span<const MatchedPair> pairs,
                        const std::vector<std::string>& covariate_names) {
  CsvTable table;
  table.header.push_back("pair_id");
  for (const char* prefix : {"t_", "c_"}) {
    table.header.push_back(prefix + std::string("id"));
    table.header.push_back(prefix + std::string("z"));
    table.header.push_back(prefix + std::string("d"));
    table.header.push_back(prefix + std::string("r"));
    for (const std::string& name : covariate_names)
      table.header.push_back(prefix + name);
  }
  for (const std::string& name : covariate_names)
    table.header.push_back("pc_" + name);

  for (const MatchedPair& pair : pairs) {
    CsvRow row;
    row.push_back(std::to_string(pair.index + 1));
    for (const Unit* unit : {&pair.treated, &pair.control}) {
      row.push_back(unit->id);
      row.push_back(std::to_string(unit->z));
      row.push_back(std::to_string(unit->d));
      row.push_back(format_double(unit->r));
      if (unit->x.size() != covariate_names.size())
        throw DataError("pair " + std::to_string(pair.index + 1) +
                        ": unit covariate count does not match the names");
      for (double v : unit->x) row.push_back(format_double(v));
    }
    if (pair.pair_covariates.size() != covariate_names.size())
      throw DataError("pair " + std::to_string(pair.index + 1) +
                      ": pair covariate count does not match the names");
    for (double v : pair.pair_covariates) row.push_back(format_double(v));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_pairs_csv(const std::string& path, std::span<const MatchedPair> pairs,
                     const std::vector<std::string>& covariate_names) {
  write_csv_file(path, pairs_to_table(pairs, covariate_names));
}

PairsFile pairs_from_table(const CsvTable& table) {
  if (table.header.empty() || table.header.front() != "pair_id")
    throw DataError("not a pairs file: first column must be pair_id");
  // Recover covariate names from the trailing pc_ block.
  std::size_t pc_start = table.header.size();
  while (pc_start > 0 && table.header[pc_start - 1].rfind("pc_", 0) == 0)
    --pc_start;
  PairsFile out;
  for (std::size_t j = pc_start; j < table.header.size(); ++j)
    out.covariate_names.push_back(table.header[j].substr(3));
  const std::size_t p = out.covariate_names.size();
  const std::size_t expected = 1 + 2 * (4 + p) + p;
  if (table.header.size() != expected)
    throw DataError("pairs file header has " +
                    std::to_string(table.header.size()) + " columns, expected " +
                    std::to_string(expected));

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const CsvRow& row = table.rows[i];
    const std::size_t data_row = i + 1;
    if (row.size() != expected)
      throw DataError("pairs file data row " + std::to_string(data_row) +
                      " has " + std::to_string(row.size()) +
                      " fields, expected " + std::to_string(expected));
    MatchedPair pair;
    pair.index = i;
    std::size_t at = 1;
    for (Unit* unit : {&pair.treated, &pair.control}) {
      unit->id = row[at++];
      unit->z = parse_binary(row[at++], "z", data_row);
      unit->d = parse_binary(row[at++], "d", data_row);
      unit->r = parse_number(row[at++], "r", data_row);
      unit->x.resize(p);
      for (std::size_t j = 0; j < p; ++j)
        unit->x[j] = parse_number(row[at++], out.covariate_names[j], data_row);
    }
    if (pair.treated.z != 1 || pair.control.z != 0)
      throw DataError("pairs file data row " + std::to_string(data_row) +
                      ": t_z must be 1 and c_z must be 0");
    pair.pair_covariates.resize(p);
    for (std::size_t j = 0; j < p; ++j)
      pair.pair_covariates[j] =
          parse_number(row[at++], "pc_" + out.covariate_names[j], data_row);
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

PairsFile read_pairs_csv(const std::string& path) {
  return pairs_from_table(read_csv_file(path));
}

}  // namespace hcace
