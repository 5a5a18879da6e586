#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcace/csv.hpp"
#include "hcace/tree.hpp"
#include "hcace/types.hpp"

namespace hcace {

// Which columns of a unit-level CSV hold what.  Covariates may be declared
// categorical; everything else is parsed as numeric.
struct Schema {
  std::optional<std::string> id;  // default: row number
  std::string instrument;
  std::string treatment;
  std::string response;
  std::vector<std::string> covariates;
  std::vector<std::string> categorical;  // subset of `covariates`
};

// Typed unit records with covariates encoded for analysis: numeric columns
// stay numeric (missing cells imputed with the column median), categorical
// columns become level codes over a sorted level dictionary (missing cells
// get a dedicated trailing level), and each column with any missing cell
// gains a trailing 0/1 indicator column named "<name>_missing".
struct Dataset {
  std::vector<Unit> units;
  std::vector<std::string> covariate_names;
  std::vector<CovariateKind> covariate_kinds;
  // Level dictionary per encoded column; empty for numeric columns.
  std::vector<std::vector<std::string>> levels;
  std::size_t rejected_rows = 0;  // rows dropped for a missing response
};

// Parses and encodes per the schema.  Throws DataError when a declared
// column is absent, a row is ragged, or an instrument/treatment cell is not
// 0 or 1 (the message names the data row).  Rows with an empty response cell
// are dropped and counted, never errors.
Dataset ingest_table(const CsvTable& table, const Schema& schema);
Dataset ingest_csv(const std::string& path, const Schema& schema);

// One row per pair: pair_id, then the encouraged unit's fields prefixed t_,
// the unencouraged unit's prefixed c_, then pair covariates prefixed pc_.
CsvTable pairs_to_table(std::span<const MatchedPair> pairs,
                        const std::vector<std::string>& covariate_names);
void write_pairs_csv(const std::string& path, std::span<const MatchedPair> pairs,
                     const std::vector<std::string>& covariate_names);

struct PairsFile {
  std::vector<MatchedPair> pairs;
  std::vector<std::string> covariate_names;
};

// Inverse of pairs_to_table; throws DataError on malformed files.
PairsFile pairs_from_table(const CsvTable& table);
PairsFile read_pairs_csv(const std::string& path);

}  // namespace hcace
