#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hcace {

// One observed unit: binary instrument z, binary realized treatment d,
// response r, and numeric-encoded covariates.
struct Unit {
  std::string id;
  int z = 0;
  int d = 0;
  double r = 0.0;
  std::vector<double> x;
};

// Science-table view of a unit used by the simulator: both potential
// treatments (d0 under z=0, d1 under z=1), both potential responses, and an
// optional unobserved term kept for provenance.
struct PotentialUnit {
  double r0 = 0.0;
  double r1 = 0.0;
  int d0 = 0;
  int d1 = 0;
  std::vector<double> x;
  std::optional<double> u;

  // Response depends on z only through the realized treatment (exclusion).
  Unit observe(int z, std::string id = {}) const {
    Unit out;
    out.id = std::move(id);
    out.z = z;
    out.d = z == 1 ? d1 : d0;
    out.r = out.d == 1 ? r1 : r0;
    out.x = x;
    return out;
  }
};

// A matched pair: the encouraged (z=1) unit, the unencouraged (z=0) unit,
// and the covariate vector used to describe the pair in subgrouping.
struct MatchedPair {
  std::size_t index = 0;  // 0-based position in the study
  Unit treated;
  Unit control;
  std::vector<double> pair_covariates;
};

// Per-pair encouraged-minus-unencouraged difference of lambda0-adjusted
// responses, plus its absolute value used for subgroup discovery.
struct AdjustedDifference {
  std::size_t index = 0;
  double lambda0 = 0.0;
  double y = 0.0;
  double y_abs = 0.0;
};

// A partition of pair indices into G non-empty leaves, with a human-readable
// provenance string per leaf (the split path that produced it).
struct Grouping {
  std::vector<std::vector<std::size_t>> leaves;
  std::vector<std::string> provenance;

  std::size_t size() const { return leaves.size(); }
};

// Throws DataError unless the grouping is a partition of {0, ..., n_pairs-1}
// with non-empty leaves.
void validate_grouping(const Grouping& grouping, std::size_t n_pairs);

}  // namespace hcace
