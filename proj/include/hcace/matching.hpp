#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcace/types.hpp"

namespace hcace {

struct DistanceSpec {
  // Soft caliper: exceeding the width on the chosen covariate adds
  // penalty * (|difference| - width) to the distance instead of forbidding
  // the pairing outright.
  std::optional<std::size_t> caliper_covariate;
  double caliper_width = 0.0;
  double caliper_penalty = 1000.0;
};

// Squared Mahalanobis distances on pooled average ranks, one row per treated
// unit and one column per control unit.  Ranking makes the distance invariant
// to monotone transformations of any covariate; the rank covariance matrix
// has each diagonal entry rescaled to the variance of untied ranks (so that
// heavily tied covariates are not overweighted) and is ridged by
// 1e-8 * trace/dim before inversion.
std::vector<std::vector<double>> rank_mahalanobis_distance(
    std::span<const Unit> treated, std::span<const Unit> control,
    const DistanceSpec& spec = {});

// Exact minimum-cost assignment of the smaller arm to the larger one.
// Returns one control index per treated unit, or -1 for treated units left
// unmatched when controls run short.
std::vector<int> optimal_pair_match(const std::vector<std::vector<double>>& distance);

double assignment_cost(const std::vector<std::vector<double>>& distance,
                       const std::vector<int>& assignment);

enum class PairCovariateSource { treated, control, average };

std::vector<MatchedPair> make_pairs(std::span<const Unit> treated,
                                    std::span<const Unit> control,
                                    const std::vector<int>& assignment,
                                    PairCovariateSource source =
                                        PairCovariateSource::treated);

struct BalanceRow {
  std::string name;
  double smd_before = 0.0;
  double smd_after = 0.0;
  bool flagged = false;     // |smd_after| > 0.25
  bool degenerate = false;  // zero pre-match pooled SD with unequal means
};

struct BalanceReport {
  std::vector<BalanceRow> rows;
};

// Standardized mean differences before and after matching; the denominator is
// the pre-match pooled standard deviation in both columns.
BalanceReport balance_report(std::span<const Unit> treated,
                             std::span<const Unit> control,
                             std::span<const MatchedPair> pairs,
                             const std::vector<std::string>& names = {});

// Internal: exact rectangular assignment, rows <= cols.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace hcace
