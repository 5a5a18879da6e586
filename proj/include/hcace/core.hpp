#pragma once

#include <span>
#include <vector>

#include "hcace/types.hpp"

namespace hcace {

// Encouraged-minus-unencouraged difference of lambda0-adjusted responses
// (r - lambda0 * d) for one pair.
AdjustedDifference adjusted_difference(const MatchedPair& pair, double lambda0);

std::vector<AdjustedDifference> adjusted_differences(std::span<const MatchedPair> pairs,
                                                     double lambda0);

// Mean of (d_treated - d_control) over the given pairs; the proportion of
// compliers under one-sided compliance.  Throws DataError on an empty span.
double compliance_rate(std::span<const MatchedPair> pairs);

double compliance_rate(std::span<const MatchedPair> pairs,
                       std::span<const std::size_t> subset);

// Recombines per-leaf effect estimates into a study-wide effect using
// estimated complier counts as weights:
//   sum_g w_g * lambda_g,  w_g = (leaf complier count) / (total complier count).
// Throws DegeneracyError (naming the leaf) if a leaf has no estimated
// compliers or the total is zero.
double weighted_decomposition(const Grouping& grouping,
                              std::span<const MatchedPair> pairs,
                              std::span<const double> leaf_effects);

}  // namespace hcace
