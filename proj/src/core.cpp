#include "hcace/core.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "hcace/errors.hpp"

namespace hcace {

void validate_grouping(const Grouping& grouping, std::size_t n_pairs) {
  if (grouping.leaves.empty()) throw DataError("grouping has no leaves");
  std::vector<char> seen(n_pairs, 0);
  std::size_t total = 0;
  for (std::size_t g = 0; g < grouping.leaves.size(); ++g) {
    const auto& leaf = grouping.leaves[g];
    if (leaf.empty())
      throw DataError("grouping leaf " + std::to_string(g + 1) + " is empty");
    for (std::size_t i : leaf) {
      if (i >= n_pairs)
        throw DataError("grouping references pair index " + std::to_string(i) +
                        " outside the study");
      if (seen[i])
        throw DataError("pair index " + std::to_string(i) +
                        " appears in more than one leaf");
      seen[i] = 1;
      ++total;
    }
  }
  if (total != n_pairs) throw DataError("grouping does not cover every pair");
}

AdjustedDifference adjusted_difference(const MatchedPair& pair, double lambda0) {
  const double adj_t = pair.treated.r - lambda0 * pair.treated.d;
  const double adj_c = pair.control.r - lambda0 * pair.control.d;
  AdjustedDifference out;
  out.index = pair.index;
  out.lambda0 = lambda0;
  out.y = adj_t - adj_c;
  out.y_abs = std::fabs(out.y);
  return out;
}

std::vector<AdjustedDifference> adjusted_differences(std::span<const MatchedPair> pairs,
                                                     double lambda0) {
  std::vector<AdjustedDifference> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(adjusted_difference(p, lambda0));
  return out;
}

double compliance_rate(std::span<const MatchedPair> pairs) {
  if (pairs.empty()) throw DataError("compliance rate of an empty pair set");
  double sum = 0.0;
  for (const auto& p : pairs) sum += p.treated.d - p.control.d;
  return sum / static_cast<double>(pairs.size());
}

double compliance_rate(std::span<const MatchedPair> pairs,
                       std::span<const std::size_t> subset) {
  if (subset.empty()) throw DataError("compliance rate of an empty pair set");
  double sum = 0.0;
  for (std::size_t i : subset) sum += pairs[i].treated.d - pairs[i].control.d;
  return sum / static_cast<double>(subset.size());
}

double weighted_decomposition(const Grouping& grouping,
                              std::span<const MatchedPair> pairs,
                              std::span<const double> leaf_effects) {
  validate_grouping(grouping, pairs.size());
  if (leaf_effects.size() != grouping.size())
    throw DataError("one effect estimate per leaf is required");
  double total = 0.0;
  std::vector<double> counts(grouping.size(), 0.0);
  for (std::size_t g = 0; g < grouping.size(); ++g) {
    for (std::size_t i : grouping.leaves[g])
      counts[g] += pairs[i].treated.d - pairs[i].control.d;
    if (counts[g] <= 0.0)
      throw DegeneracyError("leaf " + std::to_string(g + 1) +
                            " has no estimated compliers");
    total += counts[g];
  }
  double combined = 0.0;
  for (std::size_t g = 0; g < grouping.size(); ++g)
    combined += counts[g] / total * leaf_effects[g];
  return combined;
}

}  // namespace hcace
