#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcace/iv_inference.hpp"
#include "hcace/types.hpp"

namespace hcace {

// Hard cap on leaves for subset enumeration (2^16 - 1 subsets).
inline constexpr std::size_t kMaxClosedTestingLeaves = 16;

enum class SubsetDecision : std::uint8_t {
  rejected,        // tested, |z| > z_crit
  retained,        // tested, |z| <= z_crit
  auto_retained,   // fewer than two pairs; cannot be tested
  skipped,         // accepted without testing via an accepted superset
};

struct SubsetHypothesis {
  std::uint32_t mask = 0;              // bit g = leaf g (0-based)
  std::vector<std::size_t> leaves;     // 0-based leaf indices, ascending
  std::size_t n_pairs = 0;
  SubsetDecision decision = SubsetDecision::retained;
  std::optional<IvTestResult> test;    // present iff the subset was tested
};

// Outcome of testing every non-empty leaf subset in decreasing cardinality
// (lexicographic within a cardinality), skipping subsets of accepted
// hypotheses.  A leaf's null is rejected iff every subset containing it was
// rejected, which the enumeration order reduces to its singleton's decision.
struct ClosedTestReport {
  std::size_t n_leaves = 0;
  double lambda0 = 0.0;
  double alpha = 0.05;
  double z_crit = 0.0;
  std::vector<SubsetDecision> statuses;     // indexed by mask; statuses[0] unused
  std::vector<bool> leaf_rejected;
  std::vector<IvTestResult> leaf_tests;     // per-leaf test at lambda0
  std::vector<std::optional<IvEstimate>> leaf_estimates;  // per-leaf effect + CI
  std::vector<SubsetHypothesis> records;    // detailed log (kept when G <= 12)
  std::size_t n_tested = 0;
  std::size_t n_skipped = 0;

  SubsetDecision status_of(std::uint32_t mask) const { return statuses[mask]; }
};

// What the engine needs to know about one pooled subset.
enum class SubsetOutcome : std::uint8_t { reject, accept, auto_retain };

// Core enumeration/propagation, independent of how subsets are tested.
// `evaluate` is called only for subsets not already accepted from above.
ClosedTestReport closed_test_engine(
    std::size_t n_leaves,
    const std::function<SubsetOutcome(std::uint32_t)>& evaluate);

// Full procedure on matched pairs: pools each subset's pairs, applies the
// studentized pair-difference test at lambda0, and accepts when
// |z| <= z_{1 - alpha/2}.  Throws DataError when the grouping has more than
// kMaxClosedTestingLeaves leaves (grow a smaller tree in that case).
ClosedTestReport run_closed_test(const Grouping& grouping,
                                 std::span<const MatchedPair> pairs,
                                 double lambda0, double alpha);

// Reference implementation: evaluates every one of the 2^G - 1 subsets with
// pair_statistics directly (no shortcut) and derives each leaf's verdict from
// the closure definition.  Requires G <= 12.
ClosedTestReport brute_force_closed_test(const Grouping& grouping,
                                         std::span<const MatchedPair> pairs,
                                         double lambda0, double alpha);

std::string subset_label(std::uint32_t mask);

}  // namespace hcace
