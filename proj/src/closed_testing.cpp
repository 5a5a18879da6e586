#include "hcace/closed_testing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "hcace/errors.hpp"
#include "hcace/stats.hpp"

namespace hcace {

namespace {

// Visit all k-of-n combinations in lexicographic order.
template <typename Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
  std::vector<std::size_t> c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = i;
  while (true) {
    fn(std::as_const(c));
    std::size_t i = k;
    while (i > 0 && c[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++c[i - 1];
    for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
  }
}

std::uint32_t mask_of(const std::vector<std::size_t>& leaves) {
  std::uint32_t m = 0;
  for (std::size_t g : leaves) m |= std::uint32_t{1} << g;
  return m;
}

bool accepted_from_above(const std::vector<SubsetDecision>& statuses,
                         std::uint32_t mask, std::size_t n_leaves) {
  // Any accepted strict superset marks this subset accepted; it is enough to
  // look one cardinality up because acceptance propagates level by level.
  for (std::size_t g = 0; g < n_leaves; ++g) {
    const std::uint32_t bit = std::uint32_t{1} << g;
    if (mask & bit) continue;
    switch (statuses[mask | bit]) {
      case SubsetDecision::retained:
      case SubsetDecision::auto_retained:
      case SubsetDecision::skipped:
        return true;
      case SubsetDecision::rejected:
        break;
    }
  }
  return false;
}

}  // namespace

std::string subset_label(std::uint32_t mask) {
  std::string out = "{";
  bool first = true;
  for (std::size_t g = 0; g < 32; ++g) {
    if (!(mask & (std::uint32_t{1} << g))) continue;
    if (!first) out += ",";
    out += "s" + std::to_string(g + 1);
    first = false;
  }
  return out + "}";
}

ClosedTestReport closed_test_engine(
    std::size_t n_leaves,
    const std::function<SubsetOutcome(std::uint32_t)>& evaluate) {
  if (n_leaves == 0) throw DataError("closed testing needs at least one leaf");
  if (n_leaves > kMaxClosedTestingLeaves)
    throw DataError("closed testing supports at most " +
                    std::to_string(kMaxClosedTestingLeaves) +
                    " leaves; fit a smaller tree");
  ClosedTestReport report;
  report.n_leaves = n_leaves;
  report.statuses.assign(std::size_t{1} << n_leaves, SubsetDecision::retained);

  for (std::size_t card = n_leaves; card >= 1; --card) {
    for_each_combination(n_leaves, card, [&](const std::vector<std::size_t>& leaves) {
      const std::uint32_t mask = mask_of(leaves);
      if (card < n_leaves && accepted_from_above(report.statuses, mask, n_leaves)) {
        report.statuses[mask] = SubsetDecision::skipped;
        ++report.n_skipped;
        return;
      }
      switch (evaluate(mask)) {
        case SubsetOutcome::reject:
          report.statuses[mask] = SubsetDecision::rejected;
          break;
        case SubsetOutcome::accept:
          report.statuses[mask] = SubsetDecision::retained;
          break;
        case SubsetOutcome::auto_retain:
          report.statuses[mask] = SubsetDecision::auto_retained;
          break;
      }
      ++report.n_tested;
    });
  }

  report.leaf_rejected.resize(n_leaves);
  for (std::size_t g = 0; g < n_leaves; ++g)
    report.leaf_rejected[g] =
        report.statuses[std::uint32_t{1} << g] == SubsetDecision::rejected;
  return report;
}

namespace {

struct LeafMoments {
  double n = 0.0;
  double sum_v = 0.0;
  double sum_v2 = 0.0;
  double sum_d = 0.0;  // complier count
};

IvTestResult test_from_moments(const LeafMoments& m, double lambda0,
                               std::string subset_id) {
  IvTestResult out;
  out.subset_id = std::move(subset_id);
  out.lambda0 = lambda0;
  out.n_pairs = static_cast<std::size_t>(m.n);
  out.compliance = m.sum_d / m.n;
  out.T = m.sum_v / m.n;
  const double ss = std::max(0.0, m.sum_v2 - m.sum_v * m.sum_v / m.n);
  const double s2 = ss / (m.n * (m.n - 1.0));
  out.S = std::sqrt(s2);
  if (out.S == 0.0) {
    out.degenerate = true;
    if (out.T == 0.0) {
      out.z = 0.0;
      out.p_value = 1.0;
    } else {
      out.z = out.T > 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
      out.p_value = 0.0;
    }
    return out;
  }
  out.z = out.T / out.S;
  out.p_value = stats::two_sided_p(out.z);
  return out;
}

std::vector<std::size_t> leaves_of(std::uint32_t mask) {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < 32; ++g)
    if (mask & (std::uint32_t{1} << g)) out.push_back(g);
  return out;
}

}  // namespace

ClosedTestReport run_closed_test(const Grouping& grouping,
                                 std::span<const MatchedPair> pairs,
                                 double lambda0, double alpha) {
  validate_grouping(grouping, pairs.size());
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0,1)");
  const std::size_t G = grouping.size();
  if (G > kMaxClosedTestingLeaves)
    throw DataError("grouping has " + std::to_string(G) +
                    " leaves; closed testing supports at most " +
                    std::to_string(kMaxClosedTestingLeaves) +
                    " (fit a smaller tree)");
  const double z_crit = stats::normal_quantile(1.0 - alpha / 2.0);

  // Pooled subset statistics decompose into per-leaf sums, so each of the up
  // to 2^G - 1 tests is O(G) after one pass over the pairs.
  std::vector<LeafMoments> moments(G);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t i : grouping.leaves[g]) {
      const MatchedPair& p = pairs[i];
      const double v = (p.treated.r - lambda0 * p.treated.d) -
                       (p.control.r - lambda0 * p.control.d);
      moments[g].n += 1.0;
      moments[g].sum_v += v;
      moments[g].sum_v2 += v * v;
      moments[g].sum_d += p.treated.d - p.control.d;
    }
  }

  const bool keep_records = G <= 12;
  std::vector<SubsetHypothesis> records;

  auto evaluate = [&](std::uint32_t mask) {
    LeafMoments pooled;
    for (std::size_t g = 0; g < G; ++g) {
      if (!(mask & (std::uint32_t{1} << g))) continue;
      pooled.n += moments[g].n;
      pooled.sum_v += moments[g].sum_v;
      pooled.sum_v2 += moments[g].sum_v2;
      pooled.sum_d += moments[g].sum_d;
    }
    SubsetHypothesis rec;
    rec.mask = mask;
    rec.n_pairs = static_cast<std::size_t>(pooled.n);
    SubsetOutcome outcome;
    if (pooled.n < 2.0) {
      rec.decision = SubsetDecision::auto_retained;
      outcome = SubsetOutcome::auto_retain;
    } else {
      const IvTestResult t = test_from_moments(pooled, lambda0, subset_label(mask));
      const bool reject = std::fabs(t.z) > z_crit;
      rec.test = t;
      rec.decision = reject ? SubsetDecision::rejected : SubsetDecision::retained;
      outcome = reject ? SubsetOutcome::reject : SubsetOutcome::accept;
    }
    if (keep_records) {
      rec.leaves = leaves_of(mask);
      records.push_back(std::move(rec));
    }
    return outcome;
  };

  ClosedTestReport report = closed_test_engine(G, evaluate);
  report.lambda0 = lambda0;
  report.alpha = alpha;
  report.z_crit = z_crit;
  report.records = std::move(records);

  for (std::size_t g = 0; g < G; ++g) {
    const auto& leaf = grouping.leaves[g];
    if (moments[g].n >= 2.0) {
      report.leaf_tests.push_back(
          test_from_moments(moments[g], lambda0, "s" + std::to_string(g + 1)));
      report.leaf_estimates.push_back(hl_estimate(pairs, leaf, alpha));
    } else {
      IvTestResult stub;
      stub.subset_id = "s" + std::to_string(g + 1);
      stub.lambda0 = lambda0;
      stub.n_pairs = leaf.size();
      stub.degenerate = true;
      report.leaf_tests.push_back(stub);
      report.leaf_estimates.push_back(std::nullopt);
    }
  }
  return report;
}

ClosedTestReport brute_force_closed_test(const Grouping& grouping,
                                         std::span<const MatchedPair> pairs,
                                         double lambda0, double alpha) {
  validate_grouping(grouping, pairs.size());
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0,1)");
  const std::size_t G = grouping.size();
  if (G > 12) throw DataError("brute-force closed testing requires at most 12 leaves");
  const double z_crit = stats::normal_quantile(1.0 - alpha / 2.0);

  ClosedTestReport report;
  report.n_leaves = G;
  report.lambda0 = lambda0;
  report.alpha = alpha;
  report.z_crit = z_crit;
  const std::size_t n_masks = std::size_t{1} << G;
  report.statuses.assign(n_masks, SubsetDecision::retained);

  std::vector<char> raw_reject(n_masks, 0);
  for (std::uint32_t mask = 1; mask < n_masks; ++mask) {
    std::vector<std::size_t> subset;
    for (std::size_t g = 0; g < G; ++g)
      if (mask & (std::uint32_t{1} << g))
        subset.insert(subset.end(), grouping.leaves[g].begin(),
                      grouping.leaves[g].end());
    std::sort(subset.begin(), subset.end());
    SubsetHypothesis rec;
    rec.mask = mask;
    rec.leaves = leaves_of(mask);
    rec.n_pairs = subset.size();
    if (subset.size() < 2) {
      rec.decision = SubsetDecision::auto_retained;
      report.statuses[mask] = SubsetDecision::auto_retained;
    } else {
      const IvTestResult t =
          pair_statistics(pairs, subset, lambda0, subset_label(mask));
      const bool reject = std::fabs(t.z) > z_crit;
      raw_reject[mask] = reject ? 1 : 0;
      rec.test = t;
      rec.decision = reject ? SubsetDecision::rejected : SubsetDecision::retained;
      report.statuses[mask] = rec.decision;
    }
    ++report.n_tested;
    report.records.push_back(std::move(rec));
  }

  // Closure: a leaf's null is rejected iff every subset containing it is.
  report.leaf_rejected.assign(G, false);
  for (std::size_t g = 0; g < G; ++g) {
    bool all = true;
    for (std::uint32_t mask = 1; mask < n_masks && all; ++mask)
      if (mask & (std::uint32_t{1} << g))
        if (!raw_reject[mask]) all = false;
    report.leaf_rejected[g] = all;
  }

  for (std::size_t g = 0; g < G; ++g) {
    const auto& leaf = grouping.leaves[g];
    if (leaf.size() >= 2) {
      report.leaf_tests.push_back(
          pair_statistics(pairs, leaf, lambda0, "s" + std::to_string(g + 1)));
      report.leaf_estimates.push_back(hl_estimate(pairs, leaf, alpha));
    } else {
      IvTestResult stub;
      stub.subset_id = "s" + std::to_string(g + 1);
      stub.lambda0 = lambda0;
      stub.n_pairs = leaf.size();
      stub.degenerate = true;
      report.leaf_tests.push_back(stub);
      report.leaf_estimates.push_back(std::nullopt);
    }
  }
  return report;
}

}  // namespace hcace
