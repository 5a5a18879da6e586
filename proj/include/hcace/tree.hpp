#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcace/types.hpp"

namespace hcace {

struct TreeConfig {
  double cp = 0.005;        // a split must reduce SS by >= cp * root SS
  std::size_t min_split = 20;   // smallest node that may be split
  std::size_t min_bucket = 7;   // smallest allowed child
  std::size_t max_depth = 30;   // root has depth 0; nodes at max_depth stay leaves
};

enum class CovariateKind { numeric, categorical };

// Column-major covariate matrix with per-column kind and name.  Categorical
// columns hold integer level codes stored as doubles.
struct CovariateMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;  // column-major, n_rows * n_cols
  std::vector<CovariateKind> kinds;
  std::vector<std::string> names;

  double at(std::size_t row, std::size_t col) const {
    return values[col * n_rows + row];
  }
  static CovariateMatrix from_pairs(std::span<const MatchedPair> pairs);
};

struct SplitRule {
  std::size_t covariate = 0;
  bool categorical = false;
  double threshold = 0.0;             // numeric: left iff x < threshold
  std::vector<int> left_levels;       // categorical: left iff level in set
};

struct TreeNode {
  int id = 0;
  int parent = -1;
  int left = -1;
  int right = -1;
  std::size_t depth = 0;
  std::vector<std::size_t> rows;
  double mean = 0.0;
  double ss = 0.0;
  std::optional<SplitRule> split;
  int leaf_index = -1;                // position among leaves, left to right
  std::string path;                   // conjunction of split conditions
  std::uint64_t leaf_mask = 0;        // bit g set iff leaf g descends from here
                                      // (0 throughout when the tree has > 64 leaves)

  bool is_leaf() const { return left < 0; }
};

// ANOVA regression tree grown greedily: each admissible split maximizes the
// within-node sum-of-squares reduction, candidates are midpoints of
// consecutive distinct values (numeric) or ordered-by-mean level prefixes
// (categorical), and ties prefer the lowest covariate index, then the
// smallest threshold.  Nodes with fewer than min_split rows, nodes at
// max_depth, and splits whose children would drop below min_bucket or whose
// gain falls below cp * root SS all stay unsplit.  Fitting fewer than
// min_split rows yields a single-leaf tree.
struct FittedTree {
  TreeConfig config;
  double root_ss = 0.0;
  std::vector<TreeNode> nodes;        // preorder; nodes[0] is the root
  std::vector<int> leaf_node_ids;     // left-to-right
  std::vector<std::string> covariate_names;

  std::size_t n_leaves() const { return leaf_node_ids.size(); }
};

FittedTree fit_tree(std::span<const double> y, const CovariateMatrix& x,
                    const TreeConfig& config);

// The tree's leaves as a partition of row indices, with split-path provenance.
Grouping grouping_from_tree(const FittedTree& tree);

std::string to_dot(const FittedTree& tree);
std::string to_text(const FittedTree& tree);

}  // namespace hcace
