#include "hcace/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "hcace/errors.hpp"

namespace hcace {

CovariateMatrix CovariateMatrix::from_pairs(std::span<const MatchedPair> pairs) {
  CovariateMatrix x;
  x.n_rows = pairs.size();
  x.n_cols = pairs.empty() ? 0 : pairs.front().pair_covariates.size();
  x.values.resize(x.n_rows * x.n_cols);
  for (std::size_t i = 0; i < x.n_rows; ++i) {
    if (pairs[i].pair_covariates.size() != x.n_cols)
      throw DataError("pair covariate vectors have inconsistent lengths");
    for (std::size_t j = 0; j < x.n_cols; ++j)
      x.values[j * x.n_rows + i] = pairs[i].pair_covariates[j];
  }
  x.kinds.assign(x.n_cols, CovariateKind::numeric);
  for (std::size_t j = 0; j < x.n_cols; ++j)
    x.names.push_back("x" + std::to_string(j + 1));
  return x;
}

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Candidate {
  bool found = false;
  double gain = 0.0;
  SplitRule rule;
};

// Gain of splitting `rows` of a node with total (n, sum) into a left part
// with (nl, sl):  sum_left^2/n_left + sum_right^2/n_right - sum^2/n.
double split_gain(double n, double sum, double nl, double sl) {
  const double nr = n - nl;
  const double sr = sum - sl;
  return sl * sl / nl + sr * sr / nr - sum * sum / n;
}

void consider(Candidate& best, double gain, SplitRule rule) {
  // Strict improvement keeps the earliest candidate on ties, which is the
  // lowest covariate index and then the smallest threshold by scan order.
  if (!best.found || gain > best.gain) {
    best.found = true;
    best.gain = gain;
    best.rule = std::move(rule);
  }
}

Candidate best_numeric_split(std::span<const double> y, const CovariateMatrix& x,
                             const std::vector<std::size_t>& rows, std::size_t j,
                             std::size_t min_bucket) {
  std::vector<std::pair<double, std::size_t>> vals;
  vals.reserve(rows.size());
  for (std::size_t r : rows) vals.emplace_back(x.at(r, j), r);
  std::sort(vals.begin(), vals.end());

  const double n = static_cast<double>(rows.size());
  double total = 0.0;
  for (std::size_t r : rows) total += y[r];

  Candidate best;
  double nl = 0.0, sl = 0.0;
  for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
    nl += 1.0;
    sl += y[vals[k].second];
    if (vals[k].first == vals[k + 1].first) continue;  // not a boundary
    if (nl < static_cast<double>(min_bucket)) continue;
    if (n - nl < static_cast<double>(min_bucket)) break;
    const double a = vals[k].first;
    const double b = vals[k + 1].first;
    double threshold = a + (b - a) / 2.0;
    if (!(threshold > a)) threshold = b;  // midpoint collapsed onto a
    SplitRule rule;
    rule.covariate = j;
    rule.threshold = threshold;
    consider(best, split_gain(n, total, nl, sl), std::move(rule));
  }
  return best;
}

Candidate best_categorical_split(std::span<const double> y, const CovariateMatrix& x,
                                 const std::vector<std::size_t>& rows, std::size_t j,
                                 std::size_t min_bucket) {
  std::map<int, std::pair<double, double>> level_stats;  // level -> (n, sum)
  for (std::size_t r : rows) {
    const int level = static_cast<int>(std::lround(x.at(r, j)));
    auto& st = level_stats[level];
    st.first += 1.0;
    st.second += y[r];
  }
  if (level_stats.size() < 2) return {};

  // The one-dimensional shortcut: order levels by mean response and scan
  // ordered prefixes as if the covariate were ordinal.
  struct LevelStat {
    int level;
    double n, sum, mean;
  };
  std::vector<LevelStat> levels;
  for (const auto& [level, st] : level_stats)
    levels.push_back({level, st.first, st.second, st.second / st.first});
  std::sort(levels.begin(), levels.end(), [](const LevelStat& a, const LevelStat& b) {
    if (a.mean != b.mean) return a.mean < b.mean;
    return a.level < b.level;
  });

  const double n = static_cast<double>(rows.size());
  double total = 0.0;
  for (const auto& l : levels) total += l.sum;

  Candidate best;
  double nl = 0.0, sl = 0.0;
  std::vector<int> prefix;
  for (std::size_t m = 0; m + 1 < levels.size(); ++m) {
    nl += levels[m].n;
    sl += levels[m].sum;
    prefix.push_back(levels[m].level);
    if (nl < static_cast<double>(min_bucket)) continue;
    if (n - nl < static_cast<double>(min_bucket)) break;
    SplitRule rule;
    rule.covariate = j;
    rule.categorical = true;
    rule.left_levels = prefix;
    std::sort(rule.left_levels.begin(), rule.left_levels.end());
    consider(best, split_gain(n, total, nl, sl), std::move(rule));
  }
  return best;
}

bool goes_left(const SplitRule& rule, double value) {
  if (!rule.categorical) return value < rule.threshold;
  const int level = static_cast<int>(std::lround(value));
  return std::binary_search(rule.left_levels.begin(), rule.left_levels.end(), level);
}

std::string describe(const SplitRule& rule, const std::vector<std::string>& names,
                     bool left) {
  const std::string& name = names[rule.covariate];
  if (!rule.categorical)
    return name + (left ? " < " : " >= ") + format_number(rule.threshold);
  std::string set;
  for (std::size_t i = 0; i < rule.left_levels.size(); ++i) {
    if (i > 0) set += ",";
    set += std::to_string(rule.left_levels[i]);
  }
  return name + (left ? " in {" : " not in {") + set + "}";
}

struct Grower {
  std::span<const double> y;
  const CovariateMatrix& x;
  const TreeConfig& cfg;
  FittedTree& tree;

  void grow(int node_id) {
    TreeNode& node = tree.nodes[node_id];
    double sum = 0.0;
    for (std::size_t r : node.rows) sum += y[r];
    node.mean = sum / static_cast<double>(node.rows.size());
    double ss = 0.0;
    for (std::size_t r : node.rows) {
      const double d = y[r] - node.mean;
      ss += d * d;
    }
    node.ss = ss;

    if (node.rows.size() < cfg.min_split || node.depth >= cfg.max_depth) {
      finish_leaf(node_id);
      return;
    }

    Candidate best;
    for (std::size_t j = 0; j < x.n_cols; ++j) {
      const Candidate c = x.kinds[j] == CovariateKind::numeric
                              ? best_numeric_split(y, x, node.rows, j, cfg.min_bucket)
                              : best_categorical_split(y, x, node.rows, j, cfg.min_bucket);
      if (c.found) consider(best, c.gain, c.rule);
    }
    if (!best.found || !(best.gain > 0.0) || best.gain < cfg.cp * tree.root_ss) {
      finish_leaf(node_id);
      return;
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : node.rows) {
      if (goes_left(best.rule, x.at(r, best.rule.covariate)))
        left_rows.push_back(r);
      else
        right_rows.push_back(r);
    }
    node.split = best.rule;

    const int left_id = add_child(node_id, std::move(left_rows), true);
    grow(left_id);
    const int right_id = add_child(node_id, std::move(right_rows), false);
    grow(right_id);
  }

  int add_child(int parent_id, std::vector<std::size_t> rows, bool left) {
    const int id = static_cast<int>(tree.nodes.size());
    TreeNode child;
    child.id = id;
    child.parent = parent_id;
    child.depth = tree.nodes[parent_id].depth + 1;
    child.rows = std::move(rows);
    const std::string cond =
        describe(*tree.nodes[parent_id].split, tree.covariate_names, left);
    const std::string& base = tree.nodes[parent_id].path;
    child.path = base.empty() ? cond : base + " & " + cond;
    (left ? tree.nodes[parent_id].left : tree.nodes[parent_id].right) = id;
    tree.nodes.push_back(std::move(child));
    return id;
  }

  void finish_leaf(int node_id) {
    TreeNode& node = tree.nodes[node_id];
    node.leaf_index = static_cast<int>(tree.leaf_node_ids.size());
    tree.leaf_node_ids.push_back(node_id);
  }
};

}  // namespace

FittedTree fit_tree(std::span<const double> y, const CovariateMatrix& x,
                    const TreeConfig& config) {
  if (y.empty()) throw DataError("cannot fit a tree on zero rows");
  if (x.n_rows != y.size())
    throw DataError("covariate matrix and response length disagree");
  if (config.min_split < 2 || config.min_bucket < 1 || config.max_depth < 1 ||
      config.cp < 0.0)
    throw UsageError("invalid tree configuration");
  for (double v : y)
    if (!std::isfinite(v)) throw DataError("non-finite response in tree fit");
  for (double v : x.values)
    if (!std::isfinite(v)) throw DataError("non-finite covariate in tree fit");

  FittedTree tree;
  tree.config = config;
  tree.covariate_names = x.names;

  TreeNode root;
  root.id = 0;
  root.rows.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) root.rows[i] = i;
  tree.nodes.push_back(std::move(root));

  {
    double sum = 0.0;
    for (double v : y) sum += v;
    const double mean = sum / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    tree.root_ss = ss;
  }

  Grower grower{y, x, config, tree};
  grower.grow(0);

  // Bit g of a node's mask marks leaf g among its descendants.
  if (tree.leaf_node_ids.size() <= 64) {
    for (auto it = tree.nodes.rbegin(); it != tree.nodes.rend(); ++it) {
      if (it->is_leaf())
        it->leaf_mask = std::uint64_t{1} << it->leaf_index;
      else
        it->leaf_mask =
            tree.nodes[it->left].leaf_mask | tree.nodes[it->right].leaf_mask;
    }
  }
  return tree;
}

Grouping grouping_from_tree(const FittedTree& tree) {
  Grouping g;
  for (int id : tree.leaf_node_ids) {
    const TreeNode& node = tree.nodes[id];
    g.leaves.push_back(node.rows);
    g.provenance.push_back(node.path.empty() ? "(all pairs)" : node.path);
  }
  return g;
}

std::string to_dot(const FittedTree& tree) {
  std::ostringstream out;
  out << "digraph tree {\n  node [shape=box, fontname=\"Helvetica\"];\n";
  for (const auto& node : tree.nodes) {
    out << "  n" << node.id << " [label=\"";
    if (node.is_leaf()) {
      out << "s" << node.leaf_index + 1 << "\\nn=" << node.rows.size()
          << "\\nmean=" << format_number(node.mean);
    } else {
      out << describe(*node.split, tree.covariate_names, true) << "\\nn="
          << node.rows.size();
    }
    out << "\"];\n";
  }
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    out << "  n" << node.id << " -> n" << node.left << " [label=\"yes\"];\n";
    out << "  n" << node.id << " -> n" << node.right << " [label=\"no\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_text(const FittedTree& tree) {
  std::ostringstream out;
  struct Walk {
    const FittedTree& tree;
    std::ostringstream& out;
    void visit(int id, int indent) {
      const TreeNode& node = tree.nodes[id];
      for (int i = 0; i < indent; ++i) out << "  ";
      if (node.is_leaf()) {
        out << "leaf s" << node.leaf_index + 1 << ": n=" << node.rows.size()
            << " mean=" << format_number(node.mean) << "\n";
        return;
      }
      out << "split: " << describe(*node.split, tree.covariate_names, true)
          << " (n=" << node.rows.size() << ")\n";
      visit(node.left, indent + 1);
      visit(node.right, indent + 1);
    }
  };
  Walk{tree, out}.visit(0, 0);
  return out.str();
}

}  // namespace hcace
