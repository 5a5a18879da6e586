#include "hcace/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>
#include <utility>

#include "hcace/closed_testing.hpp"
#include "hcace/core.hpp"
#include "hcace/errors.hpp"
#include "hcace/iv_inference.hpp"
#include "hcace/rng.hpp"
#include "hcace/stats.hpp"

namespace hcace {

namespace {

constexpr const char* kTdrNote =
    "tdr counts leaf hypotheses plus internal-node hypotheses actually "
    "evaluated; tdr_with_skipped counts every tree node; tdr_subgroups_only "
    "drops the all-pairs hypothesis so unsplit trees suggest nothing";

TreeConfig liberal_tree() {
  TreeConfig t;
  t.cp = 1e-4;
  t.max_depth = 4;
  return t;
}

TreeConfig survey_tree() {
  TreeConfig t;
  t.cp = 0.001;
  t.min_split = 90;
  t.min_bucket = 30;
  t.max_depth = 7;
  return t;
}

ScenarioConfig survey_scenario(std::string name, double scale) {
  ScenarioConfig c;
  c.name = std::move(name);
  c.survey_template = true;
  c.survey_scale = scale;
  c.n_pairs = 11808;
  c.n_covariates = 8;
  c.tree = survey_tree();
  c.true_modifiers = {0, 1, 2, 3, 4};  // age, sex, english, education, asian
  return c;
}

void validate_config(const ScenarioConfig& config) {
  if (config.n_pairs == 0) throw UsageError("scenario needs at least one pair");
  if (!(config.compliance_base >= 0.0 && config.compliance_base <= 1.0))
    throw UsageError("take-up rate must lie in [0, 1]");
  if (!(config.always_taker_rate >= 0.0 && config.always_taker_rate <= 1.0))
    throw UsageError("always-taker rate must lie in [0, 1]");
  if (config.survey_template) {
    if (!(config.survey_scale > 0.0))
      throw UsageError("survey effect scale must be positive");
  } else if (config.n_covariates < 2) {
    throw UsageError("cell scenarios need at least two covariates");
  }
  for (std::size_t v : config.true_modifiers)
    if (v >= (config.survey_template ? std::size_t{8} : config.n_covariates))
      throw UsageError("true modifier index out of range");
}

std::vector<std::string> covariate_names_of(const ScenarioConfig& config) {
  if (config.survey_template)
    return {"age",   "sex", "english", "education",
            "asian", "msa", "black",   "hispanic"};
  std::vector<std::string> names(config.n_covariates);
  for (std::size_t j = 0; j < config.n_covariates; ++j) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "x%zu", j + 1);
    names[j] = buf;
  }
  return names;
}

struct PairDraw {
  std::array<PotentialUnit, 2> units;
  double effect = 0.0;
  int cell = -1;
  double take_up = 0.0;
};

// One pair's science draws, in a frozen order: covariates, then per unit
// (take-up indicator, always-taker indicator when two-sided, noise).
PairDraw draw_pair(const ScenarioConfig& config,
                   const std::array<double, 4>& cell_rates, CounterRng& rng) {
  PairDraw out;
  std::vector<double> x;
  if (config.survey_template) {
    x.resize(8);
    x[0] = static_cast<double>(20 + rng.below(45));  // age
    x[1] = rng.bernoulli(0.56) ? 1.0 : 0.0;          // sex (1 = female)
    x[2] = rng.bernoulli(0.92) ? 1.0 : 0.0;          // english
    x[3] = rng.bernoulli(0.30) ? 1.0 : 0.0;          // education
    x[4] = rng.bernoulli(0.03) ? 1.0 : 0.0;          // asian
    x[5] = rng.bernoulli(0.77) ? 1.0 : 0.0;          // msa
    x[6] = rng.bernoulli(0.10) ? 1.0 : 0.0;          // black
    x[7] = rng.bernoulli(0.15) ? 1.0 : 0.0;          // hispanic
    out.cell = -1;
    out.take_up = survey_take_up(x);
    out.effect = survey_effect(x, config.survey_scale);
  } else {
    x.resize(config.n_covariates);
    for (std::size_t j = 0; j < config.n_covariates; ++j)
      x[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    out.cell = static_cast<int>(2.0 * x[0] + x[1]);
    out.take_up = cell_rates[static_cast<std::size_t>(out.cell)];
    out.effect = config.effect_cells[static_cast<std::size_t>(out.cell)];
  }
  for (auto& unit : out.units) {
    int d1 = rng.bernoulli(out.take_up) ? 1 : 0;
    int d0 = 0;
    if (!config.one_sided) {
      d0 = rng.bernoulli(config.always_taker_rate) ? 1 : 0;
      if (d0 == 1) d1 = 1;  // taking without encouragement implies taking with it
    }
    double base = rng.normal();
    unit.d0 = d0;
    unit.d1 = d1;
    unit.r0 = base + d0 * out.effect;
    unit.r1 = base + d1 * out.effect;
    unit.x = x;
  }
  return out;
}

std::array<double, 4> cell_rates_of(const ScenarioConfig& config) {
  std::array<double, 4> rates{};
  for (std::size_t cell = 0; cell < 4; ++cell)
    rates[cell] =
        cell_compliance(config.compliance_base, config.compliance_constants[cell]);
  return rates;
}

MatchedPair realize_pair(const std::array<PotentialUnit, 2>& units,
                         std::size_t index, bool first_encouraged,
                         const std::vector<double>& x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%zu.1", index + 1);
  std::string id1 = buf;
  std::snprintf(buf, sizeof buf, "p%zu.2", index + 1);
  std::string id2 = buf;
  MatchedPair pair;
  pair.index = index;
  if (first_encouraged) {
    pair.treated = units[0].observe(1, std::move(id1));
    pair.control = units[1].observe(0, std::move(id2));
  } else {
    pair.treated = units[1].observe(1, std::move(id2));
    pair.control = units[0].observe(0, std::move(id1));
  }
  pair.pair_covariates = x;
  return pair;
}

// Runs fn(0), ..., fn(n-1) across up to n_threads workers.  The lowest-index
// exception wins, so failures are reproducible regardless of thread count.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t n_threads, Fn&& fn) {
  if (n == 0) return;
  std::size_t hw = std::thread::hardware_concurrency();
  if (n_threads == 0) n_threads = hw > 0 ? hw : 1;
  n_threads = std::min(n_threads, n);
  std::vector<std::exception_ptr> errors(n);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  for (std::size_t i = 0; i < n; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
}

struct RepOutcome {
  std::size_t n_leaves = 0;
  bool split = false;
  // [variant][0] = suggested false nulls, [variant][1] = rejected false nulls
  std::array<std::array<std::size_t, 2>, 3> tdr{};
  bool any_false_rejection = false;
  double type1_share = 0.0;
  int tp = 0, fp = 0, fn = 0, tn = 0;
  double hl_point = 0.0;
  bool hl_ok = false;
  bool hl_covered = false;
  int ci_shape = 0;
  std::array<MetricsRecord::CellLeafStats, 4> cells{};
};

RepOutcome run_one(const ScenarioConfig& config, const PipelineParams& params,
                   std::uint64_t rep, bool constant_effect) {
  RepOutcome out;
  SimDataset data = generate_dataset(config, rep);
  auto diffs = adjusted_differences(data.pairs, params.lambda0);
  std::vector<double> outcome(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) outcome[i] = diffs[i].y_abs;
  CovariateMatrix x = covariates_of(data);
  FittedTree tree = fit_tree(outcome, x, config.tree);
  Grouping grouping = grouping_from_tree(tree);
  ClosedTestReport report =
      run_closed_test(grouping, data.pairs, params.lambda0, params.alpha);

  std::size_t n_leaves = grouping.size();
  out.n_leaves = n_leaves;
  out.split = n_leaves > 1;
  const std::uint32_t full = static_cast<std::uint32_t>((1u << n_leaves) - 1u);

  // Leaves whose null is false: some member pair's effect differs from
  // lambda0.
  std::uint32_t effect_mask = 0;
  std::vector<char> leaf_false(n_leaves, 0);
  for (std::size_t g = 0; g < n_leaves; ++g) {
    for (std::size_t idx : grouping.leaves[g]) {
      if (data.pair_effect[idx] != params.lambda0) {
        leaf_false[g] = 1;
        effect_mask |= 1u << g;
        break;
      }
    }
  }

  for (const TreeNode& node : tree.nodes) {
    const auto mask = static_cast<std::uint32_t>(node.leaf_mask);
    SubsetDecision status = report.status_of(mask);
    bool evaluated = status == SubsetDecision::rejected ||
                     status == SubsetDecision::retained;
    bool rejected = status == SubsetDecision::rejected;
    bool false_null = (mask & effect_mask) != 0;
    if (!false_null) continue;
    bool counted[3] = {node.is_leaf() || evaluated, true,
                       (node.is_leaf() || evaluated) && mask != full};
    for (int v = 0; v < 3; ++v) {
      if (!counted[v]) continue;
      out.tdr[static_cast<std::size_t>(v)][0] += 1;
      if (rejected) out.tdr[static_cast<std::size_t>(v)][1] += 1;
    }
  }

  // Error control over every subset hypothesis of the closure.
  std::size_t true_nulls = 0;
  std::size_t false_rejections = 0;
  for (std::uint32_t m = 1; m <= full; ++m) {
    if ((m & effect_mask) != 0) continue;
    ++true_nulls;
    if (report.status_of(m) == SubsetDecision::rejected) ++false_rejections;
  }
  out.any_false_rejection = false_rejections > 0;
  out.type1_share = true_nulls > 0
                        ? static_cast<double>(false_rejections) /
                              static_cast<double>(true_nulls)
                        : 0.0;

  // A covariate is declared a modifier when the tree splits on it and the
  // closed test rejects one of that split's children.
  std::uint64_t declared = 0;
  for (const TreeNode& node : tree.nodes) {
    if (node.is_leaf()) continue;
    const auto left = static_cast<std::uint32_t>(
        tree.nodes[static_cast<std::size_t>(node.left)].leaf_mask);
    const auto right = static_cast<std::uint32_t>(
        tree.nodes[static_cast<std::size_t>(node.right)].leaf_mask);
    if (report.status_of(left) == SubsetDecision::rejected ||
        report.status_of(right) == SubsetDecision::rejected)
      declared |= std::uint64_t{1} << node.split->covariate;
  }
  std::uint64_t truth = 0;
  for (std::size_t v : config.true_modifiers) truth |= std::uint64_t{1} << v;
  const std::size_t n_cov = x.n_cols;
  for (std::size_t v = 0; v < n_cov; ++v) {
    bool d = (declared >> v) & 1u;
    bool t = (truth >> v) & 1u;
    out.tp += d && t;
    out.fp += d && !t;
    out.fn += !d && t;
    out.tn += !d && !t;
  }

  IvEstimate est = hl_estimate(data.pairs, params.alpha);
  out.ci_shape = static_cast<int>(est.ci_shape);
  if (!est.degenerate && std::isfinite(est.point)) {
    out.hl_ok = true;
    out.hl_point = est.point;
    if (constant_effect)
      out.hl_covered = ci_contains(est, config.effect_cells[0]);
  }

  if (!config.survey_template) {
    for (std::size_t g = 0; g < n_leaves; ++g) {
      std::array<std::size_t, 4> counts{};
      for (std::size_t idx : grouping.leaves[g])
        counts[static_cast<std::size_t>(data.pair_cell[idx])] += 1;
      std::size_t dominant = 0;
      for (std::size_t c = 1; c < 4; ++c)
        if (counts[c] > counts[dominant]) dominant = c;
      auto& cell = out.cells[dominant];
      cell.leaves += 1;
      cell.pairs += grouping.leaves[g].size();
      cell.false_null += leaf_false[g];
      cell.rejected += report.leaf_rejected[g] ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

double cell_compliance(double base, double constant) {
  double rate = base <= 0.5 ? base + constant * base : base + constant * (1.0 - base);
  return std::clamp(rate, 0.0, 1.0);
}

double survey_take_up(const std::vector<double>& x) {
  double age = x[0], english = x[2], asian = x[4];
  double rate = 0.32 - 0.15 * (1.0 - english) + 0.15 * english * asian -
                0.05 * (age < 36.0 ? 1.0 : 0.0);
  return std::clamp(rate, 0.0, 1.0);
}

double survey_effect(const std::vector<double>& x, double scale) {
  double age = x[0], sex = x[1], english = x[2], education = x[3], asian = x[4];
  return scale * (0.25 + 4.0 / age + 0.1 * (1.0 - education) -
                  0.25 * (1.0 - english) + 0.35 * asian +
                  0.2 * (1.0 - sex) * (age >= 36.0 ? 1.0 : 0.0));
}

std::vector<ScenarioConfig> builtin_scenarios() {
  std::vector<ScenarioConfig> all;

  ScenarioConfig no;
  no.name = "no";
  no.effect_cells = {0.5, 0.5, 0.5, 0.5};
  all.push_back(no);

  ScenarioConfig slight;
  slight.name = "slight";
  slight.effect_cells = {0.7, 0.7, 0.3, 0.3};
  slight.true_modifiers = {0};
  all.push_back(slight);

  ScenarioConfig strong;
  strong.name = "strong";
  strong.effect_cells = {0.9, 0.9, 0.1, 0.1};
  strong.true_modifiers = {0};
  all.push_back(strong);

  ScenarioConfig complex_;
  complex_.name = "complex";
  complex_.effect_cells = {1.5, 0.0, 0.0, 0.5};
  complex_.true_modifiers = {0, 1};
  all.push_back(complex_);

  ScenarioConfig opposite;
  opposite.name = "opposite";
  opposite.effect_cells = {0.3, -0.3, 0.7, -0.7};
  opposite.true_modifiers = {0, 1};
  all.push_back(opposite);

  ScenarioConfig honesty;
  honesty.name = "honesty";
  honesty.effect_cells = {2.0, 0.0, 0.0, 0.0};
  honesty.true_modifiers = {0, 1};
  honesty.tree = liberal_tree();
  all.push_back(honesty);

  ScenarioConfig null_;
  null_.name = "null";
  null_.effect_cells = {0.0, 0.0, 0.0, 0.0};
  null_.tree = liberal_tree();
  all.push_back(null_);

  all.push_back(survey_scenario("survey-small", 1.0));
  all.push_back(survey_scenario("survey-moderate", 2.0));
  all.push_back(survey_scenario("survey-large", 4.0));
  return all;
}

ScenarioConfig scenario_by_name(const std::string& name) {
  for (ScenarioConfig& c : builtin_scenarios())
    if (c.name == name) return std::move(c);
  throw UsageError("unknown scenario '" + name + "'");
}

void apply_compliance_setting(ScenarioConfig& config, const std::string& setting) {
  if (setting == "same")
    config.compliance_constants = {0.0, 0.0, 0.0, 0.0};
  else if (setting == "similar")
    config.compliance_constants = {-0.1, -0.1, 0.1, 0.1};
  else if (setting == "different1")
    config.compliance_constants = {-0.5, -0.5, 0.5, 0.5};
  else if (setting == "different2")
    config.compliance_constants = {-0.3, -0.5, 0.1, 0.7};
  else
    throw UsageError("unknown take-up setting '" + setting + "'");
}

ScienceTable generate_science(const ScenarioConfig& config, std::uint64_t stream) {
  validate_config(config);
  ScienceTable table;
  table.covariate_names = covariate_names_of(config);
  table.units.reserve(config.n_pairs);
  table.pair_effect.reserve(config.n_pairs);
  table.pair_cell.reserve(config.n_pairs);
  table.pair_take_up.reserve(config.n_pairs);
  const auto rates = cell_rates_of(config);
  CounterRng rng(config.seed, stream);
  for (std::size_t i = 0; i < config.n_pairs; ++i) {
    PairDraw draw = draw_pair(config, rates, rng);
    table.units.push_back(std::move(draw.units));
    table.pair_effect.push_back(draw.effect);
    table.pair_cell.push_back(draw.cell);
    table.pair_take_up.push_back(draw.take_up);
  }
  return table;
}

SimDataset realize_dataset(const ScenarioConfig& config, const ScienceTable& science,
                           std::uint64_t stream) {
  SimDataset data;
  data.pair_effect = science.pair_effect;
  data.pair_cell = science.pair_cell;
  data.pair_take_up = science.pair_take_up;
  data.covariate_names = science.covariate_names;
  data.pairs.reserve(science.units.size());
  CounterRng rng(config.seed, stream);
  for (std::size_t i = 0; i < science.units.size(); ++i)
    data.pairs.push_back(realize_pair(science.units[i], i, rng.bernoulli(0.5),
                                      science.units[i][0].x));
  data.realized_compliance = compliance_rate(data.pairs);
  return data;
}

SimDataset generate_dataset(const ScenarioConfig& config, std::uint64_t stream) {
  validate_config(config);
  SimDataset data;
  data.covariate_names = covariate_names_of(config);
  data.pairs.reserve(config.n_pairs);
  data.pair_effect.reserve(config.n_pairs);
  data.pair_cell.reserve(config.n_pairs);
  data.pair_take_up.reserve(config.n_pairs);
  const auto rates = cell_rates_of(config);
  CounterRng rng(config.seed, stream);
  for (std::size_t i = 0; i < config.n_pairs; ++i) {
    PairDraw draw = draw_pair(config, rates, rng);
    bool first_encouraged = rng.bernoulli(0.5);
    data.pairs.push_back(
        realize_pair(draw.units, i, first_encouraged, draw.units[0].x));
    data.pair_effect.push_back(draw.effect);
    data.pair_cell.push_back(draw.cell);
    data.pair_take_up.push_back(draw.take_up);
  }
  data.realized_compliance = compliance_rate(data.pairs);
  return data;
}

CovariateMatrix covariates_of(const SimDataset& data) {
  CovariateMatrix x;
  x.n_rows = data.pairs.size();
  x.n_cols = data.covariate_names.empty() && !data.pairs.empty()
                 ? data.pairs.front().pair_covariates.size()
                 : data.covariate_names.size();
  x.values.resize(x.n_rows * x.n_cols);
  x.kinds.assign(x.n_cols, CovariateKind::numeric);
  x.names = data.covariate_names;
  for (std::size_t i = 0; i < x.n_rows; ++i)
    for (std::size_t j = 0; j < x.n_cols; ++j)
      x.values[j * x.n_rows + i] = data.pairs[i].pair_covariates[j];
  return x;
}

MetricsRecord run_replications(const ScenarioConfig& config,
                               const PipelineParams& params, std::size_t n_reps,
                               std::size_t n_threads) {
  if (n_reps == 0) throw UsageError("need at least one replication");
  validate_config(config);
  bool constant_effect = !config.survey_template &&
                         config.effect_cells[0] == config.effect_cells[1] &&
                         config.effect_cells[1] == config.effect_cells[2] &&
                         config.effect_cells[2] == config.effect_cells[3];

  std::vector<RepOutcome> outcomes(n_reps);
  parallel_for(n_reps, n_threads, [&](std::size_t rep) {
    outcomes[rep] = run_one(config, params, rep, constant_effect);
  });

  MetricsRecord rec;
  rec.scenario = config.name;
  rec.compliance_base = config.compliance_base;
  rec.n_pairs = config.n_pairs;
  rec.n_reps = n_reps;
  rec.tdr_note = kTdrNote;
  rec.constant_effect = constant_effect;
  rec.true_effect = constant_effect ? config.effect_cells[0] : 0.0;

  double fpr_sum = 0.0, f_sum = 0.0, type1_sum = 0.0;
  std::size_t fwer_count = 0, leaves_sum = 0, split_count = 0;
  double hl_sum = 0.0;
  std::size_t hl_n = 0, hl_cover = 0;
  for (const RepOutcome& o : outcomes) {
    for (int v = 0; v < 3; ++v) {
      auto sug = o.tdr[static_cast<std::size_t>(v)][0];
      auto rej = o.tdr[static_cast<std::size_t>(v)][1];
      if (v == 0) {
        rec.suggested_false_nulls += sug;
        rec.rejected_false_nulls += rej;
      } else if (v == 1) {
        rec.suggested_false_nulls_with_skipped += sug;
        rec.rejected_false_nulls_with_skipped += rej;
      } else {
        rec.suggested_false_nulls_subgroups += sug;
        rec.rejected_false_nulls_subgroups += rej;
      }
    }
    fwer_count += o.any_false_rejection ? 1 : 0;
    type1_sum += o.type1_share;
    double negatives = o.fp + o.tn;
    fpr_sum += negatives > 0 ? o.fp / negatives : 0.0;
    double f_denom = o.tp + 0.5 * (o.fp + o.fn);
    f_sum += f_denom > 0 ? o.tp / f_denom : 1.0;
    leaves_sum += o.n_leaves;
    split_count += o.split ? 1 : 0;
    if (o.hl_ok) {
      ++hl_n;
      hl_sum += o.hl_point;
      hl_cover += o.hl_covered ? 1 : 0;
    }
    rec.ci_shape_counts[static_cast<std::size_t>(o.ci_shape)] += 1;
    for (std::size_t c = 0; c < 4; ++c) {
      rec.cell_leaves[c].leaves += o.cells[c].leaves;
      rec.cell_leaves[c].pairs += o.cells[c].pairs;
      rec.cell_leaves[c].false_null += o.cells[c].false_null;
      rec.cell_leaves[c].rejected += o.cells[c].rejected;
    }
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  rec.tdr = ratio(rec.rejected_false_nulls, rec.suggested_false_nulls);
  rec.tdr_with_skipped = ratio(rec.rejected_false_nulls_with_skipped,
                               rec.suggested_false_nulls_with_skipped);
  rec.tdr_subgroups_only = ratio(rec.rejected_false_nulls_subgroups,
                                 rec.suggested_false_nulls_subgroups);
  const auto reps = static_cast<double>(n_reps);
  rec.fwer = static_cast<double>(fwer_count) / reps;
  rec.mean_type1 = type1_sum / reps;
  rec.fpr = fpr_sum / reps;
  rec.f_score = f_sum / reps;
  rec.mean_leaves = static_cast<double>(leaves_sum) / reps;
  rec.share_split = static_cast<double>(split_count) / reps;
  rec.hl_degenerate = n_reps - hl_n;
  rec.hl_mean = hl_n > 0 ? hl_sum / static_cast<double>(hl_n) : 0.0;
  rec.hl_coverage = hl_n > 0 && constant_effect
                        ? static_cast<double>(hl_cover) / static_cast<double>(hl_n)
                        : 0.0;
  return rec;
}

HonestyDiagnostic honesty_diagnostic(const ScenarioConfig& config,
                                     std::size_t n_reps, bool use_abs,
                                     std::size_t n_threads) {
  if (n_reps == 0) throw UsageError("need at least one replication");
  ScienceTable science = generate_science(config, 0);

  HonestyDiagnostic diag;
  diag.p_values.assign(n_reps, 0.0);
  std::vector<std::size_t> leaf_counts(n_reps, 0);
  parallel_for(n_reps, n_threads, [&](std::size_t rep) {
    SimDataset data = realize_dataset(config, science, rep + 1);
    auto diffs = adjusted_differences(data.pairs, 0.0);
    std::vector<double> outcome(diffs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i)
      outcome[i] = use_abs ? diffs[i].y_abs : diffs[i].y;
    CovariateMatrix x = covariates_of(data);
    FittedTree tree = fit_tree(outcome, x, config.tree);
    const TreeNode& first_leaf =
        tree.nodes[static_cast<std::size_t>(tree.leaf_node_ids.front())];
    IvTestResult test = pair_statistics(data.pairs, first_leaf.rows, 0.0);
    diag.p_values[rep] = test.p_value;
    leaf_counts[rep] = tree.leaf_node_ids.size();
  });

  std::size_t leaves_sum = 0, split_count = 0;
  for (std::size_t c : leaf_counts) {
    leaves_sum += c;
    split_count += c > 1 ? 1 : 0;
  }
  const auto reps = static_cast<double>(n_reps);
  diag.mean_leaves = static_cast<double>(leaves_sum) / reps;
  diag.share_split = static_cast<double>(split_count) / reps;
  diag.ks_distance = stats::ks_distance_uniform(diag.p_values);
  diag.ks_p_value = stats::ks_pvalue(n_reps, diag.ks_distance);
  return diag;
}

}  // namespace hcace
