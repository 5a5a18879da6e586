#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hcace/tree.hpp"
#include "hcace/types.hpp"

namespace hcace {

// A data-generating template over I matched pairs.  Covariates are shared
// within a pair.  Encouragement is one-sided by default (d0 = 0), the
// complier effect is either a function of the first two binary covariates
// (four cells, indexed x1*2 + x2) or of a richer synthetic survey profile,
// and exactly one unit per pair is encouraged, chosen uniformly.
struct ScenarioConfig {
  std::string name = "custom";
  std::size_t n_pairs = 2000;
  std::size_t n_covariates = 6;          // cell template: iid Bernoulli(0.5)
  std::array<double, 4> effect_cells{};  // complier effect per (x1, x2) cell
  double compliance_base = 0.5;          // overall take-up rate pi
  std::array<double, 4> compliance_constants{};  // per-cell take-up shifts
  bool one_sided = true;                 // d0 = 0 for every unit
  double always_taker_rate = 0.0;        // P(d0 = 1) when two-sided
  std::uint64_t seed = 20240901;
  TreeConfig tree;                       // discovery preset for this scenario
  bool survey_template = false;          // age/sex/... profile instead of cells
  double survey_scale = 1.0;             // 1 = small, 2 = moderate, 4 = large
  std::vector<std::size_t> true_modifiers;  // covariates that change the effect
};

// Take-up rate for one cell: the base rate shifted by `constant` in
// proportion to the headroom on the nearer side (base <= 0.5 scales the rate
// itself, base > 0.5 scales the distance to one), clamped to [0, 1].
double cell_compliance(double base, double constant);

// Effect and take-up surfaces of the survey template, in covariate order
// age, sex, english, education, asian, msa, black, hispanic.
double survey_take_up(const std::vector<double>& x);
double survey_effect(const std::vector<double>& x, double scale);

std::vector<ScenarioConfig> builtin_scenarios();

// Lookup by name ("no", "slight", "strong", "complex", "opposite",
// "honesty", "null", "survey-small", "survey-moderate", "survey-large").
// Throws UsageError for unknown names.
ScenarioConfig scenario_by_name(const std::string& name);

// Applies a named per-cell take-up pattern: "same" (0,0,0,0), "similar"
// (-0.1,-0.1,+0.1,+0.1), "different1" (-0.5,-0.5,+0.5,+0.5), or
// "different2" (-0.3,-0.5,+0.1,+0.7).  Throws UsageError for unknown names.
void apply_compliance_setting(ScenarioConfig& config, const std::string& setting);

// Full set of potential outcomes for every unit, before any encouragement
// has been assigned.  units[i][0] and units[i][1] are the two members of
// pair i.
struct ScienceTable {
  std::vector<std::array<PotentialUnit, 2>> units;
  std::vector<double> pair_effect;    // complier effect of pair i
  std::vector<int> pair_cell;         // x1*2 + x2, or -1 for the survey template
  std::vector<double> pair_take_up;   // P(d1 = 1) of pair i
  std::vector<std::string> covariate_names;
};

struct SimDataset {
  std::vector<MatchedPair> pairs;
  std::vector<double> pair_effect;
  std::vector<int> pair_cell;
  std::vector<double> pair_take_up;
  std::vector<std::string> covariate_names;
  double realized_compliance = 0.0;   // mean of d_treated - d_control
};

// Draws covariates and potential outcomes for every pair.  `stream` selects
// an independent generator substream of config.seed.
ScienceTable generate_science(const ScenarioConfig& config, std::uint64_t stream);

// Assigns encouragement uniformly within each pair of an existing science
// table and realizes the observed units.  Draws exactly one Bernoulli(0.5)
// per pair from `stream`.
SimDataset realize_dataset(const ScenarioConfig& config, const ScienceTable& science,
                           std::uint64_t stream);

// Science and encouragement drawn from one substream, interleaved per pair.
// Two calls with equal (config, stream) are identical.
SimDataset generate_dataset(const ScenarioConfig& config, std::uint64_t stream = 0);

// Covariate matrix over pair covariates with the dataset's column names.
CovariateMatrix covariates_of(const SimDataset& data);

struct PipelineParams {
  double lambda0 = 0.0;
  double alpha = 0.05;
};

// Aggregated over all replications of discover-then-test on fresh datasets.
//
// The true discovery rate is reported under three accountings of which
// hypotheses the procedure "suggested":
//   tdr                 leaf hypotheses plus internal-node hypotheses that
//                       were actually evaluated by the closed testing pass
//                       (the primary definition; see tdr_note),
//   tdr_with_skipped    every node of the tree, whether or not the shortcut
//                       skipped its subset,
//   tdr_subgroups_only  like tdr but the all-pairs hypothesis is excluded,
//                       so an unsplit tree suggests nothing.
// All three pool counts across replications.
struct MetricsRecord {
  std::string scenario;
  double compliance_base = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_reps = 0;

  double tdr = 0.0;
  double tdr_with_skipped = 0.0;
  double tdr_subgroups_only = 0.0;
  std::size_t suggested_false_nulls = 0;
  std::size_t rejected_false_nulls = 0;
  std::size_t suggested_false_nulls_with_skipped = 0;
  std::size_t rejected_false_nulls_with_skipped = 0;
  std::size_t suggested_false_nulls_subgroups = 0;
  std::size_t rejected_false_nulls_subgroups = 0;
  std::string tdr_note;

  double fpr = 0.0;      // mean per-replication FP / (FP + TN) over covariates
  double f_score = 0.0;  // mean per-replication TP / (TP + 0.5 (FP + FN))

  double fwer = 0.0;        // share of replications with any true-null rejection
  double mean_type1 = 0.0;  // mean per-replication share of true nulls rejected

  double mean_leaves = 0.0;
  double share_split = 0.0;

  // Whole-study effect-ratio estimate, one per replication.
  double hl_mean = 0.0;
  double hl_coverage = 0.0;        // CI covering the true constant effect
  bool constant_effect = false;    // coverage is meaningful only when true
  double true_effect = 0.0;
  std::size_t hl_degenerate = 0;
  std::array<std::size_t, 4> ci_shape_counts{};  // finite, line, rays, empty

  // Leaf composition by the leaf's dominant generating cell (cell templates
  // only), for diagnosing power dips from small-effect leaves.
  struct CellLeafStats {
    std::size_t leaves = 0;
    std::size_t pairs = 0;
    std::size_t false_null = 0;
    std::size_t rejected = 0;
  };
  std::array<CellLeafStats, 4> cell_leaves{};
};

// Runs n_reps independent replications (fresh dataset, |Y| tree, closed
// test) and aggregates.  Replication r uses substream r, so results are
// identical for any thread count; n_threads = 0 means hardware concurrency.
MetricsRecord run_replications(const ScenarioConfig& config,
                               const PipelineParams& params, std::size_t n_reps,
                               std::size_t n_threads = 0);

// Per-replication first-leaf p-values under re-randomized encouragement of
// one fixed science table, with a Kolmogorov-Smirnov comparison to
// Uniform(0, 1).  use_abs selects |Y| (honest) or signed Y (selection-biased)
// as the tree outcome; the tested hypothesis is always the zero-effect null.
struct HonestyDiagnostic {
  std::vector<double> p_values;
  double ks_distance = 0.0;
  double ks_p_value = 1.0;
  double mean_leaves = 0.0;
  double share_split = 0.0;
};

HonestyDiagnostic honesty_diagnostic(const ScenarioConfig& config,
                                     std::size_t n_reps, bool use_abs,
                                     std::size_t n_threads = 0);

}  // namespace hcace
