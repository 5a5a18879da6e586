// Command-line front end: match units into pairs, analyze matched pairs
// (discovery tree plus closed testing), run simulation scenarios, and render
// metric reports as tables.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcace/closed_testing.hpp"
#include "hcace/core.hpp"
#include "hcace/csv.hpp"
#include "hcace/dataset.hpp"
#include "hcace/errors.hpp"
#include "hcace/iv_inference.hpp"
#include "hcace/matching.hpp"
#include "hcace/sim.hpp"
#include "hcace/stats.hpp"
#include "hcace/tree.hpp"
#include "hcace/types.hpp"

namespace {

using hcace::DataError;
using hcace::DegeneracyError;
using hcace::UsageError;
using json = nlohmann::json;

// JSON has no non-finite numbers; fall back to their decimal names.
json json_number(double v) {
  if (std::isfinite(v)) return v;
  return hcace::format_double(v);
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream stream(csv);
  while (std::getline(stream, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
        step <= 0 || hi < lo)
      throw UsageError("grid must be lo:hi:step with step > 0, got '" + text + "'");
    auto count = static_cast<std::size_t>((hi - lo) / step + 1e-9) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  } else {
    for (const std::string& item : split_list(text)) {
      try {
        out.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw UsageError("bad grid value '" + item + "'");
      }
    }
  }
  if (out.empty()) throw UsageError("empty grid '" + text + "'");
  return out;
}

struct TreeFlags {
  double cp = -1.0;  // negative = keep the preset
  int max_depth = -1;
  int min_split = -1;
  int min_bucket = -1;

  void add(CLI::App* cmd) {
    cmd->add_option("--cp", cp, "Split admission threshold as a share of root SS");
    cmd->add_option("--max-depth", max_depth, "Maximum tree depth (root = 0)");
    cmd->add_option("--min-split", min_split, "Smallest node eligible for a split");
    cmd->add_option("--min-bucket", min_bucket, "Smallest allowed child node");
  }
  void apply(hcace::TreeConfig& config) const {
    if (cp >= 0) config.cp = cp;
    if (max_depth >= 0) config.max_depth = static_cast<std::size_t>(max_depth);
    if (min_split >= 0) config.min_split = static_cast<std::size_t>(min_split);
    if (min_bucket >= 0) config.min_bucket = static_cast<std::size_t>(min_bucket);
  }
};

// ---------------------------------------------------------------------------
// match

struct MatchArgs {
  std::string input, pairs_out, balance_out;
  std::string instrument = "z", treatment = "d", response = "r";
  std::string covariates, categorical, id;
  std::string caliper_covariate;
  double caliper_width = 0.0;
  double caliper_penalty = 1000.0;
  std::string pair_source = "treated";
};

int run_match(const MatchArgs& args) {
  hcace::Schema schema;
  if (!args.id.empty()) schema.id = args.id;
  schema.instrument = args.instrument;
  schema.treatment = args.treatment;
  schema.response = args.response;
  schema.covariates = split_list(args.covariates);
  schema.categorical = split_list(args.categorical);
  if (schema.covariates.empty())
    throw UsageError("match needs --covariates");

  hcace::Dataset data = hcace::ingest_csv(args.input, schema);
  std::vector<hcace::Unit> treated, control;
  for (hcace::Unit& unit : data.units)
    (unit.z == 1 ? treated : control).push_back(std::move(unit));
  if (treated.empty() || control.empty())
    throw DataError("need at least one encouraged and one unencouraged unit");

  hcace::DistanceSpec spec;
  spec.caliper_width = args.caliper_width;
  spec.caliper_penalty = args.caliper_penalty;
  if (!args.caliper_covariate.empty()) {
    auto it = std::find(data.covariate_names.begin(), data.covariate_names.end(),
                        args.caliper_covariate);
    if (it == data.covariate_names.end())
      throw UsageError("caliper covariate '" + args.caliper_covariate +
                       "' is not a covariate column");
    spec.caliper_covariate =
        static_cast<std::size_t>(it - data.covariate_names.begin());
  }

  hcace::PairCovariateSource source;
  if (args.pair_source == "treated")
    source = hcace::PairCovariateSource::treated;
  else if (args.pair_source == "control")
    source = hcace::PairCovariateSource::control;
  else if (args.pair_source == "average")
    source = hcace::PairCovariateSource::average;
  else
    throw UsageError("--pair-covariates must be treated, control, or average");

  auto distance = hcace::rank_mahalanobis_distance(treated, control, spec);
  auto assignment = hcace::optimal_pair_match(distance);
  auto pairs = hcace::make_pairs(treated, control, assignment, source);
  if (pairs.empty()) throw DataError("matching produced no pairs");

  hcace::write_pairs_csv(args.pairs_out, pairs, data.covariate_names);
  std::size_t unmatched =
      treated.size() > pairs.size() ? treated.size() - pairs.size() : 0;

  if (!args.balance_out.empty()) {
    hcace::BalanceReport balance =
        hcace::balance_report(treated, control, pairs, data.covariate_names);
    hcace::CsvTable table;
    table.header = {"covariate", "smd_before", "smd_after", "flagged", "degenerate"};
    for (const hcace::BalanceRow& row : balance.rows)
      table.rows.push_back({row.name, hcace::format_double(row.smd_before),
                            hcace::format_double(row.smd_after),
                            row.flagged ? "1" : "0", row.degenerate ? "1" : "0"});
    hcace::write_csv_file(args.balance_out, table);
  }

  std::cout << "matched " << pairs.size() << " pairs from " << treated.size()
            << " encouraged and " << control.size() << " unencouraged units";
  if (unmatched > 0) std::cout << " (" << unmatched << " left unmatched)";
  if (data.rejected_rows > 0)
    std::cout << "; dropped " << data.rejected_rows << " rows with missing response";
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string pairs_in, report_out, leaves_out, dot_out, tree_out;
  std::string categorical;
  double lambda0 = 0.0;
  double alpha = 0.05;
  TreeFlags tree;
};

json test_to_json(const hcace::IvTestResult& t) {
  return json{{"n_pairs", t.n_pairs},
              {"T", json_number(t.T)},
              {"S", json_number(t.S)},
              {"z", json_number(t.z)},
              {"p_value", json_number(t.p_value)},
              {"compliance", json_number(t.compliance)},
              {"degenerate", t.degenerate}};
}

json estimate_to_json(const hcace::IvEstimate& e) {
  return json{{"point", json_number(e.point)},
              {"ci_low", json_number(e.ci_low)},
              {"ci_high", json_number(e.ci_high)},
              {"ci_shape", hcace::to_string(e.ci_shape)},
              {"alpha", e.alpha},
              {"n_pairs", e.n_pairs},
              {"degenerate", e.degenerate}};
}

int run_analyze(const AnalyzeArgs& args) {
  hcace::PairsFile file = hcace::read_pairs_csv(args.pairs_in);
  const auto& pairs = file.pairs;

  auto categorical = split_list(args.categorical);
  hcace::CovariateMatrix x;
  x.n_rows = pairs.size();
  x.n_cols = file.covariate_names.size();
  x.names = file.covariate_names;
  x.kinds.assign(x.n_cols, hcace::CovariateKind::numeric);
  for (const std::string& name : categorical) {
    auto it = std::find(x.names.begin(), x.names.end(), name);
    if (it == x.names.end())
      throw UsageError("categorical column '" + name + "' is not a pair covariate");
    x.kinds[static_cast<std::size_t>(it - x.names.begin())] =
        hcace::CovariateKind::categorical;
  }
  x.values.resize(x.n_rows * x.n_cols);
  for (std::size_t i = 0; i < x.n_rows; ++i)
    for (std::size_t j = 0; j < x.n_cols; ++j)
      x.values[j * x.n_rows + i] = pairs[i].pair_covariates[j];

  hcace::TreeConfig tree_config;
  args.tree.apply(tree_config);

  auto diffs = hcace::adjusted_differences(pairs, args.lambda0);
  std::vector<double> outcome(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) outcome[i] = diffs[i].y_abs;
  hcace::FittedTree tree = hcace::fit_tree(outcome, x, tree_config);
  hcace::Grouping grouping = hcace::grouping_from_tree(tree);
  hcace::ClosedTestReport report =
      hcace::run_closed_test(grouping, pairs, args.lambda0, args.alpha);

  hcace::IvTestResult global = hcace::pair_statistics(pairs, args.lambda0, "all");
  hcace::IvEstimate overall = hcace::hl_estimate(pairs, args.alpha);

  json doc;
  doc["n_pairs"] = pairs.size();
  doc["lambda0"] = args.lambda0;
  doc["alpha"] = args.alpha;
  doc["tree"] = {{"cp", tree_config.cp},
                 {"max_depth", tree_config.max_depth},
                 {"min_split", tree_config.min_split},
                 {"min_bucket", tree_config.min_bucket},
                 {"n_leaves", tree.n_leaves()}};
  doc["global_test"] = test_to_json(global);
  doc["overall_estimate"] = estimate_to_json(overall);
  doc["closed_test"] = {{"n_tested", report.n_tested},
                        {"n_skipped", report.n_skipped},
                        {"z_crit", report.z_crit}};
  json leaves = json::array();
  for (std::size_t g = 0; g < grouping.size(); ++g) {
    json leaf;
    leaf["leaf"] = g + 1;
    leaf["where"] = grouping.provenance[g];
    leaf["n_pairs"] = grouping.leaves[g].size();
    leaf["rejected"] = static_cast<bool>(report.leaf_rejected[g]);
    leaf["test"] = test_to_json(report.leaf_tests[g]);
    leaf["estimate"] = report.leaf_estimates[g]
                           ? estimate_to_json(*report.leaf_estimates[g])
                           : json(nullptr);
    leaves.push_back(std::move(leaf));
  }
  doc["leaves"] = std::move(leaves);
  if (!report.records.empty()) {
    json subsets = json::array();
    for (const hcace::SubsetHypothesis& h : report.records) {
      json s;
      s["subset"] = hcace::subset_label(h.mask);
      s["n_pairs"] = h.n_pairs;
      switch (h.decision) {
        case hcace::SubsetDecision::rejected: s["decision"] = "rejected"; break;
        case hcace::SubsetDecision::retained: s["decision"] = "retained"; break;
        case hcace::SubsetDecision::auto_retained:
          s["decision"] = "auto_retained";
          break;
        case hcace::SubsetDecision::skipped: s["decision"] = "skipped"; break;
      }
      if (h.test) s["test"] = test_to_json(*h.test);
      subsets.push_back(std::move(s));
    }
    doc["subsets"] = std::move(subsets);
  }
  // Complier-weighted recombination of leaf estimates; equals the overall
  // ratio estimate up to floating-point noise when every leaf has compliers.
  {
    std::vector<double> leaf_effects;
    bool usable = true;
    for (const auto& est : report.leaf_estimates) {
      if (!est || !std::isfinite(est->point)) {
        usable = false;
        break;
      }
      leaf_effects.push_back(est->point);
    }
    if (usable) {
      try {
        doc["decomposition_check"] = json_number(
            hcace::weighted_decomposition(grouping, pairs, leaf_effects));
      } catch (const DegeneracyError&) {
        doc["decomposition_check"] = nullptr;
      }
    } else {
      doc["decomposition_check"] = nullptr;
    }
  }

  if (!args.report_out.empty())
    hcace::write_text_file(args.report_out, doc.dump(2) + "\n");
  if (!args.leaves_out.empty()) {
    hcace::CsvTable table;
    table.header = {"leaf", "where", "n_pairs", "estimate", "ci_low", "ci_high",
                    "ci_shape", "compliance", "z", "p_value", "rejected"};
    for (std::size_t g = 0; g < grouping.size(); ++g) {
      const auto& test = report.leaf_tests[g];
      const auto& est = report.leaf_estimates[g];
      table.rows.push_back(
          {std::to_string(g + 1), grouping.provenance[g],
           std::to_string(grouping.leaves[g].size()),
           est ? hcace::format_double(est->point) : "",
           est ? hcace::format_double(est->ci_low) : "",
           est ? hcace::format_double(est->ci_high) : "",
           est ? hcace::to_string(est->ci_shape) : "",
           hcace::format_double(test.compliance), hcace::format_double(test.z),
           hcace::format_double(test.p_value), report.leaf_rejected[g] ? "1" : "0"});
    }
    hcace::write_csv_file(args.leaves_out, table);
  }
  if (!args.dot_out.empty()) hcace::write_text_file(args.dot_out, hcace::to_dot(tree));
  if (!args.tree_out.empty())
    hcace::write_text_file(args.tree_out, hcace::to_text(tree));

  std::size_t n_rejected = 0;
  for (bool r : report.leaf_rejected) n_rejected += r ? 1 : 0;
  std::cout << "analyzed " << pairs.size() << " pairs: " << grouping.size()
            << (grouping.size() == 1 ? " leaf, " : " leaves, ") << n_rejected
            << " rejected at alpha=" << args.alpha << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string scenario = "strong";
  std::string compliance = "same";
  std::string pi_grid;
  double pi = -1.0;
  std::size_t reps = 100;
  long long pairs = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double lambda0 = 0.0;
  double alpha = 0.05;
  std::size_t threads = 0;
  std::string out, table_out, emit_pairs, honesty;
  TreeFlags tree;
};

json record_to_json(const hcace::MetricsRecord& rec) {
  json j;
  j["scenario"] = rec.scenario;
  j["pi"] = rec.compliance_base;
  j["n_pairs"] = rec.n_pairs;
  j["n_reps"] = rec.n_reps;
  j["tdr"] = json_number(rec.tdr);
  j["tdr_with_skipped"] = json_number(rec.tdr_with_skipped);
  j["tdr_subgroups_only"] = json_number(rec.tdr_subgroups_only);
  j["suggested_false_nulls"] = rec.suggested_false_nulls;
  j["rejected_false_nulls"] = rec.rejected_false_nulls;
  j["suggested_false_nulls_with_skipped"] = rec.suggested_false_nulls_with_skipped;
  j["rejected_false_nulls_with_skipped"] = rec.rejected_false_nulls_with_skipped;
  j["suggested_false_nulls_subgroups"] = rec.suggested_false_nulls_subgroups;
  j["rejected_false_nulls_subgroups"] = rec.rejected_false_nulls_subgroups;
  j["tdr_note"] = rec.tdr_note;
  j["fpr"] = json_number(rec.fpr);
  j["f_score"] = json_number(rec.f_score);
  j["fwer"] = json_number(rec.fwer);
  j["mean_type1"] = json_number(rec.mean_type1);
  j["mean_leaves"] = json_number(rec.mean_leaves);
  j["share_split"] = json_number(rec.share_split);
  j["hl_mean"] = json_number(rec.hl_mean);
  j["hl_coverage"] = json_number(rec.hl_coverage);
  j["constant_effect"] = rec.constant_effect;
  j["true_effect"] = json_number(rec.true_effect);
  j["hl_degenerate"] = rec.hl_degenerate;
  j["ci_shapes"] = {{"finite_interval", rec.ci_shape_counts[0]},
                    {"whole_line", rec.ci_shape_counts[1]},
                    {"union_of_rays", rec.ci_shape_counts[2]},
                    {"empty", rec.ci_shape_counts[3]}};
  json cells = json::array();
  for (std::size_t c = 0; c < 4; ++c)
    cells.push_back({{"cell", c},
                     {"leaves", rec.cell_leaves[c].leaves},
                     {"pairs", rec.cell_leaves[c].pairs},
                     {"false_null", rec.cell_leaves[c].false_null},
                     {"rejected", rec.cell_leaves[c].rejected}});
  j["cell_leaves"] = std::move(cells);
  return j;
}

const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = {
      "scenario",   "pi",           "n_pairs",    "n_reps",
      "tdr",        "tdr_with_skipped", "tdr_subgroups_only",
      "fpr",        "f_score",      "fwer",       "mean_type1",
      "mean_leaves", "share_split", "hl_mean",    "hl_coverage",
      "hl_degenerate"};
  return cols;
}

std::string records_to_tsv(const json& records) {
  std::ostringstream out;
  const auto& cols = metric_columns();
  for (std::size_t j = 0; j < cols.size(); ++j)
    out << (j ? "\t" : "") << cols[j];
  out << "\n";
  for (const json& rec : records) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (j) out << "\t";
      const json& v = rec.at(cols[j]);
      if (v.is_string())
        out << v.get<std::string>();
      else if (v.is_number_float())
        out << hcace::format_double(v.get<double>());
      else
        out << v.dump();
    }
    out << "\n";
  }
  return out.str();
}

int run_simulate(const SimulateArgs& args) {
  hcace::ScenarioConfig config = hcace::scenario_by_name(args.scenario);
  hcace::apply_compliance_setting(config, args.compliance);
  if (args.pairs >= 0) config.n_pairs = static_cast<std::size_t>(args.pairs);
  if (args.seed_set) config.seed = args.seed;
  args.tree.apply(config.tree);

  if (!args.honesty.empty()) {
    bool use_abs;
    if (args.honesty == "abs")
      use_abs = true;
    else if (args.honesty == "signed")
      use_abs = false;
    else
      throw UsageError("--honesty must be abs or signed");
    if (args.pi >= 0) config.compliance_base = args.pi;
    hcace::HonestyDiagnostic diag =
        hcace::honesty_diagnostic(config, args.reps, use_abs, args.threads);
    json doc;
    doc["scenario"] = config.name;
    doc["outcome"] = use_abs ? "abs" : "signed";
    doc["n_reps"] = args.reps;
    doc["ks_distance"] = json_number(diag.ks_distance);
    doc["ks_p_value"] = json_number(diag.ks_p_value);
    doc["mean_leaves"] = json_number(diag.mean_leaves);
    doc["share_split"] = json_number(diag.share_split);
    doc["p_values"] = diag.p_values;
    std::string text = doc.dump(2) + "\n";
    if (!args.out.empty())
      hcace::write_text_file(args.out, text);
    else
      std::cout << text;
    std::cout << "honesty diagnostic (" << doc["outcome"].get<std::string>()
              << "): KS distance " << hcace::format_double(diag.ks_distance)
              << ", p " << hcace::format_double(diag.ks_p_value) << "\n";
    return 0;
  }

  if (!args.emit_pairs.empty()) {
    if (args.pi >= 0) config.compliance_base = args.pi;
    hcace::SimDataset data = hcace::generate_dataset(config, 0);
    hcace::write_pairs_csv(args.emit_pairs, data.pairs, data.covariate_names);
    std::cout << "wrote " << data.pairs.size() << " simulated pairs (take-up "
              << hcace::format_double(data.realized_compliance) << ")\n";
    return 0;
  }

  std::vector<double> grid;
  if (!args.pi_grid.empty())
    grid = parse_grid(args.pi_grid);
  else if (args.pi >= 0)
    grid = {args.pi};
  else if (config.survey_template)
    grid = {config.compliance_base};
  else
    grid = parse_grid("0.2:1.0:0.1");

  hcace::PipelineParams params;
  params.lambda0 = args.lambda0;
  params.alpha = args.alpha;

  json records = json::array();
  for (double pi : grid) {
    hcace::ScenarioConfig point = config;
    if (!point.survey_template) point.compliance_base = pi;
    hcace::MetricsRecord rec =
        hcace::run_replications(point, params, args.reps, args.threads);
    records.push_back(record_to_json(rec));
    std::cout << "scenario " << rec.scenario << " pi "
              << hcace::format_double(rec.compliance_base) << ": tdr "
              << hcace::format_double(rec.tdr) << ", fwer "
              << hcace::format_double(rec.fwer) << ", fpr "
              << hcace::format_double(rec.fpr) << "\n";
  }
  if (!args.out.empty())
    hcace::write_text_file(args.out, records.dump(2) + "\n");
  if (!args.table_out.empty())
    hcace::write_text_file(args.table_out, records_to_tsv(records));
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string metrics_in, tsv_out, text_out;
};

int run_report(const ReportArgs& args) {
  std::ifstream in(args.metrics_in);
  if (!in) throw DataError("cannot open '" + args.metrics_in + "'");
  json records = json::parse(in, nullptr, true);
  if (records.is_object()) {
    json wrapped = json::array();
    wrapped.push_back(std::move(records));
    records = std::move(wrapped);
  }
  if (!records.is_array()) throw DataError("metrics file must hold a JSON array");

  std::string tsv = records_to_tsv(records);
  if (!args.tsv_out.empty()) hcace::write_text_file(args.tsv_out, tsv);

  // Fixed-width text rendering of the same table.
  std::vector<std::vector<std::string>> cells;
  {
    std::istringstream lines(tsv);
    std::string line;
    while (std::getline(lines, line)) {
      std::vector<std::string> row;
      std::string field;
      std::istringstream fields(line);
      while (std::getline(fields, field, '\t')) row.push_back(field);
      cells.push_back(std::move(row));
    }
  }
  std::vector<std::size_t> widths;
  for (const auto& row : cells)
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (widths.size() <= j) widths.resize(j + 1, 0);
      widths[j] = std::max(widths[j], row[j].size());
    }
  std::ostringstream text;
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) text << "  ";
      text << row[j];
      if (j + 1 < row.size())
        text << std::string(widths[j] - row[j].size(), ' ');
    }
    text << "\n";
  }
  if (!args.text_out.empty())
    hcace::write_text_file(args.text_out, text.str());
  else
    std::cout << text.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matched-pair encouragement studies: optimal matching, "
               "subgroup discovery on |Y|, closed testing, and simulation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI file");

  MatchArgs match;
  CLI::App* cmd_match = app.add_subcommand(
      "match", "Pair encouraged with unencouraged units by rank Mahalanobis distance");
  cmd_match->add_option("--input", match.input, "Unit-level CSV")->required();
  cmd_match->add_option("--pairs-out", match.pairs_out, "Output pairs CSV")->required();
  cmd_match->add_option("--balance-out", match.balance_out, "Balance table CSV");
  cmd_match->add_option("--instrument", match.instrument, "Instrument column (default z)");
  cmd_match->add_option("--treatment", match.treatment, "Treatment column (default d)");
  cmd_match->add_option("--response", match.response, "Response column (default r)");
  cmd_match->add_option("--covariates", match.covariates,
                        "Comma-separated covariate columns")->required();
  cmd_match->add_option("--categorical", match.categorical,
                        "Covariates to treat as categorical");
  cmd_match->add_option("--id", match.id, "Unit id column");
  cmd_match->add_option("--caliper-covariate", match.caliper_covariate,
                        "Covariate carrying a soft caliper");
  cmd_match->add_option("--caliper-width", match.caliper_width, "Caliper width");
  cmd_match->add_option("--caliper-penalty", match.caliper_penalty,
                        "Penalty per unit of caliper violation");
  cmd_match->add_option("--pair-covariates", match.pair_source,
                        "Pair covariate source: treated, control, or average");

  AnalyzeArgs analyze;
  CLI::App* cmd_analyze = app.add_subcommand(
      "analyze", "Discover subgroups on |Y| and run the closed testing procedure");
  cmd_analyze->add_option("--pairs", analyze.pairs_in, "Pairs CSV from match")->required();
  cmd_analyze->add_option("--lambda0", analyze.lambda0, "Null effect value (default 0)");
  cmd_analyze->add_option("--alpha", analyze.alpha, "Familywise error level (default 0.05)");
  cmd_analyze->add_option("--categorical", analyze.categorical,
                          "Pair covariates to treat as categorical");
  cmd_analyze->add_option("--report-out", analyze.report_out, "Full JSON report");
  cmd_analyze->add_option("--leaves-out", analyze.leaves_out, "Per-leaf CSV table");
  cmd_analyze->add_option("--dot-out", analyze.dot_out, "Tree in DOT format");
  cmd_analyze->add_option("--tree-out", analyze.tree_out, "Tree as indented text");
  analyze.tree.add(cmd_analyze);

  SimulateArgs simulate;
  CLI::App* cmd_simulate = app.add_subcommand(
      "simulate", "Run replications of the full pipeline on a built-in scenario");
  cmd_simulate->add_option("--scenario", simulate.scenario,
                           "no, slight, strong, complex, opposite, honesty, null, "
                           "survey-small, survey-moderate, survey-large");
  cmd_simulate->add_option("--compliance", simulate.compliance,
                           "Take-up pattern: same, similar, different1, different2");
  cmd_simulate->add_option("--pi", simulate.pi, "Single overall take-up rate");
  cmd_simulate->add_option("--pi-grid", simulate.pi_grid,
                           "Take-up grid lo:hi:step or comma list");
  cmd_simulate->add_option("--reps", simulate.reps, "Replications per grid point");
  cmd_simulate->add_option("--pairs", simulate.pairs, "Pairs per replication");
  cmd_simulate->add_option("--seed", simulate.seed, "Generator seed")
      ->each([&simulate](const std::string&) { simulate.seed_set = true; });
  cmd_simulate->add_option("--lambda0", simulate.lambda0, "Null effect value");
  cmd_simulate->add_option("--alpha", simulate.alpha, "Familywise error level");
  cmd_simulate->add_option("--threads", simulate.threads,
                           "Worker threads (0 = hardware)");
  cmd_simulate->add_option("--out", simulate.out, "Metrics JSON output");
  cmd_simulate->add_option("--table-out", simulate.table_out, "Metrics TSV output");
  cmd_simulate->add_option("--emit-pairs", simulate.emit_pairs,
                           "Write one simulated dataset as a pairs CSV and stop");
  cmd_simulate->add_option("--honesty", simulate.honesty,
                           "Run the first-leaf p-value diagnostic: abs or signed");
  simulate.tree.add(cmd_simulate);

  ReportArgs report;
  CLI::App* cmd_report = app.add_subcommand(
      "report", "Render a metrics JSON file as TSV and an aligned text table");
  cmd_report->add_option("--metrics", report.metrics_in, "Metrics JSON")->required();
  cmd_report->add_option("--tsv-out", report.tsv_out, "Plot-ready TSV");
  cmd_report->add_option("--text-out", report.text_out, "Aligned text table");

  try {
    app.parse(argc, argv);
    if (cmd_match->parsed()) return run_match(match);
    if (cmd_analyze->parsed()) return run_analyze(analyze);
    if (cmd_simulate->parsed()) return run_simulate(simulate);
    if (cmd_report->parsed()) return run_report(report);
    throw UsageError("no subcommand given");
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DegeneracyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
