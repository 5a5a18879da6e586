#include "hcace/matching.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "hcace/errors.hpp"
#include "hcace/stats.hpp"

namespace hcace {

namespace {

void check_units(std::span<const Unit> units, std::size_t dim, const char* arm) {
  for (const Unit& u : units) {
    if (u.x.size() != dim)
      throw DataError(std::string(arm) + " unit has a covariate vector of length " +
                      std::to_string(u.x.size()) + ", expected " + std::to_string(dim));
    for (double v : u.x)
      if (!std::isfinite(v))
        throw DataError(std::string(arm) + " unit has a non-finite covariate");
  }
}

}  // namespace

std::vector<std::vector<double>> rank_mahalanobis_distance(
    std::span<const Unit> treated, std::span<const Unit> control,
    const DistanceSpec& spec) {
  if (treated.empty() || control.empty())
    throw DataError("both arms must be non-empty to compute distances");
  const std::size_t p = treated.front().x.size();
  if (p == 0) throw DataError("units have no covariates");
  check_units(treated, p, "treated");
  check_units(control, p, "control");
  if (spec.caliper_covariate && *spec.caliper_covariate >= p)
    throw UsageError("caliper covariate index out of range");

  const std::size_t nt = treated.size();
  const std::size_t n = nt + control.size();
  if (n < 2) throw DataError("need at least two units");

  // Pooled average ranks, one column per covariate.
  Eigen::MatrixXd ranks(n, p);
  {
    std::vector<double> column(n);
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < nt; ++i) column[i] = treated[i].x[j];
      for (std::size_t i = nt; i < n; ++i) column[i] = control[i - nt].x[j];
      const std::vector<double> r = stats::average_ranks(column);
      for (std::size_t i = 0; i < n; ++i) ranks(i, j) = r[i];
    }
  }

  Eigen::RowVectorXd mean = ranks.colwise().mean();
  Eigen::MatrixXd centered = ranks.rowwise() - mean;
  Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n - 1);

  // Ties deflate a column's rank variance; rescaling the diagonal to the
  // untied value n(n+1)/12 keeps heavily tied covariates from dominating the
  // inverse.  Constant columns stay as they are (their differences vanish).
  const double untied = static_cast<double>(n) * static_cast<double>(n + 1) / 12.0;
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(p);
  for (std::size_t j = 0; j < p; ++j)
    if (cov(j, j) > 0.0) scale(j) = std::sqrt(untied / cov(j, j));
  cov = scale.asDiagonal() * cov * scale.asDiagonal();

  const double ridge = 1e-8 * cov.trace() / static_cast<double>(p);
  cov.diagonal().array() += ridge;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw DegeneracyError("rank covariance matrix is singular after regularization");
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

  std::vector<std::vector<double>> out(nt, std::vector<double>(control.size()));
  Eigen::VectorXd delta(p);
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t c = 0; c < control.size(); ++c) {
      delta = ranks.row(i) - ranks.row(nt + c);
      double d = delta.dot(inv * delta);
      if (d < 0.0) d = 0.0;  // rounding
      if (spec.caliper_covariate) {
        const std::size_t j = *spec.caliper_covariate;
        const double gap = std::fabs(treated[i].x[j] - control[c].x[j]);
        if (gap > spec.caliper_width)
          d += spec.caliper_penalty * (gap - spec.caliper_width);
      }
      out[i][c] = d;
    }
  }
  return out;
}

std::vector<MatchedPair> make_pairs(std::span<const Unit> treated,
                                    std::span<const Unit> control,
                                    const std::vector<int>& assignment,
                                    PairCovariateSource source) {
  if (assignment.size() != treated.size())
    throw DataError("assignment length must equal the number of treated units");
  std::vector<MatchedPair> pairs;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] < 0) continue;
    MatchedPair pair;
    pair.index = pairs.size();
    pair.treated = treated[i];
    pair.control = control[assignment[i]];
    switch (source) {
      case PairCovariateSource::treated:
        pair.pair_covariates = pair.treated.x;
        break;
      case PairCovariateSource::control:
        pair.pair_covariates = pair.control.x;
        break;
      case PairCovariateSource::average: {
        pair.pair_covariates.resize(pair.treated.x.size());
        for (std::size_t j = 0; j < pair.pair_covariates.size(); ++j)
          pair.pair_covariates[j] = (pair.treated.x[j] + pair.control.x[j]) / 2.0;
        break;
      }
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

namespace {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;
};

MeanVar column_stats(std::span<const Unit> units, std::size_t j) {
  double sum = 0.0;
  for (const Unit& u : units) sum += u.x[j];
  const double mean = sum / static_cast<double>(units.size());
  double ss = 0.0;
  for (const Unit& u : units) ss += (u.x[j] - mean) * (u.x[j] - mean);
  const double var =
      units.size() > 1 ? ss / static_cast<double>(units.size() - 1) : 0.0;
  return {mean, var};
}

}  // namespace

BalanceReport balance_report(std::span<const Unit> treated,
                             std::span<const Unit> control,
                             std::span<const MatchedPair> pairs,
                             const std::vector<std::string>& names) {
  if (treated.empty() || control.empty())
    throw DataError("balance report needs units in both arms");
  const std::size_t p = treated.front().x.size();
  check_units(treated, p, "treated");
  check_units(control, p, "control");

  std::vector<Unit> matched_t, matched_c;
  for (const auto& pair : pairs) {
    matched_t.push_back(pair.treated);
    matched_c.push_back(pair.control);
  }

  BalanceReport report;
  for (std::size_t j = 0; j < p; ++j) {
    BalanceRow row;
    row.name = j < names.size() ? names[j] : "x" + std::to_string(j + 1);
    const MeanVar t_before = column_stats(treated, j);
    const MeanVar c_before = column_stats(control, j);
    const double pooled_sd = std::sqrt((t_before.var + c_before.var) / 2.0);

    const double diff_before = t_before.mean - c_before.mean;
    double diff_after = 0.0;
    if (!pairs.empty()) {
      const MeanVar t_after = column_stats(matched_t, j);
      const MeanVar c_after = column_stats(matched_c, j);
      diff_after = t_after.mean - c_after.mean;
    }

    if (pooled_sd == 0.0) {
      if (diff_before == 0.0 && diff_after == 0.0) {
        row.smd_before = 0.0;
        row.smd_after = 0.0;
      } else {
        row.degenerate = true;
        row.smd_before = std::numeric_limits<double>::quiet_NaN();
        row.smd_after = std::numeric_limits<double>::quiet_NaN();
      }
    } else {
      row.smd_before = diff_before / pooled_sd;
      row.smd_after = diff_after / pooled_sd;
      row.flagged = std::fabs(row.smd_after) > 0.25;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace hcace
