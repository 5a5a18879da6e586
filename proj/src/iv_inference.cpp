#include "hcace/iv_inference.hpp"

#include <cmath>
#include <limits>

#include "hcace/errors.hpp"
#include "hcace/stats.hpp"

namespace hcace {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double pair_v(const MatchedPair& p, double lambda0) {
  return (p.treated.r - lambda0 * p.treated.d) -
         (p.control.r - lambda0 * p.control.d);
}

IvTestResult from_vs(const std::vector<double>& v, double compliance_sum,
                     double lambda0, std::string subset_id) {
  const std::size_t n = v.size();
  if (n < 2) throw DataError("pair statistics need at least two pairs");
  IvTestResult out;
  out.subset_id = std::move(subset_id);
  out.lambda0 = lambda0;
  out.n_pairs = n;
  out.compliance = compliance_sum / static_cast<double>(n);
  double sum = 0.0;
  for (double x : v) sum += x;
  out.T = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - out.T) * (x - out.T);
  const double s2 = ss / (static_cast<double>(n) * static_cast<double>(n - 1));
  out.S = std::sqrt(s2);
  if (out.S == 0.0) {
    out.degenerate = true;
    if (out.T == 0.0) {
      out.z = 0.0;
      out.p_value = 1.0;
    } else {
      out.z = out.T > 0.0 ? kInf : -kInf;
      out.p_value = 0.0;
    }
    return out;
  }
  out.z = out.T / out.S;
  out.p_value = stats::two_sided_p(out.z);
  return out;
}

}  // namespace

IvTestResult pair_statistics(std::span<const MatchedPair> pairs, double lambda0,
                             std::string subset_id) {
  std::vector<double> v;
  v.reserve(pairs.size());
  double comp = 0.0;
  for (const auto& p : pairs) {
    v.push_back(pair_v(p, lambda0));
    comp += p.treated.d - p.control.d;
  }
  return from_vs(v, comp, lambda0, std::move(subset_id));
}

IvTestResult pair_statistics(std::span<const MatchedPair> pairs,
                             std::span<const std::size_t> subset, double lambda0,
                             std::string subset_id) {
  std::vector<double> v;
  v.reserve(subset.size());
  double comp = 0.0;
  for (std::size_t i : subset) {
    v.push_back(pair_v(pairs[i], lambda0));
    comp += pairs[i].treated.d - pairs[i].control.d;
  }
  return from_vs(v, comp, lambda0, std::move(subset_id));
}

IvTestResult pair_statistics_unit_level(std::span<const MatchedPair> pairs,
                                        double lambda0, std::string subset_id) {
  const std::size_t n = pairs.size();
  if (n < 2) throw DataError("pair statistics need at least two pairs");
  IvTestResult out;
  out.subset_id = std::move(subset_id);
  out.lambda0 = lambda0;
  out.n_pairs = n;
  double comp = 0.0;
  std::vector<double> terms;
  terms.reserve(2 * n);
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double at = p.treated.r - lambda0 * p.treated.d;
    const double ac = p.control.r - lambda0 * p.control.d;
    terms.push_back(at);
    terms.push_back(-ac);
    sum += at - ac;
    comp += p.treated.d - p.control.d;
  }
  out.compliance = comp / static_cast<double>(n);
  out.T = 2.0 * sum / static_cast<double>(n);
  double ss = 0.0;
  for (double t : terms) ss += (t - out.T) * (t - out.T);
  const double s2 = ss / (static_cast<double>(n) * static_cast<double>(n - 1));
  out.S = std::sqrt(s2);
  if (out.S == 0.0) {
    out.degenerate = true;
    out.z = out.T == 0.0 ? 0.0 : (out.T > 0.0 ? kInf : -kInf);
    out.p_value = out.T == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.z = out.T / out.S;
  out.p_value = stats::two_sided_p(out.z);
  return out;
}

namespace {

IvEstimate estimate_from_ab(const std::vector<double>& a, const std::vector<double>& b,
                            double alpha) {
  const std::size_t n = a.size();
  if (n < 2) throw DataError("effect estimation needs at least two pairs");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0,1)");
  IvEstimate out;
  out.alpha = alpha;
  out.n_pairs = n;

  double abar = 0.0, bbar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    abar += a[i];
    bbar += b[i];
  }
  abar /= static_cast<double>(n);
  bbar /= static_cast<double>(n);
  double saa = 0.0, sab = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - abar;
    const double db = b[i] - bbar;
    saa += da * da;
    sab += da * db;
    sbb += db * db;
  }

  out.point = bbar != 0.0 ? abar / bbar : kNaN;

  // T(lambda)^2 <= q^2 S^2(lambda) rearranged to qa*l^2 + qb*l + qc <= 0.
  const double q = stats::normal_quantile(1.0 - alpha / 2.0);
  const double k = q * q / (static_cast<double>(n) * static_cast<double>(n - 1));
  const double qa = bbar * bbar - k * sbb;
  const double qb = -2.0 * (abar * bbar - k * sab);
  const double qc = abar * abar - k * saa;

  if (saa == 0.0 && sbb == 0.0) out.degenerate = true;

  if (qa == 0.0) {
    if (qb == 0.0) {
      if (qc <= 0.0) {
        out.ci_shape = CiShape::whole_line;
        out.ci_low = -kInf;
        out.ci_high = kInf;
      } else {
        out.ci_shape = CiShape::empty;
        out.ci_low = kNaN;
        out.ci_high = kNaN;
      }
      return out;
    }
    // Linear: one closed half-line.  Encode as an interval with one
    // unbounded end.
    const double root = -qc / qb;
    out.ci_shape = CiShape::finite_interval;
    if (qb > 0.0) {
      out.ci_low = -kInf;
      out.ci_high = root;
    } else {
      out.ci_low = root;
      out.ci_high = kInf;
    }
    return out;
  }

  const double disc = qb * qb - 4.0 * qa * qc;
  if (qa > 0.0) {
    out.ci_shape = CiShape::finite_interval;
    if (disc <= 0.0) {
      // The set always contains the root of T (where the quadratic is
      // <= 0), so a negative discriminant here is rounding noise: collapse
      // to the vertex.
      out.ci_low = out.ci_high = -qb / (2.0 * qa);
      return out;
    }
    const double sq = std::sqrt(disc);
    out.ci_low = (-qb - sq) / (2.0 * qa);
    out.ci_high = (-qb + sq) / (2.0 * qa);
    return out;
  }
  if (disc < 0.0) {
    out.ci_shape = CiShape::whole_line;
    out.ci_low = -kInf;
    out.ci_high = kInf;
    return out;
  }
  const double sq = std::sqrt(disc);
  // qa < 0: the quadratic is <= 0 outside the roots.
  out.ci_shape = CiShape::union_of_rays;
  out.ci_low = (-qb + sq) / (2.0 * qa);
  out.ci_high = (-qb - sq) / (2.0 * qa);
  return out;
}

}  // namespace

IvEstimate hl_estimate(std::span<const MatchedPair> pairs, double alpha) {
  std::vector<double> a, b;
  a.reserve(pairs.size());
  b.reserve(pairs.size());
  for (const auto& p : pairs) {
    a.push_back(p.treated.r - p.control.r);
    b.push_back(static_cast<double>(p.treated.d - p.control.d));
  }
  return estimate_from_ab(a, b, alpha);
}

IvEstimate hl_estimate(std::span<const MatchedPair> pairs,
                       std::span<const std::size_t> subset, double alpha) {
  std::vector<double> a, b;
  a.reserve(subset.size());
  b.reserve(subset.size());
  for (std::size_t i : subset) {
    a.push_back(pairs[i].treated.r - pairs[i].control.r);
    b.push_back(static_cast<double>(pairs[i].treated.d - pairs[i].control.d));
  }
  return estimate_from_ab(a, b, alpha);
}

bool ci_contains(const IvEstimate& e, double lambda) {
  switch (e.ci_shape) {
    case CiShape::finite_interval:
      return lambda >= e.ci_low && lambda <= e.ci_high;
    case CiShape::whole_line:
      return true;
    case CiShape::union_of_rays:
      return lambda <= e.ci_low || lambda >= e.ci_high;
    case CiShape::empty:
      return false;
  }
  return false;
}

const char* to_string(CiShape shape) {
  switch (shape) {
    case CiShape::finite_interval: return "finite-interval";
    case CiShape::whole_line: return "whole-line";
    case CiShape::union_of_rays: return "union-of-rays";
    case CiShape::empty: return "empty";
  }
  return "?";
}

}  // namespace hcace
