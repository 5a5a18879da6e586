#pragma once

#include <span>
#include <string>
#include <vector>

#include "hcace/types.hpp"

namespace hcace {

// Randomization-motivated test of the proportional-effect null
// H0: r1 - r0 = lambda0 * (d1 - d0) on a set of matched pairs.
//
// With V_i = (r_t - lambda0 * d_t) - (r_c - lambda0 * d_c), T is the mean of
// the V_i and S^2 = sum (V_i - T)^2 / (I (I - 1)), so z = T / S is the
// studentized pair-difference statistic referred to a standard normal.
struct IvTestResult {
  std::string subset_id;
  double lambda0 = 0.0;
  std::size_t n_pairs = 0;
  double T = 0.0;
  double S = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  double compliance = 0.0;
  bool degenerate = false;  // S == 0; z is +-inf (T != 0) or 0 (T == 0)
};

IvTestResult pair_statistics(std::span<const MatchedPair> pairs, double lambda0,
                             std::string subset_id = {});

IvTestResult pair_statistics(std::span<const MatchedPair> pairs,
                             std::span<const std::size_t> subset, double lambda0,
                             std::string subset_id = {});

// Same test computed with the unit-level bookkeeping (each unit contributes a
// signed adjusted response, and the normalizers are 2/I and 1/(I(I-1)) over
// the 2I unit terms).  Kept as a diagnostic; the pairwise convention above is
// what the rest of the library uses.
IvTestResult pair_statistics_unit_level(std::span<const MatchedPair> pairs,
                                        double lambda0, std::string subset_id = {});

enum class CiShape { finite_interval, whole_line, union_of_rays, empty };

// Effect-ratio estimate with a test-inversion confidence set.
//
// T(lambda) is affine in lambda, so the point estimate solves T(lambda) = 0
// and the confidence set {lambda : T(lambda)^2 <= q^2 S^2(lambda)} is the
// solution set of one quadratic inequality.  Depending on the sign of the
// leading coefficient the set is a bounded interval, the whole line, or a
// union of two rays; for union_of_rays the set is
// (-inf, ci_low] union [ci_high, +inf).
struct IvEstimate {
  double point = 0.0;           // NaN when no finite root exists
  double ci_low = 0.0;          // may be -inf
  double ci_high = 0.0;         // may be +inf
  double alpha = 0.05;
  CiShape ci_shape = CiShape::finite_interval;
  std::size_t n_pairs = 0;
  bool degenerate = false;      // zero-variance input
};

IvEstimate hl_estimate(std::span<const MatchedPair> pairs, double alpha = 0.05);

IvEstimate hl_estimate(std::span<const MatchedPair> pairs,
                       std::span<const std::size_t> subset, double alpha = 0.05);

// Whether lambda lies in the confidence set described by an IvEstimate.
bool ci_contains(const IvEstimate& estimate, double lambda);

const char* to_string(CiShape shape);

}  // namespace hcace
