#pragma once

#include <utility>
#include <vector>

#include "samo/error.hpp"

namespace samo {

struct ScoreSet {
  std::vector<double> bona;
  std::vector<double> spoof;
};

/// One operating point of the detector at threshold tau; scores >= tau accept.
struct DetPoint {
  double threshold;
  double far;  // fraction of spoof scores >= tau
  double frr;  // fraction of bona fide scores < tau
};

/// Operating points at every distinct score plus -inf/+inf sentinels, sorted
/// by ascending threshold. FAR is non-increasing, FRR non-decreasing.
std::vector<DetPoint> det_points(const ScoreSet& scores);

struct EerResult {
  double eer;
  double threshold;
};

/// Equal error rate by linear interpolation between the operating points that
/// straddle the sign change of FAR - FRR. A flat FAR == FRR region reports the
/// midpoint of its threshold interval.
EerResult eer(const ScoreSet& scores);

/// Priors, costs, and the fixed ASV system's error rates that define the
/// tandem cost coefficients. Defaults are conventional ASVspoof-style values;
/// they are configuration, not ground truth.
struct TdcfParams {
  double pi_tar = 0.9405;
  double pi_non = 0.0095;
  double pi_spoof = 0.05;
  double c_miss_cm = 1.0;
  double c_fa_cm = 10.0;
  double c_miss_asv = 1.0;
  double c_fa_asv = 10.0;
  double p_miss_asv = 0.05;
  double p_fa_asv = 0.01;
  double p_miss_spoof_asv = 0.5;
  void validate() const;
};

/// (C1, C2) with
///   C1 = pi_tar*(c_miss_cm - c_miss_asv*p_miss_asv) - pi_non*c_fa_asv*p_fa_asv
///   C2 = c_fa_cm*pi_spoof*(1 - p_miss_spoof_asv)
/// Throws InvalidCoefficients unless both are > 0.
std::pair<double, double> tdcf_coefficients(const TdcfParams& params);

/// min over thresholds of (C1*FRR + C2*FAR) / min(C1, C2); always in [0, 1]
/// because the all-accept and all-reject sentinels take part in the sweep.
double min_tdcf(const ScoreSet& scores, const TdcfParams& params);

}  // namespace samo
