#include "samo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace samo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_scores(const ScoreSet& scores) {
  if (scores.bona.empty() || scores.spoof.empty())
    throw EmptyClass("metrics: need at least one bona fide and one spoof score");
  for (double s : scores.bona)
    if (!std::isfinite(s)) throw EmptyClass("metrics: non-finite bona fide score");
  for (double s : scores.spoof)
    if (!std::isfinite(s)) throw EmptyClass("metrics: non-finite spoof score");
}

}  // namespace

std::vector<DetPoint> det_points(const ScoreSet& scores) {
  check_scores(scores);
  std::vector<double> bona = scores.bona;
  std::vector<double> spoof = scores.spoof;
  std::sort(bona.begin(), bona.end());
  std::sort(spoof.begin(), spoof.end());

  std::vector<double> thresholds;
  thresholds.reserve(bona.size() + spoof.size() + 2);
  thresholds.push_back(-kInf);
  std::merge(bona.begin(), bona.end(), spoof.begin(), spoof.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(kInf);

  const double nb = static_cast<double>(bona.size());
  const double ns = static_cast<double>(spoof.size());
  std::vector<DetPoint> points;
  points.reserve(thresholds.size());
  for (double tau : thresholds) {
    const auto below_bona = std::lower_bound(bona.begin(), bona.end(), tau) - bona.begin();
    const auto below_spoof = std::lower_bound(spoof.begin(), spoof.end(), tau) - spoof.begin();
    points.push_back({tau, static_cast<double>(spoof.size() - below_spoof) / ns,
                      static_cast<double>(below_bona) / nb});
  }
  return points;
}

EerResult eer(const ScoreSet& scores) {
  const auto points = det_points(scores);

  // FAR - FRR runs from +1 at -inf to -1 at +inf and is non-increasing.
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const double dk = points[k].far - points[k].frr;
    if (dk == 0.0) {
      // The operating point at tau_k holds for every threshold in
      // (tau_{k-1}, tau_k]; report the midpoint. Both ends are finite because
      // the sentinels have |FAR - FRR| = 1.
      return {points[k].far, 0.5 * (points[k - 1].threshold + points[k].threshold)};
    }
    const double dn = points[k + 1].far - points[k + 1].frr;
    if (dk > 0.0 && dn < 0.0) {
      const double t = dk / (dk - dn);
      const double value = points[k].far + t * (points[k + 1].far - points[k].far);
      double threshold;
      if (std::isfinite(points[k].threshold) && std::isfinite(points[k + 1].threshold))
        threshold = points[k].threshold + t * (points[k + 1].threshold - points[k].threshold);
      else
        threshold = std::isfinite(points[k].threshold) ? points[k].threshold
                                                       : points[k + 1].threshold;
      return {value, threshold};
    }
  }
  // Unreachable: the sign change always exists between the sentinels.
  throw EmptyClass("eer: no crossing found");
}

void TdcfParams::validate() const {
  if (pi_tar <= 0.0 || pi_non <= 0.0 || pi_spoof <= 0.0)
    throw InvalidCoefficients("t-DCF priors must be positive");
  if (std::abs(pi_tar + pi_non + pi_spoof - 1.0) > 1e-9)
    throw InvalidCoefficients("t-DCF priors must sum to 1");
  if (c_miss_cm <= 0.0 || c_fa_cm <= 0.0 || c_miss_asv <= 0.0 || c_fa_asv <= 0.0)
    throw InvalidCoefficients("t-DCF costs must be positive");
  for (double p : {p_miss_asv, p_fa_asv, p_miss_spoof_asv})
    if (p < 0.0 || p > 1.0) throw InvalidCoefficients("ASV error rates must lie in [0, 1]");
}

std::pair<double, double> tdcf_coefficients(const TdcfParams& params) {
  params.validate();
  const double c1 = params.pi_tar * (params.c_miss_cm - params.c_miss_asv * params.p_miss_asv) -
                    params.pi_non * params.c_fa_asv * params.p_fa_asv;
  const double c2 = params.c_fa_cm * params.pi_spoof * (1.0 - params.p_miss_spoof_asv);
  if (c1 <= 0.0 || c2 <= 0.0)
    throw InvalidCoefficients("t-DCF coefficients must be positive, got C1=" +
                              std::to_string(c1) + " C2=" + std::to_string(c2));
  return {c1, c2};
}

double min_tdcf(const ScoreSet& scores, const TdcfParams& params) {
  const auto [c1, c2] = tdcf_coefficients(params);
  const auto points = det_points(scores);
  double best = kInf;
  for (const auto& point : points)
    best = std::min(best, c1 * point.frr + c2 * point.far);
  return best / std::min(c1, c2);
}

}  // namespace samo
