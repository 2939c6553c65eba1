#pragma once

// Shared test utilities: independent brute-force oracles for EER / min t-DCF
// (counting loops over candidate thresholds, no shared code with the library
// implementation) and small random-instance generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "samo/metrics.hpp"
#include "samo/numerics.hpp"
#include "samo/rng.hpp"

namespace testutil {

inline double count_far(const samo::ScoreSet& s, double tau) {
  std::size_t n = 0;
  for (double v : s.spoof) n += (v >= tau) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(s.spoof.size());
}

inline double count_frr(const samo::ScoreSet& s, double tau) {
  std::size_t n = 0;
  for (double v : s.bona) n += (v < tau) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(s.bona.size());
}

// Candidate thresholds that realize every achievable operating point:
// below the minimum, midpoints between adjacent distinct scores, above the
// maximum.
inline std::vector<double> candidate_thresholds(const samo::ScoreSet& s) {
  std::vector<double> all = s.bona;
  all.insert(all.end(), s.spoof.begin(), s.spoof.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<double> cands;
  cands.push_back(all.front() - 1.0);
  for (std::size_t i = 0; i + 1 < all.size(); ++i) cands.push_back(all[i]);
  cands.push_back(all.back());
  cands.push_back(all.back() + 1.0);
  return cands;
}

// EER by scanning candidate thresholds for the sign change of FAR - FRR and
// interpolating linearly, the same geometric definition the library uses but
// computed from scratch with counting loops.
inline double brute_force_eer(const samo::ScoreSet& s) {
  const auto cands = candidate_thresholds(s);
  double pfar = count_far(s, cands.front());
  double pfrr = count_frr(s, cands.front());
  for (std::size_t k = 1; k < cands.size(); ++k) {
    const double diff_prev = pfar - pfrr;
    if (diff_prev == 0.0) return pfar;
    const double far = count_far(s, cands[k]);
    const double frr = count_frr(s, cands[k]);
    const double diff = far - frr;
    if (diff_prev > 0.0 && diff <= 0.0) {
      const double t = diff_prev / (diff_prev - diff);
      return pfar + t * (far - pfar);
    }
    pfar = far;
    pfrr = frr;
  }
  return pfar;  // final point is all-reject, FAR - FRR = -1; unreachable
}

inline double brute_force_min_tdcf(const samo::ScoreSet& s, double c1, double c2) {
  double best = std::numeric_limits<double>::infinity();
  for (double tau : candidate_thresholds(s)) {
    best = std::min(best, c1 * count_frr(s, tau) + c2 * count_far(s, tau));
  }
  return best / std::min(c1, c2);
}

// Random score set with heavy duplicate pressure: about half the draws are
// quantized to one decimal so ties appear both within and across classes.
inline samo::ScoreSet random_scoreset(samo::Rng& rng, std::size_t max_per_class) {
  auto draw = [&rng](std::size_t n) {
    std::vector<double> out(n);
    for (double& v : out) {
      v = rng.uniform(-1.0, 1.0);
      if (rng.uniform() < 0.5) v = std::round(v * 10.0) / 10.0;
    }
    return out;
  };
  samo::ScoreSet s;
  s.bona = draw(1 + rng.below(max_per_class));
  s.spoof = draw(1 + rng.below(max_per_class));
  return s;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Fresh scratch directory under the system temp root, unique per tag.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("samo_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testutil
