#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "samo/dataset.hpp"
#include "samo/encoder.hpp"
#include "samo/numerics.hpp"

namespace samo {

struct MarginConfig {
  double alpha = 20.0;
  double m0 = 0.7;  // bona fide margin
  double m1 = 0.0;  // spoof margin
  void validate() const;
};

/// One unit-norm attractor per training speaker, rows ordered by sorted
/// speaker id. Attractors are never gradient-trained; they change only via
/// update_attractors.
class AttractorSet {
 public:
  AttractorSet() = default;
  AttractorSet(std::vector<std::string> speakers, Mat rows);

  /// k-th speaker (sorted id order) gets basis vector e_k. Throws
  /// TooManySpeakers when there are more speakers than dimensions.
  static AttractorSet one_hot(std::vector<std::string> speakers, Eigen::Index dim);

  /// Fallback for |speakers| > dim: the first dim attractors are orthonormal
  /// columns from a QR of a seeded Gaussian matrix (signs fixed via positive
  /// R diagonal); any remainder are normalized Gaussian directions.
  static AttractorSet random_orthonormal(std::vector<std::string> speakers, Eigen::Index dim,
                                         Rng& rng);

  const std::vector<std::string>& speakers() const { return speakers_; }
  Eigen::Index size() const { return rows_.rows(); }
  Eigen::Index dim() const { return rows_.cols(); }
  const Mat& rows() const { return rows_; }
  bool empty() const { return rows_.rows() == 0; }

  std::optional<Eigen::Index> index_of(const std::string& speaker) const;
  void set_row(Eigen::Index index, const Vec& unit_row);

 private:
  std::vector<std::string> speakers_;  // sorted
  std::unordered_map<std::string, Eigen::Index> index_;
  Mat rows_;  // size x dim, unit rows
};

/// Cosine-similarity selector: bona fide utterances compare against their own
/// speaker's attractor, spoofs against the nearest attractor (ties break to
/// the lowest sorted speaker id).
struct SimilarityResult {
  double d = 0.0;
  std::optional<Eigen::Index> argmax;  // set for spoof inputs
};
SimilarityResult similarity_d(const Vec& unit_embedding, int label, const std::string& speaker,
                              const AttractorSet& attractors);

struct LossResult {
  double loss = 0.0;
  Mat grad_embeddings;  // N x D, w.r.t. raw (unnormalized) embeddings
};

/// Multi-center one-class loss over raw embeddings. Spoof gradients route
/// through the argmax attractor only; attractors receive no gradient.
LossResult samo_loss(const Mat& embeddings, const std::vector<int>& labels,
                     const std::vector<std::string>& speakers, const AttractorSet& attractors,
                     const MarginConfig& cfg);

/// Trainable single center for the one-class baseline.
struct OcCenter {
  Vec w;
};

struct OcLossResult {
  double loss = 0.0;
  Mat grad_embeddings;
  Vec grad_center;  // w.r.t. raw center w
};
OcLossResult oc_softmax_loss(const Mat& embeddings, const std::vector<int>& labels,
                             const OcCenter& center, const MarginConfig& cfg);

/// Two-class head over normalized embeddings; logit 0 is bona fide.
struct SoftmaxHead {
  Mat W2;  // 2 x D
  Vec b2;  // 2
};

struct SoftmaxLossResult {
  double loss = 0.0;
  Mat grad_embeddings;
  Mat grad_W2;
  Vec grad_b2;
};
SoftmaxLossResult softmax_ce_loss(const Mat& embeddings, const std::vector<int>& labels,
                                  const SoftmaxHead& head);

/// Inference score of the softmax baseline: bona fide logit minus spoof logit.
double softmax_score(const SoftmaxHead& head, const Vec& unit_embedding);

/// l2_normalize(mean of normalized embeddings); input rows are raw embeddings.
Vec enrollment_center(const std::vector<Vec>& embeddings);

/// Attractor-based inference score: the claimed speaker's enrollment center if
/// present, otherwise the best match over training attractors.
double score(const Vec& unit_embedding, const std::string& claimed_speaker,
             const std::map<std::string, Vec>& enrollment_centers,
             const AttractorSet& attractors);

enum class AttractorMean { kNormalized, kRaw };

/// Recomputes each speaker's attractor as the renormalized average bona fide
/// embedding under the current encoder. Speakers without bona fide utterances
/// keep their previous attractor. No gradient state is retained.
AttractorSet update_attractors(const EncoderParams& encoder,
                               const std::vector<Utterance>& train_utts,
                               const AttractorSet& previous,
                               AttractorMean mean_mode = AttractorMean::kNormalized);

namespace detail {

/// log(1 + e^z) without overflow.
double softplus(double z);
double sigmoid(double z);

}  // namespace detail

}  // namespace samo
