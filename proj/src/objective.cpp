#include "samo/objective.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

namespace samo {

namespace detail {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

void MarginConfig::validate() const {
  if (alpha <= 0.0) throw ConfigError("margins: alpha must be > 0");
  if (!(m0 > m1)) throw ConfigError("margins: m0 must be > m1");
  if (m0 < -1.0 || m0 > 1.0 || m1 < -1.0 || m1 > 1.0)
    throw ConfigError("margins: m0 and m1 must lie in [-1, 1]");
}

AttractorSet::AttractorSet(std::vector<std::string> speakers, Mat rows)
    : speakers_(std::move(speakers)), rows_(std::move(rows)) {
  if (static_cast<Eigen::Index>(speakers_.size()) != rows_.rows())
    throw DimensionMismatch("AttractorSet: speaker count does not match row count");
  if (!std::is_sorted(speakers_.begin(), speakers_.end()))
    throw ConfigError("AttractorSet: speakers must be sorted");
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    if (!index_.emplace(speakers_[i], i).second)
      throw ConfigError("AttractorSet: duplicate speaker '" + speakers_[i] + "'");
    if (std::abs(rows_.row(i).norm() - 1.0) > 1e-10)
      throw ZeroNorm("AttractorSet: row for '" + speakers_[i] + "' is not unit-norm");
  }
}

AttractorSet AttractorSet::one_hot(std::vector<std::string> speakers, Eigen::Index dim) {
  std::sort(speakers.begin(), speakers.end());
  const auto count = static_cast<Eigen::Index>(speakers.size());
  if (count > dim)
    throw TooManySpeakers("one-hot attractors need |speakers| <= D, got " +
                          std::to_string(count) + " > " + std::to_string(dim));
  Mat rows = Mat::Zero(count, dim);
  for (Eigen::Index k = 0; k < count; ++k) rows(k, k) = 1.0;
  return AttractorSet(std::move(speakers), std::move(rows));
}

AttractorSet AttractorSet::random_orthonormal(std::vector<std::string> speakers,
                                              Eigen::Index dim, Rng& rng) {
  std::sort(speakers.begin(), speakers.end());
  const auto count = static_cast<Eigen::Index>(speakers.size());
  Mat gaussian(dim, count);
  for (Eigen::Index c = 0; c < count; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) gaussian(r, c) = rng.normal();

  const Eigen::Index ortho = std::min(dim, count);
  Eigen::HouseholderQR<Mat> qr(gaussian.leftCols(ortho));
  Mat q = qr.householderQ() * Mat::Identity(dim, ortho);
  const Mat r_mat = qr.matrixQR().topRows(ortho).triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < ortho; ++c)
    if (r_mat(c, c) < 0.0) q.col(c) = -q.col(c);

  Mat rows(count, dim);
  for (Eigen::Index k = 0; k < count; ++k) {
    if (k < ortho)
      rows.row(k) = q.col(k).transpose();
    else
      rows.row(k) = l2_unit(gaussian.col(k)).transpose();
  }
  return AttractorSet(std::move(speakers), std::move(rows));
}

std::optional<Eigen::Index> AttractorSet::index_of(const std::string& speaker) const {
  const auto it = index_.find(speaker);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void AttractorSet::set_row(Eigen::Index index, const Vec& unit_row) {
  if (std::abs(unit_row.norm() - 1.0) > 1e-10)
    throw ZeroNorm("AttractorSet::set_row: row is not unit-norm");
  rows_.row(index) = unit_row.transpose();
}

namespace {

/// Best match over attractor rows; first maximizer in sorted-id order.
std::pair<double, Eigen::Index> max_similarity(const Vec& unit_embedding,
                                               const AttractorSet& attractors) {
  const Vec sims = attractors.rows() * unit_embedding;
  Eigen::Index best = 0;
  double best_sim = sims[0];
  for (Eigen::Index k = 1; k < sims.size(); ++k) {
    if (sims[k] > best_sim) {
      best_sim = sims[k];
      best = k;
    }
  }
  return {best_sim, best};
}

}  // namespace

SimilarityResult similarity_d(const Vec& unit_embedding, int label, const std::string& speaker,
                              const AttractorSet& attractors) {
  if (attractors.empty()) throw EmptyAttractors("similarity_d: empty attractor set");
  if (label == 0) {
    const auto idx = attractors.index_of(speaker);
    if (!idx)
      throw UnknownSpeaker("similarity_d: bona fide speaker '" + speaker +
                           "' has no attractor");
    return {attractors.rows().row(*idx).dot(unit_embedding), std::nullopt};
  }
  const auto [best_sim, best] = max_similarity(unit_embedding, attractors);
  return {best_sim, best};
}

LossResult samo_loss(const Mat& embeddings, const std::vector<int>& labels,
                     const std::vector<std::string>& speakers, const AttractorSet& attractors,
                     const MarginConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = embeddings.rows();
  if (n == 0) throw ConfigError("samo_loss: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != n ||
      static_cast<Eigen::Index>(speakers.size()) != n)
    throw DimensionMismatch("samo_loss: labels/speakers do not match batch size");

  LossResult result;
  result.grad_embeddings = Mat::Zero(n, embeddings.cols());
  const double inv_n = 1.0 / static_cast<double>(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [unit, norm] = l2_normalize(embeddings.row(i).transpose());
    const auto sim = similarity_d(unit, labels[i], speakers[i], attractors);
    const double sign = labels[i] == 0 ? 1.0 : -1.0;  // (-1)^y
    const double margin = labels[i] == 0 ? cfg.m0 : cfg.m1;
    const double z = cfg.alpha * (margin - sim.d) * sign;
    result.loss += inv_n * detail::softplus(z);

    // dL/dd routes through the selected attractor only.
    const double dl_dd = inv_n * detail::sigmoid(z) * cfg.alpha * (-sign);
    const Eigen::Index row =
        labels[i] == 0 ? *attractors.index_of(speakers[i]) : *sim.argmax;
    const Vec upstream = dl_dd * attractors.rows().row(row).transpose();
    result.grad_embeddings.row(i) =
        l2_normalize_backward(embeddings.row(i).transpose(), upstream).transpose();
  }
  return result;
}

OcLossResult oc_softmax_loss(const Mat& embeddings, const std::vector<int>& labels,
                             const OcCenter& center, const MarginConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = embeddings.rows();
  if (n == 0) throw ConfigError("oc_softmax_loss: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw DimensionMismatch("oc_softmax_loss: labels do not match batch size");

  const auto [unit_center, center_norm] = l2_normalize(center.w);
  OcLossResult result;
  result.grad_embeddings = Mat::Zero(n, embeddings.cols());
  Vec grad_unit_center = Vec::Zero(center.w.size());
  const double inv_n = 1.0 / static_cast<double>(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [unit, norm] = l2_normalize(embeddings.row(i).transpose());
    const double d = unit_center.dot(unit);
    const double sign = labels[i] == 0 ? 1.0 : -1.0;
    const double margin = labels[i] == 0 ? cfg.m0 : cfg.m1;
    const double z = cfg.alpha * (margin - d) * sign;
    result.loss += inv_n * detail::softplus(z);

    const double dl_dd = inv_n * detail::sigmoid(z) * cfg.alpha * (-sign);
    result.grad_embeddings.row(i) =
        l2_normalize_backward(embeddings.row(i).transpose(), dl_dd * unit_center).transpose();
    grad_unit_center += dl_dd * unit;
  }
  result.grad_center = l2_normalize_backward(center.w, grad_unit_center);
  return result;
}

SoftmaxLossResult softmax_ce_loss(const Mat& embeddings, const std::vector<int>& labels,
                                  const SoftmaxHead& head) {
  const Eigen::Index n = embeddings.rows();
  if (n == 0) throw ConfigError("softmax_ce_loss: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw DimensionMismatch("softmax_ce_loss: labels do not match batch size");
  if (head.W2.rows() != 2 || head.b2.size() != 2 || head.W2.cols() != embeddings.cols())
    throw DimensionMismatch("softmax_ce_loss: head shape does not match embeddings");

  SoftmaxLossResult result;
  result.grad_embeddings = Mat::Zero(n, embeddings.cols());
  result.grad_W2 = Mat::Zero(2, embeddings.cols());
  result.grad_b2 = Vec::Zero(2);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [unit, norm] = l2_normalize(embeddings.row(i).transpose());
    const Vec logits = head.W2 * unit + head.b2;
    const double zmax = logits.maxCoeff();
    const Vec shifted = logits.array() - zmax;
    const double log_z = std::log(shifted.array().exp().sum());
    const int y = labels[i];
    result.loss += inv_n * (log_z - shifted[y]);

    Vec dlogits = (shifted.array() - log_z).exp().matrix();  // softmax probs
    dlogits[y] -= 1.0;
    dlogits *= inv_n;
    result.grad_W2 += dlogits * unit.transpose();
    result.grad_b2 += dlogits;
    const Vec grad_unit = head.W2.transpose() * dlogits;
    result.grad_embeddings.row(i) =
        l2_normalize_backward(embeddings.row(i).transpose(), grad_unit).transpose();
  }
  return result;
}

double softmax_score(const SoftmaxHead& head, const Vec& unit_embedding) {
  const Vec logits = head.W2 * unit_embedding + head.b2;
  return logits[0] - logits[1];
}

Vec enrollment_center(const std::vector<Vec>& embeddings) {
  if (embeddings.empty()) throw MissingEnrollment("enrollment_center: no embeddings");
  Vec mean = Vec::Zero(embeddings.front().size());
  for (const auto& e : embeddings) mean += l2_unit(e);
  mean /= static_cast<double>(embeddings.size());
  return l2_unit(mean);
}

double score(const Vec& unit_embedding, const std::string& claimed_speaker,
             const std::map<std::string, Vec>& enrollment_centers,
             const AttractorSet& attractors) {
  const auto it = enrollment_centers.find(claimed_speaker);
  if (it != enrollment_centers.end()) return it->second.dot(unit_embedding);
  if (attractors.empty())
    throw EmptyAttractors("score: speaker '" + claimed_speaker +
                          "' is not enrolled and no attractors are available");
  return max_similarity(unit_embedding, attractors).first;
}

AttractorSet update_attractors(const EncoderParams& encoder,
                               const std::vector<Utterance>& train_utts,
                               const AttractorSet& previous, AttractorMean mean_mode) {
  std::map<std::string, Vec> sums;
  std::map<std::string, int> counts;
  for (const auto& utt : train_utts) {
    if (utt.label != 0) continue;
    const Vec embedding = forward(encoder, utt.features);
    const Vec term = mean_mode == AttractorMean::kNormalized ? l2_unit(embedding) : embedding;
    auto [it, inserted] = sums.emplace(utt.speaker, term);
    if (!inserted) it->second += term;
    ++counts[utt.speaker];
  }

  AttractorSet updated = previous;
  for (const auto& [speaker, sum] : sums) {
    const auto idx = updated.index_of(speaker);
    if (!idx)
      throw UnknownSpeaker("update_attractors: speaker '" + speaker +
                           "' has no attractor slot");
    const Vec mean = sum / static_cast<double>(counts.at(speaker));
    if (mean.norm() < kZeroNormFloor)
      throw ZeroNorm("update_attractors: mean embedding of speaker '" + speaker +
                     "' is numerically zero");
    updated.set_row(*idx, l2_unit(mean));
  }
  return updated;
}

}  // namespace samo
