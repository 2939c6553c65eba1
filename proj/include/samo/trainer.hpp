#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "samo/checkpoint.hpp"
#include "samo/dataset.hpp"
#include "samo/metrics.hpp"

namespace samo {

enum class AttractorInit { kOneHot, kRandomOrthonormal };
enum class EvalMode { kWithEnrollment, kWithoutEnrollment };

std::string eval_mode_name(EvalMode mode);  // "enroll" / "noenroll"

struct TrainConfig {
  int epochs = 100;         // T
  int update_interval = 3;  // M, in epochs
  std::optional<std::vector<int>> update_epochs_override;
  bool attractors_frozen = false;
  Objective objective = Objective::kSamo;
  MarginConfig margins{20.0, 0.7, 0.0};
  double lr0 = 1e-4;
  double lr_min = 0.0;
  int batch_size = 24;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
  std::vector<Eigen::Index> hidden_dims{64, 64};
  Eigen::Index embed_dim = 160;
  Activation activation = Activation::kRelu;
  AttractorInit attractor_init = AttractorInit::kOneHot;
  AttractorMean attractor_mean = AttractorMean::kNormalized;
  TdcfParams tdcf;
  int num_threads = 1;  // batch-level fan-out; results do not depend on it
};

struct EpochRecord {
  int epoch = 0;  // 1-based, as in the training loop
  double mean_train_loss = 0.0;
  double lr = 0.0;
  bool attractor_updated = false;
  double dev_eer_enroll = 0.0;
  double dev_eer_noenroll = 0.0;
  double dev_min_tdcf = 0.0;  // with-enrollment scoring, same mode as selection
};

struct TrainHistory {
  std::vector<EpochRecord> records;
};

struct ScoreRow {
  std::string utt_id;
  std::string speaker;
  int label = 0;
  std::string attack_tag;
  std::string mode;
  double score = 0.0;
};

struct EvalResult {
  std::string mode;
  double eer = 0.0;
  double eer_threshold = 0.0;
  double min_tdcf = 0.0;
  std::vector<ScoreRow> rows;
};

struct TrainOutput {
  Checkpoint best;
  Checkpoint last;
  int best_epoch = 0;
  TrainHistory history;
};

/// Called after every completed epoch with that epoch's model snapshot.
using EpochObserver = std::function<void(const Checkpoint&, const EpochRecord&)>;

/// Algorithm-1 training loop: scheduled attractor updates run at the start of
/// an epoch, before any gradient step of that epoch; epochs are 1-based so
/// with interval M the first update lands at epoch M. The best checkpoint is
/// the one with the lowest dev EER under with-enrollment scoring, ties to the
/// earliest epoch.
TrainOutput train(const TrainConfig& cfg, const Partitions& partitions,
                  const EpochObserver& observer = {});

/// Scores a partition's test utterances. With enrollment, claimed speakers
/// with enrollment data are compared against their enrollment center; without
/// enrollment the checkpoint's own scoring state is used (attractors for
/// samo, the center for oc-softmax, logit difference for softmax).
EvalResult evaluate(const Checkpoint& checkpoint, const Partition& partition, EvalMode mode,
                    const TdcfParams& tdcf);

/// 1-based epoch with the lowest dev EER (with enrollment); ties to earliest.
int select_model(const TrainHistory& history);

struct AblationRow {
  int setup_id = 0;
  std::string label;
  double eer_noenroll = 0.0;
  double eer_enroll = 0.0;
  double min_tdcf_noenroll = 0.0;
  double min_tdcf_enroll = 0.0;
};

/// Table-style ablation setups:
///   2: one-hot and fixed attractors
///   3: single attractor update at the start of epoch 2
///   4: update every epoch (M=1)
///   5: update every 10 epochs (M=10)
TrainConfig ablation_config(int setup_id, const TrainConfig& base);
std::string ablation_label(int setup_id);
AblationRow run_ablation(int setup_id, const TrainConfig& base, const Partitions& partitions);

struct SeedMetrics {
  double eer_noenroll = 0.0;
  double eer_enroll = 0.0;
  double min_tdcf_noenroll = 0.0;
  double min_tdcf_enroll = 0.0;
};

struct SeedSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<SeedMetrics> per_seed;
  SeedMetrics mean;
  SeedMetrics best;  // per-metric minimum across seeds
};

/// Trains once per seed (evaluating the selected checkpoint on the eval
/// partition in both modes) and aggregates mean and best per metric.
SeedSummary run_seeds(const TrainConfig& cfg, const Partitions& partitions,
                      const std::vector<std::uint64_t>& seeds);

void write_score_file(const std::filesystem::path& path, const std::vector<ScoreRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EvalResult>& results);
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

}  // namespace samo
