#include "samo/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "samo/error.hpp"
#include "samo/rng.hpp"

namespace samo {

namespace {

/// Runs fn(0..n-1) across up to `threads` workers. Each index owns its output
/// slot, so results are identical for any thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t width =
      std::min<std::size_t>(n, threads < 1 ? 1 : static_cast<std::size_t>(threads));
  if (width <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(width);
  for (std::size_t t = 0; t < width; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (error) std::rethrow_exception(error);
}

struct ModelState {
  EncoderParams encoder;
  std::optional<AttractorSet> attractors;
  std::optional<OcCenter> center;
  std::optional<SoftmaxHead> head;

  Checkpoint snapshot() const { return Checkpoint{encoder, attractors, center, head}; }
};

struct OptState {
  AdamState encoder;
  long scoring_t = 0;  // shared step count for center / head moments
  Vec m_center, v_center;
  Mat m_W2, v_W2;
  Vec m_b2, v_b2;
};

std::vector<std::string> train_speakers_checked(const std::vector<Utterance>& train_utts,
                                                Objective objective) {
  std::set<std::string> all;
  std::set<std::string> with_bona;
  for (const auto& utt : train_utts) {
    all.insert(utt.speaker);
    if (utt.label == 0) with_bona.insert(utt.speaker);
  }
  if (objective == Objective::kSamo) {
    for (const auto& speaker : all) {
      if (!with_bona.count(speaker)) {
        throw ProtocolError("train speaker '" + speaker +
                            "' has no bona fide utterances; cannot maintain its attractor");
      }
    }
  }
  return {all.begin(), all.end()};
}

void validate_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.update_interval < 1) throw ConfigError("update_interval must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (!(cfg.lr0 > 0.0)) throw ConfigError("lr0 must be > 0");
  if (cfg.lr_min < 0.0 || cfg.lr_min > cfg.lr0)
    throw ConfigError("lr_min must lie in [0, lr0]");
  if (cfg.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  for (const Eigen::Index width : cfg.hidden_dims) {
    if (width < 1) throw ConfigError("encoder hidden widths must be >= 1");
  }
  cfg.margins.validate();
  cfg.tdcf.validate();
  if (cfg.update_epochs_override) {
    for (const int epoch : *cfg.update_epochs_override) {
      if (epoch < 1) throw ConfigError("update_epochs entries must be >= 1");
    }
  }
}

ModelState init_model(const TrainConfig& cfg, const std::vector<std::string>& speakers,
                      Eigen::Index feature_dim, Rng& rng) {
  std::vector<Eigen::Index> dims;
  dims.push_back(feature_dim);
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(cfg.embed_dim);

  ModelState model;
  model.encoder = init_params(dims, cfg.activation, rng);
  switch (cfg.objective) {
    case Objective::kSamo:
      if (cfg.attractor_init == AttractorInit::kOneHot) {
        model.attractors = AttractorSet::one_hot(speakers, cfg.embed_dim);
      } else {
        model.attractors = AttractorSet::random_orthonormal(speakers, cfg.embed_dim, rng);
      }
      break;
    case Objective::kOcSoftmax: {
      Vec w(cfg.embed_dim);
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.normal();
      model.center = OcCenter{l2_unit(w)};
      break;
    }
    case Objective::kSoftmax: {
      SoftmaxHead head;
      head.W2.resize(2, cfg.embed_dim);
      const double limit = std::sqrt(6.0 / static_cast<double>(2 + cfg.embed_dim));
      for (Eigen::Index r = 0; r < 2; ++r) {
        for (Eigen::Index c = 0; c < cfg.embed_dim; ++c) {
          head.W2(r, c) = rng.uniform(-limit, limit);
        }
      }
      head.b2 = Vec::Zero(2);
      model.head = head;
      break;
    }
  }
  return model;
}

OptState init_opt(const ModelState& model) {
  OptState opt;
  opt.encoder = init_adam(model.encoder);
  if (model.center) {
    opt.m_center = Vec::Zero(model.center->w.size());
    opt.v_center = Vec::Zero(model.center->w.size());
  }
  if (model.head) {
    opt.m_W2 = Mat::Zero(model.head->W2.rows(), model.head->W2.cols());
    opt.v_W2 = Mat::Zero(model.head->W2.rows(), model.head->W2.cols());
    opt.m_b2 = Vec::Zero(model.head->b2.size());
    opt.v_b2 = Vec::Zero(model.head->b2.size());
  }
  return opt;
}

bool update_scheduled(const TrainConfig& cfg, int epoch) {
  if (cfg.objective != Objective::kSamo || cfg.attractors_frozen) return false;
  if (cfg.update_epochs_override) {
    const auto& list = *cfg.update_epochs_override;
    return std::find(list.begin(), list.end(), epoch) != list.end();
  }
  return epoch % cfg.update_interval == 0;
}

/// One mini-batch: forward, objective loss, backward, weight decay, Adam.
/// Returns the batch's mean loss.
double batch_step(const TrainConfig& cfg, ModelState& model, OptState& opt,
                  const std::vector<Utterance>& utts, const std::vector<std::size_t>& batch,
                  double lr, int epoch, std::size_t batch_index) {
  const std::size_t n = batch.size();
  const Eigen::Index embed_dim = model.encoder.output_dim();

  std::vector<ForwardCache> caches(n);
  Mat embeddings(static_cast<Eigen::Index>(n), embed_dim);
  std::vector<int> labels(n);
  std::vector<std::string> speakers(n);
  parallel_for(n, cfg.num_threads, [&](std::size_t i) {
    const Utterance& utt = utts[batch[i]];
    embeddings.row(static_cast<Eigen::Index>(i)) =
        forward(model.encoder, utt.features, &caches[i]).transpose();
    labels[i] = utt.label;
    speakers[i] = utt.speaker;
  });

  double loss = 0.0;
  Mat grad_embeddings;
  Vec grad_center;
  Mat grad_W2;
  Vec grad_b2;
  switch (cfg.objective) {
    case Objective::kSamo: {
      LossResult res = samo_loss(embeddings, labels, speakers, *model.attractors, cfg.margins);
      loss = res.loss;
      grad_embeddings = std::move(res.grad_embeddings);
      break;
    }
    case Objective::kOcSoftmax: {
      OcLossResult res = oc_softmax_loss(embeddings, labels, *model.center, cfg.margins);
      loss = res.loss;
      grad_embeddings = std::move(res.grad_embeddings);
      grad_center = std::move(res.grad_center);
      break;
    }
    case Objective::kSoftmax: {
      SoftmaxLossResult res = softmax_ce_loss(embeddings, labels, *model.head);
      loss = res.loss;
      grad_embeddings = std::move(res.grad_embeddings);
      grad_W2 = std::move(res.grad_W2);
      grad_b2 = std::move(res.grad_b2);
      break;
    }
  }
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite training loss at epoch " << epoch << ", batch " << batch_index;
    throw NonFiniteLoss(msg.str());
  }

  std::vector<EncoderGrads> item_grads(n);
  parallel_for(n, cfg.num_threads, [&](std::size_t i) {
    item_grads[i] = backward(model.encoder, caches[i],
                             grad_embeddings.row(static_cast<Eigen::Index>(i)).transpose());
  });
  EncoderGrads grads = zero_grads(model.encoder);
  for (std::size_t i = 0; i < n; ++i) accumulate(grads, item_grads[i]);

  if (cfg.weight_decay > 0.0) {
    for (std::size_t l = 0; l < grads.dW.size(); ++l) {
      grads.dW[l] += cfg.weight_decay * model.encoder.weights[l];
    }
    if (model.center) grad_center += cfg.weight_decay * model.center->w;
    if (model.head) grad_W2 += cfg.weight_decay * model.head->W2;
  }

  adam_step(model.encoder, grads, opt.encoder, lr);
  if (model.center) {
    ++opt.scoring_t;
    detail::adam_update(model.center->w, grad_center, opt.m_center, opt.v_center, opt.scoring_t,
                        lr, opt.encoder.beta1, opt.encoder.beta2, opt.encoder.eps);
  }
  if (model.head) {
    ++opt.scoring_t;
    detail::adam_update(model.head->W2, grad_W2, opt.m_W2, opt.v_W2, opt.scoring_t, lr,
                        opt.encoder.beta1, opt.encoder.beta2, opt.encoder.eps);
    detail::adam_update(model.head->b2, grad_b2, opt.m_b2, opt.v_b2, opt.scoring_t, lr,
                        opt.encoder.beta1, opt.encoder.beta2, opt.encoder.eps);
  }
  return loss;
}

const char* csv_bool(bool value) { return value ? "1" : "0"; }

std::string format_g17(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace

std::string eval_mode_name(EvalMode mode) {
  return mode == EvalMode::kWithEnrollment ? "enroll" : "noenroll";
}

TrainOutput train(const TrainConfig& cfg, const Partitions& partitions,
                  const EpochObserver& observer) {
  validate_config(cfg);
  const std::vector<Utterance>& train_utts = partitions.train.train_utts;
  if (train_utts.empty()) throw ProtocolError("train partition has no utterances");
  const std::vector<std::string> speakers = train_speakers_checked(train_utts, cfg.objective);
  const Eigen::Index feature_dim = train_utts.front().features.size();

  Rng rng(cfg.seed);
  ModelState model = init_model(cfg, speakers, feature_dim, rng);
  OptState opt = init_opt(model);
  const LrSchedule schedule{cfg.lr0, cfg.lr_min, cfg.epochs};

  TrainOutput out;
  double best_eer = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const bool updated = update_scheduled(cfg, epoch);
    if (updated) {
      model.attractors =
          update_attractors(model.encoder, train_utts, *model.attractors, cfg.attractor_mean);
    }

    const double lr = cosine_lr(epoch - 1, schedule);
    const auto batches = epoch_batches(train_utts.size(), static_cast<std::size_t>(cfg.batch_size), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const double batch_loss =
          batch_step(cfg, model, opt, train_utts, batches[b], lr, epoch, b);
      loss_sum += batch_loss * static_cast<double>(batches[b].size());
    }

    const Checkpoint snapshot = model.snapshot();
    const EvalResult dev_enroll =
        evaluate(snapshot, partitions.dev, EvalMode::kWithEnrollment, cfg.tdcf);
    const EvalResult dev_noenroll =
        evaluate(snapshot, partitions.dev, EvalMode::kWithoutEnrollment, cfg.tdcf);

    EpochRecord record;
    record.epoch = epoch;
    record.mean_train_loss = loss_sum / static_cast<double>(train_utts.size());
    record.lr = lr;
    record.attractor_updated = updated;
    record.dev_eer_enroll = dev_enroll.eer;
    record.dev_eer_noenroll = dev_noenroll.eer;
    record.dev_min_tdcf = dev_enroll.min_tdcf;
    out.history.records.push_back(record);

    if (record.dev_eer_enroll < best_eer) {
      best_eer = record.dev_eer_enroll;
      out.best = snapshot;
      out.best_epoch = epoch;
    }
    if (epoch == cfg.epochs) out.last = snapshot;
    if (observer) observer(snapshot, record);
  }
  return out;
}

EvalResult evaluate(const Checkpoint& checkpoint, const Partition& partition, EvalMode mode,
                    const TdcfParams& tdcf) {
  tdcf.validate();
  if (partition.test_utts.empty()) {
    throw EmptyClass("partition '" + partition.name + "' has no test utterances to score");
  }
  const Objective objective = checkpoint.objective();

  std::map<std::string, Vec> centers;
  if (mode == EvalMode::kWithEnrollment) {
    if (partition.enroll_utts.empty()) {
      throw MissingEnrollment("partition '" + partition.name +
                              "' has no enrollment utterances for with-enrollment scoring");
    }
    std::map<std::string, std::vector<Vec>> grouped;
    for (const auto& utt : partition.enroll_utts) {
      grouped[utt.speaker].push_back(forward(checkpoint.encoder, utt.features));
    }
    for (const auto& [speaker, embeddings] : grouped) {
      centers.emplace(speaker, enrollment_center(embeddings));
    }
  }

  Vec unit_center;
  if (objective == Objective::kOcSoftmax) unit_center = l2_unit(checkpoint.center->w);

  EvalResult result;
  result.mode = eval_mode_name(mode);
  result.rows.reserve(partition.test_utts.size());
  ScoreSet set;
  for (const auto& utt : partition.test_utts) {
    const Vec unit = l2_unit(forward(checkpoint.encoder, utt.features));
    double value = 0.0;
    switch (objective) {
      case Objective::kSamo:
        value = score(unit, utt.speaker, centers, *checkpoint.attractors);
        break;
      case Objective::kOcSoftmax: {
        const auto it = centers.find(utt.speaker);
        value = it != centers.end() ? it->second.dot(unit) : unit_center.dot(unit);
        break;
      }
      case Objective::kSoftmax:
        value = softmax_score(*checkpoint.head, unit);
        break;
    }
    result.rows.push_back(
        ScoreRow{utt.utt_id, utt.speaker, utt.label, utt.attack_tag, result.mode, value});
    (utt.label == 0 ? set.bona : set.spoof).push_back(value);
  }

  const EerResult e = eer(set);
  result.eer = e.eer;
  result.eer_threshold = e.threshold;
  result.min_tdcf = min_tdcf(set, tdcf);
  return result;
}

int select_model(const TrainHistory& history) {
  if (history.records.empty()) throw ConfigError("cannot select a model from an empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.records.size(); ++i) {
    if (history.records[i].dev_eer_enroll < history.records[best].dev_eer_enroll) best = i;
  }
  return history.records[best].epoch;
}

TrainConfig ablation_config(int setup_id, const TrainConfig& base) {
  TrainConfig cfg = base;
  cfg.objective = Objective::kSamo;
  cfg.update_epochs_override.reset();
  cfg.attractors_frozen = false;
  switch (setup_id) {
    case 2:
      cfg.attractor_init = AttractorInit::kOneHot;
      cfg.attractors_frozen = true;
      break;
    case 3:
      cfg.update_epochs_override = std::vector<int>{2};
      break;
    case 4:
      cfg.update_interval = 1;
      break;
    case 5:
      cfg.update_interval = 10;
      break;
    default:
      throw ConfigError("ablation setup must be 2, 3, 4, or 5");
  }
  return cfg;
}

std::string ablation_label(int setup_id) {
  switch (setup_id) {
    case 2: return "one-hot and fixed attractors";
    case 3: return "w/o speaker attractor update";
    case 4: return "update every epoch (M=1)";
    case 5: return "update every 10 epochs (M=10)";
    default: throw ConfigError("ablation setup must be 2, 3, 4, or 5");
  }
}

AblationRow run_ablation(int setup_id, const TrainConfig& base, const Partitions& partitions) {
  const TrainConfig cfg = ablation_config(setup_id, base);
  const TrainOutput out = train(cfg, partitions);
  const EvalResult noenroll =
      evaluate(out.best, partitions.eval, EvalMode::kWithoutEnrollment, cfg.tdcf);
  const EvalResult enroll = evaluate(out.best, partitions.eval, EvalMode::kWithEnrollment, cfg.tdcf);
  AblationRow row;
  row.setup_id = setup_id;
  row.label = ablation_label(setup_id);
  row.eer_noenroll = noenroll.eer;
  row.eer_enroll = enroll.eer;
  row.min_tdcf_noenroll = noenroll.min_tdcf;
  row.min_tdcf_enroll = enroll.min_tdcf;
  return row;
}

SeedSummary run_seeds(const TrainConfig& cfg, const Partitions& partitions,
                      const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("run_seeds needs at least one seed");
  SeedSummary summary;
  summary.seeds = seeds;
  summary.best = SeedMetrics{std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity()};
  for (const std::uint64_t seed : seeds) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = seed;
    const TrainOutput out = train(run_cfg, partitions);
    const EvalResult noenroll =
        evaluate(out.best, partitions.eval, EvalMode::kWithoutEnrollment, cfg.tdcf);
    const EvalResult enroll =
        evaluate(out.best, partitions.eval, EvalMode::kWithEnrollment, cfg.tdcf);
    SeedMetrics metrics{noenroll.eer, enroll.eer, noenroll.min_tdcf, enroll.min_tdcf};
    summary.per_seed.push_back(metrics);
    summary.mean.eer_noenroll += metrics.eer_noenroll;
    summary.mean.eer_enroll += metrics.eer_enroll;
    summary.mean.min_tdcf_noenroll += metrics.min_tdcf_noenroll;
    summary.mean.min_tdcf_enroll += metrics.min_tdcf_enroll;
    summary.best.eer_noenroll = std::min(summary.best.eer_noenroll, metrics.eer_noenroll);
    summary.best.eer_enroll = std::min(summary.best.eer_enroll, metrics.eer_enroll);
    summary.best.min_tdcf_noenroll =
        std::min(summary.best.min_tdcf_noenroll, metrics.min_tdcf_noenroll);
    summary.best.min_tdcf_enroll = std::min(summary.best.min_tdcf_enroll, metrics.min_tdcf_enroll);
  }
  const double count = static_cast<double>(seeds.size());
  summary.mean.eer_noenroll /= count;
  summary.mean.eer_enroll /= count;
  summary.mean.min_tdcf_noenroll /= count;
  summary.mean.min_tdcf_enroll /= count;
  return summary;
}

void write_score_file(const std::filesystem::path& path, const std::vector<ScoreRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open score file for writing: " + path.string());
  out << "utt_id,speaker,label,attack_tag,mode,score\n";
  for (const auto& row : rows) {
    out << row.utt_id << ',' << row.speaker << ',' << row.label << ',' << row.attack_tag << ','
        << row.mode << ',' << format_g17(row.score) << '\n';
  }
  if (!out) throw IoError("failed while writing score file: " + path.string());
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EvalResult>& results) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open metrics file for writing: " + path.string());
  out << "mode,eer,eer_threshold,min_tdcf\n";
  for (const auto& res : results) {
    out << res.mode << ',' << format_g17(res.eer) << ',' << format_g17(res.eer_threshold) << ','
        << format_g17(res.min_tdcf) << '\n';
  }
  if (!out) throw IoError("failed while writing metrics file: " + path.string());
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open history file for writing: " + path.string());
  out << "epoch,mean_train_loss,lr,attractor_updated,dev_eer_enroll,dev_eer_noenroll,dev_min_tdcf\n";
  for (const auto& rec : history.records) {
    out << rec.epoch << ',' << format_g17(rec.mean_train_loss) << ',' << format_g17(rec.lr) << ','
        << csv_bool(rec.attractor_updated) << ',' << format_g17(rec.dev_eer_enroll) << ','
        << format_g17(rec.dev_eer_noenroll) << ',' << format_g17(rec.dev_min_tdcf) << '\n';
  }
  if (!out) throw IoError("failed while writing history file: " + path.string());
}

}  // namespace samo
