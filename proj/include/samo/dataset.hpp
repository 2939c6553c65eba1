#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "samo/numerics.hpp"
#include "samo/rng.hpp"

namespace samo {

/// One labeled feature vector. label 0 = bona fide, 1 = spoof; attack_tag is
/// "-" exactly for bona fide utterances. Spoof utterances still carry a
/// speaker id: it names the claimed speaker at scoring time and decides which
/// partition the utterance lands in, but the SAMO loss never reads it.
struct Utterance {
  std::string utt_id;
  std::string speaker;
  int label = 0;
  std::string attack_tag = "-";
  Vec features;
};

struct Corpus {
  std::vector<Utterance> utterances;
  Eigen::Index feature_dim = 0;

  /// Sorted unique speaker ids.
  std::vector<std::string> speakers() const;
};

enum class SpoofPlacement { kBetweenSpeakers, kPerSpeakerOffset, kUniformShell };

struct SynthConfig {
  int n_speakers = 2;
  int bona_per_speaker = 10;
  int spoof_per_attack = 10;
  int n_attacks = 2;
  Eigen::Index feature_dim = 8;
  double speaker_spread = 0.5;  // sigma_b
  double spoof_spread = 0.5;    // sigma_s
  SpoofPlacement spoof_placement = SpoofPlacement::kBetweenSpeakers;
  std::uint64_t seed = 1;
};

/// Radius at which speaker cluster centers are placed.
inline constexpr double kSpeakerMeanScale = 5.0;

/// Center of speaker k's bona fide cluster: alternating-sign scaled basis
/// directions (+scale*e0, -scale*e0, +scale*e1, ...), so consecutive speakers
/// sit at antipodes and between_speakers midpoints can reach the origin.
Vec speaker_mean(const SynthConfig& cfg, int speaker_index);

/// Name of the k-th generated speaker ("spk00", ...).
std::string synth_speaker_id(const SynthConfig& cfg, int speaker_index);

/// Gaussian clusters per speaker plus per-attack spoof clusters whose centers
/// depend on cfg.spoof_placement:
///   between_speakers:   midpoints of speaker-mean pairs (lexicographic pair
///                       order, attack a uses pair a mod C(n,2)); claimed
///                       speaker alternates between the pair members
///   per_speaker_offset: halfway between the origin and the targeted
///                       speaker's mean (target = attack index mod n)
///   uniform_shell:      random directions at the speaker radius, claimed
///                       speakers round-robin
Corpus generate_synthetic(const SynthConfig& cfg);

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct Partition {
  std::string name;  // train | dev | eval
  std::vector<Utterance> train_utts;
  std::vector<Utterance> enroll_utts;
  std::vector<Utterance> test_utts;
};

struct ProtocolConfig {
  std::vector<std::string> train_speakers;
  std::vector<std::string> dev_speakers;
  std::vector<std::string> eval_speakers;
  int enroll_per_speaker = 3;
};

struct Partitions {
  Partition train;
  Partition dev;
  Partition eval;
};

/// Splits by speaker. Train keeps everything as train_utts; for dev/eval
/// speakers, enroll_per_speaker bona fide utterances (chosen via rng) become
/// enrollment and the rest of their utterances go to test.
Partitions split_partitions(const Corpus& corpus, const ProtocolConfig& protocol, Rng& rng);

/// One epoch of mini-batch index lists: a fresh shuffle each call, every index
/// exactly once, final short batch kept.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    Rng& rng);

}  // namespace samo
