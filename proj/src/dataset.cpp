#include "samo/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace samo {

namespace {

std::string zero_padded(int value, int width) {
  std::ostringstream out;
  out << std::setw(width) << std::setfill('0') << value;
  return out.str();
}

int id_width(int count) {
  int width = 2;
  for (int v = count - 1; v >= 100; v /= 10) ++width;
  return width;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

Vec gaussian_vec(Eigen::Index dim, Rng& rng) {
  Vec v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

std::vector<std::string> Corpus::speakers() const {
  std::set<std::string> ids;
  for (const auto& utt : utterances) ids.insert(utt.speaker);
  return {ids.begin(), ids.end()};
}

Vec speaker_mean(const SynthConfig& cfg, int speaker_index) {
  Vec mean = Vec::Zero(cfg.feature_dim);
  const Eigen::Index axis = speaker_index / 2;
  const double sign = (speaker_index % 2 == 0) ? 1.0 : -1.0;
  mean[axis] = sign * kSpeakerMeanScale;
  return mean;
}

std::string synth_speaker_id(const SynthConfig& cfg, int speaker_index) {
  return "spk" + zero_padded(speaker_index, id_width(cfg.n_speakers));
}

Corpus generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n_speakers < 1 || cfg.bona_per_speaker < 1 || cfg.spoof_per_attack < 1 ||
      cfg.n_attacks < 1 || cfg.feature_dim < 1)
    throw ConfigError("generate_synthetic: all counts must be >= 1");
  if (cfg.speaker_spread <= 0.0 || cfg.spoof_spread <= 0.0)
    throw ConfigError("generate_synthetic: spreads must be > 0");
  if (cfg.n_speakers > cfg.feature_dim)
    throw ConfigError("generate_synthetic: n_speakers must be <= feature_dim");
  if (cfg.spoof_placement == SpoofPlacement::kBetweenSpeakers && cfg.n_speakers < 2)
    throw ConfigError("generate_synthetic: between_speakers placement needs >= 2 speakers");

  Rng rng(cfg.seed);
  Corpus corpus;
  corpus.feature_dim = cfg.feature_dim;

  // Attack cluster centers and claimed-speaker assignment.
  std::vector<Vec> attack_means(cfg.n_attacks);
  std::vector<std::pair<int, int>> attack_pair(cfg.n_attacks, {0, 0});
  switch (cfg.spoof_placement) {
    case SpoofPlacement::kBetweenSpeakers: {
      std::vector<std::pair<int, int>> pairs;
      for (int i = 0; i < cfg.n_speakers; ++i)
        for (int j = i + 1; j < cfg.n_speakers; ++j) pairs.emplace_back(i, j);
      for (int a = 0; a < cfg.n_attacks; ++a) {
        const auto [i, j] = pairs[a % pairs.size()];
        attack_pair[a] = {i, j};
        attack_means[a] = 0.5 * (speaker_mean(cfg, i) + speaker_mean(cfg, j));
      }
      break;
    }
    case SpoofPlacement::kPerSpeakerOffset: {
      for (int a = 0; a < cfg.n_attacks; ++a) {
        const int target = a % cfg.n_speakers;
        attack_pair[a] = {target, target};
        attack_means[a] = 0.5 * speaker_mean(cfg, target);
      }
      break;
    }
    case SpoofPlacement::kUniformShell: {
      for (int a = 0; a < cfg.n_attacks; ++a)
        attack_means[a] = kSpeakerMeanScale * l2_unit(gaussian_vec(cfg.feature_dim, rng));
      break;
    }
  }

  const int utt_width = 4;
  for (int s = 0; s < cfg.n_speakers; ++s) {
    const Vec mean = speaker_mean(cfg, s);
    const std::string spk = synth_speaker_id(cfg, s);
    for (int b = 0; b < cfg.bona_per_speaker; ++b) {
      Utterance utt;
      utt.utt_id = spk + "_b" + zero_padded(b, utt_width);
      utt.speaker = spk;
      utt.label = 0;
      utt.attack_tag = "-";
      utt.features = mean + cfg.speaker_spread * gaussian_vec(cfg.feature_dim, rng);
      corpus.utterances.push_back(std::move(utt));
    }
  }

  const int attack_width = id_width(cfg.n_attacks + 1);
  for (int a = 0; a < cfg.n_attacks; ++a) {
    const std::string tag = "A" + zero_padded(a + 1, attack_width);
    for (int u = 0; u < cfg.spoof_per_attack; ++u) {
      int claimed = 0;
      switch (cfg.spoof_placement) {
        case SpoofPlacement::kBetweenSpeakers:
          claimed = (u % 2 == 0) ? attack_pair[a].first : attack_pair[a].second;
          break;
        case SpoofPlacement::kPerSpeakerOffset:
          claimed = attack_pair[a].first;
          break;
        case SpoofPlacement::kUniformShell:
          claimed = u % cfg.n_speakers;
          break;
      }
      Utterance utt;
      utt.utt_id = tag + "_" + synth_speaker_id(cfg, claimed) + "_s" + zero_padded(u, utt_width);
      utt.speaker = synth_speaker_id(cfg, claimed);
      utt.label = 1;
      utt.attack_tag = tag;
      utt.features = attack_means[a] + cfg.spoof_spread * gaussian_vec(cfg.feature_dim, rng);
      corpus.utterances.push_back(std::move(utt));
    }
  }

  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "utt_id,speaker,label,attack_tag";
  for (Eigen::Index f = 0; f < corpus.feature_dim; ++f) out << ",f" << f;
  out << "\n";
  for (const auto& utt : corpus.utterances) {
    out << utt.utt_id << ',' << utt.speaker << ',' << utt.label << ',' << utt.attack_tag;
    for (Eigen::Index f = 0; f < utt.features.size(); ++f)
      out << ',' << format_double(utt.features[f]);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ":1: empty file, expected header");
  const auto header = split_fields(line);
  if (header.size() < 5 || header[0] != "utt_id" || header[1] != "speaker" ||
      header[2] != "label" || header[3] != "attack_tag")
    throw ParseError(path.string() + ":1: bad header, expected utt_id,speaker,label,attack_tag,f0,...");
  const Eigen::Index feature_dim = static_cast<Eigen::Index>(header.size()) - 4;

  Corpus corpus;
  corpus.feature_dim = feature_dim;
  std::unordered_set<std::string> seen_ids;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    const auto fields = split_fields(line);
    if (static_cast<Eigen::Index>(fields.size()) != feature_dim + 4)
      throw DimensionMismatch(where + "expected " + std::to_string(feature_dim + 4) +
                              " fields, got " + std::to_string(fields.size()));

    Utterance utt;
    utt.utt_id = fields[0];
    utt.speaker = fields[1];
    if (utt.utt_id.empty() || utt.speaker.empty())
      throw ParseError(where + "empty utt_id or speaker");
    if (!seen_ids.insert(utt.utt_id).second)
      throw ParseError(where + "duplicate utt_id '" + utt.utt_id + "'");

    if (fields[2] == "0")
      utt.label = 0;
    else if (fields[2] == "1")
      utt.label = 1;
    else
      throw ParseError(where + "label must be 0 or 1, got '" + fields[2] + "'");

    utt.attack_tag = fields[3];
    if ((utt.label == 0) != (utt.attack_tag == "-"))
      throw ParseError(where + "attack_tag must be '-' exactly for bona fide rows");

    utt.features.resize(feature_dim);
    for (Eigen::Index f = 0; f < feature_dim; ++f) {
      const std::string& field = fields[4 + f];
      try {
        std::size_t used = 0;
        utt.features[f] = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ParseError(where + "bad float '" + field + "'");
      }
      if (!std::isfinite(utt.features[f]))
        throw ParseError(where + "non-finite feature value");
    }
    corpus.utterances.push_back(std::move(utt));
  }
  if (corpus.utterances.empty()) throw ParseError(path.string() + ": no utterance rows");
  return corpus;
}

Partitions split_partitions(const Corpus& corpus, const ProtocolConfig& protocol, Rng& rng) {
  if (protocol.enroll_per_speaker < 0)
    throw ProtocolError("enroll_per_speaker must be >= 0");

  enum Role { kTrain = 0, kDev = 1, kEval = 2 };
  std::unordered_map<std::string, Role> role;
  auto assign = [&](const std::vector<std::string>& speakers, Role r, const char* list_name) {
    for (const auto& s : speakers) {
      if (!role.emplace(s, r).second)
        throw ProtocolError("speaker '" + s + "' listed more than once (" + list_name + ")");
    }
  };
  assign(protocol.train_speakers, kTrain, "train_speakers");
  assign(protocol.dev_speakers, kDev, "dev_speakers");
  assign(protocol.eval_speakers, kEval, "eval_speakers");

  std::unordered_set<std::string> corpus_speakers;
  for (const auto& utt : corpus.utterances) corpus_speakers.insert(utt.speaker);
  for (const auto& utt : corpus.utterances)
    if (!role.count(utt.speaker))
      throw ProtocolError("speaker '" + utt.speaker + "' not covered by any protocol list");
  for (const auto& [speaker, r] : role)
    if (!corpus_speakers.count(speaker))
      throw ProtocolError("protocol speaker '" + speaker + "' not present in corpus");

  Partitions parts;
  parts.train.name = "train";
  parts.dev.name = "dev";
  parts.eval.name = "eval";

  // Train keeps everything.
  for (const auto& utt : corpus.utterances)
    if (role.at(utt.speaker) == kTrain) parts.train.train_utts.push_back(utt);

  auto fill_eval_style = [&](Partition& part, const std::vector<std::string>& speakers, Role r) {
    // Pick enrollment subsets speaker by speaker, in protocol list order.
    std::unordered_map<std::string, std::unordered_set<std::string>> enroll_ids;
    for (const auto& speaker : speakers) {
      std::vector<const Utterance*> bona;
      for (const auto& utt : corpus.utterances)
        if (utt.speaker == speaker && utt.label == 0) bona.push_back(&utt);
      if (static_cast<int>(bona.size()) <= protocol.enroll_per_speaker)
        throw ProtocolError("speaker '" + speaker + "' has " + std::to_string(bona.size()) +
                            " bona fide utterances, need more than enroll_per_speaker=" +
                            std::to_string(protocol.enroll_per_speaker));
      const auto perm = seeded_shuffle(bona.size(), rng);
      auto& chosen = enroll_ids[speaker];
      for (int k = 0; k < protocol.enroll_per_speaker; ++k)
        chosen.insert(bona[perm[k]]->utt_id);
    }
    // Emit in corpus file order for stable outputs.
    for (const auto& utt : corpus.utterances) {
      if (role.at(utt.speaker) != r) continue;
      if (utt.label == 0 && enroll_ids[utt.speaker].count(utt.utt_id))
        part.enroll_utts.push_back(utt);
      else
        part.test_utts.push_back(utt);
    }
  };
  fill_eval_style(parts.dev, protocol.dev_speakers, kDev);
  fill_eval_style(parts.eval, protocol.eval_speakers, kEval);

  return parts;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    Rng& rng) {
  if (batch_size < 1) throw ConfigError("epoch_batches: batch_size must be >= 1");
  const auto perm = seeded_shuffle(n, rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return batches;
}

}  // namespace samo
