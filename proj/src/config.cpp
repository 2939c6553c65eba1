#include "samo/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "samo/checkpoint.hpp"
#include "samo/error.hpp"

namespace samo {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      // synthetic corpus
      {"data_seed", "1"},
      {"n_speakers", "2"},
      {"bona_per_speaker", "10"},
      {"spoof_per_attack", "10"},
      {"n_attacks", "2"},
      {"feature_dim", "8"},
      {"speaker_spread", "0.5"},
      {"spoof_spread", "0.5"},
      {"spoof_placement", "between_speakers"},
      // protocol
      {"corpus", "corpus.csv"},
      {"train_speakers", ""},
      {"dev_speakers", ""},
      {"eval_speakers", ""},
      {"enroll_per_speaker", "3"},
      {"split_seed", "1"},
      // training
      {"seed", "1"},
      {"epochs", "100"},
      {"update_interval", "3"},
      {"update_epochs", ""},
      {"attractors_frozen", "false"},
      {"attractor_init", "one_hot"},
      {"attractor_mean", "normalized"},
      {"objective", "samo"},
      {"alpha", "20"},
      {"margin_bona", "auto"},
      {"margin_spoof", "auto"},
      {"lr0", "1e-4"},
      {"lr_min", "0"},
      {"batch_size", "24"},
      {"weight_decay", "0"},
      {"encoder_dims", "64,64"},
      {"embed_dim", "160"},
      {"activation", "relu"},
      // tandem cost
      {"pi_tar", "0.9405"},
      {"pi_non", "0.0095"},
      {"pi_spoof", "0.05"},
      {"c_miss_cm", "1"},
      {"c_fa_cm", "10"},
      {"c_miss_asv", "1"},
      {"c_fa_asv", "10"},
      {"p_miss_asv", "0.05"},
      {"p_fa_asv", "0.01"},
      {"p_miss_spoof_asv", "0.5"},
  };
  return defaults;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace

Config::Config() : values_(default_values()) {}

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  Config cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value, got '" + text + "'");
    }
    try {
      cfg.set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    } catch (const ConfigError& err) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
  return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void Config::set_pair(const std::string& pair) {
  const auto eq = pair.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must be key=value, got '" + pair + "'");
  }
  set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
}

const std::string& Config::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

int Config::get_int(const std::string& key) const {
  const std::string& text = get_string(key);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + text + "'");
  }
  return value;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string& text = get_string(key);
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + text +
                      "'");
  }
  return value;
}

double Config::get_double(const std::string& key) const {
  const std::string& text = get_string(key);
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + text + "'");
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string& text = get_string(key);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key '" + key + "' expects true/false, got '" + text + "'");
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  return split_list(get_string(key));
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> items;
  for (const std::string& item : split_list(get_string(key))) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc{} || ptr != item.data() + item.size()) {
      throw ConfigError("config key '" + key + "' expects integers, got '" + item + "'");
    }
    items.push_back(value);
  }
  return items;
}

std::string Config::describe() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
  return out.str();
}

SynthConfig make_synth_config(const Config& cfg) {
  SynthConfig synth;
  synth.n_speakers = cfg.get_int("n_speakers");
  synth.bona_per_speaker = cfg.get_int("bona_per_speaker");
  synth.spoof_per_attack = cfg.get_int("spoof_per_attack");
  synth.n_attacks = cfg.get_int("n_attacks");
  synth.feature_dim = cfg.get_int("feature_dim");
  synth.speaker_spread = cfg.get_double("speaker_spread");
  synth.spoof_spread = cfg.get_double("spoof_spread");
  const std::string& placement = cfg.get_string("spoof_placement");
  if (placement == "between_speakers") {
    synth.spoof_placement = SpoofPlacement::kBetweenSpeakers;
  } else if (placement == "per_speaker_offset") {
    synth.spoof_placement = SpoofPlacement::kPerSpeakerOffset;
  } else if (placement == "uniform_shell") {
    synth.spoof_placement = SpoofPlacement::kUniformShell;
  } else {
    throw ConfigError("spoof_placement must be between_speakers, per_speaker_offset, or "
                      "uniform_shell, got '" +
                      placement + "'");
  }
  synth.seed = cfg.get_u64("data_seed");
  return synth;
}

ProtocolConfig make_protocol_config(const Config& cfg) {
  ProtocolConfig protocol;
  protocol.train_speakers = cfg.get_string_list("train_speakers");
  protocol.dev_speakers = cfg.get_string_list("dev_speakers");
  protocol.eval_speakers = cfg.get_string_list("eval_speakers");
  protocol.enroll_per_speaker = cfg.get_int("enroll_per_speaker");
  if (protocol.train_speakers.empty() || protocol.dev_speakers.empty() ||
      protocol.eval_speakers.empty()) {
    throw ConfigError(
        "train_speakers, dev_speakers, and eval_speakers must all be set (comma-separated "
        "speaker ids)");
  }
  return protocol;
}

TdcfParams make_tdcf_params(const Config& cfg) {
  TdcfParams params;
  params.pi_tar = cfg.get_double("pi_tar");
  params.pi_non = cfg.get_double("pi_non");
  params.pi_spoof = cfg.get_double("pi_spoof");
  params.c_miss_cm = cfg.get_double("c_miss_cm");
  params.c_fa_cm = cfg.get_double("c_fa_cm");
  params.c_miss_asv = cfg.get_double("c_miss_asv");
  params.c_fa_asv = cfg.get_double("c_fa_asv");
  params.p_miss_asv = cfg.get_double("p_miss_asv");
  params.p_fa_asv = cfg.get_double("p_fa_asv");
  params.p_miss_spoof_asv = cfg.get_double("p_miss_spoof_asv");
  params.validate();
  return params;
}

TrainConfig make_train_config(const Config& cfg) {
  TrainConfig train;
  train.epochs = cfg.get_int("epochs");
  train.update_interval = cfg.get_int("update_interval");
  const std::vector<int> override_epochs = cfg.get_int_list("update_epochs");
  if (!override_epochs.empty()) train.update_epochs_override = override_epochs;
  train.attractors_frozen = cfg.get_bool("attractors_frozen");
  train.objective = parse_objective(cfg.get_string("objective"));

  train.margins.alpha = cfg.get_double("alpha");
  const std::string& m0 = cfg.get_string("margin_bona");
  const std::string& m1 = cfg.get_string("margin_spoof");
  const bool is_ocs = train.objective == Objective::kOcSoftmax;
  train.margins.m0 = m0 == "auto" ? (is_ocs ? 0.5 : 0.7) : cfg.get_double("margin_bona");
  train.margins.m1 = m1 == "auto" ? (is_ocs ? -0.2 : 0.0) : cfg.get_double("margin_spoof");

  train.lr0 = cfg.get_double("lr0");
  train.lr_min = cfg.get_double("lr_min");
  train.batch_size = cfg.get_int("batch_size");
  train.weight_decay = cfg.get_double("weight_decay");
  train.seed = cfg.get_u64("seed");

  train.hidden_dims.clear();
  for (const int width : cfg.get_int_list("encoder_dims")) {
    train.hidden_dims.push_back(width);
  }
  train.embed_dim = cfg.get_int("embed_dim");

  const std::string& activation = cfg.get_string("activation");
  if (activation == "relu") {
    train.activation = Activation::kRelu;
  } else if (activation == "tanh") {
    train.activation = Activation::kTanh;
  } else {
    throw ConfigError("activation must be relu or tanh, got '" + activation + "'");
  }

  const std::string& init = cfg.get_string("attractor_init");
  if (init == "one_hot") {
    train.attractor_init = AttractorInit::kOneHot;
  } else if (init == "random_orthonormal") {
    train.attractor_init = AttractorInit::kRandomOrthonormal;
  } else {
    throw ConfigError("attractor_init must be one_hot or random_orthonormal, got '" + init + "'");
  }

  const std::string& mean_mode = cfg.get_string("attractor_mean");
  if (mean_mode == "normalized") {
    train.attractor_mean = AttractorMean::kNormalized;
  } else if (mean_mode == "raw") {
    train.attractor_mean = AttractorMean::kRaw;
  } else {
    throw ConfigError("attractor_mean must be normalized or raw, got '" + mean_mode + "'");
  }

  train.tdcf = make_tdcf_params(cfg);
  return train;
}

}  // namespace samo
