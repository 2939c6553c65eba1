#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "samo/dataset.hpp"
#include "samo/metrics.hpp"
#include "samo/trainer.hpp"

namespace samo {

/// Flat key=value experiment configuration. Every key has a documented
/// default; setting an unknown key is an error, so typos fail loudly. File
/// syntax: one `key = value` per line, `#` comments and blank lines ignored.
class Config {
 public:
  Config();

  static Config from_file(const std::filesystem::path& path);

  /// Throws ConfigError naming the key when it is not in the registry.
  void set(const std::string& key, const std::string& value);
  /// Parses a single "key=value" override (as passed via --set).
  void set_pair(const std::string& pair);

  const std::string& get_string(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;  // comma-separated
  std::vector<int> get_int_list(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Resolved configuration as `key = value` lines, sorted by key.
  std::string describe() const;

 private:
  std::map<std::string, std::string> values_;
};

SynthConfig make_synth_config(const Config& cfg);
ProtocolConfig make_protocol_config(const Config& cfg);
TdcfParams make_tdcf_params(const Config& cfg);

/// Builds the trainer configuration, resolving "auto" margins by objective
/// (samo: m0=0.7, m1=0; oc_softmax: m0=0.5, m1=-0.2; softmax ignores margins).
TrainConfig make_train_config(const Config& cfg);

}  // namespace samo
