#include "samo/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "samo/checkpoint.hpp"
#include "samo/config.hpp"
#include "samo/error.hpp"
#include "samo/trainer.hpp"

namespace samo {

namespace {

namespace fs = std::filesystem;

std::string format_g17(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

int thread_count_from_env() {
  const char* raw = std::getenv("SAMO_NUM_THREADS");
  if (!raw || !*raw) return 1;
  const std::string text(raw);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value < 1) {
    throw ConfigError("SAMO_NUM_THREADS must be a positive integer, got '" + text + "'");
  }
  return value;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path.string());
  out << text;
  if (!out) throw IoError("failed while writing: " + path.string());
}

Config resolve_config(const std::string& config_path, const std::vector<std::string>& overrides) {
  Config cfg = config_path.empty() ? Config() : Config::from_file(config_path);
  for (const std::string& pair : overrides) cfg.set_pair(pair);
  return cfg;
}

Partitions load_partitions(const Config& cfg) {
  const Corpus corpus = load_corpus(cfg.get_string("corpus"));
  Rng rng(cfg.get_u64("split_seed"));
  return split_partitions(corpus, make_protocol_config(cfg), rng);
}

const Partition& pick_partition(const Partitions& parts, const std::string& name) {
  if (name == "train") return parts.train;
  if (name == "dev") return parts.dev;
  return parts.eval;
}

std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> items;
  std::string::size_type start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const std::string item =
        value.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) items.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

void print_partition_row(const std::string& name, const std::set<std::string>& speakers, int bona,
                         int spoof) {
  std::printf("%-10s %10zu %10d %10d\n", name.c_str(), speakers.size(), bona, spoof);
}

void cmd_gen_data(const Config& cfg, const std::string& out_path) {
  const Corpus corpus = generate_synthetic(make_synth_config(cfg));
  save_corpus(corpus, out_path);

  struct Bucket {
    std::set<std::string> speakers;
    int bona = 0;
    int spoof = 0;
  };
  Bucket all;
  for (const auto& utt : corpus.utterances) {
    all.speakers.insert(utt.speaker);
    (utt.label == 0 ? all.bona : all.spoof)++;
  }
  std::printf("%-10s %10s %10s %10s\n", "partition", "#speakers", "#bonafide", "#spoofed");
  print_partition_row("corpus", all.speakers, all.bona, all.spoof);

  const std::vector<std::pair<std::string, std::string>> parts = {
      {"train", "train_speakers"}, {"dev", "dev_speakers"}, {"eval", "eval_speakers"}};
  for (const auto& [name, key] : parts) {
    const std::vector<std::string> listed = cfg.get_string_list(key);
    if (listed.empty()) continue;
    const std::set<std::string> members(listed.begin(), listed.end());
    Bucket bucket;
    for (const auto& utt : corpus.utterances) {
      if (!members.count(utt.speaker)) continue;
      bucket.speakers.insert(utt.speaker);
      (utt.label == 0 ? bucket.bona : bucket.spoof)++;
    }
    print_partition_row(name, bucket.speakers, bucket.bona, bucket.spoof);
  }
  std::printf("wrote %zu utterances to %s\n", corpus.utterances.size(), out_path.c_str());
}

void cmd_train(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Partitions parts = load_partitions(cfg);
  TrainConfig tc = make_train_config(cfg);
  tc.num_threads = thread_count_from_env();

  const TrainOutput out = train(tc, parts);
  const fs::path dir(out_dir);
  save_checkpoint(out.best, dir / "best.ckpt");
  save_checkpoint(out.last, dir / "final.ckpt");
  write_history_csv(dir / "history.csv", out.history);
  write_text(dir / "config.txt", cfg.describe());

  const EpochRecord* best_record = nullptr;
  for (const auto& rec : out.history.records) {
    if (rec.epoch == out.best_epoch) best_record = &rec;
  }
  std::printf("trained %d epochs, objective %s\n", tc.epochs,
              objective_name(tc.objective).c_str());
  if (best_record) {
    std::printf("best epoch %d: dev EER %s (enroll), %s (noenroll)\n", out.best_epoch,
                format_g17(best_record->dev_eer_enroll).c_str(),
                format_g17(best_record->dev_eer_noenroll).c_str());
  }
  std::printf("outputs in %s (best.ckpt, final.ckpt, history.csv, config.txt)\n", out_dir.c_str());
}

void cmd_eval(const Config& cfg, const std::string& ckpt_path, const std::string& partition_name,
              const std::string& mode, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Partitions parts = load_partitions(cfg);
  const Partition& part = pick_partition(parts, partition_name);
  const TdcfParams tdcf = make_tdcf_params(cfg);

  std::vector<EvalMode> modes;
  if (mode == "enroll") modes = {EvalMode::kWithEnrollment};
  else if (mode == "noenroll") modes = {EvalMode::kWithoutEnrollment};
  else modes = {EvalMode::kWithEnrollment, EvalMode::kWithoutEnrollment};

  const fs::path dir(out_dir);
  std::vector<EvalResult> results;
  for (const EvalMode m : modes) {
    EvalResult res = evaluate(ckpt, part, m, tdcf);
    write_score_file(dir / ("scores_" + part.name + "_" + res.mode + ".csv"), res.rows);
    results.push_back(std::move(res));
  }
  write_metrics_csv(dir / ("metrics_" + part.name + ".csv"), results);

  std::printf("%-10s %22s %22s %22s\n", "mode", "eer", "eer_threshold", "min_tdcf");
  for (const auto& res : results) {
    std::printf("%-10s %22s %22s %22s\n", res.mode.c_str(), format_g17(res.eer).c_str(),
                format_g17(res.eer_threshold).c_str(), format_g17(res.min_tdcf).c_str());
  }
}

void cmd_ablate(const Config& cfg, int setup, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const Partitions parts = load_partitions(cfg);
  TrainConfig base = make_train_config(cfg);
  base.num_threads = thread_count_from_env();

  const AblationRow row = run_ablation(setup, base, parts);
  const TrainConfig derived = ablation_config(setup, base);

  std::ostringstream csv;
  csv << "setup,label,eer_noenroll,eer_enroll,min_tdcf_noenroll,min_tdcf_enroll\n";
  csv << row.setup_id << ',' << row.label << ',' << format_g17(row.eer_noenroll) << ','
      << format_g17(row.eer_enroll) << ',' << format_g17(row.min_tdcf_noenroll) << ','
      << format_g17(row.min_tdcf_enroll) << '\n';
  const fs::path dir(out_dir);
  write_text(dir / "ablation.csv", csv.str());
  write_text(dir / "config.txt", cfg.describe());

  std::printf("setup %d: %s\n", row.setup_id, row.label.c_str());
  std::printf("  update_interval=%d frozen=%s override=%s\n", derived.update_interval,
              derived.attractors_frozen ? "true" : "false",
              derived.update_epochs_override ? "[2]" : "none");
  std::printf("  eval EER %s (noenroll), %s (enroll); min t-DCF %s (noenroll), %s (enroll)\n",
              format_g17(row.eer_noenroll).c_str(), format_g17(row.eer_enroll).c_str(),
              format_g17(row.min_tdcf_noenroll).c_str(), format_g17(row.min_tdcf_enroll).c_str());
}

void cmd_project(const Config& cfg, const std::string& ckpt_path, const std::string& partition_name,
                 const std::string& speakers_arg, const std::string& out_path) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Partitions parts = load_partitions(cfg);
  const Partition& part = pick_partition(parts, partition_name);
  const std::vector<Utterance>& pool =
      partition_name == "train" ? part.train_utts : part.test_utts;

  const std::vector<std::string> listed = split_commas(speakers_arg);
  if (listed.empty()) throw ConfigError("--speakers needs at least one speaker id");
  std::set<std::string> available;
  for (const auto& utt : pool) available.insert(utt.speaker);
  for (const auto& speaker : listed) {
    if (!available.count(speaker)) {
      throw UnknownSpeaker("speaker '" + speaker + "' has no utterances in partition '" +
                           part.name + "'");
    }
  }

  const std::set<std::string> wanted(listed.begin(), listed.end());
  std::vector<const Utterance*> selected;
  for (const auto& utt : pool) {
    if (wanted.count(utt.speaker)) selected.push_back(&utt);
  }

  Mat embeddings(static_cast<Eigen::Index>(selected.size()), ckpt.encoder.output_dim());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    embeddings.row(static_cast<Eigen::Index>(i)) =
        l2_unit(forward(ckpt.encoder, selected[i]->features)).transpose();
  }
  const Mat projected = pca_project_2d(embeddings);

  std::ostringstream csv;
  csv << "utt_id,speaker,label,px,py\n";
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i);
    csv << selected[i]->utt_id << ',' << selected[i]->speaker << ',' << selected[i]->label << ','
        << format_g17(projected(r, 0)) << ',' << format_g17(projected(r, 1)) << '\n';
  }
  write_text(out_path, csv.str());
  std::printf("projected %zu utterances from %zu speakers to %s\n", selected.size(),
              wanted.size(), out_path.c_str());
}

void cmd_seeds(const Config& cfg, const std::string& seeds_arg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::uint64_t> seeds;
  for (const std::string& item : split_commas(seeds_arg)) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc{} || ptr != item.data() + item.size()) {
      throw ConfigError("--seeds expects comma-separated non-negative integers, got '" + item +
                        "'");
    }
    seeds.push_back(value);
  }
  if (seeds.empty()) throw ConfigError("--seeds needs at least one seed");

  const Partitions parts = load_partitions(cfg);
  TrainConfig tc = make_train_config(cfg);
  tc.num_threads = thread_count_from_env();
  const SeedSummary summary = run_seeds(tc, parts, seeds);

  std::ostringstream csv;
  csv << "seed,eer_noenroll,eer_enroll,min_tdcf_noenroll,min_tdcf_enroll\n";
  const auto row = [&csv](const std::string& tag, const SeedMetrics& m) {
    csv << tag << ',' << format_g17(m.eer_noenroll) << ',' << format_g17(m.eer_enroll) << ','
        << format_g17(m.min_tdcf_noenroll) << ',' << format_g17(m.min_tdcf_enroll) << '\n';
  };
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    row(std::to_string(seeds[i]), summary.per_seed[i]);
  }
  row("mean", summary.mean);
  row("best", summary.best);
  const fs::path dir(out_dir);
  write_text(dir / "seeds.csv", csv.str());
  write_text(dir / "config.txt", cfg.describe());

  std::printf("%zu seeds: mean eval EER %s (noenroll), %s (enroll)\n", seeds.size(),
              format_g17(summary.mean.eer_noenroll).c_str(),
              format_g17(summary.mean.eer_enroll).c_str());
  std::printf("          best eval EER %s (noenroll), %s (enroll)\n",
              format_g17(summary.best.eer_noenroll).c_str(),
              format_g17(summary.best.eer_enroll).c_str());
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"speaker-attractor anti-spoofing: synthetic corpora, training, scoring"};
  app.name("samo");
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file (key = value lines)")
        ->check(CLI::ExistingFile);
    sub->add_option("--set", overrides, "Override one config key (key=value, repeatable)");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic feature corpus");
  std::string gen_out = "corpus.csv";
  add_common(gen);
  gen->add_option("--out", gen_out, "Output corpus CSV path")->capture_default_str();
  gen->callback([&] { cmd_gen_data(resolve_config(config_path, overrides), gen_out); });

  auto* train_cmd = app.add_subcommand("train", "Train a countermeasure model");
  std::string train_objective;
  std::string train_out = "runs/train";
  add_common(train_cmd);
  train_cmd->add_option("--objective", train_objective, "samo, ocs, or softmax (wins over config)")
      ->check(CLI::IsMember({"samo", "ocs", "softmax"}));
  train_cmd->add_option("--out-dir", train_out, "Output directory")->capture_default_str();
  train_cmd->callback([&] {
    Config cfg = resolve_config(config_path, overrides);
    if (!train_objective.empty()) cfg.set("objective", train_objective);
    cmd_train(cfg, train_out);
  });

  auto* eval_cmd = app.add_subcommand("eval", "Score a partition with a trained checkpoint");
  std::string eval_ckpt;
  std::string eval_partition = "eval";
  std::string eval_mode = "both";
  std::string eval_out = "runs/eval";
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--partition", eval_partition, "train, dev, or eval")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "dev", "eval"}));
  eval_cmd->add_option("--mode", eval_mode, "enroll, noenroll, or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"enroll", "noenroll", "both"}));
  eval_cmd->add_option("--out-dir", eval_out, "Output directory")->capture_default_str();
  eval_cmd->callback([&] {
    cmd_eval(resolve_config(config_path, overrides), eval_ckpt, eval_partition, eval_mode,
             eval_out);
  });

  auto* ablate_cmd = app.add_subcommand("ablate", "Run one attractor-schedule ablation setup");
  int ablate_setup = 0;
  std::string ablate_out = "runs/ablate";
  add_common(ablate_cmd);
  ablate_cmd->add_option("--setup", ablate_setup, "Ablation setup id (2-5)")
      ->required()
      ->check(CLI::Range(2, 5));
  ablate_cmd->add_option("--out-dir", ablate_out, "Output directory")->capture_default_str();
  ablate_cmd->callback(
      [&] { cmd_ablate(resolve_config(config_path, overrides), ablate_setup, ablate_out); });

  auto* project_cmd =
      app.add_subcommand("project", "Export a 2-D PCA projection of embeddings");
  std::string project_ckpt;
  std::string project_partition = "eval";
  std::string project_speakers;
  std::string project_out = "projection.csv";
  add_common(project_cmd);
  project_cmd->add_option("--checkpoint", project_ckpt, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  project_cmd->add_option("--partition", project_partition, "train, dev, or eval")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "dev", "eval"}));
  project_cmd->add_option("--speakers", project_speakers, "Comma-separated speaker ids")
      ->required();
  project_cmd->add_option("--out", project_out, "Output CSV path")->capture_default_str();
  project_cmd->callback([&] {
    cmd_project(resolve_config(config_path, overrides), project_ckpt, project_partition,
                project_speakers, project_out);
  });

  auto* seeds_cmd = app.add_subcommand("seeds", "Train across seeds and aggregate metrics");
  std::string seeds_arg;
  std::string seeds_out = "runs/seeds";
  add_common(seeds_cmd);
  seeds_cmd->add_option("--seeds", seeds_arg, "Comma-separated seeds")->required();
  seeds_cmd->add_option("--out-dir", seeds_out, "Output directory")->capture_default_str();
  seeds_cmd->callback(
      [&] { cmd_seeds(resolve_config(config_path, overrides), seeds_arg, seeds_out); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  } catch (const DataError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const NumericError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace samo
