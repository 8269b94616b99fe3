// advkit command-line tool: dataset generation, caption mining, task splits,
// training, ablation sweeps, and evaluation, each writing into a run
// directory with a manifest describing how to reproduce it.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "advkit/data.hpp"
#include "advkit/evalreport.hpp"
#include "advkit/fingerprint.hpp"
#include "advkit/mine.hpp"
#include "advkit/rng.hpp"
#include "advkit/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace advkit;

namespace {

constexpr const char* kToolVersion = "advkit 0.1.0";
constexpr uint64_t kStreamRatio = 0x0a71;  // unlabeled subsampling for sweeps

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Short form for directory names and CSV value columns.
std::string gshort(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------------------
// config files

json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& origin) {
  if (!j.is_object()) throw ConfigError(origin + ": expected a JSON object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError(origin + ": unknown key '" + item.key() + "'");
    }
  }
}

template <typename T>
void fetch(const json& j, const char* key, T& into, const std::string& origin) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": bad value for '" + key + "': " + e.what());
  }
}

GeneratorConfig generator_config_from_json(const json& j,
                                           const std::string& origin) {
  reject_unknown_keys(j,
                      {"n_actions", "n_adverb_pairs", "latent_dim",
                       "feature_dim", "segments", "zipf_action", "zipf_adverb",
                       "zipf_pair", "noise_sigma", "distractor_fraction",
                       "cooccur_max", "clips", "seed", "domain",
                       "domain_shift"},
                      origin);
  GeneratorConfig cfg;
  fetch(j, "n_actions", cfg.n_actions, origin);
  fetch(j, "n_adverb_pairs", cfg.n_adverb_pairs, origin);
  fetch(j, "latent_dim", cfg.latent_dim, origin);
  fetch(j, "feature_dim", cfg.feature_dim, origin);
  fetch(j, "segments", cfg.segments, origin);
  fetch(j, "zipf_action", cfg.zipf_action, origin);
  fetch(j, "zipf_adverb", cfg.zipf_adverb, origin);
  fetch(j, "zipf_pair", cfg.zipf_pair, origin);
  fetch(j, "noise_sigma", cfg.noise_sigma, origin);
  fetch(j, "distractor_fraction", cfg.distractor_fraction, origin);
  fetch(j, "cooccur_max", cfg.cooccur_max, origin);
  fetch(j, "clips", cfg.clips, origin);
  fetch(j, "seed", cfg.seed, origin);
  fetch(j, "domain", cfg.domain, origin);
  if (j.contains("domain_shift")) {
    const json& s = j.at("domain_shift");
    reject_unknown_keys(s, {"rotation_angle", "feature_bias"},
                        origin + ".domain_shift");
    DomainShift shift;
    fetch(s, "rotation_angle", shift.rotation_angle, origin);
    fetch(s, "feature_bias", shift.feature_bias, origin);
    cfg.domain_shift = shift;
  }
  return cfg;
}

TrainingConfig training_config_from_json(const json& j, TrainingConfig cfg,
                                         const std::string& origin) {
  reject_unknown_keys(j,
                      {"gamma1", "gamma2", "k", "tau", "lambda",
                       "learning_rate", "supervised_batch", "epochs",
                       "adverb_start_epoch", "pseudo_start_epoch", "mode",
                       "seed", "beta1", "beta2", "adam_epsilon", "embed_dim",
                       "query_dim", "transform_noise"},
                      origin);
  fetch(j, "gamma1", cfg.gamma1, origin);
  fetch(j, "gamma2", cfg.gamma2, origin);
  fetch(j, "k", cfg.k, origin);
  fetch(j, "tau", cfg.tau, origin);
  fetch(j, "lambda", cfg.lambda, origin);
  fetch(j, "learning_rate", cfg.learning_rate, origin);
  fetch(j, "supervised_batch", cfg.supervised_batch, origin);
  fetch(j, "epochs", cfg.epochs, origin);
  fetch(j, "adverb_start_epoch", cfg.adverb_start_epoch, origin);
  fetch(j, "pseudo_start_epoch", cfg.pseudo_start_epoch, origin);
  fetch(j, "seed", cfg.seed, origin);
  fetch(j, "beta1", cfg.beta1, origin);
  fetch(j, "beta2", cfg.beta2, origin);
  fetch(j, "adam_epsilon", cfg.adam_epsilon, origin);
  fetch(j, "embed_dim", cfg.embed_dim, origin);
  fetch(j, "query_dim", cfg.query_dim, origin);
  fetch(j, "transform_noise", cfg.transform_noise, origin);
  if (j.contains("mode")) {
    std::string name;
    fetch(j, "mode", name, origin);
    cfg.mode = parse_train_mode(name);
  }
  return cfg;
}

std::string generator_fingerprint(const GeneratorConfig& cfg) {
  std::ostringstream s;
  s << "n_actions=" << cfg.n_actions << ";n_adverb_pairs=" << cfg.n_adverb_pairs
    << ";latent_dim=" << cfg.latent_dim << ";feature_dim=" << cfg.feature_dim
    << ";segments=" << cfg.segments << ";zipf_action=" << g17(cfg.zipf_action)
    << ";zipf_adverb=" << g17(cfg.zipf_adverb)
    << ";zipf_pair=" << g17(cfg.zipf_pair)
    << ";noise_sigma=" << g17(cfg.noise_sigma)
    << ";distractor_fraction=" << g17(cfg.distractor_fraction)
    << ";cooccur_max=" << cfg.cooccur_max << ";clips=" << cfg.clips
    << ";seed=" << cfg.seed << ";domain=" << cfg.domain;
  if (cfg.domain_shift) {
    s << ";rotation_angle=" << g17(cfg.domain_shift->rotation_angle)
      << ";feature_bias=" << g17(cfg.domain_shift->feature_bias);
  }
  return fingerprint_hex(s.str());
}

// ---------------------------------------------------------------------------
// run directory + manifest

void prepare_out_dir(const std::string& out, bool force) {
  fs::path dir(out);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) {
      throw ConfigError("output path is not a directory: " + out);
    }
    if (!fs::is_empty(dir) && !force) {
      throw ConfigError("output directory not empty (use --force): " + out);
    }
  } else {
    fs::create_directories(dir);
  }
}

std::string iso_utc_now() {
  std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ManifestInfo {
  std::string command;
  std::string config_fingerprint;
  uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json extra = json::object();
};

// Not byte-stable across runs: wall_clock records when the run happened.
// Determinism comparisons cover every other file in the directory.
void write_manifest(const fs::path& dir, const ManifestInfo& info) {
  json m;
  m["command"] = info.command;
  m["config_fingerprint"] = info.config_fingerprint;
  m["seed"] = info.seed;
  m["inputs"] = info.inputs;
  m["outputs"] = info.outputs;
  m["tool_version"] = kToolVersion;
  m["wall_clock"] = iso_utc_now();
  for (const auto& item : info.extra.items()) m[item.key()] = item.value();
  auto out = open_output(dir / "run_manifest.json");
  out << m.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// generate

void write_dataset_stats(const Dataset& data, const fs::path& dir) {
  auto counts = composition_counts(data.clips);
  std::set<ActionId> actions;
  std::set<AdverbId> adverbs;
  for (const VideoClip& clip : data.clips) {
    actions.insert(clip.action);
    if (clip.adverb) adverbs.insert(*clip.adverb);
  }
  {
    auto out = open_output(dir / "stats.txt");
    out << "Adverbs\tActions\tPairs\tClips\n";
    out << adverbs.size() << '\t' << actions.size() << '\t' << counts.size()
        << '\t' << data.clips.size() << '\n';
  }
  auto out = open_output(dir / "compositions.csv");
  out << "action,adverb,clips\n";
  for (const auto& [comp, n] : counts) {
    out << data.vocab.actions.name(comp.first) << ','
        << data.vocab.adverbs.name(comp.second) << ',' << n << '\n';
  }
}

int cmd_generate(const std::string& config_path, const std::string& out,
                 bool force, std::optional<uint64_t> seed) {
  GeneratorConfig cfg =
      generator_config_from_json(load_json(config_path), config_path);
  if (seed) cfg.seed = *seed;
  Dataset data = generate(cfg);
  prepare_out_dir(out, force);
  save_dataset(data, out);
  write_dataset_stats(data, out);
  ManifestInfo info;
  info.command = "generate";
  info.config_fingerprint = generator_fingerprint(cfg);
  info.seed = cfg.seed;
  info.inputs = {config_path};
  info.outputs = {"vocab.txt", "manifest.tsv", "features.bin", "stats.txt",
                  "compositions.csv"};
  write_manifest(out, info);
  std::cout << "generated " << data.clips.size() << " clips ("
            << data.vocab.actions.size() << " actions, "
            << data.vocab.adverbs.size() << " adverbs) in " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// split

int cmd_split(const std::string& data_dir, const std::string& task,
              const std::string& target_dir, double label_fraction,
              double test_fraction, const std::string& out, bool force,
              uint64_t seed) {
  Dataset data = load_dataset(data_dir);
  DatasetSplit split;
  std::vector<std::string> inputs = {data_dir};
  if (task == "seen") {
    split = split_seen(data, label_fraction, test_fraction, seed);
  } else if (task == "unseen") {
    split = split_unseen(data, seed);
  } else {
    if (target_dir.empty()) {
      throw ConfigError("domain task needs --target-data");
    }
    Dataset target = load_dataset(target_dir);
    split = split_domain(data, target, seed);
    inputs.push_back(target_dir);
  }
  prepare_out_dir(out, force);
  save_split(split, out);
  ManifestInfo info;
  info.command = "split";
  std::ostringstream params;
  params << "task=" << task << ";label_fraction=" << g17(label_fraction)
         << ";test_fraction=" << g17(test_fraction) << ";seed=" << seed;
  info.config_fingerprint = fingerprint_hex(params.str());
  info.seed = seed;
  info.inputs = inputs;
  info.outputs = {"vocab.txt", "labeled.tsv", "unlabeled.tsv", "test.tsv",
                  "features.bin", "split_info.txt"};
  info.extra["task"] = task;
  info.extra["split_validated"] = true;  // the builders re-check invariants
  info.extra["labeled"] = split.labeled.size();
  info.extra["unlabeled"] = split.unlabeled.size();
  info.extra["test"] = split.test.size();
  info.extra["dropped_test_clips"] = split.dropped_test_clips.size();
  write_manifest(out, info);
  std::cout << "split " << task << ": " << split.labeled.size() << " labeled, "
            << split.unlabeled.size() << " unlabeled, " << split.test.size()
            << " test clips in " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOutputs {
  TrainState state;
  fs::path dir;
};

void write_train_outputs(const TrainOutputs& run) {
  save_checkpoint(run.state, (run.dir / "checkpoint.txt").string());
  auto metrics = open_output(run.dir / "metrics.csv");
  write_metrics_csv(run.state.history, metrics);
}

TrainHooks pseudo_dump_hooks(std::ofstream& dump, const Vocabularies& vocab) {
  TrainHooks hooks;
  hooks.on_pseudo_labels = [&dump, &vocab](
                               int epoch,
                               const std::vector<PseudoLabelAssignment>& all) {
    for (const PseudoLabelAssignment& a : all) {
      for (const Candidate& c : a.selected) {
        dump << epoch << ',' << a.clip_id << ','
             << vocab.adverbs.name(c.adverb) << ',' << g17(c.confidence)
             << '\n';
      }
    }
  };
  return hooks;
}

int cmd_train(const std::string& split_dir, const std::string& config_path,
              const std::string& out, bool force, const std::string& mode,
              std::optional<uint64_t> seed, bool resume, bool dump_pseudo,
              const std::string& preset) {
  DatasetSplit split = load_split(split_dir);
  fs::path dir(out);
  std::string checkpoint = (dir / "checkpoint.txt").string();

  TrainingConfig cfg =
      preset == "desk" ? desk_schedule() : full_schedule();
  if (resume) {
    // the checkpoint's own config is the baseline; flags may not change it
    if (!fs::exists(checkpoint)) {
      throw DataError("no checkpoint to resume in " + out);
    }
    cfg = load_checkpoint(checkpoint).cfg;
  }
  if (!config_path.empty()) {
    cfg = training_config_from_json(load_json(config_path), cfg, config_path);
  }
  if (!mode.empty()) cfg.mode = parse_train_mode(mode);
  if (seed) cfg.seed = *seed;

  if (!resume) prepare_out_dir(out, force);

  std::ofstream dump;
  TrainHooks hooks;
  if (dump_pseudo) {
    dump = open_output(dir / "pseudo_labels.csv");
    dump << "epoch,clip_id,adverb,confidence\n";
    hooks = pseudo_dump_hooks(dump, split.vocab);
  }

  TrainOutputs run;
  run.dir = dir;
  run.state = resume ? resume_training(checkpoint, split, cfg, hooks)
                     : train(split, cfg, hooks);
  write_train_outputs(run);

  ManifestInfo info;
  info.command = "train";
  info.config_fingerprint = config_fingerprint(run.state.cfg);
  info.seed = run.state.cfg.seed;
  info.inputs = {split_dir};
  if (!config_path.empty()) info.inputs.push_back(config_path);
  info.outputs = {"checkpoint.txt", "metrics.csv"};
  if (dump_pseudo) info.outputs.push_back("pseudo_labels.csv");
  info.extra["mode"] = train_mode_name(run.state.cfg.mode);
  info.extra["epochs_completed"] = run.state.epoch;
  info.extra["diverged"] = run.state.diverged;
  if (!run.state.history.empty()) {
    info.extra["final_test_macro"] = run.state.history.back().test_macro;
    info.extra["final_test_video"] = run.state.history.back().test_video;
  }
  write_manifest(dir, info);

  if (run.state.diverged) {
    std::cerr << "training diverged at epoch " << run.state.epoch
              << "; last good state saved\n";
    return kExitNumeric;
  }
  double macro =
      run.state.history.empty() ? 0.0 : run.state.history.back().test_macro;
  std::cout << "trained " << train_mode_name(run.state.cfg.mode) << " for "
            << run.state.epoch << " epochs, final macro accuracy "
            << g17(macro) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

DatasetSplit with_unlabeled_ratio(const DatasetSplit& split, double ratio,
                                  uint64_t seed) {
  long want = std::lround(ratio * static_cast<double>(split.labeled.size()));
  want = std::min<long>(want, static_cast<long>(split.unlabeled.size()));
  DatasetSplit out = split;
  std::vector<int> order(split.unlabeled.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, kStreamRatio));
  rng.shuffle(order);
  out.unlabeled.clear();
  // one shared permutation, so larger ratios take supersets of smaller ones
  for (long i = 0; i < want; ++i) {
    out.unlabeled.push_back(split.unlabeled[order[i]]);
  }
  return out;
}

int cmd_sweep(const std::string& split_dir, const std::string& config_path,
              const std::string& axis, std::vector<double> values,
              const std::string& out, bool force, std::optional<uint64_t> seed,
              const std::string& preset) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  for (double value : values) {
    if (axis == "k" && (std::round(value) != value || value < 1)) {
      throw ConfigError("k sweep values must be positive integers");
    }
    if (axis == "ratio" && value < 0) {
      throw ConfigError("ratio sweep values must be >= 0");
    }
  }
  DatasetSplit split = load_split(split_dir);
  TrainingConfig base =
      preset == "desk" ? desk_schedule() : full_schedule();
  if (!config_path.empty()) {
    base = training_config_from_json(load_json(config_path), base, config_path);
  }
  if (seed) base.seed = *seed;

  prepare_out_dir(out, force);
  fs::path dir(out);
  auto summary = open_output(dir / "summary.csv");
  summary << "axis,value,status,epochs,test_macro,test_video\n";

  for (double value : values) {
    TrainingConfig cfg = base;
    const DatasetSplit* run_split = &split;
    DatasetSplit reduced;
    if (axis == "k") {
      cfg.k = static_cast<int>(std::round(value));
    } else if (axis == "lambda") {
      cfg.lambda = value;
    } else if (axis == "tau") {
      cfg.tau = value;
    } else {
      reduced = with_unlabeled_ratio(split, value, base.seed);
      run_split = &reduced;
    }
    std::string run_name = axis + "_" + gshort(value);
    fs::path run_dir = dir / run_name;
    fs::create_directories(run_dir);
    std::string status = "ok";
    TrainOutputs run;
    run.dir = run_dir;
    try {
      run.state = train(*run_split, cfg);
      if (run.state.diverged) status = "diverged";
      write_train_outputs(run);
    } catch (const std::exception& e) {
      status = "failed";
      std::cerr << run_name << ": " << e.what() << "\n";
    }
    double macro = 0.0, video = 0.0;
    int epochs = 0;
    if (status != "failed") {
      epochs = run.state.epoch;
      if (!run.state.history.empty()) {
        macro = run.state.history.back().test_macro;
        video = run.state.history.back().test_video;
      }
      ManifestInfo info;
      info.command = "sweep-run";
      info.config_fingerprint = config_fingerprint(cfg);
      info.seed = cfg.seed;
      info.inputs = {split_dir};
      info.outputs = {"checkpoint.txt", "metrics.csv"};
      info.extra["axis"] = axis;
      info.extra["value"] = value;
      if (axis == "ratio") {
        info.extra["unlabeled_clips"] = run_split->unlabeled.size();
      }
      write_manifest(run_dir, info);
    }
    summary << axis << ',' << gshort(value) << ',' << status << ',' << epochs
            << ',' << g17(macro) << ',' << g17(video) << '\n';
    std::cout << run_name << ": " << status << ", macro " << g17(macro)
              << "\n";
  }

  ManifestInfo info;
  info.command = "sweep";
  std::ostringstream params;
  params << "axis=" << axis << ";values=";
  for (double v : values) params << g17(v) << ',';
  params << ";fingerprint=" << config_fingerprint(base);
  info.config_fingerprint = fingerprint_hex(params.str());
  info.seed = base.seed;
  info.inputs = {split_dir};
  if (!config_path.empty()) info.inputs.push_back(config_path);
  info.outputs = {"summary.csv"};
  info.extra["axis"] = axis;
  info.extra["values"] = values;
  write_manifest(dir, info);
  return 0;
}

// ---------------------------------------------------------------------------
// mine

int cmd_mine(const std::string& captions, const std::string& vocab_path,
             const std::string& verb_map_path, const std::string& adverb_map_path,
             const std::string& blocklist_path, long min_count,
             const std::string& out, bool force) {
  Vocabularies vocab = load_vocabularies(vocab_path);
  ClusterMaps maps = load_cluster_maps(verb_map_path, adverb_map_path, vocab);
  std::set<std::string> block;
  if (!blocklist_path.empty()) block = load_blocklist(blocklist_path);

  std::vector<std::string> files;
  if (fs::is_directory(captions)) {
    for (const auto& entry : fs::directory_iterator(captions)) {
      if (entry.is_regular_file() && entry.path().extension() == ".conll") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(captions)) {
    files.push_back(captions);
  } else {
    throw DataError("captions path does not exist: " + captions);
  }
  std::vector<ParsedCaption> parsed;
  for (const std::string& file : files) {
    auto batch = load_captions(file);
    parsed.insert(parsed.end(), std::make_move_iterator(batch.begin()),
                  std::make_move_iterator(batch.end()));
  }

  MiningConfig cfg;
  cfg.min_count = min_count;
  MiningReport report = mine_corpus(parsed, vocab, maps, block, cfg);

  prepare_out_dir(out, force);
  fs::path dir(out);
  {
    auto annotations = open_output(dir / "annotations.tsv");
    write_annotations(report, vocab, annotations);
  }
  open_output(dir / "stats.txt") << format_mining_stats(report);
  {
    auto unmapped = open_output(dir / "unmapped.txt");
    write_unmapped_report(report, unmapped);
  }

  ManifestInfo info;
  info.command = "mine";
  std::string config_bytes;
  for (const auto& [lemma, cluster] : maps.verbs) {
    config_bytes += "v:" + lemma + "=" + cluster + ";";
  }
  for (const auto& [lemma, cluster] : maps.adverbs) {
    config_bytes += "a:" + lemma + "=" + cluster + ";";
  }
  for (const std::string& lemma : block) config_bytes += "b:" + lemma + ";";
  config_bytes += "min_count=" + std::to_string(min_count);
  info.config_fingerprint = fingerprint_hex(config_bytes);
  info.inputs = files;
  info.inputs.push_back(vocab_path);
  info.inputs.push_back(verb_map_path);
  info.inputs.push_back(adverb_map_path);
  if (!blocklist_path.empty()) info.inputs.push_back(blocklist_path);
  info.outputs = {"annotations.tsv", "stats.txt", "unmapped.txt"};
  info.extra["captions"] = report.captions;
  info.extra["records"] = report.records.size();
  write_manifest(dir, info);
  std::cout << "mined " << report.records.size() << " annotations from "
            << report.captions << " captions in " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& checkpoint, const std::string& split_dir,
             const std::string& out, bool force, const std::string& aggregate_name) {
  if (!fs::exists(checkpoint)) {
    throw DataError("checkpoint not found: " + checkpoint);
  }
  TrainState state = load_checkpoint(checkpoint);
  DatasetSplit split = load_split(split_dir);
  auto records = predict_clips(split.test, state.f, state.g,
                               split.vocab.adverbs);
  EvalResult result = aggregate(records, split.vocab.adverbs.size());
  LongTailReport longtail =
      longtail_breakdown(records, composition_counts(split.labeled));

  AggregateMode mode = aggregate_name == "per_video" ? AggregateMode::per_video
                                                     : AggregateMode::macro_adverb;
  prepare_out_dir(out, force);
  fs::path dir(out);
  {
    auto csv = open_output(dir / "eval.csv");
    write_eval_csv(result, split.vocab, csv);
  }
  {
    auto csv = open_output(dir / "longtail.csv");
    write_longtail_csv(longtail, csv);
  }
  {
    auto summary = open_output(dir / "summary.txt");
    summary << format_summary(result, split.vocab);
    summary << "headline (" << aggregate_name
            << "): " << g17(result.accuracy(mode)) << "\n";
  }

  ManifestInfo info;
  info.command = "eval";
  info.config_fingerprint = config_fingerprint(state.cfg);
  info.seed = state.cfg.seed;
  info.inputs = {checkpoint, split_dir};
  info.outputs = {"eval.csv", "longtail.csv", "summary.txt"};
  info.extra["aggregate"] = aggregate_name;
  info.extra["accuracy"] = result.accuracy(mode);
  write_manifest(dir, info);
  std::cout << "eval " << aggregate_name << " accuracy "
            << g17(result.accuracy(mode)) << " over " << result.clips_total
            << " clips\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adverb recognition toolkit"};
  app.require_subcommand(1);

  std::string config, out, data_dir, split_dir, task, target_dir, mode, axis;
  std::string captions, vocab_path, verb_map, adverb_map, blocklist_path;
  std::string checkpoint, aggregate_name = "macro_adverb", preset = "full";
  std::vector<double> values;
  double label_fraction = 0.05, test_fraction = 0.3;
  long min_count = 10;
  bool force = false, resume = false, dump_pseudo = false;
  std::optional<uint64_t> seed_flag;
  uint64_t split_seed = 1;

  auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", out, "output directory")->required();
    cmd->add_flag("--force", force, "overwrite a non-empty output directory");
  };

  CLI::App* gen = app.add_subcommand("generate", "generate a synthetic dataset");
  gen->add_option("--config", config, "generator config JSON")->required();
  gen->add_option("--seed", seed_flag, "override the config seed");
  add_out(gen);

  CLI::App* split_cmd = app.add_subcommand("split", "build a task split");
  split_cmd->add_option("--data", data_dir, "dataset directory")->required();
  split_cmd->add_option("--task", task, "seen, unseen, or domain")
      ->required()
      ->check(CLI::IsMember({"seen", "unseen", "domain"}));
  split_cmd->add_option("--target-data", target_dir,
                        "second dataset for the domain task");
  split_cmd->add_option("--label-fraction", label_fraction,
                        "labeled share for the seen task");
  split_cmd->add_option("--test-fraction", test_fraction,
                        "test share for the seen task");
  split_cmd->add_option("--seed", split_seed, "split seed");
  add_out(split_cmd);

  CLI::App* train_cmd = app.add_subcommand("train", "train an embedding");
  train_cmd->add_option("--split", split_dir, "split directory")->required();
  train_cmd->add_option("--config", config, "training config JSON");
  train_cmd->add_option("--preset", preset, "schedule preset")
      ->check(CLI::IsMember({"full", "desk"}));
  train_cmd->add_option("--mode", mode, "training mode")
      ->check(CLI::IsMember({"supervised_only", "single_pseudo",
                             "multi_no_threshold", "multi_fixed_threshold",
                             "multi_adaptive"}));
  train_cmd->add_option("--seed", seed_flag, "override the config seed");
  train_cmd->add_flag("--resume", resume, "continue from the checkpoint in --out");
  train_cmd->add_flag("--dump-pseudo", dump_pseudo,
                      "write per-epoch pseudo-label selections");
  add_out(train_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "train across one axis");
  sweep_cmd->add_option("--split", split_dir, "split directory")->required();
  sweep_cmd->add_option("--config", config, "training config JSON");
  sweep_cmd->add_option("--preset", preset, "schedule preset")
      ->check(CLI::IsMember({"full", "desk"}));
  sweep_cmd->add_option("--axis", axis, "swept parameter")
      ->required()
      ->check(CLI::IsMember({"k", "lambda", "tau", "ratio"}));
  sweep_cmd->add_option("--values", values, "axis values")->required();
  sweep_cmd->add_option("--seed", seed_flag, "override the config seed");
  add_out(sweep_cmd);

  CLI::App* mine_cmd = app.add_subcommand("mine", "mine captions for annotations");
  mine_cmd->add_option("--captions", captions, "caption file or directory")
      ->required();
  mine_cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
  mine_cmd->add_option("--verb-clusters", verb_map, "verb lemma map")->required();
  mine_cmd->add_option("--adverb-clusters", adverb_map, "adverb lemma map")
      ->required();
  mine_cmd->add_option("--blocklist", blocklist_path, "non-visual adverb lemmas");
  mine_cmd->add_option("--min-count", min_count, "record count threshold");
  add_out(mine_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--split", split_dir, "split directory")->required();
  eval_cmd->add_option("--aggregate", aggregate_name, "headline aggregate")
      ->check(CLI::IsMember({"macro_adverb", "per_video"}));
  add_out(eval_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(config, out, force, seed_flag);
    }
    if (split_cmd->parsed()) {
      return cmd_split(data_dir, task, target_dir, label_fraction,
                       test_fraction, out, force, split_seed);
    }
    if (train_cmd->parsed()) {
      return cmd_train(split_dir, config, out, force, mode, seed_flag, resume,
                       dump_pseudo, preset);
    }
    if (sweep_cmd->parsed()) {
      return cmd_sweep(split_dir, config, axis, values, out, force, seed_flag,
                       preset);
    }
    if (mine_cmd->parsed()) {
      return cmd_mine(captions, vocab_path, verb_map, adverb_map,
                      blocklist_path, min_count, out, force);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(checkpoint, split_dir, out, force, aggregate_name);
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
