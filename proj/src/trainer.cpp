#include "advkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "advkit/evalreport.hpp"
#include "advkit/fingerprint.hpp"
#include "advkit/rng.hpp"

namespace advkit {

namespace {

constexpr uint64_t kStreamEpoch = 0xe90cu;
constexpr uint64_t kStreamLabeledPerm = 0x1ab5u;
constexpr uint64_t kStreamUnlabeledPerm = 0x0a15u;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::warmup:
      return "warmup";
    case Phase::supervised_adverbs:
      return "supervised_adverbs";
    case Phase::semi_supervised:
      return "semi_supervised";
  }
  return "?";
}

Phase phase_of(int epoch, const TrainingConfig& cfg) {
  if (epoch < cfg.adverb_start_epoch) return Phase::warmup;
  if (epoch < cfg.pseudo_start_epoch) return Phase::supervised_adverbs;
  return Phase::semi_supervised;
}

void adam_update(TrainState& state, ParamSet& grads) {
  const TrainingConfig& cfg = state.cfg;
  ++state.adam_step;
  double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.adam_step));
  double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.adam_step));
  auto params = parameter_matrices(state.f, state.g);
  auto m1 = parameter_matrices(state.moment1);
  auto m2 = parameter_matrices(state.moment2);
  auto gs = parameter_matrices(grads);
  for (size_t i = 0; i < params.size(); ++i) {
    const Eigen::MatrixXd& grad = *gs[i];
    *m1[i] = cfg.beta1 * *m1[i] + (1.0 - cfg.beta1) * grad;
    *m2[i] = cfg.beta2 * *m2[i] + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    Eigen::ArrayXXd mhat = m1[i]->array() / c1;
    Eigen::ArrayXXd vhat = m2[i]->array() / c2;
    params[i]->array() -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_epsilon);
  }
}

bool all_finite(const TrainState& state) {
  for (const auto* m : parameter_matrices(state.f, state.g)) {
    if (!m->allFinite()) return false;
  }
  return true;
}

}  // namespace

TrainMode parse_train_mode(const std::string& name) {
  if (name == "supervised_only") return TrainMode::supervised_only;
  if (name == "single_pseudo") return TrainMode::single_pseudo;
  if (name == "multi_no_threshold") return TrainMode::multi_no_threshold;
  if (name == "multi_fixed_threshold") return TrainMode::multi_fixed_threshold;
  if (name == "multi_adaptive") return TrainMode::multi_adaptive;
  throw ConfigError("unknown training mode '" + name + "'");
}

std::string train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::supervised_only:
      return "supervised_only";
    case TrainMode::single_pseudo:
      return "single_pseudo";
    case TrainMode::multi_no_threshold:
      return "multi_no_threshold";
    case TrainMode::multi_fixed_threshold:
      return "multi_fixed_threshold";
    case TrainMode::multi_adaptive:
      return "multi_adaptive";
  }
  throw ConfigError("unknown training mode value");
}

void TrainingConfig::validate() const {
  LossConfig{gamma1, gamma2}.validate();
  if (k < 1) throw ConfigError("training: k must be >= 1");
  if (!(tau > 0 && tau < 1)) throw ConfigError("training: tau must be in (0, 1)");
  if (lambda < 0) throw ConfigError("training: lambda must be >= 0");
  if (learning_rate <= 0) throw ConfigError("training: learning rate must be > 0");
  if (supervised_batch < 2) {
    throw ConfigError("training: supervised batch must be >= 2");
  }
  if (epochs < 1) throw ConfigError("training: epochs must be >= 1");
  if (adverb_start_epoch < 0 || adverb_start_epoch > pseudo_start_epoch ||
      pseudo_start_epoch > epochs) {
    throw ConfigError(
        "training: need 0 <= adverb_start <= pseudo_start <= epochs");
  }
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw ConfigError("training: moment decays must be in [0, 1)");
  }
  if (adam_epsilon <= 0) throw ConfigError("training: optimizer epsilon must be > 0");
  if (embed_dim <= 0) throw ConfigError("training: embed_dim must be > 0");
  if (query_dim < 0) throw ConfigError("training: query_dim must be >= 0");
  if (transform_noise < 0) {
    throw ConfigError("training: transform_noise must be >= 0");
  }
}

TrainingConfig full_schedule() { return TrainingConfig{}; }

TrainingConfig desk_schedule() {
  TrainingConfig cfg;
  cfg.epochs = 300;
  cfg.adverb_start_epoch = 60;
  cfg.pseudo_start_epoch = 90;
  cfg.supervised_batch = 32;
  cfg.learning_rate = 1e-3;
  return cfg;
}

std::string config_fingerprint(const TrainingConfig& cfg) {
  std::ostringstream s;
  s << "gamma1=" << g17(cfg.gamma1) << ";gamma2=" << g17(cfg.gamma2)
    << ";k=" << cfg.k << ";tau=" << g17(cfg.tau) << ";lambda=" << g17(cfg.lambda)
    << ";learning_rate=" << g17(cfg.learning_rate)
    << ";supervised_batch=" << cfg.supervised_batch << ";epochs=" << cfg.epochs
    << ";adverb_start=" << cfg.adverb_start_epoch
    << ";pseudo_start=" << cfg.pseudo_start_epoch
    << ";mode=" << train_mode_name(cfg.mode) << ";seed=" << cfg.seed
    << ";beta1=" << g17(cfg.beta1) << ";beta2=" << g17(cfg.beta2)
    << ";adam_epsilon=" << g17(cfg.adam_epsilon) << ";embed_dim=" << cfg.embed_dim
    << ";query_dim=" << cfg.query_dim
    << ";transform_noise=" << g17(cfg.transform_noise);
  return fingerprint_hex(s.str());
}

BatchPlan make_batches(int n_labeled, int n_unlabeled, const TrainingConfig& cfg,
                       uint64_t epoch_seed) {
  if (n_labeled <= 0) throw ConfigError("make_batches: empty labeled set");
  if (n_unlabeled < 0) throw ConfigError("make_batches: negative unlabeled count");

  BatchPlan plan;
  std::vector<int> order =
      permutation(n_labeled, derive_seed(epoch_seed, kStreamLabeledPerm));
  double ratio =
      static_cast<double>(n_unlabeled) / static_cast<double>(n_labeled);

  std::vector<int> pool;
  size_t pool_pos = 0;
  uint64_t cycle = 0;
  auto next_unlabeled = [&]() {
    if (pool_pos == pool.size()) {
      pool = permutation(n_unlabeled,
                         derive_seed(epoch_seed, kStreamUnlabeledPerm + cycle));
      ++cycle;
      pool_pos = 0;
    }
    return pool[pool_pos++];
  };

  for (int start = 0; start < n_labeled; start += cfg.supervised_batch) {
    int nl = std::min(cfg.supervised_batch, n_labeled - start);
    plan.labeled.emplace_back(order.begin() + start, order.begin() + start + nl);
    std::vector<int> batch_u;
    if (n_unlabeled > 0) {
      long nu = std::llround(nl * ratio);
      batch_u.reserve(nu);
      for (long j = 0; j < nu; ++j) batch_u.push_back(next_unlabeled());
    }
    plan.unlabeled.push_back(std::move(batch_u));
  }
  return plan;
}

TrainState train(const DatasetSplit& split, const TrainingConfig& cfg,
                 const TrainHooks& hooks) {
  cfg.validate();
  if (split.labeled.empty()) {
    throw ConfigError("train: the labeled set is empty");
  }
  int feature_dim = static_cast<int>(split.labeled.front().features.cols());
  auto check_dims = [&](const std::vector<VideoClip>& clips, const char* part) {
    for (const auto& c : clips) {
      if (c.features.cols() != feature_dim || c.features.rows() < 1) {
        throw DataError(std::string("train: clip ") + c.clip_id + " in " + part +
                        " has feature shape " + std::to_string(c.features.rows()) +
                        "x" + std::to_string(c.features.cols()) + ", expected Tx" +
                        std::to_string(feature_dim));
      }
    }
  };
  check_dims(split.labeled, "labeled");
  check_dims(split.unlabeled, "unlabeled");
  check_dims(split.test, "test");

  TrainState state;
  state.cfg = cfg;
  EmbedderInit init;
  init.n_actions = split.vocab.actions.size();
  init.n_adverbs = split.vocab.adverbs.size();
  init.feature_dim = feature_dim;
  init.embed_dim = cfg.embed_dim;
  init.query_dim = cfg.query_dim;
  init.transform_noise = cfg.transform_noise;
  init.seed = cfg.seed;
  init_embedders(init, state.f, state.g);
  state.moment1 = ParamSet::zeros_like(state.f, state.g);
  state.moment2 = ParamSet::zeros_like(state.f, state.g);
  state.thresholds =
      ThresholdState::fixed(cfg.tau, cfg.lambda, split.vocab.adverbs.size());
  return train_from(std::move(state), split, hooks);
}

TrainState train_from(TrainState state, const DatasetSplit& split,
                      const TrainHooks& hooks) {
  const TrainingConfig& cfg = state.cfg;
  cfg.validate();
  if (split.labeled.empty()) {
    throw ConfigError("train: the labeled set is empty");
  }
  const AdverbVocabulary& adverbs = split.vocab.adverbs;
  LossConfig loss_cfg{cfg.gamma1, cfg.gamma2};

  TrainState good = state;  // divergence rolls back to here

  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    Phase phase = phase_of(epoch, cfg);
    uint64_t epoch_seed = derive_seed(derive_seed(cfg.seed, kStreamEpoch),
                                      static_cast<uint64_t>(epoch));
    bool use_pseudo =
        phase == Phase::semi_supervised && cfg.mode != TrainMode::supervised_only;

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.phase = phase;

    bool ok = true;
    try {
      // Pseudo-labeling pass with the epoch-start parameters.
      std::vector<std::vector<AdverbId>> selected_ids(split.unlabeled.size());
      if (use_pseudo) {
        std::vector<PseudoLabelAssignment> assignments;
        assignments.reserve(split.unlabeled.size());
        for (const VideoClip& clip : split.unlabeled) {
          std::vector<double> dists = adverb_distances(
              clip, clip.action, state.f, state.g, adverbs.size());
          if (cfg.mode == TrainMode::single_pseudo) {
            AdverbId m = single_pseudo_label_from_distances(dists);
            double conf = confidence_from_distances(dists[m], dists[adverbs.antonym(m)]);
            PseudoLabelAssignment a;
            a.clip_id = clip.clip_id;
            a.candidates = {{m, conf}};
            a.selected = a.candidates;
            assignments.push_back(std::move(a));
          } else {
            assignments.push_back(multi_labels_from_distances(
                clip.clip_id, dists, adverbs, cfg.k));
          }
        }
        if (cfg.mode == TrainMode::multi_adaptive) {
          state.thresholds = adapt_thresholds(assignments, state.thresholds);
        }
        for (auto& a : assignments) {
          if (cfg.mode == TrainMode::multi_no_threshold ||
              cfg.mode == TrainMode::single_pseudo) {
            a.selected = a.candidates;
          } else {
            a = filter_pseudo_labels(a, state.thresholds);
          }
        }
        for (size_t i = 0; i < assignments.size(); ++i) {
          const auto& a = assignments[i];
          metrics.pseudo_candidates += a.candidates.size();
          metrics.pseudo_selected += a.selected.size();
          if (!a.selected.empty()) ++metrics.pseudo_clips;
          for (const auto& cand : a.selected) {
            metrics.mean_confidence += cand.confidence;
            selected_ids[i].push_back(cand.adverb);
          }
        }
        if (metrics.pseudo_selected > 0) {
          metrics.mean_confidence /= metrics.pseudo_selected;
        }
        if (hooks.on_pseudo_labels) hooks.on_pseudo_labels(epoch, assignments);
      }

      BatchPlan plan = make_batches(
          static_cast<int>(split.labeled.size()),
          use_pseudo ? static_cast<int>(split.unlabeled.size()) : 0, cfg,
          epoch_seed);

      ParamSet grads = ParamSet::zeros_like(state.f, state.g);
      for (size_t b = 0; b < plan.labeled.size() && ok; ++b) {
        Batch labeled;
        labeled.reserve(plan.labeled[b].size());
        for (int idx : plan.labeled[b]) {
          const VideoClip& clip = split.labeled[idx];
          labeled.push_back({&clip, clip.action, *clip.adverb});
        }
        PseudoBatch pseudo;
        if (use_pseudo) {
          pseudo.reserve(plan.unlabeled[b].size());
          for (int idx : plan.unlabeled[b]) {
            const VideoClip& clip = split.unlabeled[idx];
            pseudo.push_back({&clip, clip.action, selected_ids[idx]});
          }
        }

        grads.set_zero();
        LossReport report = total_loss(labeled, pseudo, state.f, state.g,
                                       loss_cfg, adverbs, phase, &grads);
        if (!std::isfinite(report.total)) {
          ok = false;
          break;
        }
        adam_update(state, grads);

        metrics.loss.l_act_labeled += report.l_act_labeled;
        metrics.loss.l_adv_labeled += report.l_adv_labeled;
        metrics.loss.l_act_unlabeled += report.l_act_unlabeled;
        metrics.loss.l_adv_unlabeled += report.l_adv_unlabeled;
        metrics.loss.total += report.total;
        metrics.loss.active_fraction_act_labeled +=
            report.active_fraction_act_labeled;
        metrics.loss.active_fraction_adv_labeled +=
            report.active_fraction_adv_labeled;
        metrics.loss.active_fraction_act_unlabeled +=
            report.active_fraction_act_unlabeled;
        metrics.loss.active_fraction_adv_unlabeled +=
            report.active_fraction_adv_unlabeled;
        metrics.loss.single_action_warnings += report.single_action_warnings;
      }

      if (ok && !all_finite(state)) ok = false;

      if (ok) {
        double n_batches = static_cast<double>(plan.labeled.size());
        metrics.loss.l_act_labeled /= n_batches;
        metrics.loss.l_adv_labeled /= n_batches;
        metrics.loss.l_act_unlabeled /= n_batches;
        metrics.loss.l_adv_unlabeled /= n_batches;
        metrics.loss.total /= n_batches;
        metrics.loss.active_fraction_act_labeled /= n_batches;
        metrics.loss.active_fraction_adv_labeled /= n_batches;
        metrics.loss.active_fraction_act_unlabeled /= n_batches;
        metrics.loss.active_fraction_adv_unlabeled /= n_batches;

        if (!split.test.empty()) {
          EvalResult eval = evaluate(split.test, state.f, state.g, adverbs);
          metrics.test_macro = eval.macro_average;
          metrics.test_video = eval.video_average;
        }
      }
    } catch (const NumericError&) {
      ok = false;
    }

    if (!ok) {
      state = std::move(good);
      state.diverged = true;
      return state;
    }

    state.history.push_back(metrics);
    state.epoch = epoch + 1;
    if (hooks.on_epoch_end) hooks.on_epoch_end(state, metrics);
    good = state;
  }
  return state;
}

namespace {

constexpr const char* kCheckpointTag = "trainstate";
constexpr int kCheckpointVersion = 1;

void write_config(std::ostream& out, const TrainingConfig& cfg) {
  out << "gamma1 " << g17(cfg.gamma1) << "\ngamma2 " << g17(cfg.gamma2)
      << "\nk " << cfg.k << "\ntau " << g17(cfg.tau) << "\nlambda "
      << g17(cfg.lambda) << "\nlearning_rate " << g17(cfg.learning_rate)
      << "\nsupervised_batch " << cfg.supervised_batch << "\nepochs "
      << cfg.epochs << "\nadverb_start_epoch " << cfg.adverb_start_epoch
      << "\npseudo_start_epoch " << cfg.pseudo_start_epoch << "\nmode "
      << train_mode_name(cfg.mode) << "\nseed " << cfg.seed << "\nbeta1 "
      << g17(cfg.beta1) << "\nbeta2 " << g17(cfg.beta2) << "\nadam_epsilon "
      << g17(cfg.adam_epsilon) << "\nembed_dim " << cfg.embed_dim
      << "\nquery_dim " << cfg.query_dim << "\ntransform_noise "
      << g17(cfg.transform_noise) << "\n";
}

template <typename T>
T expect_field(std::istream& in, const char* name) {
  std::string key;
  T value{};
  if (!(in >> key >> value) || key != name) {
    throw DataError(std::string("checkpoint: expected field '") + name + "'");
  }
  return value;
}

TrainingConfig read_config(std::istream& in) {
  TrainingConfig cfg;
  cfg.gamma1 = expect_field<double>(in, "gamma1");
  cfg.gamma2 = expect_field<double>(in, "gamma2");
  cfg.k = expect_field<int>(in, "k");
  cfg.tau = expect_field<double>(in, "tau");
  cfg.lambda = expect_field<double>(in, "lambda");
  cfg.learning_rate = expect_field<double>(in, "learning_rate");
  cfg.supervised_batch = expect_field<int>(in, "supervised_batch");
  cfg.epochs = expect_field<int>(in, "epochs");
  cfg.adverb_start_epoch = expect_field<int>(in, "adverb_start_epoch");
  cfg.pseudo_start_epoch = expect_field<int>(in, "pseudo_start_epoch");
  cfg.mode = parse_train_mode(expect_field<std::string>(in, "mode"));
  cfg.seed = expect_field<uint64_t>(in, "seed");
  cfg.beta1 = expect_field<double>(in, "beta1");
  cfg.beta2 = expect_field<double>(in, "beta2");
  cfg.adam_epsilon = expect_field<double>(in, "adam_epsilon");
  cfg.embed_dim = expect_field<int>(in, "embed_dim");
  cfg.query_dim = expect_field<int>(in, "query_dim");
  cfg.transform_noise = expect_field<double>(in, "transform_noise");
  return cfg;
}

void write_values(std::ostream& out, const char* tag,
                  const std::vector<double>& values) {
  out << tag << ' ' << values.size();
  for (double v : values) out << ' ' << g17(v);
  out << '\n';
}

std::vector<double> read_values(std::istream& in, const char* tag) {
  std::string key;
  size_t n = 0;
  if (!(in >> key >> n) || key != tag) {
    throw DataError(std::string("checkpoint: expected '") + tag + "' values");
  }
  std::vector<double> values(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(in >> values[i])) {
      throw DataError(std::string("checkpoint: truncated '") + tag + "' values");
    }
  }
  return values;
}

void write_moments(std::ostream& out, const char* tag, const ParamSet& p) {
  ParamSet copy = p;
  auto mats = parameter_matrices(copy);
  out << tag << ' ' << mats.size() << '\n';
  for (size_t i = 0; i < mats.size(); ++i) {
    write_matrix(out, "p" + std::to_string(i), *mats[i]);
  }
}

void read_moments(std::istream& in, const char* tag, ParamSet& p) {
  std::string key;
  size_t n = 0;
  if (!(in >> key >> n) || key != tag) {
    throw DataError(std::string("checkpoint: expected '") + tag + "' block");
  }
  auto mats = parameter_matrices(p);
  if (n != mats.size()) {
    throw DataError(std::string("checkpoint: '") + tag + "' holds " +
                    std::to_string(n) + " matrices, expected " +
                    std::to_string(mats.size()));
  }
  for (size_t i = 0; i < n; ++i) {
    *mats[i] = read_matrix(in, "p" + std::to_string(i));
  }
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::string& path) {
  std::ostringstream body;
  body << "config " << config_fingerprint(state.cfg) << '\n';
  write_config(body, state.cfg);
  body << "epoch " << state.epoch << '\n';
  body << "adam_step " << state.adam_step << '\n';
  body << "diverged " << (state.diverged ? 1 : 0) << '\n';
  body << "thresholds " << g17(state.thresholds.base_tau) << ' '
       << g17(state.thresholds.lambda) << ' ' << state.thresholds.n_adverbs << ' '
       << state.thresholds.total_pseudo_labels << '\n';
  write_values(body, "per_adverb_tau", state.thresholds.per_adverb_tau);
  write_values(body, "confidence_mass", state.thresholds.confidence_mass);
  write_embedders(body, state.f, state.g);
  write_moments(body, "moment1", state.moment1);
  write_moments(body, "moment2", state.moment2);
  body << "history " << state.history.size() << '\n';
  for (const auto& h : state.history) {
    body << h.epoch << ' ' << static_cast<int>(h.phase) << ' '
         << g17(h.loss.l_act_labeled) << ' ' << g17(h.loss.l_adv_labeled) << ' '
         << g17(h.loss.l_act_unlabeled) << ' ' << g17(h.loss.l_adv_unlabeled)
         << ' ' << g17(h.loss.total) << ' '
         << g17(h.loss.active_fraction_act_labeled) << ' '
         << g17(h.loss.active_fraction_adv_labeled) << ' '
         << g17(h.loss.active_fraction_act_unlabeled) << ' '
         << g17(h.loss.active_fraction_adv_unlabeled) << ' '
         << h.loss.single_action_warnings << ' ' << h.pseudo_candidates << ' '
         << h.pseudo_selected << ' ' << h.pseudo_clips << ' '
         << g17(h.mean_confidence) << ' ' << g17(h.test_macro) << ' '
         << g17(h.test_video) << '\n';
  }

  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  std::string text = body.str();
  out << kCheckpointTag << ' ' << kCheckpointVersion << ' '
      << fingerprint_hex(text) << '\n'
      << text;
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string header;
  if (!std::getline(in, header)) {
    throw DataError("checkpoint is empty: " + path);
  }
  std::istringstream hs(header);
  std::string tag, checksum;
  int version = 0;
  if (!(hs >> tag >> version >> checksum) || tag != kCheckpointTag) {
    throw DataError("not a training checkpoint: " + path);
  }
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint version " + std::to_string(version) +
                    " unsupported (expected " +
                    std::to_string(kCheckpointVersion) + "): " + path);
  }
  std::ostringstream rest;
  rest << in.rdbuf();
  std::string body = rest.str();
  if (fingerprint_hex(body) != checksum) {
    throw DataError("checkpoint checksum mismatch: " + path);
  }

  std::istringstream bs(body);
  TrainState state;
  std::string stored_fingerprint = expect_field<std::string>(bs, "config");
  state.cfg = read_config(bs);
  if (config_fingerprint(state.cfg) != stored_fingerprint) {
    throw DataError("checkpoint config fingerprint mismatch: " + path);
  }
  state.epoch = expect_field<int>(bs, "epoch");
  state.adam_step = expect_field<long>(bs, "adam_step");
  state.diverged = expect_field<int>(bs, "diverged") != 0;
  std::string key;
  if (!(bs >> key) || key != "thresholds") {
    throw DataError("checkpoint: expected 'thresholds'");
  }
  if (!(bs >> state.thresholds.base_tau >> state.thresholds.lambda >>
        state.thresholds.n_adverbs >> state.thresholds.total_pseudo_labels)) {
    throw DataError("checkpoint: truncated threshold state");
  }
  state.thresholds.per_adverb_tau = read_values(bs, "per_adverb_tau");
  state.thresholds.confidence_mass = read_values(bs, "confidence_mass");
  read_embedders(bs, state.f, state.g);
  state.moment1 = ParamSet::zeros_like(state.f, state.g);
  state.moment2 = ParamSet::zeros_like(state.f, state.g);
  read_moments(bs, "moment1", state.moment1);
  read_moments(bs, "moment2", state.moment2);
  size_t n_hist = expect_field<size_t>(bs, "history");
  state.history.resize(n_hist);
  for (size_t i = 0; i < n_hist; ++i) {
    EpochMetrics& h = state.history[i];
    int phase = 0;
    if (!(bs >> h.epoch >> phase >> h.loss.l_act_labeled >>
          h.loss.l_adv_labeled >> h.loss.l_act_unlabeled >>
          h.loss.l_adv_unlabeled >> h.loss.total >>
          h.loss.active_fraction_act_labeled >>
          h.loss.active_fraction_adv_labeled >>
          h.loss.active_fraction_act_unlabeled >>
          h.loss.active_fraction_adv_unlabeled >>
          h.loss.single_action_warnings >> h.pseudo_candidates >>
          h.pseudo_selected >> h.pseudo_clips >> h.mean_confidence >>
          h.test_macro >> h.test_video)) {
      throw DataError("checkpoint: truncated history row " + std::to_string(i));
    }
    h.phase = static_cast<Phase>(phase);
  }
  return state;
}

TrainState resume_training(const std::string& path, const DatasetSplit& split,
                           const TrainingConfig& cfg, const TrainHooks& hooks) {
  TrainState state = load_checkpoint(path);
  // The epoch budget may grow or shrink on resume; everything that shapes
  // the trajectory up to a given epoch must match the checkpoint.
  TrainingConfig normalized = cfg;
  normalized.epochs = state.cfg.epochs;
  if (config_fingerprint(normalized) != config_fingerprint(state.cfg)) {
    throw ConfigError("resume: config does not match the checkpoint");
  }
  cfg.validate();
  state.cfg.epochs = cfg.epochs;
  return train_from(std::move(state), split, hooks);
}

void write_metrics_csv(const std::vector<EpochMetrics>& history,
                       std::ostream& out) {
  out << "epoch,phase,loss_total,loss_act_labeled,loss_adv_labeled,"
         "loss_act_pseudo,loss_adv_pseudo,active_act_labeled,"
         "active_adv_labeled,active_act_pseudo,active_adv_pseudo,"
         "pseudo_candidates,pseudo_selected,pseudo_clips,"
         "pseudo_mean_confidence,test_macro_acc,test_video_acc\n";
  for (const auto& h : history) {
    out << h.epoch << ',' << phase_name(h.phase) << ',' << g17(h.loss.total)
        << ',' << g17(h.loss.l_act_labeled) << ',' << g17(h.loss.l_adv_labeled)
        << ',' << g17(h.loss.l_act_unlabeled) << ','
        << g17(h.loss.l_adv_unlabeled) << ','
        << g17(h.loss.active_fraction_act_labeled) << ','
        << g17(h.loss.active_fraction_adv_labeled) << ','
        << g17(h.loss.active_fraction_act_unlabeled) << ','
        << g17(h.loss.active_fraction_adv_unlabeled) << ','
        << h.pseudo_candidates << ',' << h.pseudo_selected << ','
        << h.pseudo_clips << ',' << g17(h.mean_confidence) << ','
        << g17(h.test_macro) << ',' << g17(h.test_video) << '\n';
  }
}

}  // namespace advkit
