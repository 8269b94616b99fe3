#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "advkit/trainer.hpp"

using namespace advkit;
namespace fs = std::filesystem;

namespace {

DatasetSplit tiny_split() {
  GeneratorConfig gen;
  gen.n_actions = 3;
  gen.n_adverb_pairs = 2;
  gen.latent_dim = 5;
  gen.feature_dim = 12;
  gen.segments = 3;
  gen.zipf_pair = 0.3;
  gen.noise_sigma = 0.15;
  gen.cooccur_max = 1;
  gen.clips = 160;
  gen.seed = 77;
  Dataset data = generate(gen);
  return split_seen(data, 0.4, 0.25, 5);
}

TrainingConfig tiny_config() {
  TrainingConfig cfg;
  cfg.epochs = 6;
  cfg.adverb_start_epoch = 2;
  cfg.pseudo_start_epoch = 4;
  cfg.supervised_batch = 16;
  cfg.learning_rate = 2e-3;
  cfg.embed_dim = 10;
  cfg.k = 3;
  cfg.tau = 0.55;
  cfg.seed = 9;
  return cfg;
}

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

bool same_params(const VisualEmbedder& fa, const TextEmbedder& ga,
                 const VisualEmbedder& fb, const TextEmbedder& gb) {
  auto pa = parameter_matrices(fa, ga);
  auto pb = parameter_matrices(fb, gb);
  if (pa.size() != pb.size()) return false;
  for (size_t i = 0; i < pa.size(); ++i) {
    if (!same_matrix(*pa[i], *pb[i])) return false;
  }
  return true;
}

bool same_metrics(const EpochMetrics& a, const EpochMetrics& b) {
  return a.epoch == b.epoch && a.phase == b.phase &&
         a.loss.l_act_labeled == b.loss.l_act_labeled &&
         a.loss.l_adv_labeled == b.loss.l_adv_labeled &&
         a.loss.l_act_unlabeled == b.loss.l_act_unlabeled &&
         a.loss.l_adv_unlabeled == b.loss.l_adv_unlabeled &&
         a.loss.total == b.loss.total &&
         a.pseudo_candidates == b.pseudo_candidates &&
         a.pseudo_selected == b.pseudo_selected &&
         a.pseudo_clips == b.pseudo_clips &&
         a.mean_confidence == b.mean_confidence &&
         a.test_macro == b.test_macro && a.test_video == b.test_video;
}

fs::path temp_file(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove(p);
  return p;
}

}  // namespace

TEST_CASE("mode names round-trip and reject unknowns") {
  for (TrainMode mode :
       {TrainMode::supervised_only, TrainMode::single_pseudo,
        TrainMode::multi_no_threshold, TrainMode::multi_fixed_threshold,
        TrainMode::multi_adaptive}) {
    CHECK_EQ(parse_train_mode(train_mode_name(mode)), mode);
  }
  CHECK_THROWS_AS(parse_train_mode("multi"), ConfigError);
}

TEST_CASE("training config validation enforces the schedule ordering") {
  TrainingConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());

  TrainingConfig bad = cfg;
  bad.adverb_start_epoch = 5;
  bad.pseudo_start_epoch = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.pseudo_start_epoch = 7;  // past epochs=6
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.supervised_batch = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.tau = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.lambda = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.beta2 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("schedule presets carry the published constants") {
  TrainingConfig full = full_schedule();
  CHECK_EQ(full.epochs, 1000);
  CHECK_EQ(full.adverb_start_epoch, 200);
  CHECK_EQ(full.pseudo_start_epoch, 300);
  CHECK_EQ(full.supervised_batch, 128);
  CHECK_EQ(full.learning_rate, 1e-4);
  CHECK_EQ(full.k, 5);
  CHECK_EQ(full.tau, 0.6);
  CHECK_EQ(full.lambda, 0.1);
  CHECK_EQ(full.gamma1, 1.0);
  CHECK_EQ(full.gamma2, 1.0);

  TrainingConfig desk = desk_schedule();
  CHECK_EQ(desk.epochs, 300);
  CHECK_EQ(desk.adverb_start_epoch, 60);
  CHECK_EQ(desk.pseudo_start_epoch, 90);
  CHECK_EQ(desk.supervised_batch, 32);
  CHECK_EQ(desk.learning_rate, 1e-3);
}

TEST_CASE("config fingerprint reacts to every field") {
  TrainingConfig base = tiny_config();
  CHECK_EQ(config_fingerprint(base), config_fingerprint(base));

  auto differs = [&](auto mutate) {
    TrainingConfig other = base;
    mutate(other);
    return config_fingerprint(other) != config_fingerprint(base);
  };
  CHECK(differs([](TrainingConfig& c) { c.gamma1 = 2.0; }));
  CHECK(differs([](TrainingConfig& c) { c.k = 4; }));
  CHECK(differs([](TrainingConfig& c) { c.tau = 0.7; }));
  CHECK(differs([](TrainingConfig& c) { c.lambda = 0.2; }));
  CHECK(differs([](TrainingConfig& c) { c.learning_rate = 1e-2; }));
  CHECK(differs([](TrainingConfig& c) { c.supervised_batch = 8; }));
  CHECK(differs([](TrainingConfig& c) { c.epochs = 7; }));
  CHECK(differs([](TrainingConfig& c) { c.adverb_start_epoch = 1; }));
  CHECK(differs([](TrainingConfig& c) { c.pseudo_start_epoch = 5; }));
  CHECK(differs([](TrainingConfig& c) { c.mode = TrainMode::single_pseudo; }));
  CHECK(differs([](TrainingConfig& c) { c.seed = 10; }));
  CHECK(differs([](TrainingConfig& c) { c.embed_dim = 12; }));
  CHECK(differs([](TrainingConfig& c) { c.transform_noise = 0.05; }));
}

TEST_CASE("batch plan partitions the labeled set at the stated ratio") {
  TrainingConfig cfg = tiny_config();
  cfg.supervised_batch = 10;
  BatchPlan plan = make_batches(100, 1900, cfg, 42);
  REQUIRE_EQ(plan.labeled.size(), 10);
  REQUIRE_EQ(plan.unlabeled.size(), 10);

  std::set<int> seen_labeled, seen_unlabeled;
  for (size_t b = 0; b < plan.labeled.size(); ++b) {
    CHECK_EQ(plan.labeled[b].size(), 10);
    CHECK_EQ(plan.unlabeled[b].size(), 190);
    for (int i : plan.labeled[b]) CHECK(seen_labeled.insert(i).second);
    for (int i : plan.unlabeled[b]) CHECK(seen_unlabeled.insert(i).second);
  }
  CHECK_EQ(seen_labeled.size(), 100);
  // 10 x 190 draws exactly exhaust the unlabeled pool, so none repeats.
  CHECK_EQ(seen_unlabeled.size(), 1900);
}

TEST_CASE("batch plan matches the 5% split arithmetic") {
  TrainingConfig cfg = tiny_config();
  cfg.supervised_batch = 128;
  BatchPlan plan = make_batches(589, 11193, cfg, 7);
  REQUIRE_EQ(plan.labeled.size(), 5);
  for (int b = 0; b < 4; ++b) {
    CHECK_EQ(plan.labeled[b].size(), 128);
    CHECK_EQ(plan.unlabeled[b].size(), 2432);
  }
  CHECK_EQ(plan.labeled[4].size(), 77);
  CHECK_EQ(plan.unlabeled[4].size(),
           static_cast<size_t>(std::llround(77 * 11193 / 589.0)));

  std::set<int> seen;
  size_t total = 0;
  for (const auto& batch : plan.unlabeled) {
    total += batch.size();
    for (int i : batch) seen.insert(i);
  }
  CHECK_LE(total, 11193);  // fits one pass, so draws stay distinct
  CHECK_EQ(seen.size(), total);
}

TEST_CASE("batch plan cycles the unlabeled pool with fresh permutations") {
  TrainingConfig cfg = tiny_config();
  cfg.supervised_batch = 2;
  BatchPlan plan = make_batches(4, 3, cfg, 1);
  REQUIRE_EQ(plan.labeled.size(), 2);
  CHECK_EQ(plan.unlabeled[0].size(), 2);  // round(2 * 3/4) = round(1.5)
  CHECK_EQ(plan.unlabeled[1].size(), 2);
  std::vector<int> draws;
  for (const auto& batch : plan.unlabeled) {
    draws.insert(draws.end(), batch.begin(), batch.end());
  }
  REQUIRE_EQ(draws.size(), 4);
  std::set<int> first_pass(draws.begin(), draws.begin() + 3);
  CHECK_EQ(first_pass.size(), 3);  // the full pool before any repeat
  CHECK_GE(draws[3], 0);
  CHECK_LT(draws[3], 3);
}

TEST_CASE("batch plan with no unlabeled data leaves batches empty") {
  TrainingConfig cfg = tiny_config();
  cfg.supervised_batch = 8;
  BatchPlan plan = make_batches(20, 0, cfg, 3);
  REQUIRE_EQ(plan.unlabeled.size(), 3);
  for (const auto& batch : plan.unlabeled) CHECK(batch.empty());
  CHECK_THROWS_AS(make_batches(0, 10, cfg, 3), ConfigError);
}

TEST_CASE("batch plan is a pure function of the epoch seed") {
  TrainingConfig cfg = tiny_config();
  BatchPlan a = make_batches(50, 200, cfg, 11);
  BatchPlan b = make_batches(50, 200, cfg, 11);
  CHECK(a.labeled == b.labeled);
  CHECK(a.unlabeled == b.unlabeled);
  BatchPlan c = make_batches(50, 200, cfg, 12);
  CHECK(a.labeled != c.labeled);
}

TEST_CASE("training walks the three phases and logs one row per epoch") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  TrainState state = train(split, cfg);

  CHECK_FALSE(state.diverged);
  CHECK_EQ(state.epoch, 6);
  REQUIRE_EQ(state.history.size(), 6);
  CHECK_GT(state.adam_step, 0);
  for (int e = 0; e < 6; ++e) {
    const EpochMetrics& h = state.history[e];
    CHECK_EQ(h.epoch, e);
    Phase expect = e < 2 ? Phase::warmup
                         : (e < 4 ? Phase::supervised_adverbs
                                  : Phase::semi_supervised);
    CHECK_EQ(h.phase, expect);
    if (e < 2) CHECK_EQ(h.loss.l_adv_labeled, 0.0);
    if (e < 4) {
      CHECK_EQ(h.loss.l_act_unlabeled, 0.0);
      CHECK_EQ(h.loss.l_adv_unlabeled, 0.0);
      CHECK_EQ(h.pseudo_selected, 0);
    }
    CHECK_GT(h.test_macro, 0.0);
  }
}

TEST_CASE("two runs with the same config are bit-identical") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  TrainState a = train(split, cfg);
  TrainState b = train(split, cfg);
  CHECK(same_params(a.f, a.g, b.f, b.g));
  REQUIRE_EQ(a.history.size(), b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(same_metrics(a.history[i], b.history[i]));
  }

  TrainingConfig other = cfg;
  other.seed = 10;
  TrainState c = train(split, other);
  CHECK_FALSE(same_params(a.f, a.g, c.f, c.g));
}

TEST_CASE("adverb transforms stay untouched through warmup") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 3;
  cfg.adverb_start_epoch = 3;
  cfg.pseudo_start_epoch = 3;
  TrainState state = train(split, cfg);

  VisualEmbedder f0;
  TextEmbedder g0;
  EmbedderInit init;
  init.n_actions = split.vocab.actions.size();
  init.n_adverbs = split.vocab.adverbs.size();
  init.feature_dim = static_cast<int>(split.labeled.front().features.cols());
  init.embed_dim = cfg.embed_dim;
  init.query_dim = cfg.query_dim;
  init.transform_noise = cfg.transform_noise;
  init.seed = cfg.seed;
  init_embedders(init, f0, g0);

  for (size_t i = 0; i < g0.adverb_transforms.size(); ++i) {
    CHECK(same_matrix(state.g.adverb_transforms[i], g0.adverb_transforms[i]));
  }
  // The rest of the model did move.
  CHECK_FALSE(same_matrix(state.g.action_embeddings, g0.action_embeddings));
}

TEST_CASE("supervised_only ignores the unlabeled pool entirely") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  cfg.mode = TrainMode::supervised_only;
  bool pseudo_hook_fired = false;
  TrainHooks hooks;
  hooks.on_pseudo_labels = [&](int, const std::vector<PseudoLabelAssignment>&) {
    pseudo_hook_fired = true;
  };
  TrainState state = train(split, cfg, hooks);
  CHECK_FALSE(pseudo_hook_fired);
  for (const auto& h : state.history) {
    CHECK_EQ(h.loss.l_act_unlabeled, 0.0);
    CHECK_EQ(h.loss.l_adv_unlabeled, 0.0);
    CHECK_EQ(h.pseudo_candidates, 0);
    CHECK_EQ(h.pseudo_selected, 0);
  }
}

TEST_CASE("single_pseudo assigns exactly one confident label per clip") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  cfg.mode = TrainMode::single_pseudo;
  std::map<int, std::vector<PseudoLabelAssignment>> captured;
  TrainHooks hooks;
  hooks.on_pseudo_labels = [&](int epoch,
                               const std::vector<PseudoLabelAssignment>& a) {
    captured[epoch] = a;
  };
  TrainState state = train(split, cfg, hooks);
  REQUIRE_EQ(captured.size(), 2);  // epochs 4 and 5
  for (const auto& [epoch, assignments] : captured) {
    CHECK_GE(epoch, cfg.pseudo_start_epoch);
    CHECK_EQ(assignments.size(), split.unlabeled.size());
    for (const auto& a : assignments) {
      REQUIRE_EQ(a.candidates.size(), 1);
      CHECK_EQ(a.selected.size(), 1);
      CHECK_EQ(a.selected[0].adverb, a.candidates[0].adverb);
      CHECK_GE(a.selected[0].confidence, 0.5);
    }
  }
  CHECK_EQ(state.history.back().pseudo_selected,
           static_cast<long>(split.unlabeled.size()));
}

TEST_CASE("multi modes differ only in the filtering stage") {
  DatasetSplit split = tiny_split();

  TrainingConfig cfg = tiny_config();
  cfg.mode = TrainMode::multi_no_threshold;
  std::vector<PseudoLabelAssignment> last_nothresh;
  TrainHooks hooks;
  hooks.on_pseudo_labels = [&](int, const std::vector<PseudoLabelAssignment>& a) {
    last_nothresh = a;
  };
  train(split, cfg, hooks);
  for (const auto& a : last_nothresh) {
    CHECK_EQ(a.selected.size(), a.candidates.size());
    CHECK_LE(static_cast<int>(a.selected.size()), cfg.k);
    for (const auto& cand : a.candidates) CHECK_GT(cand.confidence, 0.5);
  }

  cfg.mode = TrainMode::multi_fixed_threshold;
  std::vector<PseudoLabelAssignment> last_fixed;
  hooks.on_pseudo_labels = [&](int, const std::vector<PseudoLabelAssignment>& a) {
    last_fixed = a;
  };
  TrainState fixed_state = train(split, cfg, hooks);
  for (const auto& a : last_fixed) {
    CHECK_LE(a.selected.size(), a.candidates.size());
    for (const auto& cand : a.selected) CHECK_GT(cand.confidence, cfg.tau);
  }
  // Fixed thresholds never adapt.
  for (double tau_m : fixed_state.thresholds.per_adverb_tau) {
    CHECK_EQ(tau_m, cfg.tau);
  }

  cfg.mode = TrainMode::multi_adaptive;
  cfg.lambda = 0.5;
  TrainState adaptive_state = train(split, cfg);
  CHECK_GT(adaptive_state.thresholds.total_pseudo_labels, 0);
  bool any_moved = false;
  for (double tau_m : adaptive_state.thresholds.per_adverb_tau) {
    if (tau_m != cfg.tau) any_moved = true;
  }
  CHECK(any_moved);
}

TEST_CASE("fixed and adaptive thresholds coincide at lambda zero") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  cfg.lambda = 0.0;
  cfg.epochs = 8;

  cfg.mode = TrainMode::multi_fixed_threshold;
  TrainState fixed_state = train(split, cfg);
  cfg.mode = TrainMode::multi_adaptive;
  TrainState adaptive_state = train(split, cfg);

  REQUIRE_EQ(fixed_state.history.size(), adaptive_state.history.size());
  for (size_t i = 0; i < fixed_state.history.size(); ++i) {
    const EpochMetrics& a = fixed_state.history[i];
    const EpochMetrics& b = adaptive_state.history[i];
    CHECK_EQ(a.loss.l_act_labeled, b.loss.l_act_labeled);
    CHECK_EQ(a.loss.l_adv_labeled, b.loss.l_adv_labeled);
    CHECK_EQ(a.loss.l_act_unlabeled, b.loss.l_act_unlabeled);
    CHECK_EQ(a.loss.l_adv_unlabeled, b.loss.l_adv_unlabeled);
    CHECK_EQ(a.loss.total, b.loss.total);
    CHECK_EQ(a.pseudo_selected, b.pseudo_selected);
    CHECK_EQ(a.test_macro, b.test_macro);
  }
  CHECK(same_params(fixed_state.f, fixed_state.g, adaptive_state.f,
                    adaptive_state.g));
}

TEST_CASE("non-finite losses roll back to the last good epoch") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();

  SUBCASE("NaN features poison the first batch") {
    DatasetSplit poisoned = split;
    for (auto& clip : poisoned.labeled) {
      clip.features.setConstant(std::nan(""));
    }
    TrainState state = train(poisoned, cfg);
    CHECK(state.diverged);
    CHECK_EQ(state.epoch, 0);
    CHECK(state.history.empty());
  }

  SUBCASE("zero-norm embeddings abort via the numeric guard") {
    DatasetSplit poisoned = split;
    for (auto& clip : poisoned.labeled) {
      clip.features.setZero();
    }
    TrainState state = train(poisoned, cfg);
    CHECK(state.diverged);
    CHECK_EQ(state.epoch, 0);
  }
}

TEST_CASE("checkpoints round-trip the full training state") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  cfg.mode = TrainMode::multi_adaptive;
  TrainState state = train(split, cfg);

  fs::path path = temp_file("advkit_ckpt_roundtrip.txt");
  save_checkpoint(state, path.string());
  TrainState loaded = load_checkpoint(path.string());

  CHECK_EQ(config_fingerprint(loaded.cfg), config_fingerprint(state.cfg));
  CHECK_EQ(loaded.epoch, state.epoch);
  CHECK_EQ(loaded.adam_step, state.adam_step);
  CHECK_EQ(loaded.diverged, state.diverged);
  CHECK(same_params(loaded.f, loaded.g, state.f, state.g));
  CHECK(same_matrix(loaded.moment1.key_proj, state.moment1.key_proj));
  CHECK(same_matrix(loaded.moment2.action_embeddings,
                    state.moment2.action_embeddings));
  CHECK_EQ(loaded.thresholds.per_adverb_tau, state.thresholds.per_adverb_tau);
  CHECK_EQ(loaded.thresholds.confidence_mass, state.thresholds.confidence_mass);
  CHECK_EQ(loaded.thresholds.total_pseudo_labels,
           state.thresholds.total_pseudo_labels);
  REQUIRE_EQ(loaded.history.size(), state.history.size());
  for (size_t i = 0; i < state.history.size(); ++i) {
    CHECK(same_metrics(loaded.history[i], state.history[i]));
  }
  fs::remove(path);
}

TEST_CASE("resume reproduces the straight-through run bit for bit") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 8;
  cfg.mode = TrainMode::multi_adaptive;

  TrainState straight = train(split, cfg);

  fs::path path = temp_file("advkit_ckpt_resume.txt");
  TrainHooks save_hook;
  save_hook.on_epoch_end = [&](const TrainState& s, const EpochMetrics& m) {
    if (m.epoch == 3) save_checkpoint(s, path.string());
  };
  train(split, cfg, save_hook);

  TrainState resumed = resume_training(path.string(), split, cfg);
  CHECK_EQ(resumed.epoch, 8);
  CHECK(same_params(resumed.f, resumed.g, straight.f, straight.g));
  REQUIRE_EQ(resumed.history.size(), straight.history.size());
  for (size_t i = 0; i < straight.history.size(); ++i) {
    CHECK(same_metrics(resumed.history[i], straight.history[i]));
  }
  fs::remove(path);
}

TEST_CASE("a finished run extends on resume and matches a longer run") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 8;
  TrainState straight = train(split, cfg);

  TrainingConfig shorter = cfg;
  shorter.epochs = 5;
  TrainState first = train(split, shorter);
  CHECK_EQ(first.epoch, 5);
  fs::path path = temp_file("advkit_ckpt_extend.txt");
  save_checkpoint(first, path.string());

  TrainState extended = resume_training(path.string(), split, cfg);
  CHECK_EQ(extended.epoch, 8);
  CHECK_EQ(extended.cfg.epochs, 8);
  CHECK(same_params(extended.f, extended.g, straight.f, straight.g));
  REQUIRE_EQ(extended.history.size(), straight.history.size());
  for (size_t i = 0; i < straight.history.size(); ++i) {
    CHECK(same_metrics(extended.history[i], straight.history[i]));
  }
  fs::remove(path);
}

TEST_CASE("corrupted or reconfigured checkpoints are rejected") {
  DatasetSplit split = tiny_split();
  TrainingConfig cfg = tiny_config();
  cfg.epochs = 2;
  cfg.pseudo_start_epoch = 2;
  cfg.adverb_start_epoch = 1;
  TrainState state = train(split, cfg);

  fs::path path = temp_file("advkit_ckpt_corrupt.txt");
  save_checkpoint(state, path.string());

  SUBCASE("flipped byte breaks the checksum") {
    std::string text;
    {
      std::ifstream in(path);
      std::ostringstream ss;
      ss << in.rdbuf();
      text = ss.str();
    }
    size_t mid = text.size() / 2;
    text[mid] = text[mid] == '4' ? '5' : '4';
    std::ofstream(path) << text;
    CHECK_THROWS_AS(load_checkpoint(path.string()), DataError);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint((path.string() + ".nope")), DataError);
  }

  SUBCASE("resume with a different config") {
    TrainingConfig altered = cfg;
    altered.learning_rate = 5e-3;
    CHECK_THROWS_AS(resume_training(path.string(), split, altered), ConfigError);
  }
  fs::remove(path);
}

TEST_CASE("training rejects an empty labeled set") {
  DatasetSplit split = tiny_split();
  split.labeled.clear();
  split.c_labeled.clear();
  CHECK_THROWS_AS(train(split, tiny_config()), ConfigError);
}

TEST_CASE("metrics csv renders one stable row per epoch") {
  std::vector<EpochMetrics> history(2);
  history[0].epoch = 0;
  history[0].phase = Phase::warmup;
  history[0].loss.total = 0.5;
  history[0].loss.l_act_labeled = 0.5;
  history[0].test_macro = 0.25;
  history[1].epoch = 1;
  history[1].phase = Phase::semi_supervised;
  history[1].loss.total = 1.25;
  history[1].loss.l_act_labeled = 0.75;
  history[1].loss.l_adv_labeled = 0.25;
  history[1].loss.l_act_unlabeled = 0.125;
  history[1].loss.l_adv_unlabeled = 0.125;
  history[1].pseudo_candidates = 7;
  history[1].pseudo_selected = 5;
  history[1].pseudo_clips = 4;
  history[1].mean_confidence = 0.625;
  history[1].test_macro = 0.5;
  history[1].test_video = 0.5;

  std::ostringstream out;
  write_metrics_csv(history, out);
  CHECK_EQ(out.str(),
           "epoch,phase,loss_total,loss_act_labeled,loss_adv_labeled,"
           "loss_act_pseudo,loss_adv_pseudo,active_act_labeled,"
           "active_adv_labeled,active_act_pseudo,active_adv_pseudo,"
           "pseudo_candidates,pseudo_selected,pseudo_clips,"
           "pseudo_mean_confidence,test_macro_acc,test_video_acc\n"
           "0,warmup,0.5,0.5,0,0,0,0,0,0,0,0,0,0,0,0.25,0\n"
           "1,semi_supervised,1.25,0.75,0.25,0.125,0.125,0,0,0,0,7,5,4,0.625,"
           "0.5,0.5\n");
}
