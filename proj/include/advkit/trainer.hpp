#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "advkit/data.hpp"
#include "advkit/loss.hpp"
#include "advkit/pseudo.hpp"

namespace advkit {

enum class TrainMode {
  supervised_only,
  single_pseudo,
  multi_no_threshold,
  multi_fixed_threshold,
  multi_adaptive,
};

TrainMode parse_train_mode(const std::string& name);
std::string train_mode_name(TrainMode mode);

struct TrainingConfig {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  int k = 5;            // max pseudo-labels per clip
  double tau = 0.6;     // base confidence threshold
  double lambda = 0.1;  // threshold adaptation exponent
  double learning_rate = 1e-4;
  int supervised_batch = 128;
  int epochs = 1000;
  int adverb_start_epoch = 200;  // warmup ends, adverb terms begin
  int pseudo_start_epoch = 300;  // unlabeled clips begin to contribute
  TrainMode mode = TrainMode::multi_adaptive;
  uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Model shape; feature_dim comes from the data.
  int embed_dim = 24;
  int query_dim = 0;  // 0 means embed_dim
  double transform_noise = 0.01;

  void validate() const;
};

// Full-scale schedule: batch 128, learning rate 1e-4, 1000 epochs with
// adverbs from 200 and pseudo-labels from 300. Same as the field defaults.
TrainingConfig full_schedule();
// Scaled-down schedule for fast runs: 300 epochs, boundaries 60/90,
// batch 32, learning rate 1e-3.
TrainingConfig desk_schedule();

// Canonical over every field, used to pin checkpoints to their config.
std::string config_fingerprint(const TrainingConfig& cfg);

// One epoch's batches as indices into the labeled and unlabeled lists. Every
// labeled index appears exactly once; each batch carries round(n_l·|U|/|S|)
// unlabeled indices, drawn without replacement and cycling through fresh
// permutations when exhausted.
struct BatchPlan {
  std::vector<std::vector<int>> labeled;
  std::vector<std::vector<int>> unlabeled;
};

BatchPlan make_batches(int n_labeled, int n_unlabeled, const TrainingConfig& cfg,
                       uint64_t epoch_seed);

struct EpochMetrics {
  int epoch = 0;
  Phase phase = Phase::warmup;
  LossReport loss;  // batch means
  long pseudo_candidates = 0;  // pair winners before thresholding
  long pseudo_selected = 0;    // surviving (clip, adverb) pseudo-labels
  int pseudo_clips = 0;        // clips with a nonempty selected set
  double mean_confidence = 0;  // over selected pseudo-labels
  double test_macro = 0;
  double test_video = 0;
};

struct TrainState {
  TrainingConfig cfg;
  int epoch = 0;  // completed epochs
  long adam_step = 0;
  VisualEmbedder f;
  TextEmbedder g;
  ParamSet moment1, moment2;
  ThresholdState thresholds;
  std::vector<EpochMetrics> history;
  bool diverged = false;
};

struct TrainHooks {
  // Fires after the epoch-start pseudo-labeling pass, before optimization.
  std::function<void(int epoch, const std::vector<PseudoLabelAssignment>&)>
      on_pseudo_labels;
  std::function<void(const TrainState&, const EpochMetrics&)> on_epoch_end;
};

// Runs the three-phase schedule from a fresh initialization. On numerical
// divergence the state of the last completed epoch comes back with the
// diverged flag set.
TrainState train(const DatasetSplit& split, const TrainingConfig& cfg,
                 const TrainHooks& hooks = {});

// Continues a state to state.cfg.epochs; the resume path after a checkpoint
// load, also reachable directly for tests.
TrainState train_from(TrainState state, const DatasetSplit& split,
                      const TrainHooks& hooks = {});

// Text checkpoint with a version/checksum header line; load verifies both.
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

// load + fingerprint guard + train_from. The caller's config must match the
// checkpointed one exactly, except for the epoch budget, which replaces the
// checkpointed value so a finished run can be extended.
TrainState resume_training(const std::string& path, const DatasetSplit& split,
                           const TrainingConfig& cfg, const TrainHooks& hooks = {});

// One CSV row per epoch: loss components, pseudo-label diagnostics, and
// held-out accuracy. %.17g for doubles, byte-stable.
void write_metrics_csv(const std::vector<EpochMetrics>& history, std::ostream& out);

}  // namespace advkit
