#pragma once

#include <Eigen/Core>
#include <vector>

#include "advkit/clip.hpp"
#include "advkit/common.hpp"
#include "advkit/embed.hpp"

namespace advkit {

struct LossConfig {
  double gamma1 = 1.0;  // action triplet margin
  double gamma2 = 1.0;  // adverb-antonym triplet margin

  void validate() const {
    if (gamma1 <= 0 || gamma2 <= 0) {
      throw ConfigError("triplet margins must be positive");
    }
  }
};

// Gradient (or optimizer-moment) container mirroring all embedder parameters.
struct ParamSet {
  Eigen::MatrixXd query_vectors;
  Eigen::MatrixXd key_proj;
  Eigen::MatrixXd value_proj;
  Eigen::MatrixXd action_embeddings;
  std::vector<Eigen::MatrixXd> adverb_transforms;

  static ParamSet zeros_like(const VisualEmbedder& f, const TextEmbedder& g);
  void set_zero();
};

// Fixed enumeration order: query, key, value, action embeddings, W_0..W_{N-1}.
std::vector<Eigen::MatrixXd*> parameter_matrices(VisualEmbedder& f, TextEmbedder& g);
std::vector<const Eigen::MatrixXd*> parameter_matrices(const VisualEmbedder& f,
                                                       const TextEmbedder& g);
std::vector<Eigen::MatrixXd*> parameter_matrices(ParamSet& p);

enum class Phase { warmup, supervised_adverbs, semi_supervised };

struct Sample {
  const VideoClip* clip = nullptr;
  ActionId action = -1;
  AdverbId adverb = -1;
};
using Batch = std::vector<Sample>;

// One unlabeled clip with its surviving pseudo-adverb set.
struct PseudoSample {
  const VideoClip* clip = nullptr;
  ActionId action = -1;
  std::vector<AdverbId> adverbs;
};
using PseudoBatch = std::vector<PseudoSample>;

struct LossReport {
  double l_act_labeled = 0;
  double l_adv_labeled = 0;
  double l_act_unlabeled = 0;
  double l_adv_unlabeled = 0;
  double total = 0;
  double active_fraction_act_labeled = 0;
  double active_fraction_adv_labeled = 0;
  double active_fraction_act_unlabeled = 0;
  double active_fraction_adv_unlabeled = 0;
  int single_action_warnings = 0;
};

struct TermStats {
  double value = 0;
  long n_hinges = 0;
  long active_hinges = 0;
  int single_action_warnings = 0;

  double active_fraction() const {
    return n_hinges == 0 ? 0.0 : static_cast<double>(active_hinges) / n_hinges;
  }
};

// Per-sample hinge against every other action in the batch, averaged over
// those negatives, then weighted per sample. weights == nullptr means a plain
// mean over samples. use_adverb_transform=false evaluates g as an action
// embedder (warmup). Gradients accumulate into *grads when non-null.
TermStats loss_act_term(const Batch& batch, const VisualEmbedder& f,
                        const TextEmbedder& g, const LossConfig& cfg,
                        bool use_adverb_transform,
                        const std::vector<double>* weights, ParamSet* grads);

// Per-sample hinge of the adverb against its antonym.
TermStats loss_adv_term(const Batch& batch, const VisualEmbedder& f,
                        const TextEmbedder& g, const LossConfig& cfg,
                        const AdverbVocabulary& adverbs,
                        const std::vector<double>* weights, ParamSet* grads);

// Convenience entry points: uniform mean over the batch.
double loss_act(const Batch& batch, const VisualEmbedder& f, const TextEmbedder& g,
                const LossConfig& cfg, ParamSet* grads = nullptr,
                TermStats* stats = nullptr);
double loss_adv(const Batch& batch, const VisualEmbedder& f, const TextEmbedder& g,
                const LossConfig& cfg, const AdverbVocabulary& adverbs,
                ParamSet* grads = nullptr, TermStats* stats = nullptr);

// Combined objective for one batch. In semi_supervised the pseudo batch is
// expanded to one labeled-style sample per (clip, pseudo-adverb); each term
// sums over a clip's pseudo-adverbs and averages over contributing clips, so
// a clip with two pseudo-labels contributes the sum of two single-label
// evaluations.
LossReport total_loss(const Batch& labeled, const PseudoBatch& pseudo,
                      const VisualEmbedder& f, const TextEmbedder& g,
                      const LossConfig& cfg, const AdverbVocabulary& adverbs,
                      Phase phase, ParamSet* grads = nullptr);

struct GradCheckConfig {
  int n_samples = 4;
  int max_segments = 3;
  double fd_step = 1e-5;
  // Hinge pre-activations closer to the kink than this force a resample.
  double kink_margin = 1e-3;
  int max_retries = 50;
};

// Central finite differences over every parameter entry at a kink-free
// point; returns the max relative error across both loss terms.
double check_gradients(const VisualEmbedder& f, const TextEmbedder& g,
                       const LossConfig& cfg, const AdverbVocabulary& adverbs,
                       uint64_t seed, const GradCheckConfig& gc = {});

}  // namespace advkit
