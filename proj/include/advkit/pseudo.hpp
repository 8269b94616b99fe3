#pragma once

#include <string>
#include <vector>

#include "advkit/clip.hpp"
#include "advkit/common.hpp"
#include "advkit/embed.hpp"
#include "advkit/vocab.hpp"

namespace advkit {

struct Candidate {
  AdverbId adverb = -1;
  double confidence = 0;
};

// Per-clip pseudo-label state: ranked candidates from the confidence pass,
// then the subset surviving the per-adverb thresholds. An adverb and its
// antonym never co-occur in candidates.
struct PseudoLabelAssignment {
  std::string clip_id;
  std::vector<Candidate> candidates;  // sorted by confidence desc, ties by id
  std::vector<Candidate> selected;    // candidate order preserved
};

// Adverb-specific thresholds and the statistics behind them.
struct ThresholdState {
  double base_tau = 0.6;
  double lambda = 0.1;
  int n_adverbs = 0;
  std::vector<double> per_adverb_tau;
  std::vector<double> confidence_mass;
  long total_pseudo_labels = 0;

  static ThresholdState fixed(double tau, double lambda, int n_adverbs) {
    ThresholdState s;
    s.base_tau = tau;
    s.lambda = lambda;
    s.n_adverbs = n_adverbs;
    s.per_adverb_tau.assign(n_adverbs, tau);
    s.confidence_mass.assign(n_adverbs, 0.0);
    return s;
  }
};

// Pairwise softmax over negated distances: closer to the adverb than to its
// antonym means confidence above one half. conf(m) + conf(ant(m)) = 1.
double confidence_from_distances(double d_adverb, double d_antonym);

double confidence(const VideoClip& x, ActionId a, AdverbId m,
                  const VisualEmbedder& f, const TextEmbedder& g,
                  const AdverbVocabulary& adverbs);

// Distances from the clip embedding to every adverb's text embedding.
std::vector<double> adverb_distances(const VideoClip& x, ActionId a,
                                     const VisualEmbedder& f, const TextEmbedder& g,
                                     int n_adverbs);

// Nearest text representation over all adverbs; ties break to the lowest id.
AdverbId single_pseudo_label(const VideoClip& x, ActionId a,
                             const VisualEmbedder& f, const TextEmbedder& g);
AdverbId single_pseudo_label_from_distances(const std::vector<double>& dists);

// Up to k pair winners (confidence strictly above 0.5), ranked by confidence
// descending with ties to the lowest adverb id. selected stays empty here.
PseudoLabelAssignment multi_pseudo_labels(const VideoClip& x, ActionId a,
                                          const VisualEmbedder& f,
                                          const TextEmbedder& g,
                                          const AdverbVocabulary& adverbs, int k);
PseudoLabelAssignment multi_labels_from_distances(const std::string& clip_id,
                                                  const std::vector<double>& dists,
                                                  const AdverbVocabulary& adverbs,
                                                  int k);

// Per-adverb thresholds from all candidate (pre-filter) assignments:
// tau_m = (mass_m / (total_labels / N))^lambda * tau. lambda = 0 keeps the
// base threshold everywhere; zero-mass adverbs drop to epsilon * tau so they
// stay reachable. No pseudo-labels at all returns the state unchanged.
ThresholdState adapt_thresholds(const std::vector<PseudoLabelAssignment>& assignments,
                                const ThresholdState& state,
                                bool* warned_empty = nullptr);

constexpr double kZeroMassEpsilon = 1e-6;

// selected = candidates with conf > tau_m, order preserved.
PseudoLabelAssignment filter_pseudo_labels(const PseudoLabelAssignment& assignment,
                                           const ThresholdState& state);

}  // namespace advkit
