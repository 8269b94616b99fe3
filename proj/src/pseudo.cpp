#include "advkit/pseudo.hpp"

#include <algorithm>
#include <cmath>

namespace advkit {

double confidence_from_distances(double d_adverb, double d_antonym) {
  // softmax over {-d_m, -d_ant}; written as a logistic of the gap for
  // stability. Bounded cosine distances keep the exponent small.
  return 1.0 / (1.0 + std::exp(d_adverb - d_antonym));
}

std::vector<double> adverb_distances(const VideoClip& x, ActionId a,
                                     const VisualEmbedder& f, const TextEmbedder& g,
                                     int n_adverbs) {
  VisualForward fwd = embed_video(f, x, a);
  std::vector<double> dists(n_adverbs);
  for (AdverbId m = 0; m < n_adverbs; ++m) {
    dists[m] = distance(fwd.output, embed_text(g, a, m));
  }
  return dists;
}

double confidence(const VideoClip& x, ActionId a, AdverbId m,
                  const VisualEmbedder& f, const TextEmbedder& g,
                  const AdverbVocabulary& adverbs) {
  VisualForward fwd = embed_video(f, x, a);
  double d_m = distance(fwd.output, embed_text(g, a, m));
  double d_ant = distance(fwd.output, embed_text(g, a, adverbs.antonym(m)));
  return confidence_from_distances(d_m, d_ant);
}

AdverbId single_pseudo_label_from_distances(const std::vector<double>& dists) {
  if (dists.empty()) {
    throw DataError("single_pseudo_label: empty distance vector");
  }
  AdverbId best = 0;
  for (AdverbId m = 1; m < static_cast<AdverbId>(dists.size()); ++m) {
    if (dists[m] < dists[best]) best = m;
  }
  return best;
}

AdverbId single_pseudo_label(const VideoClip& x, ActionId a,
                             const VisualEmbedder& f, const TextEmbedder& g) {
  return single_pseudo_label_from_distances(
      adverb_distances(x, a, f, g, g.n_adverbs()));
}

PseudoLabelAssignment multi_labels_from_distances(const std::string& clip_id,
                                                  const std::vector<double>& dists,
                                                  const AdverbVocabulary& adverbs,
                                                  int k) {
  if (k < 1) {
    throw ConfigError("multi_pseudo_labels: k must be >= 1");
  }
  if (static_cast<int>(dists.size()) != adverbs.size()) {
    throw DataError("multi_pseudo_labels: " + std::to_string(dists.size()) +
                    " distances for " + std::to_string(adverbs.size()) + " adverbs");
  }
  PseudoLabelAssignment out;
  out.clip_id = clip_id;
  std::vector<Candidate> winners;
  for (AdverbId m = 0; m < adverbs.size(); ++m) {
    double conf = confidence_from_distances(dists[m], dists[adverbs.antonym(m)]);
    // Strictly above one half: at most one winner per antonym pair.
    if (conf > 0.5) {
      winners.push_back({m, conf});
    }
  }
  std::stable_sort(winners.begin(), winners.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.confidence != b.confidence) return a.confidence > b.confidence;
                     return a.adverb < b.adverb;
                   });
  if (static_cast<int>(winners.size()) > k) {
    winners.resize(k);
  }
  out.candidates = std::move(winners);
  return out;
}

PseudoLabelAssignment multi_pseudo_labels(const VideoClip& x, ActionId a,
                                          const VisualEmbedder& f,
                                          const TextEmbedder& g,
                                          const AdverbVocabulary& adverbs, int k) {
  return multi_labels_from_distances(
      x.clip_id, adverb_distances(x, a, f, g, adverbs.size()), adverbs, k);
}

ThresholdState adapt_thresholds(const std::vector<PseudoLabelAssignment>& assignments,
                                const ThresholdState& state, bool* warned_empty) {
  if (warned_empty) *warned_empty = false;
  ThresholdState next = state;
  int n = state.n_adverbs;
  next.confidence_mass.assign(n, 0.0);
  next.total_pseudo_labels = 0;
  for (const auto& a : assignments) {
    for (const auto& c : a.candidates) {
      next.confidence_mass[c.adverb] += c.confidence;
      ++next.total_pseudo_labels;
    }
  }
  if (next.total_pseudo_labels == 0) {
    if (warned_empty) *warned_empty = true;
    return state;
  }
  next.per_adverb_tau.assign(n, state.base_tau);
  if (state.lambda == 0.0) {
    return next;
  }
  double mean_labels_per_adverb =
      static_cast<double>(next.total_pseudo_labels) / static_cast<double>(n);
  for (AdverbId m = 0; m < n; ++m) {
    if (next.confidence_mass[m] == 0.0) {
      next.per_adverb_tau[m] = kZeroMassEpsilon * state.base_tau;
    } else {
      double ratio = next.confidence_mass[m] / mean_labels_per_adverb;
      next.per_adverb_tau[m] = std::pow(ratio, state.lambda) * state.base_tau;
    }
  }
  return next;
}

PseudoLabelAssignment filter_pseudo_labels(const PseudoLabelAssignment& assignment,
                                           const ThresholdState& state) {
  PseudoLabelAssignment out = assignment;
  out.selected.clear();
  for (const auto& c : assignment.candidates) {
    if (c.adverb < 0 || c.adverb >= state.n_adverbs) {
      throw DataError("filter_pseudo_labels: candidate adverb " +
                      std::to_string(c.adverb) + " outside threshold state");
    }
    if (c.confidence > state.per_adverb_tau[c.adverb]) {
      out.selected.push_back(c);
    }
  }
  return out;
}

}  // namespace advkit
