#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "advkit/clip.hpp"
#include "advkit/common.hpp"
#include "advkit/data.hpp"
#include "advkit/embed.hpp"
#include "advkit/pseudo.hpp"
#include "advkit/vocab.hpp"

namespace advkit {

// Binary antonym test: is the clip embedded strictly closer to the true
// adverb's text representation than to its antonym's? A tie is incorrect.
bool antonym_prediction(const VideoClip& x, ActionId a, AdverbId m_true,
                        const VisualEmbedder& f, const TextEmbedder& g,
                        const AdverbVocabulary& adverbs);

struct PredictionRecord {
  std::string clip_id;
  ActionId action = -1;
  AdverbId adverb = -1;
  bool correct = false;
};

// Score every labeled clip. Clips without an adverb label are a data error.
std::vector<PredictionRecord> predict_clips(const std::vector<VideoClip>& clips,
                                            const VisualEmbedder& f,
                                            const TextEmbedder& g,
                                            const AdverbVocabulary& adverbs);

enum class AggregateMode { macro_adverb, per_video };

struct PairAccuracy {
  Composition composition;
  long total = 0;
  long correct = 0;
};

struct EvalResult {
  std::vector<long> adverb_total;    // indexed by adverb id
  std::vector<long> adverb_correct;
  std::vector<PairAccuracy> pairs;   // sorted by composition
  long clips_total = 0;
  long clips_correct = 0;
  // Unweighted mean over adverbs with at least one test instance.
  double macro_average = 0;
  // Plain fraction of correct clips.
  double video_average = 0;
  std::vector<AdverbId> absent_adverbs;  // excluded from the macro mean

  double accuracy(AggregateMode mode) const {
    return mode == AggregateMode::macro_adverb ? macro_average : video_average;
  }
};

EvalResult aggregate(const std::vector<PredictionRecord>& records, int n_adverbs);

// predict + aggregate in one call; the trainer's per-epoch hook.
EvalResult evaluate(const std::vector<VideoClip>& test, const VisualEmbedder& f,
                    const TextEmbedder& g, const AdverbVocabulary& adverbs);

// Head/mid/tail partition thresholds on training-set instance counts.
// Strict inequalities on both ends; boundary values land in mid.
struct LongTailThresholds {
  long adverb_head = 500;
  long adverb_tail = 100;
  long action_head = 100;
  long action_tail = 20;
  long pair_head = 50;
  long pair_tail = 10;
};

struct Bucket {
  int items = 0;
  std::optional<double> accuracy;  // absent when the bucket is empty
};

struct AxisBreakdown {
  Bucket head, mid, tail;
};

struct LongTailReport {
  AxisBreakdown adverbs, actions, pairs;
};

// Mean per-item accuracy inside each bucket; items are adverbs, actions, and
// compositions with at least one test instance, bucketed by their training
// counts.
LongTailReport longtail_breakdown(
    const std::vector<PredictionRecord>& records,
    const std::vector<std::pair<Composition, long>>& training_counts,
    const LongTailThresholds& thresholds = {});

struct PseudoDistribution {
  std::vector<long> counts;  // selected pseudo-labels per adverb
  long total = 0;
  std::vector<AdverbId> zero_adverbs;
  double entropy = 0;  // natural-log Shannon entropy of the histogram
};

PseudoDistribution pseudo_distribution(
    const std::vector<PseudoLabelAssignment>& assignments, int n_adverbs);

// Report bundle writers. Columns are fixed; numbers use %.17g so identical
// inputs give identical bytes.
void write_eval_csv(const EvalResult& result, const Vocabularies& vocab,
                    std::ostream& out);
void write_longtail_csv(const LongTailReport& report, std::ostream& out);
void write_pseudo_csv(const PseudoDistribution& dist, const AdverbVocabulary& adverbs,
                      std::ostream& out);
std::string format_summary(const EvalResult& result, const Vocabularies& vocab);

}  // namespace advkit
