#include "advkit/evalreport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace advkit {

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct ItemScore {
  long total = 0;
  long correct = 0;
  double accuracy() const { return static_cast<double>(correct) / total; }
};

// head/mid/tail assignment with strict thresholds; boundary counts are mid.
template <typename Key>
AxisBreakdown bucketize(const std::map<Key, ItemScore>& items,
                        const std::map<Key, long>& train_counts, long head_thr,
                        long tail_thr) {
  struct Acc {
    int items = 0;
    double sum = 0;
  } head, mid, tail;
  for (const auto& [key, score] : items) {
    auto it = train_counts.find(key);
    long count = it == train_counts.end() ? 0 : it->second;
    Acc& acc = count > head_thr ? head : (count < tail_thr ? tail : mid);
    ++acc.items;
    acc.sum += score.accuracy();
  }
  auto finish = [](const Acc& acc) {
    Bucket b;
    b.items = acc.items;
    if (acc.items > 0) b.accuracy = acc.sum / acc.items;
    return b;
  };
  AxisBreakdown out;
  out.head = finish(head);
  out.mid = finish(mid);
  out.tail = finish(tail);
  return out;
}

}  // namespace

bool antonym_prediction(const VideoClip& x, ActionId a, AdverbId m_true,
                        const VisualEmbedder& f, const TextEmbedder& g,
                        const AdverbVocabulary& adverbs) {
  VisualForward fwd = embed_video(f, x, a);
  double d_true = distance(fwd.output, embed_text(g, a, m_true));
  double d_ant = distance(fwd.output, embed_text(g, a, adverbs.antonym(m_true)));
  return d_true < d_ant;
}

std::vector<PredictionRecord> predict_clips(const std::vector<VideoClip>& clips,
                                            const VisualEmbedder& f,
                                            const TextEmbedder& g,
                                            const AdverbVocabulary& adverbs) {
  std::vector<PredictionRecord> records;
  records.reserve(clips.size());
  for (const VideoClip& clip : clips) {
    if (!clip.adverb) {
      throw DataError("predict_clips: clip " + clip.clip_id + " has no label");
    }
    PredictionRecord rec;
    rec.clip_id = clip.clip_id;
    rec.action = clip.action;
    rec.adverb = *clip.adverb;
    rec.correct = antonym_prediction(clip, clip.action, *clip.adverb, f, g, adverbs);
    records.push_back(std::move(rec));
  }
  return records;
}

EvalResult aggregate(const std::vector<PredictionRecord>& records, int n_adverbs) {
  if (n_adverbs <= 0) throw ConfigError("aggregate: adverb count must be positive");
  EvalResult result;
  result.adverb_total.assign(n_adverbs, 0);
  result.adverb_correct.assign(n_adverbs, 0);
  std::map<Composition, ItemScore> pair_scores;
  for (const auto& rec : records) {
    if (rec.adverb < 0 || rec.adverb >= n_adverbs) {
      throw DataError("aggregate: adverb id " + std::to_string(rec.adverb) +
                      " out of range for clip " + rec.clip_id);
    }
    ++result.adverb_total[rec.adverb];
    ++result.clips_total;
    auto& pair = pair_scores[{rec.action, rec.adverb}];
    ++pair.total;
    if (rec.correct) {
      ++result.adverb_correct[rec.adverb];
      ++result.clips_correct;
      ++pair.correct;
    }
  }
  for (const auto& [comp, score] : pair_scores) {
    result.pairs.push_back({comp, score.total, score.correct});
  }

  int scored = 0;
  double sum = 0;
  for (AdverbId m = 0; m < n_adverbs; ++m) {
    if (result.adverb_total[m] > 0) {
      ++scored;
      sum += static_cast<double>(result.adverb_correct[m]) / result.adverb_total[m];
    } else {
      result.absent_adverbs.push_back(m);
    }
  }
  result.macro_average = scored > 0 ? sum / scored : 0.0;
  result.video_average =
      result.clips_total > 0
          ? static_cast<double>(result.clips_correct) / result.clips_total
          : 0.0;
  return result;
}

EvalResult evaluate(const std::vector<VideoClip>& test, const VisualEmbedder& f,
                    const TextEmbedder& g, const AdverbVocabulary& adverbs) {
  return aggregate(predict_clips(test, f, g, adverbs), adverbs.size());
}

LongTailReport longtail_breakdown(
    const std::vector<PredictionRecord>& records,
    const std::vector<std::pair<Composition, long>>& training_counts,
    const LongTailThresholds& thresholds) {
  std::map<Composition, long> pair_counts;
  std::map<ActionId, long> action_counts;
  std::map<AdverbId, long> adverb_counts;
  for (const auto& [comp, count] : training_counts) {
    pair_counts[comp] += count;
    action_counts[comp.first] += count;
    adverb_counts[comp.second] += count;
  }

  std::map<Composition, ItemScore> pair_scores;
  std::map<ActionId, ItemScore> action_scores;
  std::map<AdverbId, ItemScore> adverb_scores;
  auto tally = [](ItemScore& score, bool correct) {
    ++score.total;
    if (correct) ++score.correct;
  };
  for (const auto& rec : records) {
    tally(pair_scores[{rec.action, rec.adverb}], rec.correct);
    tally(action_scores[rec.action], rec.correct);
    tally(adverb_scores[rec.adverb], rec.correct);
  }

  LongTailReport report;
  report.adverbs = bucketize(adverb_scores, adverb_counts,
                             thresholds.adverb_head, thresholds.adverb_tail);
  report.actions = bucketize(action_scores, action_counts,
                             thresholds.action_head, thresholds.action_tail);
  report.pairs = bucketize(pair_scores, pair_counts, thresholds.pair_head,
                           thresholds.pair_tail);
  return report;
}

PseudoDistribution pseudo_distribution(
    const std::vector<PseudoLabelAssignment>& assignments, int n_adverbs) {
  if (n_adverbs <= 0) {
    throw ConfigError("pseudo_distribution: adverb count must be positive");
  }
  PseudoDistribution dist;
  dist.counts.assign(n_adverbs, 0);
  for (const auto& assignment : assignments) {
    for (const auto& cand : assignment.selected) {
      if (cand.adverb < 0 || cand.adverb >= n_adverbs) {
        throw DataError("pseudo_distribution: adverb id " +
                        std::to_string(cand.adverb) + " out of range");
      }
      ++dist.counts[cand.adverb];
      ++dist.total;
    }
  }
  for (AdverbId m = 0; m < n_adverbs; ++m) {
    if (dist.counts[m] == 0) dist.zero_adverbs.push_back(m);
  }
  if (dist.total > 0) {
    for (long c : dist.counts) {
      if (c == 0) continue;
      double p = static_cast<double>(c) / dist.total;
      dist.entropy -= p * std::log(p);
    }
  }
  return dist;
}

void write_eval_csv(const EvalResult& result, const Vocabularies& vocab,
                    std::ostream& out) {
  out << "kind,name,count,accuracy\n";
  for (AdverbId m = 0; m < static_cast<int>(result.adverb_total.size()); ++m) {
    if (result.adverb_total[m] == 0) continue;
    double acc =
        static_cast<double>(result.adverb_correct[m]) / result.adverb_total[m];
    out << "adverb," << vocab.adverbs.name(m) << ',' << result.adverb_total[m]
        << ',' << g17(acc) << '\n';
  }
  for (const auto& pair : result.pairs) {
    double acc = static_cast<double>(pair.correct) / pair.total;
    out << "pair," << vocab.actions.name(pair.composition.first) << '|'
        << vocab.adverbs.name(pair.composition.second) << ',' << pair.total
        << ',' << g17(acc) << '\n';
  }
  int scored = static_cast<int>(result.adverb_total.size()) -
               static_cast<int>(result.absent_adverbs.size());
  out << "summary,macro_average," << scored << ',' << g17(result.macro_average)
      << '\n';
  out << "summary,video_average," << result.clips_total << ','
      << g17(result.video_average) << '\n';
}

void write_longtail_csv(const LongTailReport& report, std::ostream& out) {
  out << "axis,bucket,items,accuracy\n";
  auto row = [&](const char* axis, const char* bucket, const Bucket& b) {
    out << axis << ',' << bucket << ',' << b.items << ',';
    if (b.accuracy) out << g17(*b.accuracy);
    out << '\n';
  };
  auto axis = [&](const char* name, const AxisBreakdown& a) {
    row(name, "head", a.head);
    row(name, "mid", a.mid);
    row(name, "tail", a.tail);
  };
  axis("adverbs", report.adverbs);
  axis("actions", report.actions);
  axis("pairs", report.pairs);
}

void write_pseudo_csv(const PseudoDistribution& dist,
                      const AdverbVocabulary& adverbs, std::ostream& out) {
  out << "adverb,selected\n";
  for (AdverbId m = 0; m < static_cast<int>(dist.counts.size()); ++m) {
    out << adverbs.name(m) << ',' << dist.counts[m] << '\n';
  }
}

std::string format_summary(const EvalResult& result, const Vocabularies& vocab) {
  std::ostringstream out;
  out << "clips scored:       " << result.clips_total << '\n';
  out << "clips correct:      " << result.clips_correct << '\n';
  out << "macro accuracy:     " << g17(result.macro_average) << '\n';
  out << "per-video accuracy: " << g17(result.video_average) << '\n';
  if (!result.absent_adverbs.empty()) {
    out << "adverbs without test instances:";
    for (AdverbId m : result.absent_adverbs) out << ' ' << vocab.adverbs.name(m);
    out << '\n';
  }
  return out.str();
}

}  // namespace advkit
