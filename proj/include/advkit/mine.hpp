#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "advkit/common.hpp"
#include "advkit/vocab.hpp"

namespace advkit {

// One token of a dependency-parsed caption. head is 1-based; 0 means the
// token is the sentence root.
struct Token {
  std::string surface;
  std::string lemma;
  std::string pos;
  int head = 0;
  std::string dep;
};

struct ParsedCaption {
  std::string clip_id;
  std::vector<Token> tokens;
};

// Tagged-caption format: captions are separated by blank lines, each caption
// opens with a "# clip = <id>" line, other #-lines are comments, and token
// rows are six tab-separated columns: index, surface, lemma, pos, head, dep.
// Indices count from 1 in order; exactly one token per caption has head 0.
std::vector<ParsedCaption> parse_captions(std::istream& in,
                                          const std::string& origin);
std::vector<ParsedCaption> load_captions(const std::string& path);

struct LemmaPair {
  std::string verb;
  std::string adverb;

  bool operator==(const LemmaPair& o) const {
    return verb == o.verb && adverb == o.adverb;
  }
};

// Adverb tokens (pos ADV, label advmod) hanging off verb tokens, as lemma
// pairs. A verb with any child carrying the neg label yields nothing.
std::vector<LemmaPair> extract_pairs(const ParsedCaption& caption);

// Lemma -> cluster-name maps for verbs and adverbs, loaded from two-column
// TSV files. Every cluster name must resolve in the vocabularies.
struct ClusterMaps {
  std::map<std::string, std::string> verbs;
  std::map<std::string, std::string> adverbs;
};

ClusterMaps load_cluster_maps(const std::string& verb_path,
                              const std::string& adverb_path,
                              const Vocabularies& vocab);

// One lemma per line; # comments and blank lines skipped.
std::set<std::string> load_blocklist(const std::string& path);

struct MiningConfig {
  long min_count = 10;  // records per adverb cluster, counted after dedup
};

struct AnnotationRecord {
  std::string clip_id;
  ActionId action = -1;
  AdverbId adverb = -1;
  std::string source_verb;
  std::string source_adverb;
};

bool operator==(const AnnotationRecord& a, const AnnotationRecord& b);
bool operator<(const AnnotationRecord& a, const AnnotationRecord& b);

struct MiningReport {
  std::vector<AnnotationRecord> records;  // sorted, one per (clip, pair)
  std::vector<std::string> unmapped_verbs;
  std::vector<std::string> unmapped_adverbs;
  long captions = 0;
  long raw_pairs = 0;  // extracted before blocklist/mapping/filters
  // Corpus-table counts over the surviving records.
  int n_adverbs = 0;
  int n_actions = 0;
  int n_pairs = 0;
  long n_clips = 0;
};

// Cluster-level fixpoint filters on deduplicated records: drop an adverb
// when its antonym has no surviving records, its record count is below
// min_count, or it co-occurs with fewer than two distinct actions. Removals
// can re-trigger the antonym condition, so the passes repeat until stable.
std::vector<AnnotationRecord> filter_records(std::vector<AnnotationRecord> records,
                                             const Vocabularies& vocab,
                                             const MiningConfig& cfg);

// Full pipeline: extract, blocklist, cluster-map (unmapped lemmas reported
// and dropped), dedup per (clip, action, adverb), filter to fixpoint.
MiningReport mine_corpus(const std::vector<ParsedCaption>& captions,
                         const Vocabularies& vocab, const ClusterMaps& maps,
                         const std::set<std::string>& blocklist,
                         const MiningConfig& cfg = {});

// TSV rows: clip_id, action, adverb, source_verb, source_adverb.
void write_annotations(const MiningReport& report, const Vocabularies& vocab,
                       std::ostream& out);
// Two TSV lines mirroring the corpus-survey table: a header of Adverbs,
// Actions, Pairs, Clips and their values.
std::string format_mining_stats(const MiningReport& report);
// One line per unmapped lemma: "verb <lemma>" / "adverb <lemma>", sorted.
void write_unmapped_report(const MiningReport& report, std::ostream& out);

}  // namespace advkit
