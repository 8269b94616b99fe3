#include "advkit/mine.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>

namespace advkit {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

int parse_int(const std::string& text, const std::string& origin, long line_no,
              const char* what) {
  int value = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError(origin + ":" + std::to_string(line_no) + ": bad " + what +
                    " '" + text + "'");
  }
  return value;
}

[[noreturn]] void caption_error(const std::string& origin, long line_no,
                                const std::string& message) {
  throw DataError(origin + ":" + std::to_string(line_no) + ": " + message);
}

void finish_caption(ParsedCaption& current, bool saw_clip_line,
                    const std::string& origin, long line_no,
                    std::vector<ParsedCaption>& out) {
  if (!saw_clip_line && current.tokens.empty()) return;  // stray blank line
  if (!saw_clip_line) caption_error(origin, line_no, "caption without a clip line");
  if (current.clip_id.empty()) caption_error(origin, line_no, "empty clip id");
  if (current.tokens.empty()) caption_error(origin, line_no, "caption without tokens");
  const int n = static_cast<int>(current.tokens.size());
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const Token& t = current.tokens[i];
    if (t.head < 0 || t.head > n) {
      caption_error(origin, line_no, "head " + std::to_string(t.head) +
                    " out of range for " + std::to_string(n) + " tokens");
    }
    if (t.head == i + 1) caption_error(origin, line_no, "token is its own head");
    if (t.head == 0) ++roots;
  }
  if (roots != 1) {
    caption_error(origin, line_no,
                  "expected exactly one root, found " + std::to_string(roots));
  }
  out.push_back(std::move(current));
  current = ParsedCaption{};
}

}  // namespace

std::vector<ParsedCaption> parse_captions(std::istream& in,
                                          const std::string& origin) {
  std::vector<ParsedCaption> captions;
  ParsedCaption current;
  bool saw_clip_line = false;
  long line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      finish_caption(current, saw_clip_line, origin, line_no, captions);
      saw_clip_line = false;
      continue;
    }
    if (line[0] == '#') {
      std::string body = trim(line.substr(1));
      if (body.rfind("clip", 0) != 0) continue;  // unrelated comment
      size_t eq = body.find_first_not_of(" \t", 4);
      if (eq == std::string::npos || body[eq] != '=') continue;  // "# clipper..."
      if (saw_clip_line) caption_error(origin, line_no, "duplicate clip line");
      if (!current.tokens.empty()) {
        caption_error(origin, line_no, "clip line after tokens");
      }
      current.clip_id = trim(body.substr(eq + 1));
      saw_clip_line = true;
      continue;
    }
    std::vector<std::string> cols = split_tabs(line);
    if (cols.size() != 6) {
      caption_error(origin, line_no, "expected 6 columns, got " +
                    std::to_string(cols.size()));
    }
    if (!saw_clip_line) caption_error(origin, line_no, "token before clip line");
    int index = parse_int(cols[0], origin, line_no, "token index");
    if (index != static_cast<int>(current.tokens.size()) + 1) {
      caption_error(origin, line_no, "token index " + std::to_string(index) +
                    " out of sequence");
    }
    Token tok;
    tok.surface = cols[1];
    tok.lemma = cols[2];
    tok.pos = cols[3];
    tok.head = parse_int(cols[4], origin, line_no, "head index");
    tok.dep = cols[5];
    if (tok.surface.empty() || tok.lemma.empty() || tok.pos.empty() ||
        tok.dep.empty()) {
      caption_error(origin, line_no, "empty column");
    }
    current.tokens.push_back(std::move(tok));
  }
  finish_caption(current, saw_clip_line, origin, line_no + 1, captions);
  return captions;
}

std::vector<ParsedCaption> load_captions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open caption file: " + path);
  return parse_captions(in, path);
}

std::vector<LemmaPair> extract_pairs(const ParsedCaption& caption) {
  const auto& toks = caption.tokens;
  const int n = static_cast<int>(toks.size());
  for (int i = 0; i < n; ++i) {
    if (toks[i].head < 0 || toks[i].head > n || toks[i].head == i + 1) {
      throw DataError("caption " + caption.clip_id + ": invalid head index " +
                      std::to_string(toks[i].head) + " at token " +
                      std::to_string(i + 1));
    }
  }
  std::vector<char> negated(n, 0);
  for (const Token& t : toks) {
    if (t.dep == "neg" && t.head > 0) negated[t.head - 1] = 1;
  }
  std::vector<LemmaPair> pairs;
  for (const Token& t : toks) {
    if (t.pos != "ADV" || t.dep != "advmod" || t.head == 0) continue;
    const Token& head = toks[t.head - 1];
    if (head.pos != "VERB" || negated[t.head - 1]) continue;
    pairs.push_back({head.lemma, t.lemma});
  }
  return pairs;
}

namespace {

std::map<std::string, std::string> load_lemma_map(const std::string& path,
                                                  const char* kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + kind +
                             " cluster map: " + path);
  std::map<std::string, std::string> map;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::vector<std::string> cols = split_tabs(line);
    if (cols.size() != 2 || trim(cols[0]).empty() || trim(cols[1]).empty()) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected lemma<TAB>cluster");
    }
    std::string lemma = trim(cols[0]);
    if (map.count(lemma)) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": duplicate lemma '" + lemma + "'");
    }
    map[lemma] = trim(cols[1]);
  }
  return map;
}

}  // namespace

ClusterMaps load_cluster_maps(const std::string& verb_path,
                              const std::string& adverb_path,
                              const Vocabularies& vocab) {
  ClusterMaps maps;
  maps.verbs = load_lemma_map(verb_path, "verb");
  maps.adverbs = load_lemma_map(adverb_path, "adverb");
  for (const auto& [lemma, cluster] : maps.verbs) {
    if (!vocab.actions.contains(cluster)) {
      throw ConfigError(verb_path + ": cluster '" + cluster + "' for lemma '" +
                        lemma + "' is not an action");
    }
  }
  for (const auto& [lemma, cluster] : maps.adverbs) {
    if (!vocab.adverbs.contains(cluster)) {
      throw ConfigError(adverb_path + ": cluster '" + cluster +
                        "' for lemma '" + lemma + "' is not an adverb");
    }
  }
  return maps;
}

std::set<std::string> load_blocklist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open blocklist: " + path);
  std::set<std::string> block;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string lemma = trim(line);
    if (lemma.empty() || lemma[0] == '#') continue;
    block.insert(lemma);
  }
  return block;
}

bool operator==(const AnnotationRecord& a, const AnnotationRecord& b) {
  return a.clip_id == b.clip_id && a.action == b.action && a.adverb == b.adverb &&
         a.source_verb == b.source_verb && a.source_adverb == b.source_adverb;
}

bool operator<(const AnnotationRecord& a, const AnnotationRecord& b) {
  return std::tie(a.clip_id, a.action, a.adverb, a.source_verb, a.source_adverb) <
         std::tie(b.clip_id, b.action, b.adverb, b.source_verb, b.source_adverb);
}

std::vector<AnnotationRecord> filter_records(std::vector<AnnotationRecord> records,
                                             const Vocabularies& vocab,
                                             const MiningConfig& cfg) {
  if (cfg.min_count < 1) throw ConfigError("min_count must be >= 1");
  const int n_adverbs = vocab.adverbs.size();
  std::vector<char> alive(n_adverbs, 1);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<long> count(n_adverbs, 0);
    std::vector<std::set<ActionId>> actions(n_adverbs);
    for (const AnnotationRecord& r : records) {
      if (!alive[r.adverb]) continue;
      ++count[r.adverb];
      actions[r.adverb].insert(r.action);
    }
    for (AdverbId m = 0; m < n_adverbs; ++m) {
      if (!alive[m]) continue;
      bool drop = count[vocab.adverbs.antonym(m)] == 0 ||
                  count[m] < cfg.min_count ||
                  actions[m].size() < 2;
      if (drop) {
        alive[m] = 0;
        changed = true;
      }
    }
  }
  std::vector<AnnotationRecord> kept;
  kept.reserve(records.size());
  for (AnnotationRecord& r : records) {
    if (alive[r.adverb]) kept.push_back(std::move(r));
  }
  return kept;
}

MiningReport mine_corpus(const std::vector<ParsedCaption>& captions,
                         const Vocabularies& vocab, const ClusterMaps& maps,
                         const std::set<std::string>& blocklist,
                         const MiningConfig& cfg) {
  MiningReport report;
  report.captions = static_cast<long>(captions.size());
  std::set<std::string> unmapped_verbs;
  std::set<std::string> unmapped_adverbs;
  std::set<AnnotationRecord> candidates;
  for (const ParsedCaption& caption : captions) {
    if (caption.clip_id.empty()) {
      throw DataError("caption without clip id");
    }
    for (const LemmaPair& pair : extract_pairs(caption)) {
      ++report.raw_pairs;
      if (blocklist.count(pair.adverb)) continue;
      auto verb_it = maps.verbs.find(pair.verb);
      auto adverb_it = maps.adverbs.find(pair.adverb);
      if (verb_it == maps.verbs.end()) unmapped_verbs.insert(pair.verb);
      if (adverb_it == maps.adverbs.end()) unmapped_adverbs.insert(pair.adverb);
      if (verb_it == maps.verbs.end() || adverb_it == maps.adverbs.end()) continue;
      AnnotationRecord r;
      r.clip_id = caption.clip_id;
      r.action = vocab.actions.id(verb_it->second);
      r.adverb = vocab.adverbs.id(adverb_it->second);
      r.source_verb = pair.verb;
      r.source_adverb = pair.adverb;
      candidates.insert(std::move(r));
    }
  }
  // One record per (clip, action, adverb): the set is sorted, so keeping the
  // first occurrence picks the lexicographically smallest source lemmas.
  std::vector<AnnotationRecord> deduped;
  for (const AnnotationRecord& r : candidates) {
    if (!deduped.empty() && deduped.back().clip_id == r.clip_id &&
        deduped.back().action == r.action && deduped.back().adverb == r.adverb) {
      continue;
    }
    deduped.push_back(r);
  }
  report.records = filter_records(std::move(deduped), vocab, cfg);
  report.unmapped_verbs.assign(unmapped_verbs.begin(), unmapped_verbs.end());
  report.unmapped_adverbs.assign(unmapped_adverbs.begin(), unmapped_adverbs.end());
  std::set<AdverbId> adverbs;
  std::set<ActionId> actions;
  std::set<std::pair<ActionId, AdverbId>> pairs;
  std::set<std::string> clips;
  for (const AnnotationRecord& r : report.records) {
    adverbs.insert(r.adverb);
    actions.insert(r.action);
    pairs.insert({r.action, r.adverb});
    clips.insert(r.clip_id);
  }
  report.n_adverbs = static_cast<int>(adverbs.size());
  report.n_actions = static_cast<int>(actions.size());
  report.n_pairs = static_cast<int>(pairs.size());
  report.n_clips = static_cast<long>(clips.size());
  return report;
}

void write_annotations(const MiningReport& report, const Vocabularies& vocab,
                       std::ostream& out) {
  for (const AnnotationRecord& r : report.records) {
    out << r.clip_id << '\t' << vocab.actions.name(r.action) << '\t'
        << vocab.adverbs.name(r.adverb) << '\t' << r.source_verb << '\t'
        << r.source_adverb << '\n';
  }
}

std::string format_mining_stats(const MiningReport& report) {
  std::ostringstream out;
  out << "Adverbs\tActions\tPairs\tClips\n";
  out << report.n_adverbs << '\t' << report.n_actions << '\t' << report.n_pairs
      << '\t' << report.n_clips << '\n';
  return out.str();
}

void write_unmapped_report(const MiningReport& report, std::ostream& out) {
  for (const std::string& lemma : report.unmapped_verbs) {
    out << "verb\t" << lemma << '\n';
  }
  for (const std::string& lemma : report.unmapped_adverbs) {
    out << "adverb\t" << lemma << '\n';
  }
}

}  // namespace advkit
