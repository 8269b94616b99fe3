#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "advkit/mine.hpp"

namespace fs = std::filesystem;
using namespace advkit;

namespace {

std::vector<ParsedCaption> captions_from(const std::string& text) {
  std::istringstream in(text);
  return parse_captions(in, "inline");
}

std::string fixture(const std::string& name) {
  return std::string(ADVKIT_FIXTURE_DIR) + "/mining/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Vocabulary used by the synthetic cases: two antonym pairs, three actions.
Vocabularies tiny_vocab() {
  return parse_vocabularies(
      "[actions]\n"
      "open\nclose\nstir\n"
      "[adverbs]\n"
      "quickly\tslowly\n"
      "slowly\tquickly\n"
      "gently\tfirmly\n"
      "firmly\tgently\n",
      "tiny");
}

AnnotationRecord rec(const std::string& clip, ActionId a, AdverbId m,
                     const std::string& verb, const std::string& adverb) {
  AnnotationRecord r;
  r.clip_id = clip;
  r.action = a;
  r.adverb = m;
  r.source_verb = verb;
  r.source_adverb = adverb;
  return r;
}

const char* kTwoCaptions =
    "# corpus comment, ignored\n"
    "# clip = v1\n"
    "1\tman\tman\tNOUN\t2\tnsubj\n"
    "2\twalks\twalk\tVERB\t0\troot\n"
    "3\tslowly\tslowly\tADV\t2\tadvmod\n"
    "\n"
    "# clip = v2\n"
    "1\tshe\tshe\tPRON\t2\tnsubj\n"
    "2\tpours\tpour\tVERB\t0\troot\n"
    "3\twater\twater\tNOUN\t2\tobj\n"
    "\n";

}  // namespace

TEST_CASE("parser reads captions, comments, and CRLF endings") {
  std::string text = kTwoCaptions;
  // re-terminate the first caption's lines with \r\n
  std::string crlf;
  for (char c : text) {
    if (c == '\n') crlf += "\r\n"; else crlf += c;
  }
  for (const std::string& variant : {text, crlf}) {
    auto caps = captions_from(variant);
    REQUIRE(caps.size() == 2);
    CHECK(caps[0].clip_id == "v1");
    CHECK(caps[1].clip_id == "v2");
    REQUIRE(caps[0].tokens.size() == 3);
    const Token& t = caps[0].tokens[2];
    CHECK(t.surface == "slowly");
    CHECK(t.lemma == "slowly");
    CHECK(t.pos == "ADV");
    CHECK(t.head == 2);
    CHECK(t.dep == "advmod");
    CHECK(caps[0].tokens[1].head == 0);
  }
}

TEST_CASE("parser accepts a final caption without a trailing blank line") {
  auto caps = captions_from(
      "# clip = v9\n"
      "1\topens\topen\tVERB\t0\troot\n");
  REQUIRE(caps.size() == 1);
  CHECK(caps[0].clip_id == "v9");
}

TEST_CASE("comment lines starting with clip words are not metadata") {
  auto caps = captions_from(
      "# clips in this corpus come from the kitchen set\n"
      "# clip = v1\n"
      "1\topens\topen\tVERB\t0\troot\n");
  REQUIRE(caps.size() == 1);
  CHECK(caps[0].clip_id == "v1");
}

TEST_CASE("parser rejects malformed captions") {
  auto bad = [](const std::string& text) {
    CHECK_THROWS_AS(captions_from(text), DataError);
  };
  SUBCASE("wrong column count") {
    bad("# clip = v1\n1\topens\topen\tVERB\t0\n");
  }
  SUBCASE("token index out of sequence") {
    bad("# clip = v1\n2\topens\topen\tVERB\t0\troot\n");
  }
  SUBCASE("non-numeric head") {
    bad("# clip = v1\n1\topens\topen\tVERB\tx\troot\n");
  }
  SUBCASE("head beyond the caption") {
    bad("# clip = v1\n1\topens\topen\tVERB\t3\troot\n");
  }
  SUBCASE("token that heads itself") {
    bad("# clip = v1\n"
        "1\topens\topen\tVERB\t1\troot\n"
        "2\tdoor\tdoor\tNOUN\t0\troot\n");
  }
  SUBCASE("no root") {
    bad("# clip = v1\n"
        "1\topens\topen\tVERB\t2\tconj\n"
        "2\tcloses\tclose\tVERB\t1\tconj\n");
  }
  SUBCASE("two roots") {
    bad("# clip = v1\n"
        "1\topens\topen\tVERB\t0\troot\n"
        "2\tcloses\tclose\tVERB\t0\troot\n");
  }
  SUBCASE("token before any clip line") {
    bad("1\topens\topen\tVERB\t0\troot\n");
  }
  SUBCASE("duplicate clip line") {
    bad("# clip = v1\n# clip = v2\n1\topens\topen\tVERB\t0\troot\n");
  }
  SUBCASE("clip line after tokens") {
    bad("# clip = v1\n1\topens\topen\tVERB\t0\troot\n# clip = v2\n");
  }
  SUBCASE("caption without tokens") {
    bad("# clip = v1\n\n");
  }
  SUBCASE("empty clip id") {
    bad("# clip =\n1\topens\topen\tVERB\t0\troot\n");
  }
  SUBCASE("empty column") {
    bad("# clip = v1\n1\topens\t\tVERB\t0\troot\n");
  }
}

TEST_CASE("load_captions reports missing files") {
  CHECK_THROWS_AS(load_captions("/nonexistent/captions.conll"), DataError);
}

TEST_CASE("extraction keeps verb-attached adverbs only") {
  auto caps = captions_from(kTwoCaptions);
  auto pairs = extract_pairs(caps[0]);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].verb == "walk");
  CHECK(pairs[0].adverb == "slowly");
  CHECK(extract_pairs(caps[1]).empty());
}

TEST_CASE("extraction skips adverbs of non-verbs and non-advmod deps") {
  auto caps = captions_from(
      "# clip = v1\n"
      "1\tthe\tthe\tDET\t2\tdet\n"
      "2\tdoor\tdoor\tNOUN\t5\tnsubj\n"
      "3\tis\tbe\tAUX\t5\tcop\n"
      "4\tremarkably\tremarkably\tADV\t5\tadvmod\n"
      "5\theavy\theavy\tADJ\t0\troot\n"
      "\n"
      "# clip = v2\n"
      "1\topens\topen\tVERB\t0\troot\n"
      "2\tfast\tfast\tADV\t1\tamod\n");
  CHECK(extract_pairs(caps[0]).empty());  // head is an adjective
  CHECK(extract_pairs(caps[1]).empty());  // wrong dependency label
}

TEST_CASE("a negated verb is excluded, other verbs are kept") {
  auto caps = captions_from(
      "# clip = v1\n"
      "1\the\the\tPRON\t3\tnsubj\n"
      "2\tnot\tnot\tPART\t3\tneg\n"
      "3\tstirs\tstir\tVERB\t0\troot\n"
      "4\tquickly\tquickly\tADV\t3\tadvmod\n"
      "5\tand\tand\tCCONJ\t6\tcc\n"
      "6\tpours\tpour\tVERB\t3\tconj\n"
      "7\tslowly\tslowly\tADV\t6\tadvmod\n");
  auto pairs = extract_pairs(caps[0]);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].verb == "pour");
  CHECK(pairs[0].adverb == "slowly");
}

TEST_CASE("extraction validates heads on hand-built captions") {
  ParsedCaption c;
  c.clip_id = "v1";
  c.tokens.push_back({"opens", "open", "VERB", 4, "root"});
  CHECK_THROWS_AS(extract_pairs(c), DataError);
}

TEST_CASE("cluster maps load and validate against the vocabulary") {
  Vocabularies vocab = tiny_vocab();
  CHECK_THROWS_AS(
      load_cluster_maps("/nonexistent/verbs.tsv", fixture("adverb_clusters.tsv"),
                        vocab),
      ConfigError);
  ClusterMaps maps = load_cluster_maps(fixture("verb_clusters.tsv"),
                                       fixture("adverb_clusters.tsv"),
                                       load_vocabularies(fixture("vocab.txt")));
  CHECK(maps.verbs.at("shut") == "close");
  CHECK(maps.adverbs.at("fast") == "quickly");
  // the fixture maps name clusters that tiny_vocab lacks
  CHECK_THROWS_AS(load_cluster_maps(fixture("verb_clusters.tsv"),
                                    fixture("adverb_clusters.tsv"), vocab),
                  ConfigError);
}

TEST_CASE("cluster map files reject duplicates and bad rows") {
  auto write_tmp = [](const std::string& name, const std::string& text) {
    std::string path = (fs::temp_directory_path() / ("mine_tmp_" + name)).string();
    std::ofstream out(path, std::ios::binary);
    out << text;
    return path;
  };
  Vocabularies vocab = tiny_vocab();
  std::string adverbs = write_tmp("adv.tsv", "quickly\tquickly\n");
  SUBCASE("duplicate lemma") {
    std::string verbs = write_tmp("dup.tsv", "open\topen\nopen\tclose\n");
    CHECK_THROWS_AS(load_cluster_maps(verbs, adverbs, vocab), ConfigError);
  }
  SUBCASE("missing column") {
    std::string verbs = write_tmp("cols.tsv", "open\n");
    CHECK_THROWS_AS(load_cluster_maps(verbs, adverbs, vocab), ConfigError);
  }
  SUBCASE("comments and blanks are fine") {
    std::string verbs = write_tmp("ok.tsv", "# verbs\n\nopen\topen\n");
    ClusterMaps maps = load_cluster_maps(verbs, adverbs, vocab);
    CHECK(maps.verbs.size() == 1);
    CHECK(maps.adverbs.size() == 1);
  }
}

TEST_CASE("blocklist loader skips comments and blanks") {
  std::string path = (fs::temp_directory_path() / "mine_tmp_block.txt").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "# intensifiers\nreally\n\nvery\n";
  }
  auto block = load_blocklist(path);
  CHECK(block == std::set<std::string>{"really", "very"});
  CHECK_THROWS_AS(load_blocklist("/nonexistent/block.txt"), ConfigError);
}

TEST_CASE("record filters enforce count, spread, and antonym presence") {
  Vocabularies vocab = tiny_vocab();
  MiningConfig cfg;
  cfg.min_count = 2;
  // quickly: two records over two actions; slowly likewise
  std::vector<AnnotationRecord> base = {
      rec("c1", 0, 0, "open", "quickly"),
      rec("c2", 1, 0, "close", "quickly"),
      rec("c3", 0, 1, "open", "slowly"),
      rec("c4", 2, 1, "stir", "slowly"),
  };
  SUBCASE("balanced corpus survives whole") {
    CHECK(filter_records(base, vocab, cfg) == base);
  }
  SUBCASE("below min_count dies") {
    auto records = base;
    records.pop_back();  // slowly down to one record
    auto kept = filter_records(records, vocab, cfg);
    // quickly follows its antonym out: fixpoint leaves nothing
    CHECK(kept.empty());
  }
  SUBCASE("single action dies even at volume") {
    std::vector<AnnotationRecord> records = {
        rec("c1", 0, 0, "open", "quickly"),
        rec("c2", 0, 0, "open", "quickly"),  // same action twice
        rec("c3", 0, 1, "open", "slowly"),
        rec("c4", 2, 1, "stir", "slowly"),
    };
    auto kept = filter_records(records, vocab, cfg);
    CHECK(kept.empty());
  }
  SUBCASE("absent antonym kills an otherwise healthy cluster") {
    std::vector<AnnotationRecord> records = {
        rec("c1", 0, 2, "open", "gently"),
        rec("c2", 1, 2, "close", "gently"),
    };
    CHECK(filter_records(records, vocab, cfg).empty());
  }
  SUBCASE("pair removal cascades through other pairs") {
    // gently/firmly healthy on their own; firmly's records all share one
    // action, so firmly dies first and gently follows by antonym absence.
    std::vector<AnnotationRecord> records = {
        rec("c1", 0, 2, "open", "gently"),
        rec("c2", 1, 2, "close", "gently"),
        rec("c3", 0, 3, "open", "firmly"),
        rec("c4", 0, 3, "open", "firmly"),
    };
    CHECK(filter_records(records, vocab, cfg).empty());
  }
  SUBCASE("independent pairs are untouched by a dying pair") {
    auto records = base;
    records.push_back(rec("c5", 0, 2, "open", "gently"));
    CHECK(filter_records(records, vocab, cfg) == base);
  }
  SUBCASE("min_count below one is rejected") {
    MiningConfig zero;
    zero.min_count = 0;
    CHECK_THROWS_AS(filter_records(base, vocab, zero), ConfigError);
  }
}

TEST_CASE("mining dedups per clip and pair, keeping smallest sources") {
  Vocabularies vocab = tiny_vocab();
  ClusterMaps maps;
  maps.verbs = {{"open", "open"}, {"close", "close"},
                {"stir", "stir"}, {"mix", "stir"}};
  maps.adverbs = {{"quickly", "quickly"}, {"slowly", "slowly"}};
  MiningConfig cfg;
  cfg.min_count = 1;
  auto caps = captions_from(
      "# clip = v1\n"
      "1\tstirs\tstir\tVERB\t0\troot\n"
      "2\tquickly\tquickly\tADV\t1\tadvmod\n"
      "3\tand\tand\tCCONJ\t4\tcc\n"
      "4\tmixes\tmix\tVERB\t1\tconj\n"
      "5\tquickly\tquickly\tADV\t4\tadvmod\n"
      "\n"
      "# clip = v1\n"
      "1\tstirs\tstir\tVERB\t0\troot\n"
      "2\tquickly\tquickly\tADV\t1\tadvmod\n"
      "\n"
      "# clip = v2\n"
      "1\topens\topen\tVERB\t0\troot\n"
      "2\tslowly\tslowly\tADV\t1\tadvmod\n"
      "\n"
      "# clip = v3\n"
      "1\tcloses\tclose\tVERB\t0\troot\n"
      "2\tquickly\tquickly\tADV\t1\tadvmod\n"
      "\n"
      "# clip = v4\n"
      "1\tstirs\tstir\tVERB\t0\troot\n"
      "2\tslowly\tslowly\tADV\t1\tadvmod\n");
  auto report = mine_corpus(caps, vocab, maps, {}, cfg);
  CHECK(report.captions == 5);
  CHECK(report.raw_pairs == 6);
  REQUIRE(report.records.size() == 4);
  // stir and mix map to one cluster; "mix" sorts first and is kept
  CHECK(report.records[0] == rec("v1", 2, 0, "mix", "quickly"));
  CHECK(report.records[1] == rec("v2", 0, 1, "open", "slowly"));
  CHECK(report.records[2] == rec("v3", 1, 0, "close", "quickly"));
  CHECK(report.records[3] == rec("v4", 2, 1, "stir", "slowly"));
}

TEST_CASE("mining reports unmapped lemmas and honors the blocklist") {
  Vocabularies vocab = tiny_vocab();
  ClusterMaps maps;
  maps.verbs = {{"open", "open"}, {"close", "close"}};
  maps.adverbs = {{"quickly", "quickly"}, {"slowly", "slowly"}};
  MiningConfig cfg;
  cfg.min_count = 1;
  auto caps = captions_from(
      "# clip = v1\n"
      "1\topens\topen\tVERB\t0\troot\n"
      "2\tquickly\tquickly\tADV\t1\tadvmod\n"
      "\n"
      "# clip = v2\n"
      "1\tcloses\tclose\tVERB\t0\troot\n"
      "2\tslowly\tslowly\tADV\t1\tadvmod\n"
      "\n"
      "# clip = v3\n"
      "1\twiggles\twiggle\tVERB\t0\troot\n"
      "2\toddly\toddly\tADV\t1\tadvmod\n"
      "\n"
      "# clip = v4\n"
      "1\topens\topen\tVERB\t0\troot\n"
      "2\treally\treally\tADV\t1\tadvmod\n"
      "\n"
      "# clip = v5\n"
      "1\tcloses\tclose\tVERB\t0\troot\n"
      "2\tquickly\tquickly\tADV\t1\tadvmod\n"
      "\n"
      "# clip = v6\n"
      "1\topens\topen\tVERB\t0\troot\n"
      "2\tslowly\tslowly\tADV\t1\tadvmod\n");
  auto report = mine_corpus(caps, vocab, maps, {"really"}, cfg);
  CHECK(report.raw_pairs == 6);
  CHECK(report.records.size() == 4);
  CHECK(report.unmapped_verbs == std::vector<std::string>{"wiggle"});
  CHECK(report.unmapped_adverbs == std::vector<std::string>{"oddly"});
  // "really" was blocked before the cluster maps saw it
  CHECK(std::find(report.unmapped_adverbs.begin(), report.unmapped_adverbs.end(),
                  "really") == report.unmapped_adverbs.end());
}

TEST_CASE("fixture corpus mines to the golden outputs") {
  Vocabularies vocab = load_vocabularies(fixture("vocab.txt"));
  ClusterMaps maps = load_cluster_maps(fixture("verb_clusters.tsv"),
                                       fixture("adverb_clusters.tsv"), vocab);
  auto block = load_blocklist(fixture("blocklist.txt"));
  auto caps = load_captions(fixture("corpus.conll"));
  REQUIRE(caps.size() == 78);
  auto report = mine_corpus(caps, vocab, maps, block, MiningConfig{});

  CHECK(report.captions == 78);
  CHECK(report.raw_pairs == 75);
  CHECK(report.records.size() == 43);
  CHECK(report.n_adverbs == 4);
  CHECK(report.n_actions == 4);
  CHECK(report.n_pairs == 10);
  CHECK(report.n_clips == 42);

  std::ostringstream annotations;
  write_annotations(report, vocab, annotations);
  CHECK(annotations.str() == slurp(fixture("expected_annotations.tsv")));
  CHECK(format_mining_stats(report) == slurp(fixture("expected_stats.txt")));
  std::ostringstream unmapped;
  write_unmapped_report(report, unmapped);
  CHECK(unmapped.str() == slurp(fixture("expected_unmapped.txt")));

  // survivors are exactly the two balanced pairs; the volume-only and
  // single-action clusters fell, as did "unevenly" via the fixpoint rerun
  std::set<std::string> survivors;
  for (const auto& r : report.records) survivors.insert(vocab.adverbs.name(r.adverb));
  CHECK(survivors ==
        std::set<std::string>{"quickly", "slowly", "gently", "firmly"});
}

TEST_CASE("mining is caption-order independent") {
  Vocabularies vocab = load_vocabularies(fixture("vocab.txt"));
  ClusterMaps maps = load_cluster_maps(fixture("verb_clusters.tsv"),
                                       fixture("adverb_clusters.tsv"), vocab);
  auto block = load_blocklist(fixture("blocklist.txt"));
  auto caps = load_captions(fixture("corpus.conll"));
  auto forward = mine_corpus(caps, vocab, maps, block, MiningConfig{});
  std::reverse(caps.begin(), caps.end());
  auto backward = mine_corpus(caps, vocab, maps, block, MiningConfig{});
  CHECK(forward.records == backward.records);
  CHECK(forward.unmapped_verbs == backward.unmapped_verbs);
  CHECK(forward.unmapped_adverbs == backward.unmapped_adverbs);
  CHECK(forward.raw_pairs == backward.raw_pairs);
}

TEST_CASE("filtering already-filtered records changes nothing") {
  Vocabularies vocab = load_vocabularies(fixture("vocab.txt"));
  ClusterMaps maps = load_cluster_maps(fixture("verb_clusters.tsv"),
                                       fixture("adverb_clusters.tsv"), vocab);
  auto block = load_blocklist(fixture("blocklist.txt"));
  auto caps = load_captions(fixture("corpus.conll"));
  auto report = mine_corpus(caps, vocab, maps, block, MiningConfig{});
  auto again = filter_records(report.records, vocab, MiningConfig{});
  CHECK(again == report.records);
}
