#include "advkit/vocab.hpp"

#include <fstream>
#include <sstream>

namespace advkit {

namespace {

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ActionId ActionVocabulary::add(const std::string& name) {
  if (index_.count(name)) {
    throw VocabError("duplicate action name: " + name);
  }
  ActionId id = static_cast<ActionId>(names_.size());
  names_.push_back(name);
  index_[name] = id;
  return id;
}

const std::string& ActionVocabulary::name(ActionId a) const {
  if (a < 0 || a >= size()) {
    throw VocabError("unknown action id: " + std::to_string(a));
  }
  return names_[a];
}

ActionId ActionVocabulary::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw VocabError("unknown action name: " + name);
  }
  return it->second;
}

AdverbVocabulary AdverbVocabulary::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& name_antonym) {
  AdverbVocabulary v;
  for (const auto& [name, ant] : name_antonym) {
    if (v.index_.count(name)) {
      throw VocabError("duplicate adverb name: " + name);
    }
    AdverbId id = static_cast<AdverbId>(v.names_.size());
    v.names_.push_back(name);
    v.index_[name] = id;
  }
  if (v.names_.size() % 2 != 0) {
    throw VocabError("adverb count must be even, got " +
                     std::to_string(v.names_.size()));
  }
  v.antonym_.assign(v.names_.size(), -1);
  for (const auto& [name, ant] : name_antonym) {
    auto it = v.index_.find(ant);
    if (it == v.index_.end()) {
      throw VocabError("adverb '" + name + "' names undeclared antonym '" + ant + "'");
    }
    v.antonym_[v.index_[name]] = it->second;
  }
  for (AdverbId m = 0; m < v.size(); ++m) {
    AdverbId a = v.antonym_[m];
    if (a == m) {
      throw VocabError("adverb '" + v.names_[m] + "' is its own antonym");
    }
    if (v.antonym_[a] != m) {
      throw VocabError("antonym map is not an involution: '" + v.names_[m] +
                       "' -> '" + v.names_[a] + "' -> '" + v.names_[v.antonym_[a]] + "'");
    }
  }
  // Involution without fixed points partitions ids into exactly N/2 pairs.
  v.pair_.assign(v.names_.size(), -1);
  int next_pair = 0;
  for (AdverbId m = 0; m < v.size(); ++m) {
    if (v.pair_[m] < 0) {
      v.pair_[m] = next_pair;
      v.pair_[v.antonym_[m]] = next_pair;
      ++next_pair;
    }
  }
  return v;
}

const std::string& AdverbVocabulary::name(AdverbId m) const {
  if (m < 0 || m >= size()) {
    throw VocabError("unknown adverb id: " + std::to_string(m));
  }
  return names_[m];
}

AdverbId AdverbVocabulary::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw VocabError("unknown adverb name: " + name);
  }
  return it->second;
}

AdverbId AdverbVocabulary::antonym(AdverbId m) const {
  if (m < 0 || m >= size()) {
    throw VocabError("unknown adverb id: " + std::to_string(m));
  }
  return antonym_[m];
}

int AdverbVocabulary::pair_of(AdverbId m) const {
  if (m < 0 || m >= size()) {
    throw VocabError("unknown adverb id: " + std::to_string(m));
  }
  return pair_[m];
}

Vocabularies parse_vocabularies(const std::string& text, const std::string& origin) {
  enum class Section { none, actions, adverbs };
  Section section = Section::none;
  ActionVocabulary actions;
  std::vector<std::pair<std::string, std::string>> adverb_pairs;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw VocabError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    if (line == "[actions]") {
      section = Section::actions;
      continue;
    }
    if (line == "[adverbs]") {
      section = Section::adverbs;
      continue;
    }
    if (line.front() == '[') fail("unknown section header '" + line + "'");
    switch (section) {
      case Section::none:
        fail("entry before any section header");
        break;
      case Section::actions: {
        if (line.find('\t') != std::string::npos) {
          fail("action line must be a single name: '" + line + "'");
        }
        try {
          actions.add(line);
        } catch (const VocabError& e) {
          fail(e.what());
        }
        break;
      }
      case Section::adverbs: {
        size_t tab = line.find('\t');
        if (tab == std::string::npos) {
          fail("adverb line must be 'name<TAB>antonym': '" + line + "'");
        }
        std::string name = strip(line.substr(0, tab));
        std::string ant = strip(line.substr(tab + 1));
        if (name.empty() || ant.empty()) {
          fail("adverb line must be 'name<TAB>antonym': '" + line + "'");
        }
        adverb_pairs.emplace_back(name, ant);
        break;
      }
    }
  }
  if (actions.size() == 0) {
    throw VocabError(origin + ": no actions declared");
  }
  Vocabularies v;
  v.actions = std::move(actions);
  try {
    v.adverbs = AdverbVocabulary::from_pairs(adverb_pairs);
  } catch (const VocabError& e) {
    throw VocabError(origin + ": " + e.what());
  }
  return v;
}

Vocabularies load_vocabularies(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw VocabError("cannot open vocabulary file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_vocabularies(buf.str(), path);
}

std::string format_vocabularies(const Vocabularies& v) {
  std::ostringstream out;
  out << "[actions]\n";
  for (ActionId a = 0; a < v.actions.size(); ++a) {
    out << v.actions.name(a) << "\n";
  }
  out << "[adverbs]\n";
  for (AdverbId m = 0; m < v.adverbs.size(); ++m) {
    out << v.adverbs.name(m) << "\t" << v.adverbs.name(v.adverbs.antonym(m)) << "\n";
  }
  return out.str();
}

void save_vocabularies(const Vocabularies& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write vocabulary file: " + path);
  }
  out << format_vocabularies(v);
}

}  // namespace advkit
