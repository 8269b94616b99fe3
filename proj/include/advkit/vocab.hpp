#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "advkit/common.hpp"

namespace advkit {

// Actions are dense ids 0..|A|-1 in file order.
class ActionVocabulary {
 public:
  ActionVocabulary() = default;

  ActionId add(const std::string& name);
  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(ActionId a) const;
  ActionId id(const std::string& name) const;  // throws VocabError if unknown
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  bool operator==(const ActionVocabulary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ActionId> index_;
};

// Adverbs partition into antonym pairs: the antonym map is a fixed-point-free
// involution. Ids follow file order; paired adverbs need not be adjacent.
class AdverbVocabulary {
 public:
  AdverbVocabulary() = default;

  // Builds and validates. pairs maps each adverb name to its antonym's name;
  // every name must appear as a key exactly once.
  static AdverbVocabulary from_pairs(
      const std::vector<std::pair<std::string, std::string>>& name_antonym);

  int size() const { return static_cast<int>(names_.size()); }
  int n_pairs() const { return size() / 2; }
  const std::string& name(AdverbId m) const;
  AdverbId id(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  AdverbId antonym(AdverbId m) const;

  // Pair index in [0, N/2); an adverb and its antonym share one.
  int pair_of(AdverbId m) const;

  bool operator==(const AdverbVocabulary& other) const {
    return names_ == other.names_ && antonym_ == other.antonym_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<AdverbId> antonym_;
  std::vector<int> pair_;
  std::unordered_map<std::string, AdverbId> index_;
};

struct Vocabularies {
  ActionVocabulary actions;
  AdverbVocabulary adverbs;

  bool operator==(const Vocabularies& other) const {
    return actions == other.actions && adverbs == other.adverbs;
  }
};

// Line-oriented vocabulary file with [actions] and [adverbs] sections.
// Adverb lines are "name<TAB>antonym_name"; '#' starts a comment.
Vocabularies load_vocabularies(const std::string& path);
Vocabularies parse_vocabularies(const std::string& text, const std::string& origin);
void save_vocabularies(const Vocabularies& v, const std::string& path);
std::string format_vocabularies(const Vocabularies& v);

}  // namespace advkit
