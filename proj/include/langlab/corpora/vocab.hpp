#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "langlab/core/types.hpp"

namespace langlab::corpora {

/// Shared symbol inventory with four reserved entries at fixed ids. Symbols
/// absent from the inventory map to UNK on lookup.
class Vocabulary {
 public:
  static constexpr Index kPad = 0;
  static constexpr Index kBos = 1;
  static constexpr Index kEos = 2;
  static constexpr Index kUnk = 3;

  Vocabulary() = default;
  static Vocabulary from_symbols(const std::set<std::string>& symbols);

  Index size() const { return static_cast<Index>(symbols_.size()); }
  /// UNK for unknown symbols.
  Index id_of(const std::string& symbol) const;
  const std::string& symbol_of(Index id) const;
  bool contains(const std::string& symbol) const { return ids_.contains(symbol); }

  std::vector<Index> encode(const std::vector<std::string>& symbols) const;

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, Index> ids_;
};

/// Dense label inventory (tag sets); no reserved entries, lookups are strict.
class LabelSet {
 public:
  LabelSet() = default;
  static LabelSet from_labels(const std::set<std::string>& labels);

  Index size() const { return static_cast<Index>(labels_.size()); }
  Index id_of(const std::string& label) const;
  const std::string& label_of(Index id) const;
  bool contains(const std::string& label) const { return ids_.contains(label); }

  bool operator==(const LabelSet& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, Index> ids_;
};

}  // namespace langlab::corpora
