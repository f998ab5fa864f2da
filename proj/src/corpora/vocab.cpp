#include "langlab/corpora/vocab.hpp"

#include <stdexcept>

namespace langlab::corpora {

namespace {
const std::vector<std::string> kReserved{"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocabulary Vocabulary::from_symbols(const std::set<std::string>& symbols) {
  Vocabulary v;
  v.symbols_ = kReserved;
  for (const std::string& s : symbols) {
    // a corpus symbol spelled like a reserved marker simply maps to it
    if (s == kReserved[0] || s == kReserved[1] || s == kReserved[2] || s == kReserved[3]) continue;
    v.symbols_.push_back(s);
  }
  for (Index i = 0; i < static_cast<Index>(v.symbols_.size()); ++i) v.ids_[v.symbols_[i]] = i;
  return v;
}

Index Vocabulary::id_of(const std::string& symbol) const {
  auto it = ids_.find(symbol);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::symbol_of(Index id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("vocabulary id out of range");
  return symbols_[static_cast<std::size_t>(id)];
}

std::vector<Index> Vocabulary::encode(const std::vector<std::string>& symbols) const {
  std::vector<Index> out;
  out.reserve(symbols.size());
  for (const std::string& s : symbols) out.push_back(id_of(s));
  return out;
}

LabelSet LabelSet::from_labels(const std::set<std::string>& labels) {
  LabelSet l;
  l.labels_.assign(labels.begin(), labels.end());
  for (Index i = 0; i < static_cast<Index>(l.labels_.size()); ++i) l.ids_[l.labels_[i]] = i;
  return l;
}

Index LabelSet::id_of(const std::string& label) const {
  auto it = ids_.find(label);
  if (it == ids_.end()) throw std::out_of_range("unknown label: '" + label + "'");
  return it->second;
}

const std::string& LabelSet::label_of(Index id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("label id out of range");
  return labels_[static_cast<std::size_t>(id)];
}

}  // namespace langlab::corpora
