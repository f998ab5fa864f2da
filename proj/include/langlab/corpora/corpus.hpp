#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "langlab/corpora/vocab.hpp"

namespace langlab::corpora {

/// One training example for the sequence tasks: transduce source symbols to
/// target symbols under a language code, optionally guided by morphological
/// tag symbols (inflection only).
struct SeqPair {
  std::string language;
  std::vector<std::string> source;
  std::vector<std::string> target;
  std::vector<std::string> tags;

  bool operator==(const SeqPair&) const = default;
};

struct TaggedSentence {
  std::string language;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // one per token

  bool operator==(const TaggedSentence&) const = default;
};

/// TSV rows `language<TAB>orthography<TAB>phonemes` (phonemes space-separated).
/// Source symbols are the orthography's code points, targets the phoneme tokens.
std::vector<SeqPair> parse_g2p(const std::string& path);
std::string format_g2p(const std::vector<SeqPair>& pairs);

/// TSV rows `language<TAB>word`; the word is both source and target
/// (auto-encoding), split into code points.
std::vector<SeqPair> parse_asjp(const std::string& path);
std::string format_asjp(const std::vector<SeqPair>& pairs);

/// TSV rows `language<TAB>lemma<TAB>form<TAB>tags` with a semicolon-separated
/// tag bundle.
std::vector<SeqPair> parse_sigmorphon(const std::string& path);
std::string format_sigmorphon(const std::vector<SeqPair>& pairs);

/// Standard CoNLL-U: sentences as blank-line-separated blocks, forms from
/// column 2 and UPOS from column 4; comment lines, multiword ranges ("1-2")
/// and empty nodes ("3.1") are skipped. The format carries no language code,
/// so the caller names the language of the whole file.
std::vector<TaggedSentence> parse_conllu(const std::string& path, const std::string& language);
std::string format_conllu(const std::vector<TaggedSentence>& sentences);

/// Uniform sample without replacement of exactly n items (everything when
/// |items| <= n), deterministic per seed, original order preserved.
template <typename T>
std::vector<T> downsample(const std::vector<T>& items, std::size_t n, std::uint64_t seed) {
  if (items.size() <= n) return items;
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(items[i]);
  return out;
}

/// Sorted unique language codes occurring in a corpus.
std::vector<std::string> language_codes(const std::vector<SeqPair>& pairs);
std::vector<std::string> language_codes(const std::vector<TaggedSentence>& sentences);

/// Every source and target symbol in the corpus plus the reserved four;
/// one alphabet shared across all languages and both sides of the task.
/// Morphological tags live in their own label set, not here.
Vocabulary build_vocab(const std::vector<SeqPair>& corpus);
/// Every code point of every token (the tagger reads words character by character).
Vocabulary build_vocab(const std::vector<TaggedSentence>& corpus);

/// Tag bundle components across the corpus (may be empty for untagged tasks).
LabelSet build_tag_set(const std::vector<SeqPair>& corpus);
/// Part-of-speech labels across the corpus.
LabelSet build_tag_set(const std::vector<TaggedSentence>& corpus);

}  // namespace langlab::corpora
