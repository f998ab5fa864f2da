#include "langlab/corpora/corpus.hpp"

#include <set>

#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"

namespace langlab::corpora {

namespace {

std::string at_line(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no);
}

std::vector<std::string> tsv_fields(const std::string& path, std::size_t line_no,
                                    const std::string& line, std::size_t want) {
  auto fields = split(line, '\t');
  if (fields.size() != want)
    throw DataError(at_line(path, line_no) + ": expected " + std::to_string(want) +
                    " tab-separated fields, got " + std::to_string(fields.size()));
  return fields;
}

}  // namespace

std::vector<SeqPair> parse_g2p(const std::string& path) {
  std::vector<SeqPair> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_comment_or_blank(lines[i])) continue;
    auto f = tsv_fields(path, i + 1, lines[i], 3);
    if (f[0].empty()) throw DataError(at_line(path, i + 1) + ": empty language code");
    if (f[1].empty()) throw DataError(at_line(path, i + 1) + ": empty orthographic form");
    auto phonemes = split_ws(f[2]);
    if (phonemes.empty()) throw DataError(at_line(path, i + 1) + ": empty phoneme sequence");
    out.push_back(SeqPair{f[0], utf8_chars(f[1]), std::move(phonemes), {}});
  }
  return out;
}

std::string format_g2p(const std::vector<SeqPair>& pairs) {
  std::string out;
  for (const SeqPair& p : pairs)
    out += p.language + "\t" + join(p.source, "") + "\t" + join(p.target, " ") + "\n";
  return out;
}

std::vector<SeqPair> parse_asjp(const std::string& path) {
  std::vector<SeqPair> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_comment_or_blank(lines[i])) continue;
    auto f = tsv_fields(path, i + 1, lines[i], 2);
    if (f[0].empty()) throw DataError(at_line(path, i + 1) + ": empty language code");
    if (f[1].empty()) throw DataError(at_line(path, i + 1) + ": empty word");
    auto symbols = utf8_chars(f[1]);
    out.push_back(SeqPair{f[0], symbols, symbols, {}});
  }
  return out;
}

std::string format_asjp(const std::vector<SeqPair>& pairs) {
  std::string out;
  for (const SeqPair& p : pairs) out += p.language + "\t" + join(p.source, "") + "\n";
  return out;
}

std::vector<SeqPair> parse_sigmorphon(const std::string& path) {
  std::vector<SeqPair> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_comment_or_blank(lines[i])) continue;
    auto f = tsv_fields(path, i + 1, lines[i], 4);
    if (f[0].empty()) throw DataError(at_line(path, i + 1) + ": empty language code");
    if (f[1].empty() || f[2].empty())
      throw DataError(at_line(path, i + 1) + ": empty lemma or inflected form");
    auto tags = split(f[3], ';');
    for (const std::string& t : tags)
      if (t.empty())
        throw DataError(at_line(path, i + 1) + ": malformed tag bundle '" + f[3] + "'");
    out.push_back(SeqPair{f[0], utf8_chars(f[1]), utf8_chars(f[2]), std::move(tags)});
  }
  return out;
}

std::string format_sigmorphon(const std::vector<SeqPair>& pairs) {
  std::string out;
  for (const SeqPair& p : pairs)
    out += p.language + "\t" + join(p.source, "") + "\t" + join(p.target, "") + "\t" +
           join(p.tags, ";") + "\n";
  return out;
}

std::vector<TaggedSentence> parse_conllu(const std::string& path, const std::string& language) {
  std::vector<TaggedSentence> out;
  const auto lines = read_lines(path);
  TaggedSentence current{language, {}, {}};
  auto flush = [&] {
    if (!current.tokens.empty()) {
      out.push_back(current);
      current.tokens.clear();
      current.tags.clear();
    }
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    auto f = split(line, '\t');
    if (f.size() < 4)
      throw DataError(at_line(path, i + 1) + ": token line needs at least 4 columns");
    const std::string& id = f[0];
    if (id.find('-') != std::string::npos || id.find('.') != std::string::npos)
      continue;  // multiword range / empty node
    if (f[1].empty()) throw DataError(at_line(path, i + 1) + ": empty token form");
    if (f[3].empty() || f[3] == "_")
      throw DataError(at_line(path, i + 1) + ": token has no UPOS tag");
    current.tokens.push_back(f[1]);
    current.tags.push_back(f[3]);
  }
  flush();
  return out;
}

std::string format_conllu(const std::vector<TaggedSentence>& sentences) {
  std::string out;
  for (const TaggedSentence& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
      out += std::to_string(i + 1) + "\t" + s.tokens[i] + "\t_\t" + s.tags[i] +
             "\t_\t_\t_\t_\t_\t_\n";
    out += "\n";
  }
  return out;
}

namespace {

template <typename T>
std::vector<std::string> sorted_codes(const std::vector<T>& items) {
  std::set<std::string> codes;
  for (const T& item : items) codes.insert(item.language);
  return {codes.begin(), codes.end()};
}

}  // namespace

std::vector<std::string> language_codes(const std::vector<SeqPair>& pairs) {
  return sorted_codes(pairs);
}

std::vector<std::string> language_codes(const std::vector<TaggedSentence>& sentences) {
  return sorted_codes(sentences);
}

Vocabulary build_vocab(const std::vector<SeqPair>& corpus) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::set<std::string> symbols;
  for (const SeqPair& p : corpus) {
    symbols.insert(p.source.begin(), p.source.end());
    symbols.insert(p.target.begin(), p.target.end());
  }
  return Vocabulary::from_symbols(symbols);
}

Vocabulary build_vocab(const std::vector<TaggedSentence>& corpus) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::set<std::string> symbols;
  for (const TaggedSentence& s : corpus)
    for (const std::string& token : s.tokens) {
      auto chars = utf8_chars(token);
      symbols.insert(chars.begin(), chars.end());
    }
  return Vocabulary::from_symbols(symbols);
}

LabelSet build_tag_set(const std::vector<SeqPair>& corpus) {
  if (corpus.empty()) throw DataError("cannot build a tag set from an empty corpus");
  std::set<std::string> tags;
  for (const SeqPair& p : corpus) tags.insert(p.tags.begin(), p.tags.end());
  return LabelSet::from_labels(tags);
}

LabelSet build_tag_set(const std::vector<TaggedSentence>& corpus) {
  if (corpus.empty()) throw DataError("cannot build a tag set from an empty corpus");
  std::set<std::string> tags;
  for (const TaggedSentence& s : corpus) tags.insert(s.tags.begin(), s.tags.end());
  return LabelSet::from_labels(tags);
}

}  // namespace langlab::corpora
