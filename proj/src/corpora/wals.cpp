#include "langlab/corpora/wals.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"

namespace langlab::corpora {

FeatureCategory categorize_chapter(const std::string& chapter) {
  if (chapter == "Phonology") return FeatureCategory::Phonology;
  if (chapter == "Morphology" || chapter == "Nominal Categories") return FeatureCategory::Morphology;
  if (chapter == "Word Order") return FeatureCategory::WordOrder;
  return FeatureCategory::Other;
}

std::string category_name(FeatureCategory category) {
  switch (category) {
    case FeatureCategory::Phonology: return "phonology";
    case FeatureCategory::Morphology: return "morphology";
    case FeatureCategory::WordOrder: return "word_order";
    case FeatureCategory::Other: return "other";
  }
  throw std::logic_error("unreachable feature category");
}

FeatureCategory parse_category(const std::string& name) {
  if (name == "phonology") return FeatureCategory::Phonology;
  if (name == "morphology") return FeatureCategory::Morphology;
  if (name == "word_order") return FeatureCategory::WordOrder;
  if (name == "other") return FeatureCategory::Other;
  throw ConfigError("unknown feature category '" + name +
                    "' (expected phonology, morphology, word_order, or other)");
}

WalsTable::WalsTable(std::vector<LanguageInfo> languages, std::vector<WalsFeature> features,
                     std::map<std::pair<std::string, std::string>, std::string> values)
    : languages_(std::move(languages)), features_(std::move(features)), values_(std::move(values)) {
  std::sort(languages_.begin(), languages_.end(),
            [](const LanguageInfo& a, const LanguageInfo& b) { return a.code < b.code; });
  std::sort(features_.begin(), features_.end(),
            [](const WalsFeature& a, const WalsFeature& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < languages_.size(); ++i)
    if (languages_[i].code == languages_[i - 1].code)
      throw DataError("duplicate language code '" + languages_[i].code + "'");
  for (std::size_t i = 1; i < features_.size(); ++i)
    if (features_[i].id == features_[i - 1].id)
      throw DataError("duplicate feature id '" + features_[i].id + "'");
  for (const auto& [key, value] : values_) {
    if (!find_language(key.first))
      throw DataError("value references unknown language '" + key.first + "'");
    if (!find_feature(key.second))
      throw DataError("value references unknown feature '" + key.second + "'");
    if (value.empty())
      throw DataError("empty value for (" + key.first + ", " + key.second + ")");
  }
}

const LanguageInfo* WalsTable::find_language(const std::string& code) const {
  auto it = std::lower_bound(
      languages_.begin(), languages_.end(), code,
      [](const LanguageInfo& info, const std::string& c) { return info.code < c; });
  return it != languages_.end() && it->code == code ? &*it : nullptr;
}

const WalsFeature* WalsTable::find_feature(const std::string& id) const {
  auto it = std::lower_bound(features_.begin(), features_.end(), id,
                             [](const WalsFeature& f, const std::string& i) { return f.id < i; });
  return it != features_.end() && it->id == id ? &*it : nullptr;
}

std::optional<std::string> WalsTable::value(const std::string& code,
                                            const std::string& feature_id) const {
  auto it = values_.find({code, feature_id});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> WalsTable::language_codes() const {
  std::vector<std::string> out;
  out.reserve(languages_.size());
  for (const LanguageInfo& l : languages_) out.push_back(l.code);
  return out;
}

std::vector<std::string> WalsTable::feature_ids(FeatureCategory category) const {
  std::vector<std::string> out;
  for (const WalsFeature& f : features_)
    if (categorize_chapter(f.chapter) == category) out.push_back(f.id);
  return out;
}

std::vector<std::pair<std::string, std::string>> WalsTable::feature_values(
    const std::string& feature_id) const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, value] : values_)
    if (key.second == feature_id) out.emplace_back(key.first, value);
  return out;  // map order is already sorted by (code, feature)
}

namespace {

std::vector<std::vector<std::string>> read_tsv_body(const std::string& path,
                                                    const std::string& expected_header,
                                                    std::size_t columns) {
  const auto lines = read_lines(path);
  std::vector<std::vector<std::string>> rows;
  bool saw_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_comment_or_blank(lines[i])) continue;
    if (!saw_header) {
      if (lines[i] != expected_header)
        throw DataError(path + ":" + std::to_string(i + 1) + ": expected header '" +
                        expected_header + "'");
      saw_header = true;
      continue;
    }
    auto fields = split(lines[i], '\t');
    if (fields.size() != columns)
      throw DataError(path + ":" + std::to_string(i + 1) + ": expected " +
                      std::to_string(columns) + " fields");
    rows.push_back(std::move(fields));
  }
  if (!saw_header) throw DataError(path + ": missing header row");
  return rows;
}

}  // namespace

WalsTable parse_wals(const std::string& languages_path, const std::string& features_path,
                     const std::string& values_path) {
  std::vector<LanguageInfo> languages;
  for (auto& row : read_tsv_body(languages_path, "code\tname\tfamily\tgenus", 4)) {
    if (row[0].empty()) throw DataError(languages_path + ": empty language code");
    languages.push_back(LanguageInfo{row[0], row[1], row[2], row[3]});
  }

  std::vector<WalsFeature> features;
  for (auto& row : read_tsv_body(features_path, "feature_id\tfeature_name\tchapter", 3)) {
    if (row[0].empty()) throw DataError(features_path + ": empty feature id");
    features.push_back(WalsFeature{row[0], row[1], row[2]});
  }

  std::map<std::pair<std::string, std::string>, std::string> values;
  for (auto& row : read_tsv_body(values_path, "code\tfeature_id\tvalue", 3)) {
    auto key = std::make_pair(row[0], row[1]);
    if (values.contains(key))
      throw DataError(values_path + ": duplicate value for (" + row[0] + ", " + row[1] + ")");
    values[key] = row[2];
  }

  return WalsTable(std::move(languages), std::move(features), std::move(values));
}

}  // namespace langlab::corpora
