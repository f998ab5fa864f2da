#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace langlab::corpora {

struct LanguageInfo {
  std::string code;
  std::string name;
  std::string family;
  std::string genus;

  bool operator==(const LanguageInfo&) const = default;
};

struct WalsFeature {
  std::string id;       // e.g. "81A"
  std::string name;     // e.g. "Order of Subject, Object and Verb"
  std::string chapter;  // e.g. "Word Order"

  bool operator==(const WalsFeature&) const = default;
};

/// The three typological feature groups under study, carved out of the
/// chapter structure: phonology chapters; morphology = the Morphology plus
/// Nominal Categories chapters; word-order chapters. Everything else is Other.
enum class FeatureCategory { Phonology, Morphology, WordOrder, Other };

FeatureCategory categorize_chapter(const std::string& chapter);
std::string category_name(FeatureCategory category);
/// Inverse of category_name; rejects unknown names.
FeatureCategory parse_category(const std::string& name);

/// Typological database slice: languages with family metadata, a feature
/// catalog, and a partial (language, feature) -> categorical value map.
class WalsTable {
 public:
  WalsTable() = default;
  WalsTable(std::vector<LanguageInfo> languages, std::vector<WalsFeature> features,
            std::map<std::pair<std::string, std::string>, std::string> values);

  const std::vector<LanguageInfo>& languages() const { return languages_; }
  const std::vector<WalsFeature>& features() const { return features_; }

  const LanguageInfo* find_language(const std::string& code) const;
  const WalsFeature* find_feature(const std::string& id) const;

  /// Value of a feature for a language, when attested.
  std::optional<std::string> value(const std::string& code, const std::string& feature_id) const;
  std::size_t value_count() const { return values_.size(); }

  /// Sorted codes of every listed language.
  std::vector<std::string> language_codes() const;
  /// Sorted ids of the features whose chapter maps to the category.
  std::vector<std::string> feature_ids(FeatureCategory category) const;
  /// (language code, value) pairs attested for one feature, sorted by code.
  std::vector<std::pair<std::string, std::string>> feature_values(const std::string& feature_id) const;

 private:
  std::vector<LanguageInfo> languages_;  // sorted by code
  std::vector<WalsFeature> features_;    // sorted by id
  std::map<std::pair<std::string, std::string>, std::string> values_;
};

/// Reads the three canonical TSV files (languages: `code name family genus`,
/// features: `feature_id feature_name chapter`, values: `code feature_id value`),
/// each with a header row. Values must reference known languages and features;
/// duplicates and empty value strings are rejected.
WalsTable parse_wals(const std::string& languages_path, const std::string& features_path,
                     const std::string& values_path);

}  // namespace langlab::corpora
