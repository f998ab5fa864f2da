#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "langlab/corpora/corpus.hpp"
#include "langlab/corpora/vocab.hpp"
#include "langlab/langspace/store.hpp"
#include "langlab/nn/lstm.hpp"
#include "langlab/nn/parameters.hpp"

namespace langlab::tagger {

struct TaggerConfig {
  Index char_embedding_dim = 100;
  Index char_lstm_hidden = 100;  // per direction
  Index word_lstm_layers = 2;
  Index word_lstm_hidden = 100;  // per direction, per layer
  Index language_dim = 64;       // must match the embedding store
  Index max_epochs = 10;
  Index patience = 2;  // consecutive non-improving epochs before stopping
  Index batch_size = 8;
  std::uint64_t seed = 1;
  nn::AdamOptions optimizer{};
};

/// Character-based part-of-speech tagger. Each word is represented by the
/// final states of a character bi-LSTM concatenated with the language
/// embedding — no parameter is ever indexed by whole-word identity — and a
/// stacked word-level bi-LSTM plus a per-position projection assigns tags.
class TaggerModel {
 public:
  TaggerModel(TaggerConfig config, corpora::Vocabulary char_vocab, corpora::LabelSet tags,
              langspace::EmbeddingStore store);

  TaggerModel(const TaggerModel&) = delete;
  TaggerModel& operator=(const TaggerModel&) = delete;
  TaggerModel(TaggerModel&&) = default;
  TaggerModel& operator=(TaggerModel&&) = default;

  const TaggerConfig& config() const { return config_; }
  const corpora::Vocabulary& vocab() const { return vocab_; }
  const corpora::LabelSet& tags() const { return tags_; }
  const langspace::EmbeddingStore& store() const { return store_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  /// [char bi-LSTM final forward state, final backward state, language
  /// embedding]; width 2 * char_lstm_hidden + language_dim.
  nn::Tensor represent_word(const std::string& word, const std::string& language) const;

  /// One tag per token (argmax over the projection of the word bi-LSTM stack).
  std::vector<std::string> tag_sentence(const std::vector<std::string>& tokens,
                                        const std::string& language) const;

  /// Summed per-token cross-entropy against the gold tags. Differentiable.
  nn::Tensor sentence_loss(const corpora::TaggedSentence& sentence) const;

 private:
  nn::Tensor language_vector(const std::string& language) const;
  /// Per-token tag logits for one sentence.
  std::vector<nn::Tensor> sentence_logits(const std::vector<std::string>& tokens,
                                          const std::string& language) const;

  TaggerConfig config_;
  corpora::Vocabulary vocab_;
  corpora::LabelSet tags_;
  langspace::EmbeddingStore store_;
  nn::ParameterSet params_;
  nn::Tensor chars_;  // [vocab x char_embedding_dim]
  nn::LstmParams char_fwd_;
  nn::LstmParams char_bwd_;
  std::vector<nn::LstmParams> word_fwd_;  // one per stacked layer
  std::vector<nn::LstmParams> word_bwd_;
  nn::Tensor out_w_;  // [tags x 2 * word_lstm_hidden]
  nn::Tensor out_b_;  // [tags]
};

/// Stop-after-no-improvement counter: observe one score per epoch; stopping
/// triggers after `patience` consecutive scores at or below the best so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(Index patience);

  /// Feeds the next epoch's score; returns true when training should stop.
  bool observe(Scalar score);

  Index epochs_seen() const { return epoch_; }
  Index best_epoch() const { return best_epoch_; }  // 0 until the first observe
  Scalar best_score() const { return best_; }
  bool improved_last() const { return improved_last_; }

 private:
  Index patience_;
  Index epoch_ = 0;
  Index best_epoch_ = 0;
  Index bad_ = 0;
  bool improved_last_ = false;
  Scalar best_ = -std::numeric_limits<Scalar>::infinity();
};

struct TaggerTrainingRun {
  Index epochs = 0;      // epochs actually run
  Index best_epoch = 0;  // the epoch whose parameters the model ends with
  /// (epoch, mean per-sentence loss over the epoch's batches).
  std::vector<std::pair<Index, Scalar>> loss_history;
  std::vector<Scalar> dev_accuracy;  // one entry per epoch run
  langspace::SnapshotSeries snapshots;
};

/// Minibatch Adam training with per-epoch dev evaluation and early stopping;
/// the model is left holding the best dev epoch's parameters, not the last.
/// Embeddings are snapshotted before training (epoch 0) and after every epoch.
TaggerTrainingRun train_tagger(TaggerModel& model,
                               const std::vector<corpora::TaggedSentence>& train_corpus,
                               const std::vector<corpora::TaggedSentence>& dev_corpus);

/// Fraction of tokens whose predicted tag equals gold.
Scalar token_accuracy(const TaggerModel& model,
                      const std::vector<corpora::TaggedSentence>& corpus);

/// Seeded per-language split: roughly `dev_fraction` of each language's
/// sentences (at least one when it has two or more) become the dev set;
/// original corpus order is preserved within both halves.
std::pair<std::vector<corpora::TaggedSentence>, std::vector<corpora::TaggedSentence>>
make_dev_split(const std::vector<corpora::TaggedSentence>& corpus, Scalar dev_fraction,
               std::uint64_t seed);

/// Two-column TSV (token, predicted tag), blank line between sentences.
std::string format_predictions(const TaggerModel& model,
                               const std::vector<corpora::TaggedSentence>& corpus);

}  // namespace langlab::tagger
