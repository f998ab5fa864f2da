#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "langlab/corpora/corpus.hpp"
#include "langlab/corpora/vocab.hpp"
#include "langlab/langspace/store.hpp"
#include "langlab/nn/attention.hpp"
#include "langlab/nn/lstm.hpp"
#include "langlab/nn/parameters.hpp"

namespace langlab::seq2seq {

struct Seq2SeqConfig {
  Index char_embedding_dim = 64;
  Index encoder_hidden = 128;  // per direction
  Index decoder_hidden = 256;
  Index attention_dim = 128;
  Index language_dim = 64;  // must match the embedding store
  Index max_decode_length = 64;
  bool use_tag_features = false;
  Index batch_size = 32;
  std::uint64_t seed = 1;
  nn::AdamOptions optimizer{};
};

/// Attention-based character transducer conditioned on a trainable language
/// vector. The encoder bi-LSTM reads [char embedding, language embedding] per
/// source position — the language vector enters here and nowhere else — and
/// the decoder LSTM attends over the encodings, consuming [previous symbol
/// embedding, attention context] (plus a multi-hot tag vector for inflection).
class Seq2SeqModel {
 public:
  Seq2SeqModel(Seq2SeqConfig config, corpora::Vocabulary vocab,
               corpora::LabelSet tag_set, langspace::EmbeddingStore store);

  Seq2SeqModel(const Seq2SeqModel&) = delete;
  Seq2SeqModel& operator=(const Seq2SeqModel&) = delete;
  Seq2SeqModel(Seq2SeqModel&&) = default;
  Seq2SeqModel& operator=(Seq2SeqModel&&) = default;

  const Seq2SeqConfig& config() const { return config_; }
  const corpora::Vocabulary& vocab() const { return vocab_; }
  const corpora::LabelSet& tag_set() const { return tag_set_; }
  const langspace::EmbeddingStore& store() const { return store_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  /// Per-position encodings of the source, width 2 * encoder_hidden; length
  /// equals source length. Rejects languages absent from the store.
  std::vector<nn::Tensor> encode(const corpora::SeqPair& pair) const;

  struct DecodeResult {
    std::vector<std::string> symbols;
    bool truncated = false;  // hit max_decode_length before emitting EOS
  };

  /// Greedy decode from BOS until EOS or max_decode_length. Inference only.
  DecodeResult decode(const std::vector<nn::Tensor>& encodings,
                      const std::vector<std::string>& tags) const;

  /// encode + decode of one pair without recording a graph.
  DecodeResult transduce(const corpora::SeqPair& pair) const;

  /// Summed per-symbol cross-entropy of the teacher-forced decode of the
  /// pair's target, closing EOS included. Scalar-shaped, differentiable.
  nn::Tensor pair_loss(const corpora::SeqPair& pair) const;

 private:
  nn::Tensor char_embedding(Index id) const;
  /// Multi-hot vector over the tag inventory; unknown tags are ignored.
  nn::Tensor tag_features(const std::vector<std::string>& tags) const;
  /// One decoder step: (new state, output logits).
  std::pair<nn::LstmState, nn::Tensor> decoder_step(Index prev_id, const nn::LstmState& state,
                                                    std::span<const nn::Tensor> encodings,
                                                    const nn::Tensor& tag_vec) const;

  Seq2SeqConfig config_;
  corpora::Vocabulary vocab_;
  corpora::LabelSet tag_set_;
  langspace::EmbeddingStore store_;
  nn::ParameterSet params_;
  nn::Tensor chars_;  // [vocab x char_embedding_dim]
  nn::LstmParams enc_fwd_;
  nn::LstmParams enc_bwd_;
  nn::LstmParams dec_;
  nn::AttentionParams att_;
  nn::Tensor out_w_;  // [vocab x decoder_hidden]
  nn::Tensor out_b_;  // [vocab]
};

struct TrainingRun {
  std::string task;  // label chosen by the caller; empty when unused
  Index iterations = 0;
  /// (iteration, mean per-pair loss) per update, 1-based.
  std::vector<std::pair<Index, Scalar>> loss_history;
  langspace::SnapshotSeries snapshots;
};

/// Minibatch Adam training with teacher forcing. One iteration is one
/// parameter update on batch_size pairs drawn from a seeded shuffle of the
/// corpus (reshuffled on exhaustion). Snapshots the embedding table before
/// the first update (iteration 0) and after every snapshot_cadence-th one.
/// Deterministic for a fixed model seed and corpus.
TrainingRun train(Seq2SeqModel& model, const std::vector<corpora::SeqPair>& corpus,
                  Index iterations, Index snapshot_cadence);

/// Fraction of pairs whose greedy transduction reproduces the target exactly.
Scalar exact_match_accuracy(const Seq2SeqModel& model,
                            const std::vector<corpora::SeqPair>& corpus);

}  // namespace langlab::seq2seq
