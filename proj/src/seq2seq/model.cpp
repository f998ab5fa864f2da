#include "langlab/seq2seq/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "langlab/core/errors.hpp"
#include "langlab/nn/ops.hpp"

namespace langlab::seq2seq {

namespace {

void require_positive(Index value, const char* what) {
  if (value < 1) throw ConfigError(std::string(what) + " must be at least 1");
}

}  // namespace

Seq2SeqModel::Seq2SeqModel(Seq2SeqConfig config, corpora::Vocabulary vocab,
                           corpora::LabelSet tag_set, langspace::EmbeddingStore store)
    : config_(config),
      vocab_(std::move(vocab)),
      tag_set_(std::move(tag_set)),
      store_(std::move(store)),
      params_(config.seed) {
  require_positive(config_.char_embedding_dim, "char_embedding_dim");
  require_positive(config_.encoder_hidden, "encoder_hidden");
  require_positive(config_.decoder_hidden, "decoder_hidden");
  require_positive(config_.attention_dim, "attention_dim");
  require_positive(config_.max_decode_length, "max_decode_length");
  require_positive(config_.batch_size, "batch_size");
  if (config_.language_dim != store_.dimension())
    throw ConfigError("language_dim " + std::to_string(config_.language_dim) +
                      " does not match the embedding store dimension " +
                      std::to_string(store_.dimension()));
  if (config_.use_tag_features && tag_set_.size() == 0)
    throw ConfigError("tag features requested but the tag inventory is empty");

  store_.attach(params_);
  chars_ = nn::ensure_uniform(params_, "char_embeddings",
                              {vocab_.size(), config_.char_embedding_dim});
  const Index enc_in = config_.char_embedding_dim + config_.language_dim;
  enc_fwd_ = nn::lstm_params(params_, "encoder_fwd", enc_in, config_.encoder_hidden);
  enc_bwd_ = nn::lstm_params(params_, "encoder_bwd", enc_in, config_.encoder_hidden);
  const Index context_dim = 2 * config_.encoder_hidden;
  const Index dec_in = config_.char_embedding_dim + context_dim +
                       (config_.use_tag_features ? tag_set_.size() : 0);
  dec_ = nn::lstm_params(params_, "decoder", dec_in, config_.decoder_hidden);
  att_ = nn::attention_params(params_, "attention", config_.decoder_hidden, context_dim,
                              config_.attention_dim);
  out_w_ = nn::ensure_uniform(params_, "output.W", {vocab_.size(), config_.decoder_hidden});
  out_b_ = nn::ensure_values(params_, "output.b", {vocab_.size()}, Vec::Zero(vocab_.size()));
}

nn::Tensor Seq2SeqModel::char_embedding(Index id) const {
  return nn::embed_lookup(chars_, id);
}

nn::Tensor Seq2SeqModel::tag_features(const std::vector<std::string>& tags) const {
  Vec v = Vec::Zero(tag_set_.size());
  for (const std::string& tag : tags)
    if (tag_set_.contains(tag)) v[tag_set_.id_of(tag)] = 1.0;
  return nn::Tensor::vector(std::move(v));
}

std::vector<nn::Tensor> Seq2SeqModel::encode(const corpora::SeqPair& pair) const {
  if (!store_.has(pair.language))
    throw DataError("unknown language '" + pair.language + "': not in the embedding store");
  if (pair.source.empty()) throw DataError("cannot encode an empty source sequence");
  nn::Tensor lang = nn::embed_lookup(store_.table(), store_.row_of(pair.language));
  std::vector<nn::Tensor> inputs;
  inputs.reserve(pair.source.size());
  for (const std::string& symbol : pair.source)
    inputs.push_back(nn::concat({char_embedding(vocab_.id_of(symbol)), lang}));
  return nn::bilstm_encode(enc_fwd_, enc_bwd_, inputs);
}

std::pair<nn::LstmState, nn::Tensor> Seq2SeqModel::decoder_step(
    Index prev_id, const nn::LstmState& state, std::span<const nn::Tensor> encodings,
    const nn::Tensor& tag_vec) const {
  nn::Tensor context = nn::attend(att_, state.hidden, encodings).context;
  std::vector<nn::Tensor> parts{char_embedding(prev_id), context};
  if (config_.use_tag_features) parts.push_back(tag_vec);
  nn::LstmState next = nn::lstm_step(dec_, nn::concat(parts), state);
  nn::Tensor logits = nn::add(nn::matvec(out_w_, next.hidden), out_b_);
  return {std::move(next), std::move(logits)};
}

Seq2SeqModel::DecodeResult Seq2SeqModel::decode(const std::vector<nn::Tensor>& encodings,
                                                const std::vector<std::string>& tags) const {
  if (encodings.empty()) throw std::invalid_argument("decode needs at least one encoding");
  nn::NoGradGuard guard;
  nn::Tensor tag_vec = config_.use_tag_features ? tag_features(tags) : nn::Tensor();
  DecodeResult out;
  nn::LstmState state = nn::lstm_initial_state(config_.decoder_hidden);
  Index prev = corpora::Vocabulary::kBos;
  for (Index t = 0; t < config_.max_decode_length; ++t) {
    auto [next, logits] = decoder_step(prev, state, encodings, tag_vec);
    state = std::move(next);
    Index best = 0;
    logits.values().maxCoeff(&best);
    if (best == corpora::Vocabulary::kEos) return out;
    out.symbols.push_back(vocab_.symbol_of(best));
    prev = best;
  }
  out.truncated = true;
  return out;
}

Seq2SeqModel::DecodeResult Seq2SeqModel::transduce(const corpora::SeqPair& pair) const {
  nn::NoGradGuard guard;
  return decode(encode(pair), pair.tags);
}

nn::Tensor Seq2SeqModel::pair_loss(const corpora::SeqPair& pair) const {
  std::vector<nn::Tensor> encodings = encode(pair);
  std::vector<Index> targets = vocab_.encode(pair.target);
  targets.push_back(corpora::Vocabulary::kEos);
  nn::Tensor tag_vec = config_.use_tag_features ? tag_features(pair.tags) : nn::Tensor();
  nn::LstmState state = nn::lstm_initial_state(config_.decoder_hidden);
  Index prev = corpora::Vocabulary::kBos;
  nn::Tensor loss;
  for (Index target : targets) {
    auto [next, logits] = decoder_step(prev, state, encodings, tag_vec);
    state = std::move(next);
    nn::Tensor step_loss = nn::softmax_xent(logits, target);
    loss = loss.defined() ? nn::add(loss, step_loss) : step_loss;
    prev = target;  // teacher forcing
  }
  return loss;
}

TrainingRun train(Seq2SeqModel& model, const std::vector<corpora::SeqPair>& corpus,
                  Index iterations, Index snapshot_cadence) {
  if (corpus.empty()) throw DataError("cannot train on an empty corpus");
  if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  if (snapshot_cadence < 1) throw std::invalid_argument("snapshot cadence must be at least 1");

  const Seq2SeqConfig& cfg = model.config();
  std::size_t longest_target = 0;
  for (const corpora::SeqPair& pair : corpus) {
    if (!model.store().has(pair.language))
      throw DataError("training pair uses language '" + pair.language +
                      "' absent from the embedding store");
    for (const std::string& s : pair.source)
      if (!model.vocab().contains(s))
        throw DataError("source symbol '" + s + "' is not in the vocabulary");
    for (const std::string& s : pair.target)
      if (!model.vocab().contains(s))
        throw DataError("target symbol '" + s + "' is not in the vocabulary");
    if (cfg.use_tag_features)
      for (const std::string& tag : pair.tags)
        if (!model.tag_set().contains(tag))
          throw DataError("tag '" + tag + "' is not in the tag inventory");
    longest_target = std::max(longest_target, pair.target.size());
  }
  if (static_cast<std::size_t>(cfg.max_decode_length) < longest_target + 2)
    throw ConfigError("max_decode_length " + std::to_string(cfg.max_decode_length) +
                      " is too small: the longest training target has " +
                      std::to_string(longest_target) + " symbols and decoding needs two to spare");

  TrainingRun run;
  run.snapshots.record(0, model.store());

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();  // forces a shuffle before the first draw
  const std::size_t batch_n = std::min<std::size_t>(cfg.batch_size, corpus.size());

  for (Index i = 1; i <= iterations; ++i) {
    model.params().zero_grad();
    Scalar total = 0.0;
    for (std::size_t k = 0; k < batch_n; ++k) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      nn::Tensor loss = model.pair_loss(corpus[order[cursor++]]);
      total += loss.value_at(0);
      nn::backward(loss);
    }
    const Scalar mean = total / static_cast<Scalar>(batch_n);
    if (!std::isfinite(mean))
      throw NumericError("non-finite training loss at iteration " + std::to_string(i));
    model.params().scale_gradients(1.0 / static_cast<Scalar>(batch_n));
    nn::adam_step(model.params(), cfg.optimizer);
    run.loss_history.emplace_back(i, mean);
    if (i % snapshot_cadence == 0) run.snapshots.record(i, model.store());
  }
  run.iterations = iterations;
  return run;
}

Scalar exact_match_accuracy(const Seq2SeqModel& model,
                            const std::vector<corpora::SeqPair>& corpus) {
  if (corpus.empty()) throw DataError("cannot score an empty corpus");
  std::size_t hits = 0;
  for (const corpora::SeqPair& pair : corpus)
    if (model.transduce(pair).symbols == pair.target) ++hits;
  return static_cast<Scalar>(hits) / static_cast<Scalar>(corpus.size());
}

}  // namespace langlab::seq2seq
