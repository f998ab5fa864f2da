#include "langlab/tagger/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "langlab/core/errors.hpp"
#include "langlab/core/text.hpp"
#include "langlab/nn/ops.hpp"

namespace langlab::tagger {

namespace {

void require_positive(Index value, const char* what) {
  if (value < 1) throw ConfigError(std::string(what) + " must be at least 1");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

TaggerModel::TaggerModel(TaggerConfig config, corpora::Vocabulary char_vocab,
                         corpora::LabelSet tags, langspace::EmbeddingStore store)
    : config_(config),
      vocab_(std::move(char_vocab)),
      tags_(std::move(tags)),
      store_(std::move(store)),
      params_(config.seed) {
  require_positive(config_.char_embedding_dim, "char_embedding_dim");
  require_positive(config_.char_lstm_hidden, "char_lstm_hidden");
  require_positive(config_.word_lstm_layers, "word_lstm_layers");
  require_positive(config_.word_lstm_hidden, "word_lstm_hidden");
  require_positive(config_.max_epochs, "max_epochs");
  require_positive(config_.patience, "patience");
  require_positive(config_.batch_size, "batch_size");
  if (config_.language_dim != store_.dimension())
    throw ConfigError("language_dim " + std::to_string(config_.language_dim) +
                      " does not match the embedding store dimension " +
                      std::to_string(store_.dimension()));
  if (tags_.size() == 0) throw ConfigError("the tag inventory is empty");

  store_.attach(params_);
  chars_ = nn::ensure_uniform(params_, "char_embeddings",
                              {vocab_.size(), config_.char_embedding_dim});
  char_fwd_ = nn::lstm_params(params_, "char_fwd", config_.char_embedding_dim,
                              config_.char_lstm_hidden);
  char_bwd_ = nn::lstm_params(params_, "char_bwd", config_.char_embedding_dim,
                              config_.char_lstm_hidden);

  Index layer_in = 2 * config_.char_lstm_hidden + config_.language_dim;
  for (Index k = 0; k < config_.word_lstm_layers; ++k) {
    const std::string layer = "word" + std::to_string(k);
    word_fwd_.push_back(
        nn::lstm_params(params_, layer + "_fwd", layer_in, config_.word_lstm_hidden));
    word_bwd_.push_back(
        nn::lstm_params(params_, layer + "_bwd", layer_in, config_.word_lstm_hidden));
    layer_in = 2 * config_.word_lstm_hidden;
  }
  out_w_ = nn::ensure_uniform(params_, "output.W", {tags_.size(), 2 * config_.word_lstm_hidden});
  out_b_ = nn::ensure_values(params_, "output.b", {tags_.size()}, Vec::Zero(tags_.size()));
}

nn::Tensor TaggerModel::language_vector(const std::string& language) const {
  if (!store_.has(language))
    throw DataError("unknown language '" + language + "': not in the embedding store");
  return nn::embed_lookup(store_.table(), store_.row_of(language));
}

nn::Tensor TaggerModel::represent_word(const std::string& word,
                                       const std::string& language) const {
  nn::Tensor lang = language_vector(language);
  auto symbols = utf8_chars(word);
  if (symbols.empty()) throw DataError("cannot represent an empty word");

  std::vector<nn::Tensor> embs;
  embs.reserve(symbols.size());
  for (const std::string& s : symbols) embs.push_back(nn::embed_lookup(chars_, vocab_.id_of(s)));

  auto fwd = nn::lstm_run(char_fwd_, embs, nn::lstm_initial_state(config_.char_lstm_hidden));
  std::reverse(embs.begin(), embs.end());
  auto bwd = nn::lstm_run(char_bwd_, embs, nn::lstm_initial_state(config_.char_lstm_hidden));
  return nn::concat({fwd.back().hidden, bwd.back().hidden, lang});
}

std::vector<nn::Tensor> TaggerModel::sentence_logits(const std::vector<std::string>& tokens,
                                                     const std::string& language) const {
  if (tokens.empty()) throw DataError("cannot tag an empty sentence");
  std::vector<nn::Tensor> seq;
  seq.reserve(tokens.size());
  for (const std::string& token : tokens) seq.push_back(represent_word(token, language));
  for (Index k = 0; k < config_.word_lstm_layers; ++k)
    seq = nn::bilstm_encode(word_fwd_[static_cast<std::size_t>(k)],
                            word_bwd_[static_cast<std::size_t>(k)], seq);
  std::vector<nn::Tensor> logits;
  logits.reserve(seq.size());
  for (const nn::Tensor& h : seq) logits.push_back(nn::add(nn::matvec(out_w_, h), out_b_));
  return logits;
}

std::vector<std::string> TaggerModel::tag_sentence(const std::vector<std::string>& tokens,
                                                   const std::string& language) const {
  nn::NoGradGuard guard;
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const nn::Tensor& logits : sentence_logits(tokens, language)) {
    Index best = 0;
    logits.values().maxCoeff(&best);
    out.push_back(tags_.label_of(best));
  }
  return out;
}

nn::Tensor TaggerModel::sentence_loss(const corpora::TaggedSentence& sentence) const {
  if (sentence.tokens.size() != sentence.tags.size())
    throw DataError("sentence has " + std::to_string(sentence.tokens.size()) + " tokens but " +
                    std::to_string(sentence.tags.size()) + " tags");
  auto logits = sentence_logits(sentence.tokens, sentence.language);
  nn::Tensor loss;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    nn::Tensor step = nn::softmax_xent(logits[t], tags_.id_of(sentence.tags[t]));
    loss = loss.defined() ? nn::add(loss, step) : step;
  }
  return loss;
}

EarlyStopping::EarlyStopping(Index patience) : patience_(patience) {
  if (patience < 1) throw std::invalid_argument("patience must be at least 1");
}

bool EarlyStopping::observe(Scalar score) {
  ++epoch_;
  if (score > best_) {
    best_ = score;
    best_epoch_ = epoch_;
    bad_ = 0;
    improved_last_ = true;
    return false;
  }
  ++bad_;
  improved_last_ = false;
  return bad_ >= patience_;
}

TaggerTrainingRun train_tagger(TaggerModel& model,
                               const std::vector<corpora::TaggedSentence>& train_corpus,
                               const std::vector<corpora::TaggedSentence>& dev_corpus) {
  if (train_corpus.empty()) throw DataError("cannot train on an empty corpus");
  if (dev_corpus.empty()) throw DataError("cannot early-stop without a dev set");
  for (const corpora::TaggedSentence& s : train_corpus) {
    if (s.tokens.empty()) throw DataError("training corpus contains an empty sentence");
    if (s.tokens.size() != s.tags.size())
      throw DataError("training sentence has mismatched token and tag counts");
    if (!model.store().has(s.language))
      throw DataError("training sentence uses language '" + s.language +
                      "' absent from the embedding store");
    for (const std::string& tag : s.tags)
      if (!model.tags().contains(tag))
        throw DataError("tag '" + tag + "' is not in the tag inventory");
  }
  for (const corpora::TaggedSentence& s : dev_corpus)
    if (!model.store().has(s.language))
      throw DataError("dev sentence uses language '" + s.language +
                      "' absent from the embedding store");

  const TaggerConfig& cfg = model.config();
  TaggerTrainingRun run;
  run.snapshots.record(0, model.store());

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  EarlyStopping stopper(cfg.patience);
  std::map<std::string, Vec> best_values = model.params().export_values();

  for (Index epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    Scalar epoch_total = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch_n =
          std::min<std::size_t>(cfg.batch_size, order.size() - cursor);
      model.params().zero_grad();
      Scalar batch_total = 0.0;
      for (std::size_t k = 0; k < batch_n; ++k) {
        nn::Tensor loss = model.sentence_loss(train_corpus[order[cursor++]]);
        batch_total += loss.value_at(0);
        nn::backward(loss);
      }
      if (!std::isfinite(batch_total))
        throw NumericError("non-finite training loss in epoch " + std::to_string(epoch));
      model.params().scale_gradients(1.0 / static_cast<Scalar>(batch_n));
      nn::adam_step(model.params(), cfg.optimizer);
      epoch_total += batch_total;
    }
    run.snapshots.record(epoch, model.store());
    run.loss_history.emplace_back(epoch,
                                  epoch_total / static_cast<Scalar>(train_corpus.size()));
    const Scalar acc = token_accuracy(model, dev_corpus);
    run.dev_accuracy.push_back(acc);
    run.epochs = epoch;

    const bool stop = stopper.observe(acc);
    if (stopper.improved_last()) best_values = model.params().export_values();
    if (stop) break;
  }

  model.params().import_values(best_values);
  run.best_epoch = stopper.best_epoch();
  return run;
}

Scalar token_accuracy(const TaggerModel& model,
                      const std::vector<corpora::TaggedSentence>& corpus) {
  if (corpus.empty()) throw DataError("cannot score an empty corpus");
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const corpora::TaggedSentence& s : corpus) {
    auto predicted = model.tag_sentence(s.tokens, s.language);
    if (predicted.size() != s.tags.size())
      throw DataError("sentence has mismatched token and tag counts");
    for (std::size_t t = 0; t < predicted.size(); ++t) {
      ++total;
      if (predicted[t] == s.tags[t]) ++correct;
    }
  }
  return static_cast<Scalar>(correct) / static_cast<Scalar>(total);
}

std::pair<std::vector<corpora::TaggedSentence>, std::vector<corpora::TaggedSentence>>
make_dev_split(const std::vector<corpora::TaggedSentence>& corpus, Scalar dev_fraction,
               std::uint64_t seed) {
  if (corpus.empty()) throw DataError("cannot split an empty corpus");
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0))
    throw std::invalid_argument("dev_fraction must be inside (0, 1)");

  std::map<std::string, std::vector<std::size_t>> by_language;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    by_language[corpus[i].language].push_back(i);

  std::vector<bool> in_dev(corpus.size(), false);
  for (const auto& [code, indices] : by_language) {
    std::size_t want = static_cast<std::size_t>(
        std::floor(dev_fraction * static_cast<Scalar>(indices.size())));
    if (want == 0 && indices.size() >= 2) want = 1;  // a lone sentence stays in train
    if (want == 0) continue;
    std::vector<std::size_t> shuffled = indices;
    std::mt19937_64 rng(seed ^ fnv1a(code));
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t k = 0; k < want; ++k) in_dev[shuffled[k]] = true;
  }

  std::pair<std::vector<corpora::TaggedSentence>, std::vector<corpora::TaggedSentence>> out;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (in_dev[i] ? out.second : out.first).push_back(corpus[i]);
  return out;
}

std::string format_predictions(const TaggerModel& model,
                               const std::vector<corpora::TaggedSentence>& corpus) {
  std::string out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const corpora::TaggedSentence& s = corpus[i];
    auto predicted = model.tag_sentence(s.tokens, s.language);
    for (std::size_t t = 0; t < s.tokens.size(); ++t)
      out += s.tokens[t] + "\t" + predicted[t] + "\n";
    if (i + 1 < corpus.size()) out += "\n";
  }
  return out;
}

}  // namespace langlab::tagger
