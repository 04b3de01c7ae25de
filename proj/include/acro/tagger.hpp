#pragma once

// BiLSTM-CRF acronym identifier: word and POS embeddings feed a stacked
// BiLSTM, a linear map gives per-label emission scores, and a CRF with
// START/STOP states scores label sequences.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "acro/candidates.hpp"
#include "acro/corpus.hpp"
#include "acro/crf.hpp"
#include "acro/error.hpp"
#include "acro/nn/checkpoint.hpp"
#include "acro/nn/layers.hpp"
#include "acro/nn/tensor.hpp"
#include "acro/nn/trainer.hpp"
#include "acro/parallel.hpp"
#include "acro/vocab.hpp"

namespace acro {

struct TaggerConfig {
  std::size_t embed_dim = 100;  // ignored when static embeddings are supplied
  std::size_t pos_dim = 25;     // 0 disables POS input
  std::size_t hidden_dim = 200;
  std::size_t layers = 2;
  double dropout = 0.2;
  std::size_t batch_size = 50;
  std::size_t epochs = 30;
  std::size_t patience = 5;
  double learning_rate = 1e-3;
  bool constrained_decoding = false;

  void validate() const {
    if (embed_dim == 0 || hidden_dim == 0 || layers == 0 || batch_size == 0 || epochs == 0)
      throw ConfigError("tagger dimensions, layers, batch_size and epochs must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("tagger dropout must be in [0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("tagger learning_rate must be positive");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TaggerConfig, embed_dim, pos_dim, hidden_dim,
                                                layers, dropout, batch_size, epochs, patience,
                                                learning_rate, constrained_decoding)

class Tagger {
 public:
  // Vocabularies come from the training data; static vectors, when given,
  // initialize and freeze the word table.
  Tagger(TaggerConfig cfg, Vocabulary words, Vocabulary tags, std::uint64_t seed,
         const EmbeddingTable* vectors = nullptr)
      : cfg_(cfg), words_(std::move(words)), tags_(std::move(tags)) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    static_vectors_ = vectors != nullptr;
    if (vectors) cfg_.embed_dim = vectors->dim();
    word_table_ = &store_.add("word_embedding", words_.size(), cfg_.embed_dim);
    nn::init_uniform_fan(*word_table_, rng);
    if (vectors) {
      for (std::size_t id = 0; id < words_.size(); ++id) {
        const auto& v = id == Vocabulary::kUnk ? vectors->unk_vector() : vectors->lookup(words_.item(id));
        for (std::size_t k = 0; k < v.size(); ++k) (*word_table_).value(id, k) = v[k];
      }
      word_table_->trainable = false;
    }
    if (cfg_.pos_dim > 0) {
      pos_table_ = &store_.add("pos_embedding", tags_.size(), cfg_.pos_dim);
      nn::init_uniform_fan(*pos_table_, rng);
    }
    encoder_ = nn::BiLstm::create(store_, "bilstm", cfg_.embed_dim + cfg_.pos_dim, cfg_.hidden_dim,
                                  cfg_.layers, rng);
    emission_ = nn::Linear::create(store_, "emission", encoder_.output_dim(), crf::kLabels, false, rng);
    transitions_ = &store_.add("transitions", crf::kStates, crf::kStates);
  }

  const TaggerConfig& config() const { return cfg_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }
  nn::Parameter& transitions() { return *transitions_; }
  const Vocabulary& words() const { return words_; }

  // n x 5 emission scores for a sentence.
  nn::Var emission_scores(nn::Graph& g, const Sentence& s) const {
    if (s.size() == 0) throw DataError("sentence " + s.sent_id + " is empty");
    std::vector<std::size_t> wid, pid;
    for (const auto& t : s.tokens) {
      wid.push_back(words_.id(t.text));
      if (cfg_.pos_dim > 0) {
        if (t.pos.empty())
          throw DataError("token " + std::to_string(t.index) + " ('" + t.text + "') of sentence " +
                          s.sent_id + " has no POS tag");
        pid.push_back(tags_.id(t.pos));
      }
    }
    nn::Var x = nn::gather_rows(g.param(*word_table_), wid);
    if (cfg_.pos_dim > 0) x = nn::concat_cols({x, nn::gather_rows(g.param(*pos_table_), pid)});
    x = nn::dropout(x, cfg_.dropout);
    return emission_(g, encoder_(g, x, cfg_.dropout));
  }

  nn::Tensor emissions(const Sentence& s) const {
    nn::Graph g(false);
    return emission_scores(g, s).value();
  }

  nn::Var loss(nn::Graph& g, const Sentence& s, const BioSequence& gold) const {
    if (gold.size() != s.size())
      throw DataError("sentence " + s.sent_id + ": label count differs from token count");
    std::vector<std::size_t> labels;
    for (auto l : gold) labels.push_back(static_cast<std::size_t>(l));
    return crf::crf_nll(emission_scores(g, s), g.param(*transitions_), labels);
  }

  BioSequence predict(const Sentence& s) const {
    auto path = crf::viterbi_decode(emissions(s), transitions_->value, cfg_.constrained_decoding);
    BioSequence out;
    for (auto k : path) out.push_back(static_cast<BioLabel>(k));
    return out;
  }

  nlohmann::json checkpoint() const {
    nlohmann::json vocab{{"words", words_.to_json()}, {"pos", tags_.to_json()}};
    nlohmann::json config = cfg_;
    config["static_embeddings"] = static_vectors_;
    return nn::make_checkpoint("ai_tagger", config, vocab, store_);
  }

  static Tagger from_checkpoint(const nlohmann::json& j) {
    nn::check_checkpoint(j, "ai_tagger");
    nlohmann::json config = j.at("config");
    const bool frozen = config.value("static_embeddings", false);
    config.erase("static_embeddings");
    Tagger t(config_from_json<TaggerConfig>(config, "tagger config"),
             Vocabulary::from_json(j.at("vocab").at("words")),
             Vocabulary::from_json(j.at("vocab").at("pos")), 0);
    nn::parameters_from_json(t.store_, j.at("params"));
    t.static_vectors_ = frozen;
    t.word_table_->trainable = !frozen;
    return t;
  }

 private:
  TaggerConfig cfg_;
  Vocabulary words_;
  Vocabulary tags_;
  bool static_vectors_ = false;
  nn::ParameterStore store_;
  nn::Parameter* word_table_ = nullptr;
  nn::Parameter* pos_table_ = nullptr;
  nn::BiLstm encoder_;
  nn::Linear emission_;
  nn::Parameter* transitions_ = nullptr;
};

inline double token_accuracy(const Tagger& tagger, const std::vector<AiExample>& data) {
  std::size_t right = 0, total = 0;
  for (const auto& ex : data) {
    auto pred = tagger.predict(ex.sentence);
    for (std::size_t i = 0; i < pred.size(); ++i) right += pred[i] == ex.labels[i];
    total += pred.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(right) / static_cast<double>(total);
}

inline Tagger make_tagger(const std::vector<AiExample>& train, const TaggerConfig& cfg,
                          std::uint64_t seed, const EmbeddingTable* vectors = nullptr) {
  if (train.empty()) throw DataError("AI training set is empty");
  Vocabulary words, tags;
  for (const auto& ex : train)
    for (const auto& t : ex.sentence.tokens) {
      words.add(t.text);
      if (!t.pos.empty()) tags.add(t.pos);
    }
  if (vectors)
    for (const auto& [w, v] : vectors->vectors()) words.add(w);
  return Tagger(cfg, std::move(words), std::move(tags), seed, vectors);
}

// Trains in place. Early stopping uses token accuracy on `dev` when given.
inline std::vector<nn::EpochStats> train_tagger(Tagger& tagger, const std::vector<AiExample>& train,
                                                std::uint64_t seed,
                                                const std::vector<AiExample>* dev = nullptr,
                                                const nn::EpochCallback& on_epoch = {}) {
  if (train.empty()) throw DataError("AI training set is empty");
  const auto& cfg = tagger.config();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  nn::TrainOptions opt;
  opt.epochs = cfg.epochs;
  opt.batch_size = cfg.batch_size;
  opt.patience = dev ? cfg.patience : 0;
  opt.adam.lr = cfg.learning_rate;
  nn::DevScorer scorer;
  if (dev) scorer = [&] { return std::optional<double>(token_accuracy(tagger, *dev)); };
  return nn::train_minibatch(
      tagger.parameters(), train.size(),
      [&](nn::Graph& g, std::size_t i) { return tagger.loss(g, train[i].sentence, train[i].labels); },
      rng, opt, scorer, on_epoch);
}

// Decodes every sentence and converts labels to spans, treating a stray
// I-x as the start of a new span.
inline std::vector<SpanAnnotation> predict_tagger(const Tagger& tagger,
                                                  const std::vector<Sentence>& sentences,
                                                  std::size_t threads = 1) {
  std::vector<SpanAnnotation> out(sentences.size());
  parallel_for(sentences.size(), threads, [&](std::size_t i) { out[i] = bio_to_annotation(sentences[i], tagger.predict(sentences[i]), false); });
  return out;
}

}  // namespace acro
