#pragma once

// Graph-based acronym disambiguation. A BiLSTM encodes the sentence, GCN
// layers over the self-looped dependency tree add syntactic context, and a
// two-layer feed-forward head scores every long form in the inventory from
// [h_p : h^s_p : maxpool(H) : maxpool(H^s)].

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "acro/corpus.hpp"
#include "acro/dictionary.hpp"
#include "acro/error.hpp"
#include "acro/nn/checkpoint.hpp"
#include "acro/nn/layers.hpp"
#include "acro/nn/tensor.hpp"
#include "acro/nn/trainer.hpp"
#include "acro/parallel.hpp"
#include "acro/vocab.hpp"

namespace acro {

// Dense ids for every long form, the candidate ids of each acronym, and
// training-set frequencies.
class LongFormInventory {
 public:
  LongFormInventory() = default;

  // Ids follow the sorted order of long-form strings.
  static LongFormInventory from_dictionary(const AcronymDictionary& dict) {
    std::map<std::string, std::vector<std::string>> per;
    for (const auto& [acronym, meanings] : dict.entries())
      for (const auto& m : meanings) per[acronym].push_back(m.long_form);
    return LongFormInventory(per);
  }

  static LongFormInventory from_samples(const std::vector<ADSample>& samples) {
    std::map<std::string, std::vector<std::string>> per;
    for (const auto& s : samples) {
      auto& v = per[s.acronym];
      if (std::find(v.begin(), v.end(), s.long_form) == v.end()) v.push_back(s.long_form);
    }
    return LongFormInventory(per);
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  const std::map<std::string, std::vector<std::size_t>>& per_acronym() const { return per_acronym_; }
  const std::vector<std::size_t>& train_freq() const { return train_freq_; }

  std::optional<std::size_t> find(const std::string& long_form) const {
    auto it = id_of_.find(long_form);
    if (it == id_of_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t id(const std::string& long_form) const {
    auto id = find(long_form);
    if (!id) throw DataError("long form '" + long_form + "' is not in the inventory");
    return *id;
  }

  bool knows(const std::string& acronym) const { return per_acronym_.count(acronym) != 0; }

  const std::vector<std::size_t>& candidates(const std::string& acronym) const {
    auto it = per_acronym_.find(acronym);
    if (it == per_acronym_.end())
      throw DataError("acronym '" + acronym + "' has no candidate long forms");
    return it->second;
  }

  // Gold id of a sample; the long form must be a candidate of its acronym.
  std::size_t gold_id(const ADSample& s) const {
    auto id = find(s.long_form);
    if (!id || !knows(s.acronym)) {
      throw DataError("sample " + s.sentence.sent_id + ": long form '" + s.long_form +
                      "' of acronym '" + s.acronym + "' is not in the inventory");
    }
    const auto& c = candidates(s.acronym);
    if (std::find(c.begin(), c.end(), *id) == c.end())
      throw DataError("sample " + s.sentence.sent_id + ": long form '" + s.long_form +
                      "' is not a candidate of acronym '" + s.acronym + "'");
    return *id;
  }

  void count_training(const std::vector<ADSample>& train) {
    std::fill(train_freq_.begin(), train_freq_.end(), 0);
    for (const auto& s : train) ++train_freq_[gold_id(s)];
  }

  nlohmann::json to_json() const {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [a, ids] : per_acronym_) per[a] = ids;
    return {{"long_forms", names_}, {"per_acronym", per}, {"train_freq", train_freq_}};
  }

  static LongFormInventory from_json(const nlohmann::json& j) {
    LongFormInventory inv;
    try {
      inv.names_ = j.at("long_forms").get<std::vector<std::string>>();
      for (std::size_t i = 0; i < inv.names_.size(); ++i) inv.id_of_[inv.names_[i]] = i;
      inv.per_acronym_ = j.at("per_acronym").get<std::map<std::string, std::vector<std::size_t>>>();
      inv.train_freq_ = j.at("train_freq").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed inventory: ") + e.what());
    }
    if (inv.id_of_.size() != inv.names_.size() || inv.train_freq_.size() != inv.names_.size())
      throw DataError("malformed inventory: inconsistent sizes");
    for (const auto& [a, ids] : inv.per_acronym_) {
      if (ids.empty()) throw DataError("malformed inventory: acronym '" + a + "' has no long forms");
      for (auto id : ids)
        if (id >= inv.names_.size()) throw DataError("malformed inventory: id out of range");
    }
    return inv;
  }

 private:
  explicit LongFormInventory(const std::map<std::string, std::vector<std::string>>& per) {
    std::map<std::string, std::size_t> all;
    for (const auto& [a, forms] : per)
      for (const auto& f : forms) all.emplace(f, 0);
    for (auto& [f, id] : all) {
      id = names_.size();
      names_.push_back(f);
    }
    id_of_ = all;
    for (const auto& [a, forms] : per) {
      auto& ids = per_acronym_[a];
      for (const auto& f : forms) ids.push_back(id_of_.at(f));
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    }
    train_freq_.assign(names_.size(), 0);
  }

  std::vector<std::string> names_;
  std::map<std::string, std::size_t> id_of_;
  std::map<std::string, std::vector<std::size_t>> per_acronym_;
  std::vector<std::size_t> train_freq_;
};

// Most-frequent-meaning baseline; ties go to the smaller id.
class MostFrequentBaseline {
 public:
  explicit MostFrequentBaseline(const LongFormInventory& inv) : inv_(&inv) {}

  std::size_t predict(const std::string& acronym) const {
    const auto& c = inv_->candidates(acronym);
    std::size_t best = c.front();
    for (auto id : c)
      if (inv_->train_freq()[id] > inv_->train_freq()[best]) best = id;
    return best;
  }

 private:
  const LongFormInventory* inv_;
};

inline MostFrequentBaseline mf_baseline(const LongFormInventory& inv) { return MostFrequentBaseline(inv); }

// ---------------------------------------------------------------------------

struct GadConfig {
  std::size_t embed_dim = 100;  // ignored when static embeddings are supplied
  std::size_t pos_dim = 25;
  std::size_t hidden_dim = 200;
  std::size_t bilstm_layers = 2;
  std::size_t gcn_layers = 2;
  double dropout = 0.2;
  std::size_t batch_size = 50;
  std::size_t epochs = 30;
  std::size_t patience = 5;
  double learning_rate = 1e-3;
  bool masked_inference = true;

  void validate() const {
    if (embed_dim == 0 || pos_dim == 0 || hidden_dim == 0 || bilstm_layers == 0 ||
        batch_size == 0 || epochs == 0)
      throw ConfigError("GAD dimensions, bilstm_layers, batch_size and epochs must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("GAD dropout must be in [0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("GAD learning_rate must be positive");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GadConfig, embed_dim, pos_dim, hidden_dim,
                                                bilstm_layers, gcn_layers, dropout, batch_size,
                                                epochs, patience, learning_rate, masked_inference)

// A sample mapped to ids. Positions at or beyond `length` are padding.
struct EncodedSample {
  std::vector<std::size_t> words;
  std::vector<std::size_t> pos;
  std::vector<int> heads;
  std::size_t length = 0;
  std::size_t acronym_index = 0;
};

struct GadPrediction {
  std::size_t id = 0;
  std::vector<double> scores;  // logits over the whole inventory
};

class GadModel {
 public:
  GadModel(GadConfig cfg, Vocabulary words, Vocabulary tags, LongFormInventory inventory,
           std::uint64_t seed, const EmbeddingTable* vectors = nullptr)
      : cfg_(cfg), words_(std::move(words)), tags_(std::move(tags)), inv_(std::move(inventory)) {
    cfg_.validate();
    if (inv_.size() == 0) throw DataError("long-form inventory is empty");
    std::mt19937_64 rng(seed);
    static_vectors_ = vectors != nullptr;
    if (vectors) cfg_.embed_dim = vectors->dim();
    word_table_ = &store_.add("word_embedding", words_.size(), cfg_.embed_dim);
    nn::init_uniform_fan(*word_table_, rng);
    if (vectors) {
      for (std::size_t id = 0; id < words_.size(); ++id) {
        const auto& v = id == Vocabulary::kUnk ? vectors->unk_vector() : vectors->lookup(words_.item(id));
        for (std::size_t k = 0; k < v.size(); ++k) word_table_->value(id, k) = v[k];
      }
      word_table_->trainable = false;
    }
    pos_table_ = &store_.add("pos_embedding", tags_.size(), cfg_.pos_dim);
    nn::init_uniform_fan(*pos_table_, rng);
    encoder_ = nn::BiLstm::create(store_, "bilstm", cfg_.embed_dim + cfg_.pos_dim, cfg_.hidden_dim,
                                  cfg_.bilstm_layers, rng);
    std::size_t d = encoder_.output_dim();
    for (std::size_t m = 0; m < cfg_.gcn_layers; ++m) {
      auto& w = store_.add("gcn." + std::to_string(m) + ".weight", cfg_.hidden_dim, d);
      nn::init_uniform_fan(w, rng);
      gcn_.push_back(&w);
      d = cfg_.hidden_dim;
    }
    head_hidden_ = nn::Linear::create(store_, "head.0", feature_dim(), cfg_.hidden_dim, true, rng);
    head_out_ = nn::Linear::create(store_, "head.1", cfg_.hidden_dim, inv_.size(), true, rng);
  }

  const GadConfig& config() const { return cfg_; }
  const LongFormInventory& inventory() const { return inv_; }
  LongFormInventory& inventory() { return inv_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  // |V| = 2 * (2 * hidden) + 2 * hidden, or 2 * (2 * hidden) without GCN layers.
  std::size_t feature_dim() const {
    return 2 * encoder_.output_dim() + (cfg_.gcn_layers > 0 ? 2 * cfg_.hidden_dim : 0);
  }

  EncodedSample encode(const ADSample& s) const {
    const Sentence& sent = s.sentence;
    check_tree(sent);
    if (s.acronym_index >= sent.size())
      throw DataError("sample " + sent.sent_id + ": acronym_index out of range");
    EncodedSample e;
    for (const auto& t : sent.tokens) {
      if (t.pos.empty())
        throw DataError("token " + std::to_string(t.index) + " ('" + t.text + "') of sentence " +
                        sent.sent_id + " has no POS tag");
      e.words.push_back(words_.id(t.text));
      e.pos.push_back(tags_.id(t.pos));
      e.heads.push_back(t.head);
    }
    e.length = sent.size();
    e.acronym_index = s.acronym_index;
    return e;
  }

  // H: length x (2 * hidden).
  nn::Var encode_sentence(nn::Graph& g, const EncodedSample& e) const {
    if (e.length == 0 || e.length > e.words.size() || e.length > e.pos.size())
      throw ShapeError("encoded sample has inconsistent length");
    std::vector<std::size_t> w(e.words.begin(), e.words.begin() + static_cast<long>(e.length));
    std::vector<std::size_t> p(e.pos.begin(), e.pos.begin() + static_cast<long>(e.length));
    nn::Var x = nn::concat_cols({nn::gather_rows(g.param(*word_table_), w),
                                 nn::gather_rows(g.param(*pos_table_), p)});
    x = nn::dropout(x, cfg_.dropout);
    return encoder_(g, x, cfg_.dropout);
  }

  // H^s after the configured GCN layers; H itself when there are none.
  nn::Var encode_context(nn::Graph& g, const nn::Var& h, const EncodedSample& e) const {
    std::vector<int> heads(e.heads.begin(), e.heads.begin() + static_cast<long>(e.length));
    const auto adj = nn::AdjacencyMatrix::from_heads(heads);
    nn::Var x = h;
    for (auto* w : gcn_) x = nn::dropout(nn::gcn_layer(g, x, adj, g.param(*w), nn::Activation::relu), cfg_.dropout);
    return x;
  }

  nn::Var features(nn::Graph& g, const EncodedSample& e) const {
    if (e.acronym_index >= e.length) throw ShapeError("acronym position beyond sentence length");
    nn::Var h = encode_sentence(g, e);
    std::vector<nn::Var> parts{nn::row(h, e.acronym_index)};
    if (gcn_.empty()) {
      parts.push_back(nn::max_rows(h));
    } else {
      nn::Var hs = encode_context(g, h, e);
      parts.push_back(nn::row(hs, e.acronym_index));
      parts.push_back(nn::max_rows(h));
      parts.push_back(nn::max_rows(hs));
    }
    return nn::concat_cols(parts);
  }

  nn::Var logits(nn::Graph& g, const EncodedSample& e) const {
    nn::Var v = features(g, e);
    nn::Var hidden = nn::dropout(nn::relu(head_hidden_(g, v)), cfg_.dropout);
    return head_out_(g, hidden);
  }

  // NLL over all long forms.
  nn::Var loss(nn::Graph& g, const ADSample& s) const {
    return nn::nll_loss(logits(g, encode(s)), inv_.gold_id(s));
  }

  GadPrediction predict(const EncodedSample& e, const std::string& acronym, bool masked) const {
    nn::Graph g(false);
    GadPrediction p;
    p.scores = logits(g, e).value().data();
    std::vector<std::size_t> all;
    const std::vector<std::size_t>* pool = nullptr;
    if (masked) {
      pool = &inv_.candidates(acronym);
    } else {
      all.resize(inv_.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      pool = &all;
    }
    p.id = pool->front();
    for (auto id : *pool)
      if (p.scores[id] > p.scores[p.id] || (p.scores[id] == p.scores[p.id] && id < p.id)) p.id = id;
    return p;
  }

  GadPrediction predict(const ADSample& s, bool masked) const {
    if (masked && !inv_.knows(s.acronym))
      throw DataError("acronym '" + s.acronym + "' has no candidate long forms");
    return predict(encode(s), s.acronym, masked);
  }

  GadPrediction predict(const ADSample& s) const { return predict(s, cfg_.masked_inference); }

  nlohmann::json checkpoint() const {
    nlohmann::json vocab{{"words", words_.to_json()}, {"pos", tags_.to_json()}, {"inventory", inv_.to_json()}};
    nlohmann::json config = cfg_;
    config["static_embeddings"] = static_vectors_;
    return nn::make_checkpoint("gad", config, vocab, store_);
  }

  static GadModel from_checkpoint(const nlohmann::json& j) {
    nn::check_checkpoint(j, "gad");
    nlohmann::json config = j.at("config");
    const bool frozen = config.value("static_embeddings", false);
    config.erase("static_embeddings");
    GadModel m(config_from_json<GadConfig>(config, "GAD config"),
               Vocabulary::from_json(j.at("vocab").at("words")),
               Vocabulary::from_json(j.at("vocab").at("pos")),
               LongFormInventory::from_json(j.at("vocab").at("inventory")), 0);
    nn::parameters_from_json(m.store_, j.at("params"));
    m.static_vectors_ = frozen;
    m.word_table_->trainable = !frozen;
    return m;
  }

 private:
  GadConfig cfg_;
  Vocabulary words_;
  Vocabulary tags_;
  LongFormInventory inv_;
  bool static_vectors_ = false;
  nn::ParameterStore store_;
  nn::Parameter* word_table_ = nullptr;
  nn::Parameter* pos_table_ = nullptr;
  nn::BiLstm encoder_;
  std::vector<nn::Parameter*> gcn_;
  nn::Linear head_hidden_;
  nn::Linear head_out_;
};

// Builds vocabularies from `train` and the inventory from `dict` (or from
// the training samples when no dictionary is given), then checks that every
// training sample's gold long form is known.
inline GadModel make_gad(const std::vector<ADSample>& train, const GadConfig& cfg,
                         std::uint64_t seed, const AcronymDictionary* dict = nullptr,
                         const EmbeddingTable* vectors = nullptr) {
  if (train.empty()) throw DataError("AD training set is empty");
  Vocabulary words, tags;
  for (const auto& s : train)
    for (const auto& t : s.sentence.tokens) {
      words.add(t.text);
      if (!t.pos.empty()) tags.add(t.pos);
    }
  if (vectors)
    for (const auto& [w, v] : vectors->vectors()) words.add(w);
  auto inv = dict ? LongFormInventory::from_dictionary(*dict) : LongFormInventory::from_samples(train);
  inv.count_training(train);
  return GadModel(cfg, std::move(words), std::move(tags), std::move(inv), seed, vectors);
}

inline double ad_accuracy(const GadModel& model, const std::vector<ADSample>& data) {
  if (data.empty()) return 0.0;
  std::size_t right = 0;
  for (const auto& s : data) right += model.predict(s).id == model.inventory().gold_id(s);
  return static_cast<double>(right) / static_cast<double>(data.size());
}

// Trains in place; early stopping uses accuracy on `dev` when given.
inline std::vector<nn::EpochStats> train_gad(GadModel& model, const std::vector<ADSample>& train,
                                             std::uint64_t seed,
                                             const std::vector<ADSample>* dev = nullptr,
                                             const nn::EpochCallback& on_epoch = {}) {
  if (train.empty()) throw DataError("AD training set is empty");
  for (const auto& s : train) model.inventory().gold_id(s);
  if (dev)
    for (const auto& s : *dev) model.inventory().gold_id(s);
  const auto& cfg = model.config();
  std::vector<EncodedSample> encoded;
  std::vector<std::size_t> gold;
  for (const auto& s : train) {
    encoded.push_back(model.encode(s));
    gold.push_back(model.inventory().gold_id(s));
  }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  nn::TrainOptions opt;
  opt.epochs = cfg.epochs;
  opt.batch_size = cfg.batch_size;
  opt.patience = dev ? cfg.patience : 0;
  opt.adam.lr = cfg.learning_rate;
  nn::DevScorer scorer;
  if (dev) scorer = [&] { return std::optional<double>(ad_accuracy(model, *dev)); };
  return nn::train_minibatch(
      model.parameters(), train.size(),
      [&](nn::Graph& g, std::size_t i) { return nn::nll_loss(model.logits(g, encoded[i]), gold[i]); },
      rng, opt, scorer, on_epoch);
}

inline std::vector<GadPrediction> predict_gad(const GadModel& model,
                                              const std::vector<ADSample>& samples,
                                              std::size_t threads = 1) {
  std::vector<GadPrediction> out(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) { out[i] = model.predict(samples[i]); });
  return out;
}

}  // namespace acro
