#include <gtest/gtest.h>

#include <random>

#include "acro/tagger.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace acro;

namespace {

TaggerConfig tiny_config() {
  TaggerConfig cfg;
  cfg.embed_dim = 4;
  cfg.pos_dim = 2;
  cfg.hidden_dim = 3;
  cfg.layers = 1;
  cfg.dropout = 0.0;
  cfg.batch_size = 4;
  cfg.epochs = 5;
  cfg.learning_rate = 0.05;
  return cfg;
}

}  // namespace

TEST(Tagger, ZeroParametersGiveZeroScores) {
  auto data = fixture::synthetic_ai(4);
  auto tagger = make_tagger(data, tiny_config(), 1);
  for (auto* p : tagger.parameters().all()) p->value.fill(0.0);
  auto e = tagger.emissions(data[0].sentence);
  EXPECT_EQ(e, nn::Tensor(data[0].sentence.size(), crf::kLabels, 0.0));
}

TEST(Tagger, SingleTokenShape) {
  auto data = fixture::synthetic_ai(4);
  auto tagger = make_tagger(data, tiny_config(), 1);
  auto s = fixture::make_sentence({"model"});
  fixture::add_pos(s);
  auto e = tagger.emissions(s);
  EXPECT_EQ(e.rows(), 1u);
  EXPECT_EQ(e.cols(), 5u);
}

TEST(Tagger, EmissionsMatchLayerOracles) {
  auto data = fixture::synthetic_ai(4);
  auto tagger = make_tagger(data, tiny_config(), 7);
  const auto& s = data[1].sentence;
  auto& store = tagger.parameters();
  auto* words = store.find("word_embedding");
  auto* pos = store.find("pos_embedding");
  auto* ws = store.find("emission.weight");
  ASSERT_TRUE(words && pos && ws);
  // Rebuild the input rows by hand.
  Vocabulary tags;
  for (const auto& ex : data)
    for (const auto& t : ex.sentence.tokens) tags.add(t.pos);
  nn::Tensor x(s.size(), 6);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto w = tagger.words().id(s[i].text);
    const auto p = tags.id(s[i].pos);
    for (std::size_t k = 0; k < 4; ++k) x(i, k) = words->value(w, k);
    for (std::size_t k = 0; k < 2; ++k) x(i, 4 + k) = pos->value(p, k);
  }
  auto f = oracle::lstm(x, store.find("bilstm.0.fwd.w_input")->value, store.find("bilstm.0.fwd.w_hidden")->value,
                        store.find("bilstm.0.fwd.bias")->value, false);
  auto b = oracle::lstm(x, store.find("bilstm.0.bwd.w_input")->value, store.find("bilstm.0.bwd.w_hidden")->value,
                        store.find("bilstm.0.bwd.bias")->value, true);
  auto e = tagger.emissions(s);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t l = 0; l < 5; ++l) {
      double v = 0;
      for (std::size_t k = 0; k < 3; ++k) v += ws->value(l, k) * f(i, k) + ws->value(l, 3 + k) * b(i, k);
      ASSERT_NEAR(e(i, l), v, 1e-10);
    }
}

TEST(Tagger, MissingPosNamesToken) {
  auto data = fixture::synthetic_ai(4);
  auto tagger = make_tagger(data, tiny_config(), 1);
  auto s = fixture::make_sentence({"we", "train"});
  s.tokens[0].pos = "NN";
  try {
    tagger.emissions(s);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'train'"), std::string::npos) << e.what();
  }
  auto cfg = tiny_config();
  cfg.pos_dim = 0;
  auto no_pos = make_tagger(data, cfg, 1);
  EXPECT_NO_THROW(no_pos.emissions(s));
}

TEST(Tagger, LossGradientEndToEnd) {
  auto data = fixture::synthetic_ai(4);
  auto cfg = tiny_config();
  cfg.layers = 2;
  auto tagger = make_tagger(data, cfg, 3);
  std::mt19937_64 rng(3);
  tagger.transitions().value = oracle::random_tensor(7, 7, rng);
  const auto& ex = data[0];
  auto err = oracle::grad_check(tagger.parameters(), [&](nn::Graph& g) { return tagger.loss(g, ex.sentence, ex.labels); });
  EXPECT_LT(err, 1e-4);
}

TEST(Tagger, AllOutsideTrainingPredictsNoSpans) {
  auto data = fixture::synthetic_ai(8);
  for (auto& ex : data) std::fill(ex.labels.begin(), ex.labels.end(), BioLabel::o);
  auto cfg = tiny_config();
  cfg.epochs = 20;
  auto tagger = make_tagger(data, cfg, 2);
  train_tagger(tagger, data, 2);
  std::vector<Sentence> sentences;
  for (const auto& ex : data) sentences.push_back(ex.sentence);
  for (const auto& a : predict_tagger(tagger, sentences, 2)) EXPECT_TRUE(a.spans.empty());
}

TEST(Tagger, TrainingReducesLossAndIsDeterministic) {
  auto data = fixture::synthetic_ai(8);
  auto cfg = tiny_config();
  cfg.epochs = 15;
  auto run = [&] {
    auto t = make_tagger(data, cfg, 9);
    auto hist = train_tagger(t, data, 9);
    return std::make_pair(t.checkpoint().dump(), hist);
  };
  auto [a, hist] = run();
  auto [b, hist2] = run();
  EXPECT_EQ(a, b);
  EXPECT_LT(hist.back().mean_loss, hist.front().mean_loss);
}

TEST(Tagger, CheckpointRoundTrip) {
  auto data = fixture::synthetic_ai(8);
  auto tagger = make_tagger(data, tiny_config(), 4);
  train_tagger(tagger, data, 4);
  auto j = tagger.checkpoint();
  auto back = Tagger::from_checkpoint(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.checkpoint().dump(), j.dump());
  for (const auto& ex : data) EXPECT_EQ(back.predict(ex.sentence), tagger.predict(ex.sentence));

  auto wrong = j;
  wrong["kind"] = "gad";
  EXPECT_THROW(Tagger::from_checkpoint(wrong), DataError);
  auto bad_config = j;
  bad_config["config"]["mystery"] = 1;
  EXPECT_THROW(Tagger::from_checkpoint(bad_config), ConfigError);
}

TEST(Tagger, EmptyDatasetRejected) {
  EXPECT_THROW(make_tagger({}, tiny_config(), 1), DataError);
}

TEST(Tagger, EarlyStoppingRestoresBest) {
  auto data = fixture::synthetic_ai(8);
  auto cfg = tiny_config();
  cfg.epochs = 40;
  cfg.patience = 2;
  auto tagger = make_tagger(data, cfg, 5);
  auto hist = train_tagger(tagger, data, 5, &data);
  double best = 0;
  for (const auto& h : hist) best = std::max(best, *h.dev_score);
  EXPECT_DOUBLE_EQ(token_accuracy(tagger, data), best);
}
