#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "acro/gad.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace acro;

namespace {

GadConfig tiny_config() {
  GadConfig cfg;
  cfg.embed_dim = 4;
  cfg.pos_dim = 2;
  cfg.hidden_dim = 3;
  cfg.bilstm_layers = 1;
  cfg.gcn_layers = 2;
  cfg.dropout = 0.0;
  cfg.batch_size = 8;
  cfg.epochs = 5;
  cfg.learning_rate = 0.05;
  return cfg;
}

void zero(GadModel& m) {
  for (auto* p : m.parameters().all()) p->value.fill(0.0);
}

ADSample random_tree_sample(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back(i == 0 ? "ABC" : "w" + std::to_string(rng() % 5));
  auto s = fixture::make_sentence(words, "r");
  auto heads = oracle::random_tree(n, rng);
  for (std::size_t i = 0; i < n; ++i) s.tokens[i].head = heads[i];
  fixture::add_pos(s);
  return {s, 0, "ABC", "meaning 0 of ABC"};
}

}  // namespace

TEST(Gad, ZeroParametersGiveZeroStates) {
  auto data = fixture::synthetic_ad({16});
  auto m = make_gad(data, tiny_config(), 1);
  zero(m);
  nn::Graph g;
  auto h = m.encode_sentence(g, m.encode(data[0]));
  EXPECT_EQ(h.value(), nn::Tensor(data[0].sentence.size(), 6, 0.0));
}

TEST(Gad, SingleTokenSentence) {
  auto data = fixture::synthetic_ad({16});
  auto m = make_gad(data, tiny_config(), 1);
  ADSample one{fixture::make_sentence({"ABC"}), 0, "ABC", data[0].long_form};
  one.sentence.tokens[0].head = kRoot;
  one.sentence.tokens[0].pos = "NNP";
  nn::Graph g;
  auto e = m.encode(one);
  auto h = m.encode_sentence(g, e);
  EXPECT_EQ(h.rows(), 1u);
  EXPECT_EQ(h.cols(), 6u);
  // One node: the self-loop mean is the node itself.
  auto hs = m.encode_context(g, h, e);
  auto w0 = m.parameters().find("gcn.0.weight")->value;
  auto w1 = m.parameters().find("gcn.1.weight")->value;
  auto expect = oracle::gcn(oracle::gcn(h.value(), {}, w0), {}, w1);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(hs.value()(0, k), expect(0, k), 1e-12);
}

TEST(Gad, ContextMatchesStackedGcnOracle) {
  auto data = fixture::synthetic_ad({16});
  auto m = make_gad(data, tiny_config(), 2);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    auto sample = random_tree_sample(1 + rng() % 10, rng);
    auto e = m.encode(sample);
    nn::Graph g;
    auto h = m.encode_sentence(g, e);
    auto hs = m.encode_context(g, h, e).value();
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < e.heads.size(); ++i)
      if (e.heads[i] >= 0) edges.push_back({i, static_cast<std::size_t>(e.heads[i])});
    auto expect = oracle::gcn(oracle::gcn(h.value(), edges, m.parameters().find("gcn.0.weight")->value), edges,
                              m.parameters().find("gcn.1.weight")->value);
    for (std::size_t i = 0; i < hs.size(); ++i) ASSERT_NEAR(hs[i], expect[i], 1e-10);
  }
}

TEST(Gad, FeatureWidth) {
  auto data = fixture::synthetic_ad({16});
  auto m = make_gad(data, tiny_config(), 1);
  EXPECT_EQ(m.feature_dim(), 2u * 6u + 2u * 3u);
  nn::Graph g;
  EXPECT_EQ(m.features(g, m.encode(data[0])).cols(), m.feature_dim());

  auto cfg = tiny_config();
  cfg.gcn_layers = 0;
  auto plain = make_gad(data, cfg, 1);
  EXPECT_EQ(plain.feature_dim(), 2u * 6u);
  nn::Graph g2;
  EXPECT_EQ(plain.features(g2, plain.encode(data[0])).cols(), 12u);
}

TEST(Gad, MaskedTieGoesToSmallerId) {
  std::map<std::string, std::vector<LongFormCount>> entries;
  for (int a = 0; a < 4; ++a)
    entries["A" + std::to_string(a)] = {{"lf" + std::to_string(2 * a), 1}, {"lf" + std::to_string(2 * a + 1), 1}};
  entries["ABC"] = {{"lf3", 1}, {"lf7", 1}};
  AcronymDictionary dict(entries, {});
  auto inv = LongFormInventory::from_dictionary(dict);
  ASSERT_EQ(inv.candidates("ABC"), (std::vector<std::size_t>{3, 7}));

  auto data = fixture::synthetic_ad({4});
  Vocabulary words, tags;
  GadModel m(tiny_config(), words, tags, inv, 1);
  zero(m);
  ADSample s = data[0];
  s.long_form = "lf7";
  auto p = m.predict(s, true);
  EXPECT_EQ(p.id, 3u);
  EXPECT_EQ(p.scores.size(), 8u);
  EXPECT_EQ(m.predict(s, false).id, 0u);
}

TEST(Gad, UnmaskedArgmaxAndMaskAgreement) {
  auto data = fixture::synthetic_ad({32});
  auto m = make_gad(data, tiny_config(), 3);
  for (const auto& s : data) {
    auto un = m.predict(s, false);
    std::size_t best = 0;
    for (std::size_t i = 1; i < un.scores.size(); ++i)
      if (un.scores[i] > un.scores[best]) best = i;
    ASSERT_EQ(un.id, best);
    const auto& c = m.inventory().candidates(s.acronym);
    if (std::find(c.begin(), c.end(), un.id) != c.end()) ASSERT_EQ(m.predict(s, true).id, un.id);
    else ASSERT_NE(std::find(c.begin(), c.end(), m.predict(s, true).id), c.end());
  }
}

TEST(Gad, UniformLogitsLoss) {
  // 4 acronyms x 3 meanings = 12 long forms.
  auto data = fixture::synthetic_ad({12});
  auto m = make_gad(data, tiny_config(), 1);
  ASSERT_EQ(m.inventory().size(), 12u);
  zero(m);
  nn::Graph g;
  EXPECT_NEAR(m.loss(g, data[0]).scalar(), std::log(12.0), 1e-12);
}

TEST(Gad, LossGradientEndToEnd) {
  auto data = fixture::synthetic_ad({12, 3});
  auto cfg = tiny_config();
  cfg.bilstm_layers = 2;
  auto m = make_gad(data, cfg, 4);
  for (int i = 0; i < 3; ++i) {
    auto err = oracle::grad_check(m.parameters(), [&](nn::Graph& g) { return m.loss(g, data[i]); });
    EXPECT_LT(err, 1e-4) << "sample " << i;
  }
}

TEST(Gad, LossDecreasesOnSingleSample) {
  auto data = fixture::synthetic_ad({12});
  auto cfg = tiny_config();
  cfg.learning_rate = 1e-3;
  cfg.epochs = 10;
  cfg.batch_size = 1;
  auto m = make_gad(data, cfg, 5);
  auto hist = train_gad(m, {data[0]}, 5);
  for (std::size_t i = 1; i < hist.size(); ++i) EXPECT_LT(hist[i].mean_loss, hist[i - 1].mean_loss);
}

TEST(Gad, PaddingDoesNotChangePrediction) {
  auto data = fixture::synthetic_ad({8});
  auto m = make_gad(data, tiny_config(), 6);
  for (const auto& s : data) {
    auto e = m.encode(s);
    auto padded = e;
    for (int k = 0; k < 3; ++k) {
      padded.words.push_back(1);
      padded.pos.push_back(1);
      padded.heads.push_back(0);
    }
    auto a = m.predict(e, s.acronym, true), b = m.predict(padded, s.acronym, true);
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.scores, b.scores);
  }
}

TEST(Gad, Errors) {
  auto data = fixture::synthetic_ad({12});
  auto m = make_gad(data, tiny_config(), 1);
  ADSample unknown = data[0];
  unknown.sentence.tokens[unknown.acronym_index].text = "XYZ";
  unknown.acronym = "XYZ";
  try {
    m.predict(unknown, true);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("XYZ"), std::string::npos);
  }
  ADSample out_of_inventory = data[0];
  out_of_inventory.long_form = "never seen";
  EXPECT_THROW(train_gad(m, {out_of_inventory}, 1), DataError);
  ADSample no_pos = data[0];
  no_pos.sentence.tokens[1].pos.clear();
  EXPECT_THROW(m.encode(no_pos), DataError);
  ADSample no_tree = data[0];
  no_tree.sentence.tokens[0].head = kRoot;
  EXPECT_THROW(m.encode(no_tree), DataError);
}

TEST(Gad, CheckpointDeterminismAndRoundTrip) {
  auto data = fixture::synthetic_ad({16});
  auto run = [&] {
    auto m = make_gad(data, tiny_config(), 8);
    train_gad(m, data, 8);
    return m.checkpoint().dump();
  };
  const auto a = run();
  EXPECT_EQ(a, run());
  auto m = GadModel::from_checkpoint(nlohmann::json::parse(a));
  EXPECT_EQ(m.checkpoint().dump(), a);
  auto preds = predict_gad(m, data, 3);
  for (std::size_t i = 0; i < data.size(); ++i) EXPECT_EQ(preds[i].id, m.predict(data[i]).id);
}

TEST(MostFrequent, PicksMajorityAndBreaksTies) {
  auto make = [](std::size_t a, std::size_t b) {
    std::vector<ADSample> train;
    for (std::size_t i = 0; i < a; ++i) train.push_back({fixture::make_sentence({"X"}), 0, "X", "a"});
    for (std::size_t i = 0; i < b; ++i) train.push_back({fixture::make_sentence({"X"}), 0, "X", "b"});
    auto inv = LongFormInventory::from_samples(train);
    inv.count_training(train);
    return inv;
  };
  auto five_two = make(5, 2);
  EXPECT_EQ(five_two.name(mf_baseline(five_two).predict("X")), "a");
  auto two_five = make(2, 5);
  EXPECT_EQ(two_five.name(mf_baseline(two_five).predict("X")), "b");
  auto tie = make(3, 3);
  EXPECT_EQ(mf_baseline(tie).predict("X"), 0u);
  EXPECT_THROW(mf_baseline(tie).predict("Y"), DataError);
}

TEST(MostFrequent, MajorityRecallIsOne) {
  auto data = fixture::synthetic_ad({40, 2, 3});
  data.resize(30);  // uneven meaning counts
  auto inv = LongFormInventory::from_samples(data);
  inv.count_training(data);
  auto mf = mf_baseline(inv);
  for (const auto& [acronym, ids] : inv.per_acronym()) {
    const auto majority = mf.predict(acronym);
    std::size_t gold = 0, hit = 0;
    for (const auto& s : data)
      if (s.acronym == acronym && inv.gold_id(s) == majority) {
        ++gold;
        hit += mf.predict(s.acronym) == majority;
      }
    EXPECT_EQ(hit, gold);
  }
}
