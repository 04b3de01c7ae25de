#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "acro/dictionary.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace acro;

namespace {

AnnotatedSentence define(const std::string& doc, const std::string& sid, const std::vector<std::string>& long_form,
                         const std::string& acronym) {
  std::vector<std::string> words{"we", "use"};
  SpanAnnotation a;
  a.doc_id = doc;
  a.sent_id = sid;
  a.spans.push_back({2, 2 + long_form.size(), SpanKind::long_form});
  words.insert(words.end(), long_form.begin(), long_form.end());
  words.push_back("(");
  a.spans.push_back({words.size(), words.size() + 1, SpanKind::short_form});
  words.push_back(acronym);
  words.push_back(")");
  a.pairs.push_back({1, 0});
  return {fixture::make_sentence(words, sid, doc), a};
}

}  // namespace

TEST(EditDistance, ExhaustiveAgainstRecursiveDefinition) {
  std::vector<std::string> all{""};
  for (std::size_t len = 1; len <= 4; ++len) {
    std::vector<std::string> next;
    for (const auto& s : all)
      if (s.size() == len - 1)
        for (char c : {'a', 'b', 'c'}) next.push_back(s + c);
    all.insert(all.end(), next.begin(), next.end());
  }
  for (const auto& a : all)
    for (const auto& b : all) ASSERT_EQ(edit_distance(a, b), oracle::levenshtein(a, b)) << a << " " << b;
}

TEST(Normalize, PluralMerges) {
  auto n = normalize_long_forms({{"random forest", 10}, {"random forests", 3}}, 2);
  ASSERT_EQ(n.canonical.size(), 1u);
  EXPECT_EQ(n.canonical[0], (LongFormCount{"random forest", 13}));
  EXPECT_EQ(n.variant_map.at("random forests"), "random forest");
}

TEST(Normalize, SingletonAndTie) {
  auto one = normalize_long_forms({{"support vector machine", 5}});
  EXPECT_EQ(one.canonical, (std::vector<LongFormCount>{{"support vector machine", 5}}));
  EXPECT_TRUE(one.variant_map.empty());

  auto tie = normalize_long_forms({{"abd", 4}, {"abc", 4}}, 1);
  ASSERT_EQ(tie.canonical.size(), 1u);
  EXPECT_EQ(tie.canonical[0], (LongFormCount{"abc", 8}));
}

TEST(Normalize, ThresholdIsInclusiveAndCaseInsensitive) {
  auto n = normalize_long_forms({{"abcd", 5}, {"ABxy", 1}}, 2);
  EXPECT_EQ(n.canonical.size(), 1u);
  auto m = normalize_long_forms({{"abcd", 5}, {"axyz", 1}}, 2);
  EXPECT_EQ(m.canonical.size(), 2u);
}

TEST(Normalize, IdempotentAndConservesMass) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LongFormCount> raw;
    const std::size_t forms = 1 + rng() % 8;
    for (std::size_t k = 0; k < forms; ++k) {
      std::string s;
      const std::size_t len = 1 + rng() % 6;
      for (std::size_t c = 0; c < len; ++c) s += static_cast<char>('a' + rng() % 3);
      raw.push_back({s, 1 + rng() % 9});
    }
    const std::size_t threshold = rng() % 3;
    auto once = normalize_long_forms(raw, threshold);
    auto twice = normalize_long_forms(once.canonical, threshold);
    ASSERT_EQ(twice.canonical, once.canonical);
    ASSERT_TRUE(twice.variant_map.empty());
    auto mass = [](const std::vector<LongFormCount>& v) {
      return std::accumulate(v.begin(), v.end(), std::size_t{0},
                             [](std::size_t s, const LongFormCount& c) { return s + c.count; });
    };
    ASSERT_EQ(mass(once.canonical), mass(raw));
  }
}

TEST(Dictionary, KeepsOnlyAmbiguousAcronyms) {
  std::vector<AnnotatedSentence> ann{
      define("d1", "a", {"convolutional", "neural", "network"}, "CNN"),
      define("d2", "b", {"cable", "news", "network"}, "CNN"),
      define("d3", "c", {"key", "performance", "indicator"}, "KPI"),
  };
  auto dict = build_dictionary(ann);
  EXPECT_TRUE(dict.contains("CNN"));
  EXPECT_EQ(dict.meanings("CNN").size(), 2u);
  EXPECT_FALSE(dict.contains("KPI"));
}

TEST(Dictionary, VariantsAndOverrides) {
  auto c = fixture::five_documents();
  auto dict = build_dictionary(c.annotations);
  ASSERT_TRUE(dict.contains("SVM"));
  ASSERT_TRUE(dict.contains("NN"));
  EXPECT_EQ(dict.canonical("SVM", "support vector machines"), "support vector machine");
  EXPECT_EQ(dict.canonical("NN", "nearest neighbour"), "nearest neighbor");
  EXPECT_EQ(dict.meanings("SVM")[0], (LongFormCount{"support vector machine", 2}));

  std::map<std::string, std::string> overrides{{"structural vector model", "support vector machine"}};
  auto merged = build_dictionary(c.annotations, 2, overrides);
  EXPECT_FALSE(merged.contains("SVM"));  // only one meaning left
}

TEST(Dictionary, InvariantsEnforced) {
  EXPECT_THROW(AcronymDictionary({{"A", {{"x", 1}}}}, {}), DataError);
  EXPECT_THROW(AcronymDictionary({{"A", {{"x", 1}, {"x", 2}}}}, {}), DataError);
  EXPECT_THROW(AcronymDictionary({{"A", {{"x", 1}, {"y", 0}}}}, {}), DataError);
  EXPECT_THROW(AcronymDictionary({{"A", {{"x", 1}, {"y", 1}}}}, {{"z", "w"}}), DataError);
}

TEST(Dictionary, JsonRoundTrip) {
  auto c = fixture::five_documents();
  auto dict = build_dictionary(c.annotations);
  auto back = dictionary_from_json(dictionary_to_json(dict), "mem");
  EXPECT_EQ(back.entries(), dict.entries());
  EXPECT_EQ(back.variant_map(), dict.variant_map());
}

TEST(GenerateAd, OneSensePerDocument) {
  // Defined in sentence 0, reused in two later sentences: 3 samples.
  auto def = define("doc", "s0", {"temporal", "resolution"}, "TR");
  auto other = define("elsewhere", "x0", {"total", "return"}, "TR");
  Document d{"doc", {def.sentence, fixture::make_sentence({"the", "TR", "is", "low"}, "s1", "doc"),
                     fixture::make_sentence({"no", "acronym"}, "s2", "doc"),
                     fixture::make_sentence({"TR", "again"}, "s3", "doc")}};
  Document e{"elsewhere", {other.sentence}};
  auto dict = build_dictionary({def, other});
  auto gen = generate_ad_samples({d, e}, {def, other}, dict);
  std::size_t in_doc = 0;
  for (const auto& s : gen.samples)
    if (s.sentence.doc_id == "doc") {
      ++in_doc;
      EXPECT_EQ(s.long_form, "temporal resolution");
      EXPECT_EQ(s.sentence[s.acronym_index].text, "TR");
    }
  EXPECT_EQ(in_doc, 3u);
  EXPECT_TRUE(gen.conflicts.empty());
}

TEST(GenerateAd, UnknownAcronymGivesNothing) {
  auto def = define("doc", "s0", {"key", "performance", "indicator"}, "KPI");
  Document d{"doc", {def.sentence}};
  AcronymDictionary dict({{"CNN", {{"a", 1}, {"b", 1}}}}, {});
  EXPECT_TRUE(generate_ad_samples({d}, {def}, dict).samples.empty());
}

TEST(GenerateAd, FiveDocumentCorpusMatchesScanOracle) {
  auto c = fixture::five_documents();
  auto dict = build_dictionary(c.annotations);
  auto gen = generate_ad_samples(c.docs, c.annotations, dict);
  std::multiset<std::tuple<std::string, std::string, std::size_t, std::string>> got;
  for (const auto& s : gen.samples) {
    EXPECT_TRUE(dict.has_meaning(s.acronym, s.long_form));
    got.insert({s.sentence.doc_id, s.sentence.sent_id, s.acronym_index, s.long_form});
  }
  EXPECT_EQ(got, oracle::ad_scan(c.docs, c.annotations, dict));
  EXPECT_FALSE(got.empty());
  // doc4 defines KPI twice with different meanings.
  bool reported = false;
  for (const auto& r : gen.conflicts) reported |= r.doc_id == "doc4" && r.acronym == "KPI";
  EXPECT_TRUE(reported);
}

TEST(Subsample, KeepsAtMostKPerLongForm) {
  std::vector<ADSample> samples;
  for (int i = 0; i < 40; ++i) samples.push_back({fixture::make_sentence({"A"}, std::to_string(i)), 0, "A", "x"});
  for (int i = 0; i < 3; ++i) samples.push_back({fixture::make_sentence({"A"}, "y" + std::to_string(i)), 0, "A", "y"});
  auto kept = subsample_per_long_form(samples, 17, 4);
  std::map<std::string, std::size_t> per;
  for (const auto& s : kept) ++per[s.long_form];
  EXPECT_EQ(per["x"], 17u);
  EXPECT_EQ(per["y"], 3u);
  EXPECT_EQ(kept, subsample_per_long_form(samples, 17, 4));
  // Survivors keep input order.
  std::vector<std::size_t> positions;
  for (const auto& s : kept)
    positions.push_back(static_cast<std::size_t>(std::find(samples.begin(), samples.end(), s) - samples.begin()));
  EXPECT_TRUE(std::is_sorted(positions.begin(), positions.end()));
  EXPECT_THROW(subsample_per_long_form(samples, 0, 1), ConfigError);
}

TEST(AdDataset, JsonRoundTripAndValidation) {
  auto samples = fixture::synthetic_ad({8, 3, 1});
  std::ostringstream out;
  write_ad_dataset(out, samples);
  std::istringstream in(out.str());
  EXPECT_EQ(read_ad_dataset(in, "mem"), samples);

  std::istringstream bad(R"({"doc_id":"d","sent_id":"s","tokens":["a","B"],"acronym_index":0,"acronym":"B","long_form":"b"})");
  EXPECT_THROW(read_ad_dataset(bad, "f"), DataError);
}
