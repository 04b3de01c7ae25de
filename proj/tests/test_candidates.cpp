#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "acro/candidates.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace acro;

namespace {

std::set<std::pair<std::size_t, std::size_t>> as_set(const std::vector<Window>& ws) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& w : ws) out.insert({w.start, w.end});
  return out;
}

Sentence sentence(const std::string& text) { return fixture::make_sentence(fixture::split(text)); }

std::size_t index_of(const Sentence& s, const std::string& w) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i].text == w) return i;
  throw std::logic_error("no token " + w);
}

}  // namespace

TEST(AcronymCandidate, Examples) {
  EXPECT_TRUE(is_acronym_candidate("KPI"));
  EXPECT_TRUE(is_acronym_candidate("E2E"));
  EXPECT_FALSE(is_acronym_candidate("the"));
  EXPECT_FALSE(is_acronym_candidate("I", 2));
  EXPECT_TRUE(is_acronym_candidate("I", 1));
  EXPECT_FALSE(is_acronym_candidate("AbCd"));  // exactly half
}

TEST(AcronymCandidate, MatchesCountingOracleOverAa) {
  for (std::size_t len = 1; len <= 10; ++len) {
    for (std::size_t mask = 0; mask < (1u << len); ++mask) {
      std::string w;
      for (std::size_t k = 0; k < len; ++k) w += (mask >> k & 1) ? 'A' : 'a';
      for (std::size_t min_len : {1u, 2u, 3u})
        ASSERT_EQ(is_acronym_candidate(w, min_len), oracle::acronym_like(w, min_len)) << w;
    }
  }
}

TEST(LongFormSearch, RunningExample) {
  auto s = sentence(fixture::kRunningExample);
  const auto kpi = index_of(s, "KPI");
  auto found = as_set(find_long_form_candidates(s, kpi));
  EXPECT_TRUE(found.count({2, 5}));  // key performance indicator
  EXPECT_EQ(found, oracle::windows(s.words(), kpi, 3 + 5, 2));
}

TEST(LongFormSearch, FirstCharacters) {
  auto s = sentence("we saw alpha beta AB today");
  auto found = find_long_form_candidates(s, 4);
  ASSERT_EQ(found.size(), 1u);
  EXPECT_EQ(found[0], (Window{2, 4}));
}

TEST(LongFormSearch, SkipsAndEndsMustContribute) {
  // "x" words between must be skipped; both ends contribute.
  auto s = sentence("alpha x x beta ( AB )");
  EXPECT_EQ(as_set(find_long_form_candidates(s, 5)), (std::set<std::pair<std::size_t, std::size_t>>{{0, 4}}));
  SearchLimits one_skip;
  one_skip.max_skips = 1;
  EXPECT_TRUE(find_long_form_candidates(s, 5, one_skip).empty());
}

TEST(LongFormSearch, NonAlphaDroppedAndWindowLimit) {
  auto s = sentence("end to end E2E");
  EXPECT_TRUE(as_set(find_long_form_candidates(s, 3)).count({0, 3}));
  SearchLimits narrow;
  narrow.max_window = 2;
  EXPECT_FALSE(as_set(find_long_form_candidates(s, 3, narrow)).count({0, 3}));
}

TEST(LongFormSearch, MatchesBruteForceOnRandomSentences) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> vocab{"alpha", "beta", "gamma", "abc", "bad", "cab", "a", "b", "c", "ab", "Bca", "x"};
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(2, 12)(rng);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back(vocab[rng() % vocab.size()]);
    std::string acr;
    const std::size_t letters = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    for (std::size_t k = 0; k < letters; ++k) acr += static_cast<char>('A' + rng() % 3);
    const std::size_t at = rng() % n;
    words[at] = acr;
    SearchLimits lim;
    lim.max_skips = rng() % 3;
    lim.max_window = rng() % 2 ? 0 : std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    ASSERT_EQ(as_set(find_long_form_candidates(words, at, lim)),
              oracle::windows(words, at, lim.window_for(letters), lim.max_skips))
        << "trial " << trial;
  }
}

TEST(Filter, KeepsOnlyAcronymsWithWindows) {
  Document d;
  d.sentences = {sentence(fixture::kRunningExample), sentence("The dog barks ."),
                 sentence("the XQZV is here .")};
  d.sentences[1].sent_id = "s1";
  d.sentences[2].sent_id = "s2";
  EXPECT_TRUE(oracle::windows(d.sentences[2].words(), 1, 9, 2).empty());
  auto kept = filter_annotation_sentences({d});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].sent_id, "s0");
}

TEST(RuleBaseline, ParenthesizedDefinition) {
  auto s = sentence("we propose fast and factual exploration ( FA2E ) for search");
  auto a = rule_pair_baseline(s);
  ASSERT_EQ(a.pairs.size(), 1u);
  const auto& sh = a.spans[a.pairs[0].first];
  const auto& lo = a.spans[a.pairs[0].second];
  EXPECT_EQ(span_text(s, sh), "FA2E");
  EXPECT_EQ(span_text(s, lo), "fast and factual exploration");
}

TEST(RuleBaseline, AcronymInsideLongForm) {
  auto s = sentence("linear SVM ( LSVM ) works");
  auto a = rule_pair_baseline(s);
  ASSERT_EQ(a.spans.size(), 2u);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(span_text(s, a.spans[a.pairs[0].second]), "linear SVM");
  EXPECT_EQ(span_text(s, a.spans[a.pairs[0].first]), "LSVM");
}

TEST(RuleBaseline, UnpairedAcronym) {
  auto s = sentence("the XQZV is here");
  auto a = rule_pair_baseline(s);
  ASSERT_EQ(a.spans.size(), 1u);
  EXPECT_EQ(a.spans[0], (Span{1, 2, SpanKind::short_form}));
  EXPECT_TRUE(a.pairs.empty());
}

TEST(Bio, DirectEncoding) {
  SpanAnnotation a{"d", "s", {{1, 4, SpanKind::long_form}, {5, 6, SpanKind::short_form}}, {}};
  auto bio = spans_to_bio(a, 7);
  std::vector<std::string> names;
  for (auto l : bio) names.emplace_back(to_string(l));
  EXPECT_EQ(names, (std::vector<std::string>{"O", "B-long", "I-long", "I-long", "O", "B-acronym", "O"}));
  EXPECT_TRUE(bio_to_spans(BioSequence(4, BioLabel::o)).empty());
}

TEST(Bio, InvalidTransitionNamesPosition) {
  BioSequence l{BioLabel::o, BioLabel::i_long};
  try {
    bio_to_spans(l);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("position 1"), std::string::npos) << e.what();
  }
  BioSequence l2{BioLabel::b_acronym, BioLabel::i_long};
  EXPECT_THROW(bio_to_spans(l2), DataError);
  auto lenient = bio_to_spans(l2, false);
  EXPECT_EQ(lenient.size(), 2u);
}

TEST(Bio, RandomRoundTrip) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<Span> spans;
    std::size_t i = 0;
    while (i < n) {
      if (rng() % 3 == 0) {
        const std::size_t len = 1 + rng() % std::min<std::size_t>(3, n - i);
        spans.push_back({i, i + len, rng() % 2 ? SpanKind::long_form : SpanKind::short_form});
        i += len;
      } else {
        ++i;
      }
    }
    SpanAnnotation a{"d", "s", spans, {}};
    ASSERT_EQ(bio_to_spans(spans_to_bio(a, n)), spans);
  }
}

TEST(Bio, CrossKindOverlapRejected) {
  SpanAnnotation a{"d", "s", {{0, 2, SpanKind::long_form}, {1, 2, SpanKind::short_form}}, {}};
  EXPECT_NO_THROW(check_annotation(a, 3));
  EXPECT_THROW(spans_to_bio(a, 3), DataError);
  SpanAnnotation b{"d", "s", {{0, 2, SpanKind::long_form}, {1, 3, SpanKind::long_form}}, {}};
  EXPECT_THROW(check_annotation(b, 3), DataError);
}

TEST(InferPairs, PrefersSpellingMatch) {
  auto s = sentence("NN and support vector machine ( SVM )");
  std::vector<Span> spans{{0, 1, SpanKind::short_form}, {2, 5, SpanKind::long_form}, {6, 7, SpanKind::short_form}};
  auto pairs = infer_pairs(s, spans);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0], (std::pair<std::size_t, std::size_t>{2, 1}));
}

TEST(AiDataset, JsonRoundTripKeepsPairs) {
  auto c = fixture::five_documents();
  std::vector<AiExample> data;
  for (const auto& a : c.annotations) data.push_back(make_ai_example(a.sentence, a.annotation));
  std::ostringstream out;
  write_ai_dataset(out, data);
  std::istringstream in(out.str());
  auto back = read_ai_dataset(in, "mem");
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].sentence, data[i].sentence);
    EXPECT_EQ(back[i].labels, data[i].labels);
    EXPECT_EQ(back[i].annotation(), c.annotations[i].annotation);
  }
}

TEST(AiDataset, RejectsBadLabels) {
  std::istringstream bad(R"({"doc_id":"d","sent_id":"s","tokens":["a","b"],"labels":["O","I-long"]})");
  EXPECT_THROW(read_ai_dataset(bad, "f"), DataError);
  std::istringstream short_labels(R"({"doc_id":"d","sent_id":"s","tokens":["a","b"],"labels":["O"]})");
  EXPECT_THROW(read_ai_dataset(short_labels, "f"), DataError);
}
