#pragma once

#include <cstddef>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "acro/acro.hpp"

namespace fixture {

inline acro::Sentence make_sentence(const std::vector<std::string>& words, const std::string& sent_id = "s0",
                                    const std::string& doc_id = "d0") {
  acro::Sentence s;
  s.doc_id = doc_id;
  s.sent_id = sent_id;
  for (std::size_t i = 0; i < words.size(); ++i) {
    acro::Token t;
    t.text = words[i];
    t.index = i;
    t.head = acro::kNoHead;
    s.tokens.push_back(t);
  }
  return s;
}

// Chain tree: token i is headed by i + 1, the last token is the root.
inline void add_chain_heads(acro::Sentence& s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    s.tokens[i].head = i + 1 < s.size() ? static_cast<int>(i + 1) : acro::kRoot;
}

inline void add_pos(acro::Sentence& s) {
  for (auto& t : s.tokens) {
    const bool upper = !t.text.empty() && std::isupper(static_cast<unsigned char>(t.text[0]));
    t.pos = std::isalpha(static_cast<unsigned char>(t.text[0])) ? (upper ? "NNP" : "NN") : "PUNCT";
  }
}

inline std::vector<std::string> split(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline const char* kRunningExample =
    "The main key performance indicator , herein referred to as KPI , is the E2E throughput";

// The running example as a pre-tagged, pre-parsed CoNLL-like file.
inline const char* kRunningExampleConllu =
    "# doc_id = paper\n"
    "# sent_id = intro-1\n"
    "1\tThe\tDT\t5\n"
    "2\tmain\tJJ\t5\n"
    "3\tkey\tJJ\t5\n"
    "4\tperformance\tNN\t5\n"
    "5\tindicator\tNN\t16\n"
    "6\t,\tPUNCT\t5\n"
    "7\therein\tRB\t8\n"
    "8\treferred\tVBN\t5\n"
    "9\tto\tIN\t11\n"
    "10\tas\tIN\t11\n"
    "11\tKPI\tNNP\t8\n"
    "12\t,\tPUNCT\t5\n"
    "13\tis\tVBZ\t16\n"
    "14\tthe\tDT\t16\n"
    "15\tE2E\tNNP\t16\n"
    "16\tthroughput\tNN\t0\n";

// ---------------------------------------------------------------------------
// Synthetic AD fixture: 4 acronyms x 3 meanings, 64 samples. The meaning is
// signalled only by a cue word at the start of the sentence, several tokens
// away from the acronym at the end.

struct AdFixtureOptions {
  std::size_t samples = 64;
  std::size_t filler = 6;
  std::uint64_t seed = 11;
};

inline std::vector<acro::ADSample> synthetic_ad(const AdFixtureOptions& opt = {}) {
  const std::vector<std::string> acronyms{"ABC", "DEF", "GHI", "JKL"};
  const std::vector<std::string> fillers{"the", "a", "model", "data", "we", "use", "this", "for", "results", "show"};
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, fillers.size() - 1);
  std::vector<acro::ADSample> out;
  for (std::size_t k = 0; k < opt.samples; ++k) {
    const std::size_t a = k % acronyms.size();
    const std::size_t m = (k / acronyms.size()) % 3;
    std::vector<std::string> words{"cue" + std::to_string(a) + "_" + std::to_string(m)};
    for (std::size_t f = 0; f < opt.filler; ++f) words.push_back(fillers[pick(rng)]);
    words.push_back(acronyms[a]);
    words.push_back(".");
    auto s = make_sentence(words, "ad" + std::to_string(k), "doc" + std::to_string(k / 8));
    add_chain_heads(s);
    add_pos(s);
    acro::ADSample sample;
    sample.sentence = s;
    sample.acronym_index = words.size() - 2;
    sample.acronym = acronyms[a];
    sample.long_form = "meaning " + std::to_string(m) + " of " + acronyms[a];
    out.push_back(sample);
  }
  return out;
}

// Synthetic AI fixture: 32 sentences with a long form, an acronym, or both.
inline std::vector<acro::AiExample> synthetic_ai(std::size_t count = 32, std::uint64_t seed = 5) {
  struct Term {
    std::vector<std::string> long_form;
    std::string acronym;
  };
  const std::vector<Term> terms{{{"support", "vector", "machine"}, "SVM"},
                                {{"neural", "network"}, "NN"},
                                {{"key", "performance", "indicator"}, "KPI"},
                                {{"graph", "convolutional", "network"}, "GCN"}};
  const std::vector<std::string> fillers{"we", "train", "a", "model", "on", "data", "the", "results"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> fill(0, fillers.size() - 1);
  std::vector<acro::AiExample> out;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& term = terms[k % terms.size()];
    const std::size_t shape = (k / terms.size()) % 3;  // 0 both, 1 acronym only, 2 long form only
    std::vector<std::string> words;
    acro::SpanAnnotation a;
    words.push_back(fillers[fill(rng)]);
    words.push_back(fillers[fill(rng)]);
    if (shape != 1) {
      a.spans.push_back({words.size(), words.size() + term.long_form.size(), acro::SpanKind::long_form});
      for (const auto& w : term.long_form) words.push_back(w);
    }
    if (shape == 0) words.push_back("(");
    if (shape != 2) {
      a.spans.push_back({words.size(), words.size() + 1, acro::SpanKind::short_form});
      words.push_back(term.acronym);
    }
    if (shape == 0) words.push_back(")");
    words.push_back(fillers[fill(rng)]);
    words.push_back(".");
    auto s = make_sentence(words, "ai" + std::to_string(k));
    add_pos(s);
    a.doc_id = s.doc_id;
    a.sent_id = s.sent_id;
    std::sort(a.spans.begin(), a.spans.end());
    out.push_back(acro::make_ai_example(s, a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Five small documents for dictionary building and AD generation. Each
// defines acronyms with "long form ( ACR )" and then reuses them bare.

struct Corpus {
  std::vector<acro::Document> docs;
  std::vector<acro::AnnotatedSentence> annotations;
};

inline Corpus five_documents() {
  struct Def {
    std::vector<std::string> long_form;
    std::string acronym;
  };
  const std::vector<std::vector<Def>> per_doc{
      {{{"support", "vector", "machine"}, "SVM"}, {{"neural", "network"}, "NN"}},
      {{{"support", "vector", "machines"}, "SVM"}, {{"nearest", "neighbor"}, "NN"}},
      {{{"neural", "network"}, "NN"}, {{"key", "performance", "indicator"}, "KPI"}},
      {{{"nearest", "neighbour"}, "NN"}, {{"structural", "vector", "model"}, "SVM"}},
      {{{"key", "performance", "indicators"}, "KPI"}, {{"kernel", "path", "integral"}, "KPI"}},
  };
  Corpus c;
  for (std::size_t d = 0; d < per_doc.size(); ++d) {
    acro::Document doc;
    doc.doc_id = "doc" + std::to_string(d);
    std::size_t sid = 0;
    auto add = [&](std::vector<std::string> words, acro::SpanAnnotation a, bool annotated) {
      auto s = make_sentence(words, doc.doc_id + "-s" + std::to_string(sid++), doc.doc_id);
      add_chain_heads(s);
      add_pos(s);
      if (annotated) {
        a.doc_id = s.doc_id;
        a.sent_id = s.sent_id;
        c.annotations.push_back({s, a});
      }
      doc.sentences.push_back(s);
    };
    for (const auto& def : per_doc[d]) {
      std::vector<std::string> words{"we", "use"};
      acro::SpanAnnotation a;
      a.spans.push_back({words.size(), words.size() + def.long_form.size(), acro::SpanKind::long_form});
      for (const auto& w : def.long_form) words.push_back(w);
      words.push_back("(");
      a.spans.push_back({words.size(), words.size() + 1, acro::SpanKind::short_form});
      words.push_back(def.acronym);
      words.push_back(")");
      words.push_back(".");
      a.pairs.push_back({1, 0});
      add(words, a, true);
    }
    for (const auto& def : per_doc[d]) {
      add({"the", def.acronym, "works", "well", "."}, {}, false);
      add({"results", "of", def.acronym, "and", "the", def.acronym, "again", "."}, {}, false);
    }
    add({"nothing", "to", "see", "here", "."}, {}, false);
    c.docs.push_back(doc);
  }
  return c;
}

}  // namespace fixture
