#pragma once

// Acronym candidates, long-form window search, a rule-based pairing
// baseline, and BIO encoding of short/long spans.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acro/corpus.hpp"
#include "acro/error.hpp"

namespace acro {

inline bool is_acronym_candidate(std::string_view word, std::size_t min_len = 2) {
  if (word.size() < min_len || word.empty()) return false;
  std::size_t upper = 0;
  for (unsigned char c : word) upper += std::isupper(c) != 0;
  return 2 * upper > word.size();
}

// The letters a long form has to spell, lowercased.
inline std::string acronym_letters(std::string_view acronym) {
  std::string out;
  for (unsigned char c : acronym)
    if (std::isalpha(c)) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

struct SearchLimits {
  std::size_t max_window = 0;  // 0 -> letters + 5
  std::size_t max_skips = 2;

  std::size_t window_for(std::size_t letters) const {
    return max_window == 0 ? letters + 5 : max_window;
  }
};

struct Window {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive

  std::size_t length() const { return end - start; }
  bool operator==(const Window&) const = default;
  auto operator<=>(const Window&) const = default;
};

namespace detail {

inline bool prefix_matches(std::string_view word, std::size_t take, std::string_view letters,
                           std::size_t at) {
  if (word.size() < take || at + take > letters.size()) return false;
  for (std::size_t k = 0; k < take; ++k)
    if (std::tolower(static_cast<unsigned char>(word[k])) != letters[at + k]) return false;
  return true;
}

// Can words[first..last] spell `letters`, each word skipped or contributing
// its first 1..3 characters, with both end words contributing and at most
// `max_skips` skips?
inline bool window_spells(const std::vector<std::string>& words, std::size_t first,
                          std::size_t last, std::string_view letters, std::size_t max_skips) {
  const std::size_t len = last - first;
  const std::size_t m = letters.size();
  // reach[i][c] = fewest skips to consume words[first..first+i) and c letters
  constexpr std::size_t kInf = static_cast<std::size_t>(-1);
  std::vector<std::size_t> reach((len + 1) * (m + 1), kInf);
  auto at = [&](std::size_t i, std::size_t c) -> std::size_t& { return reach[i * (m + 1) + c]; };
  at(0, 0) = 0;
  for (std::size_t i = 0; i < len; ++i) {
    const std::string& w = words[first + i];
    const bool must_take = i == 0 || i + 1 == len;
    for (std::size_t c = 0; c <= m; ++c) {
      std::size_t skips = at(i, c);
      if (skips == kInf) continue;
      if (!must_take && skips + 1 <= max_skips) at(i + 1, c) = std::min(at(i + 1, c), skips + 1);
      for (std::size_t take = 1; take <= 3; ++take)
        if (prefix_matches(w, take, letters, c)) at(i + 1, c + take) = std::min(at(i + 1, c + take), skips);
    }
  }
  return at(len, m) != kInf;
}

}  // namespace detail

// Every window (excluding the acronym token) whose words can spell the
// acronym's letters, ordered by (start, end).
inline std::vector<Window> find_long_form_candidates(const std::vector<std::string>& words,
                                                     std::size_t acronym_index,
                                                     const SearchLimits& limits = {}) {
  std::vector<Window> out;
  if (acronym_index >= words.size()) return out;
  const std::string letters = acronym_letters(words[acronym_index]);
  if (letters.empty()) return out;
  const std::size_t max_window = limits.window_for(letters.size());
  const std::size_t n = words.size();
  for (std::size_t start = 0; start < n; ++start) {
    for (std::size_t end = start + 1; end <= n && end - start <= max_window; ++end) {
      if (start <= acronym_index && acronym_index < end) break;
      if (detail::window_spells(words, start, end, letters, limits.max_skips))
        out.push_back({start, end});
    }
  }
  return out;
}

inline std::vector<Window> find_long_form_candidates(const Sentence& sentence,
                                                     std::size_t acronym_index,
                                                     const SearchLimits& limits = {}) {
  return find_long_form_candidates(sentence.words(), acronym_index, limits);
}

inline bool has_acronym_with_long_form(const Sentence& s, const SearchLimits& limits,
                                       std::size_t min_len) {
  const auto words = s.words();
  for (std::size_t i = 0; i < words.size(); ++i)
    if (is_acronym_candidate(words[i], min_len) &&
        !find_long_form_candidates(words, i, limits).empty())
      return true;
  return false;
}

inline std::vector<Sentence> filter_annotation_sentences(const std::vector<Document>& corpus,
                                                         const SearchLimits& limits = {},
                                                         std::size_t min_len = 2) {
  std::vector<Sentence> kept;
  for (const auto& d : corpus)
    for (const auto& s : d.sentences)
      if (has_acronym_with_long_form(s, limits, min_len)) kept.push_back(s);
  return kept;
}

// ---------------------------------------------------------------------------
// Span annotations

enum class SpanKind { short_form, long_form };

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  SpanKind kind = SpanKind::short_form;

  std::size_t length() const { return end - start; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

struct SpanAnnotation {
  std::string doc_id;
  std::string sent_id;
  std::vector<Span> spans;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (short span id, long span id)

  bool operator==(const SpanAnnotation&) const = default;
};

inline void check_annotation(const SpanAnnotation& a, std::size_t sentence_len) {
  const auto where = "annotation of sentence " + a.sent_id;
  for (std::size_t i = 0; i < a.spans.size(); ++i) {
    const Span& s = a.spans[i];
    if (!(s.start < s.end && s.end <= sentence_len))
      throw DataError(where + ": span " + std::to_string(i) + " out of bounds");
    for (std::size_t j = 0; j < i; ++j)
      if (a.spans[j].kind == s.kind && a.spans[j].overlaps(s))
        throw DataError(where + ": spans " + std::to_string(j) + " and " + std::to_string(i) +
                        " overlap");
  }
  for (auto [sh, lo] : a.pairs) {
    if (sh >= a.spans.size() || lo >= a.spans.size() ||
        a.spans[sh].kind != SpanKind::short_form || a.spans[lo].kind != SpanKind::long_form)
      throw DataError(where + ": pair (" + std::to_string(sh) + "," + std::to_string(lo) +
                      ") does not join a short and a long span");
  }
}

inline std::string span_text(const Sentence& s, const Span& span) {
  std::string out;
  for (std::size_t i = span.start; i < span.end; ++i) {
    if (i > span.start) out.push_back(' ');
    out += s.tokens[i].text;
  }
  return out;
}

// ---------------------------------------------------------------------------
// BIO labels

enum class BioLabel : std::size_t { b_acronym = 0, i_acronym, b_long, i_long, o };

inline constexpr std::size_t kNumBioLabels = 5;

inline constexpr std::array<std::string_view, kNumBioLabels> kBioNames = {
    "B-acronym", "I-acronym", "B-long", "I-long", "O"};

inline std::string_view to_string(BioLabel l) { return kBioNames[static_cast<std::size_t>(l)]; }

inline BioLabel parse_bio(std::string_view name) {
  for (std::size_t i = 0; i < kNumBioLabels; ++i)
    if (kBioNames[i] == name) return static_cast<BioLabel>(i);
  throw DataError("unknown BIO label '" + std::string(name) + "'");
}

using BioSequence = std::vector<BioLabel>;

// Spans of different kinds may overlap in a SpanAnnotation but not in BIO.
inline BioSequence spans_to_bio(const SpanAnnotation& a, std::size_t sentence_len) {
  check_annotation(a, sentence_len);
  BioSequence out(sentence_len, BioLabel::o);
  for (const auto& s : a.spans) {
    for (std::size_t i = s.start; i < s.end; ++i)
      if (out[i] != BioLabel::o)
        throw DataError("annotation of sentence " + a.sent_id +
                        ": overlapping short and long spans at token " + std::to_string(i) +
                        " cannot be encoded in BIO");
    const bool sh = s.kind == SpanKind::short_form;
    out[s.start] = sh ? BioLabel::b_acronym : BioLabel::b_long;
    for (std::size_t i = s.start + 1; i < s.end; ++i)
      out[i] = sh ? BioLabel::i_acronym : BioLabel::i_long;
  }
  return out;
}

// Strict mode rejects an I-x that does not continue a span of kind x.
// Lenient mode opens a new span there instead, as decoders may emit it.
inline std::vector<Span> bio_to_spans(const BioSequence& labels, bool strict = true) {
  std::vector<Span> out;
  std::optional<Span> open;
  auto close = [&] {
    if (open) out.push_back(*open);
    open.reset();
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const BioLabel l = labels[i];
    if (l == BioLabel::o) {
      close();
      continue;
    }
    const SpanKind kind =
        (l == BioLabel::b_acronym || l == BioLabel::i_acronym) ? SpanKind::short_form
                                                               : SpanKind::long_form;
    const bool begins = l == BioLabel::b_acronym || l == BioLabel::b_long;
    if (!begins && open && open->kind == kind) {
      open->end = i + 1;
      continue;
    }
    if (!begins && strict)
      throw DataError("invalid BIO transition at position " + std::to_string(i) + ": " +
                      std::string(to_string(l)) + " after " +
                      (i == 0 ? std::string("start") : std::string(to_string(labels[i - 1]))));
    close();
    open = Span{i, i + 1, kind};
  }
  close();
  return out;
}

inline SpanAnnotation bio_to_annotation(const Sentence& s, const BioSequence& labels,
                                        bool strict = true) {
  if (labels.size() != s.size())
    throw DataError("sentence " + s.sent_id + ": " + std::to_string(labels.size()) +
                    " labels for " + std::to_string(s.size()) + " tokens");
  return SpanAnnotation{s.doc_id, s.sent_id, bio_to_spans(labels, strict), {}};
}

// ---------------------------------------------------------------------------
// Rule-based pairing baseline

namespace detail {

inline bool is_parenthesized(const std::vector<std::string>& w, std::size_t i) {
  return i > 0 && i + 1 < w.size() && w[i - 1] == "(" && w[i + 1] == ")";
}

// Candidate windows for acronym i in preference order.
inline std::vector<Window> ranked_windows(const std::vector<std::string>& words, std::size_t i,
                                          const SearchLimits& limits) {
  auto windows = find_long_form_candidates(words, i, limits);
  std::vector<Window> before, after;
  for (const auto& w : windows) (w.end <= i ? before : after).push_back(w);
  // Nearest end first; among equal ends the longest window.
  std::sort(before.begin(), before.end(), [](const Window& a, const Window& b) {
    return a.end != b.end ? a.end > b.end : a.start < b.start;
  });
  // Nearest start first; among equal starts the shortest window.
  std::sort(after.begin(), after.end(), [](const Window& a, const Window& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  std::vector<Window> ranked;
  if (is_parenthesized(words, i)) {
    for (const auto& w : before)
      if (w.end + 1 == i) ranked.push_back(w);
  }
  for (const auto& w : before)
    if (!(is_parenthesized(words, i) && w.end + 1 == i)) ranked.push_back(w);
  ranked.insert(ranked.end(), after.begin(), after.end());
  return ranked;
}

}  // namespace detail

// Pairs each acronym candidate with one long-form window. Parenthesized
// acronyms are resolved first; windows that collide with spans already
// emitted are passed over. Unpaired candidates get a short span alone,
// unless they sit inside an emitted long span.
inline SpanAnnotation rule_pair_baseline(const Sentence& sentence, const SearchLimits& limits = {},
                                         std::size_t min_len = 2) {
  const auto words = sentence.words();
  SpanAnnotation out{sentence.doc_id, sentence.sent_id, {}, {}};

  std::vector<std::size_t> acronyms;
  for (std::size_t i = 0; i < words.size(); ++i)
    if (is_acronym_candidate(words[i], min_len)) acronyms.push_back(i);
  std::stable_partition(acronyms.begin(), acronyms.end(),
                        [&](std::size_t i) { return detail::is_parenthesized(words, i); });

  auto collides = [&](const Span& s) {
    return std::any_of(out.spans.begin(), out.spans.end(),
                       [&](const Span& o) { return o.overlaps(s); });
  };
  auto inside_acronym = [&](const Window& w) {
    return std::any_of(acronyms.begin(), acronyms.end(), [&](std::size_t a) {
      return a >= w.start && a < w.end &&
             std::any_of(out.spans.begin(), out.spans.end(), [&](const Span& o) {
               return o.kind == SpanKind::short_form && o.start == a;
             });
    });
  };

  std::vector<std::size_t> unpaired;
  for (std::size_t i : acronyms) {
    const Span short_span{i, i + 1, SpanKind::short_form};
    if (collides(short_span)) continue;
    bool paired = false;
    for (const auto& w : detail::ranked_windows(words, i, limits)) {
      const Span long_span{w.start, w.end, SpanKind::long_form};
      if (collides(long_span) || inside_acronym(w)) continue;
      out.spans.push_back(short_span);
      out.spans.push_back(long_span);
      out.pairs.emplace_back(out.spans.size() - 2, out.spans.size() - 1);
      paired = true;
      break;
    }
    if (!paired) unpaired.push_back(i);
  }
  for (std::size_t i : unpaired) {
    const Span short_span{i, i + 1, SpanKind::short_form};
    if (!collides(short_span)) out.spans.push_back(short_span);
  }
  return out;
}

// Recovers short/long pairing for annotations that carry spans only.
// A long span pairs with the nearest free short span whose letters it can
// spell; failing that, with the nearest free short span.
inline std::vector<std::pair<std::size_t, std::size_t>> infer_pairs(const Sentence& s,
                                                                    const std::vector<Span>& spans) {
  const auto words = s.words();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<bool> used(spans.size(), false);
  auto distance = [](const Span& a, const Span& b) {
    return a.end <= b.start ? b.start - a.end : a.start >= b.end ? a.start - b.end : 0;
  };
  for (std::size_t lo = 0; lo < spans.size(); ++lo) {
    if (spans[lo].kind != SpanKind::long_form) continue;
    std::optional<std::size_t> best_match, best_any;
    for (std::size_t sh = 0; sh < spans.size(); ++sh) {
      if (spans[sh].kind != SpanKind::short_form || used[sh]) continue;
      auto closer = [&](std::optional<std::size_t> cur) {
        return !cur || distance(spans[sh], spans[lo]) < distance(spans[*cur], spans[lo]);
      };
      if (closer(best_any)) best_any = sh;
      std::string letters = acronym_letters(span_text(s, spans[sh]));
      if (!letters.empty() &&
          detail::window_spells(words, spans[lo].start, spans[lo].end, letters, spans[lo].length()) &&
          closer(best_match))
        best_match = sh;
    }
    auto pick = best_match ? best_match : best_any;
    if (pick) {
      used[*pick] = true;
      pairs.emplace_back(*pick, lo);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

// ---------------------------------------------------------------------------
// AI dataset JSON-lines: {"doc_id","sent_id","tokens","labels"} with
// optional "pos", "heads" and "pairs" ([[short span id, long span id]]).

struct AiExample {
  Sentence sentence;
  BioSequence labels;
  std::optional<std::vector<std::pair<std::size_t, std::size_t>>> pairs;

  // Spans from the labels, pairs as stored or inferred.
  SpanAnnotation annotation() const {
    SpanAnnotation a = bio_to_annotation(sentence, labels);
    a.pairs = pairs ? *pairs : infer_pairs(sentence, a.spans);
    check_annotation(a, sentence.size());
    return a;
  }
};

inline AiExample ai_example_from_json(const nlohmann::json& j, const std::string& origin) {
  AiExample ex;
  ex.sentence = sentence_from_json(j, origin);
  if (!j.contains("labels")) throw DataError(origin + ": missing field 'labels'");
  try {
    for (const auto& l : j.at("labels").get<std::vector<std::string>>()) ex.labels.push_back(parse_bio(l));
    if (j.contains("pairs")) ex.pairs = j.at("pairs").get<std::vector<std::pair<std::size_t, std::size_t>>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(origin + ": " + e.what());
  }
  if (ex.labels.size() != ex.sentence.size())
    throw DataError(origin + ": field 'labels' has " + std::to_string(ex.labels.size()) +
                    " entries for " + std::to_string(ex.sentence.size()) + " tokens");
  try {
    bio_to_spans(ex.labels);
  } catch (const DataError& e) {
    throw DataError(origin + ": " + e.what());
  }
  return ex;
}

inline nlohmann::json ai_example_to_json(const AiExample& ex) {
  nlohmann::json j = sentence_to_json(ex.sentence);
  std::vector<std::string> labels;
  for (auto l : ex.labels) labels.emplace_back(to_string(l));
  j["labels"] = labels;
  if (ex.pairs) j["pairs"] = *ex.pairs;
  return j;
}

// Pair ids are renumbered to the left-to-right span order that decoding
// the labels produces.
inline AiExample make_ai_example(const Sentence& s, const SpanAnnotation& a) {
  AiExample ex{s, spans_to_bio(a, s.size()), std::nullopt};
  const auto decoded = bio_to_spans(ex.labels);
  auto renumber = [&](std::size_t old) {
    return static_cast<std::size_t>(std::find(decoded.begin(), decoded.end(), a.spans[old]) - decoded.begin());
  };
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (auto [sh, lo] : a.pairs) pairs.emplace_back(renumber(sh), renumber(lo));
  std::sort(pairs.begin(), pairs.end());
  ex.pairs = pairs;
  return ex;
}

inline std::vector<AiExample> read_ai_dataset(std::istream& in, const std::string& name) {
  std::vector<AiExample> out;
  for_each_json_line(in, name, [&](const nlohmann::json& j, const std::string& origin) {
    out.push_back(ai_example_from_json(j, origin));
  });
  return out;
}

inline std::vector<AiExample> load_ai_dataset(const std::string& path) {
  auto in = detail::open_input(path);
  return read_ai_dataset(in, path);
}

inline void write_ai_dataset(std::ostream& out, const std::vector<AiExample>& data) {
  for (const auto& ex : data) out << ai_example_to_json(ex).dump() << '\n';
}

}  // namespace acro
