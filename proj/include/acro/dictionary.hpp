#pragma once

// Long-form normalization, the ambiguous-acronym dictionary, and generation
// of disambiguation samples under one sense per document.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "acro/candidates.hpp"
#include "acro/corpus.hpp"
#include "acro/error.hpp"

namespace acro {

// Byte-level Levenshtein distance, two-row DP.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct LongFormCount {
  std::string long_form;
  std::size_t count = 0;

  bool operator==(const LongFormCount&) const = default;
};

struct NormalizedLongForms {
  std::vector<LongFormCount> canonical;  // by count desc, then string asc
  std::map<std::string, std::string> variant_map;  // absorbed variant -> canonical
};

// Forms are visited by descending count (ties: lexicographically smaller
// first). Each unabsorbed form becomes canonical and absorbs every later
// unabsorbed form within `threshold` edits, compared lowercased. Duplicate
// inputs are summed first.
inline NormalizedLongForms normalize_long_forms(const std::vector<LongFormCount>& raw,
                                                std::size_t threshold = 2) {
  std::map<std::string, std::size_t> merged;
  for (const auto& r : raw) merged[r.long_form] += r.count;
  std::vector<LongFormCount> order;
  for (auto& [lf, c] : merged) order.push_back({lf, c});
  auto by_freq = [](const LongFormCount& a, const LongFormCount& b) {
    return a.count != b.count ? a.count > b.count : a.long_form < b.long_form;
  };
  std::sort(order.begin(), order.end(), by_freq);

  std::vector<std::string> lowered;
  for (const auto& o : order) lowered.push_back(lowercase(o.long_form));

  NormalizedLongForms out;
  std::vector<bool> absorbed(order.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (absorbed[i]) continue;
    LongFormCount canon = order[i];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (absorbed[j] || edit_distance(lowered[i], lowered[j]) > threshold) continue;
      absorbed[j] = true;
      canon.count += order[j].count;
      out.variant_map[order[j].long_form] = order[i].long_form;
    }
    out.canonical.push_back(std::move(canon));
  }
  std::sort(out.canonical.begin(), out.canonical.end(), by_freq);
  return out;
}

// ---------------------------------------------------------------------------

class AcronymDictionary {
 public:
  using Entries = std::map<std::string, std::vector<LongFormCount>>;

  AcronymDictionary() = default;
  AcronymDictionary(Entries entries, std::map<std::string, std::string> variant_map)
      : entries_(std::move(entries)), variant_map_(std::move(variant_map)) {
    validate();
  }

  const Entries& entries() const { return entries_; }
  const std::map<std::string, std::string>& variant_map() const { return variant_map_; }
  bool contains(const std::string& acronym) const { return entries_.count(acronym) != 0; }
  std::size_t size() const { return entries_.size(); }

  const std::vector<LongFormCount>& meanings(const std::string& acronym) const {
    auto it = entries_.find(acronym);
    if (it == entries_.end()) throw DataError("acronym '" + acronym + "' is not in the dictionary");
    return it->second;
  }

  bool has_meaning(const std::string& acronym, const std::string& long_form) const {
    auto it = entries_.find(acronym);
    if (it == entries_.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const LongFormCount& m) { return m.long_form == long_form; });
  }

  // Canonical meaning of `acronym` that a raw long form stands for, if any.
  std::optional<std::string> canonical(const std::string& acronym, const std::string& raw) const {
    if (has_meaning(acronym, raw)) return raw;
    auto v = variant_map_.find(raw);
    if (v != variant_map_.end() && has_meaning(acronym, v->second)) return v->second;
    return std::nullopt;
  }

  double mean_long_forms() const {
    if (entries_.empty()) return 0.0;
    std::size_t total = 0;
    for (const auto& [a, m] : entries_) total += m.size();
    return static_cast<double>(total) / static_cast<double>(entries_.size());
  }

 private:
  void validate() const {
    std::set<std::string> targets;
    for (const auto& [acronym, meanings] : entries_) {
      if (meanings.size() < 2)
        throw DataError("dictionary entry '" + acronym + "' has fewer than 2 long forms");
      std::set<std::string> seen;
      for (const auto& m : meanings) {
        if (m.count < 1)
          throw DataError("dictionary entry '" + acronym + "' has a zero frequency");
        if (!seen.insert(m.long_form).second)
          throw DataError("dictionary entry '" + acronym + "' repeats '" + m.long_form + "'");
        targets.insert(m.long_form);
      }
    }
    for (const auto& [raw, canon] : variant_map_)
      if (!targets.count(canon))
        throw DataError("variant_map target '" + canon + "' is not a dictionary long form");
  }

  Entries entries_;
  std::map<std::string, std::string> variant_map_;
};

// An annotated sentence: spans plus the tokens they index.
struct AnnotatedSentence {
  Sentence sentence;
  SpanAnnotation annotation;
};

// Short/long surface pairs of one annotated sentence.
inline std::vector<std::pair<std::string, std::string>> defined_pairs(const AnnotatedSentence& a) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto [sh, lo] : a.annotation.pairs)
    out.emplace_back(span_text(a.sentence, a.annotation.spans[sh]),
                     span_text(a.sentence, a.annotation.spans[lo]));
  return out;
}

// Groups paired long forms by acronym surface (case-sensitive), normalizes
// each group, and keeps acronyms left with two or more meanings. Overrides
// rewrite raw long forms before grouping.
inline AcronymDictionary build_dictionary(const std::vector<AnnotatedSentence>& annotations,
                                          std::size_t threshold = 2,
                                          const std::map<std::string, std::string>& overrides = {}) {
  std::map<std::string, std::map<std::string, std::size_t>> groups;
  for (const auto& a : annotations) {
    check_annotation(a.annotation, a.sentence.size());
    for (auto [acronym, long_form] : defined_pairs(a)) {
      if (auto it = overrides.find(long_form); it != overrides.end()) long_form = it->second;
      ++groups[acronym][long_form];
    }
  }
  AcronymDictionary::Entries entries;
  std::map<std::string, std::string> variants;
  for (const auto& [acronym, forms] : groups) {
    std::vector<LongFormCount> raw;
    for (const auto& [lf, c] : forms) raw.push_back({lf, c});
    auto norm = normalize_long_forms(raw, threshold);
    if (norm.canonical.size() < 2) continue;
    entries[acronym] = norm.canonical;
    // First acronym (in sorted order) to map a raw form wins.
    for (const auto& [raw_lf, canon] : norm.variant_map) variants.emplace(raw_lf, canon);
  }
  for (const auto& [raw_lf, canon] : overrides) {
    bool used = std::any_of(entries.begin(), entries.end(), [&](const auto& e) {
      return std::any_of(e.second.begin(), e.second.end(),
                         [&](const LongFormCount& m) { return m.long_form == canon; });
    });
    if (used && raw_lf != canon) variants.emplace(raw_lf, canon);
  }
  return AcronymDictionary(std::move(entries), std::move(variants));
}

// ---------------------------------------------------------------------------

struct ADSample {
  Sentence sentence;
  std::size_t acronym_index = 0;
  std::string acronym;
  std::string long_form;  // canonical

  bool operator==(const ADSample&) const = default;
};

struct ConflictReport {
  std::string doc_id;
  std::string acronym;
  std::vector<std::string> long_forms;
};

struct ADGeneration {
  std::vector<ADSample> samples;
  std::vector<ConflictReport> conflicts;
};

// For each dictionary acronym defined in a document with one canonical
// meaning, every occurrence of the acronym token anywhere in that document
// becomes a sample with that meaning. Documents defining two meanings for
// one acronym are skipped for it and reported.
inline ADGeneration generate_ad_samples(const std::vector<Document>& corpus,
                                        const std::vector<AnnotatedSentence>& annotations,
                                        const AcronymDictionary& dict) {
  std::map<std::string, std::map<std::string, std::set<std::string>>> defined;  // doc -> acronym -> meanings
  for (const auto& a : annotations) {
    for (const auto& [acronym, raw] : defined_pairs(a)) {
      auto canon = dict.canonical(acronym, raw);
      if (canon) defined[a.annotation.doc_id][acronym].insert(*canon);
    }
  }

  ADGeneration out;
  for (const auto& doc : corpus) {
    auto d = defined.find(doc.doc_id);
    if (d == defined.end()) continue;
    std::map<std::string, std::string> sense;
    for (const auto& [acronym, meanings] : d->second) {
      if (meanings.size() == 1) {
        sense[acronym] = *meanings.begin();
      } else {
        out.conflicts.push_back({doc.doc_id, acronym, {meanings.begin(), meanings.end()}});
      }
    }
    if (sense.empty()) continue;
    for (const auto& s : doc.sentences)
      for (const auto& t : s.tokens)
        if (auto it = sense.find(t.text); it != sense.end())
          out.samples.push_back({s, t.index, t.text, it->second});
  }
  return out;
}

// Keeps at most k samples per long form, chosen uniformly with `seed`;
// survivors keep their input order.
inline std::vector<ADSample> subsample_per_long_form(const std::vector<ADSample>& samples,
                                                     std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ConfigError("subsample size k must be at least 1");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].long_form].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<bool> keep(samples.size(), false);
  for (auto& [lf, idx] : groups) {
    if (idx.size() > k) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(k);
    }
    for (auto i : idx) keep[i] = true;
  }
  std::vector<ADSample> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (keep[i]) out.push_back(samples[i]);
  return out;
}

// ---------------------------------------------------------------------------
// File formats

inline nlohmann::json dictionary_to_json(const AcronymDictionary& dict) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [acronym, meanings] : dict.entries()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : meanings) arr.push_back({{"long_form", m.long_form}, {"freq", m.count}});
    j[acronym] = arr;
  }
  j["variant_map"] = dict.variant_map();
  return j;
}

inline AcronymDictionary dictionary_from_json(const nlohmann::json& j, const std::string& origin) {
  if (!j.is_object()) throw DataError(origin + ": dictionary must be a JSON object");
  AcronymDictionary::Entries entries;
  std::map<std::string, std::string> variants;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "variant_map") {
        variants = value.get<std::map<std::string, std::string>>();
        continue;
      }
      auto& meanings = entries[key];
      for (const auto& m : value) {
        auto freq = m.at("freq").get<long long>();
        if (freq < 1) throw DataError(origin + ": entry '" + key + "' has freq < 1");
        meanings.push_back({m.at("long_form").get<std::string>(), static_cast<std::size_t>(freq)});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  try {
    return AcronymDictionary(std::move(entries), std::move(variants));
  } catch (const DataError& e) {
    throw DataError(origin + ": " + e.what());
  }
}

inline AcronymDictionary load_dictionary(const std::string& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  return dictionary_from_json(j, path);
}

inline std::map<std::string, std::string> load_overrides(const std::string& path) {
  auto in = detail::open_input(path);
  try {
    return nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": override file must map strings to strings: " + e.what());
  }
}

inline nlohmann::json ad_sample_to_json(const ADSample& s) {
  nlohmann::json j;
  j["doc_id"] = s.sentence.doc_id;
  j["sent_id"] = s.sentence.sent_id;
  j["tokens"] = s.sentence.words();
  std::vector<std::string> pos;
  std::vector<int> heads;
  for (const auto& t : s.sentence.tokens) {
    pos.push_back(t.pos);
    heads.push_back(t.head);
  }
  j["pos"] = s.sentence.has_pos() ? pos : std::vector<std::string>{};
  j["heads"] = s.sentence.has_heads() ? heads : std::vector<int>{};
  j["acronym_index"] = s.acronym_index;
  j["acronym"] = s.acronym;
  j["long_form"] = s.long_form;
  return j;
}

inline ADSample ad_sample_from_json(const nlohmann::json& j, const std::string& origin) {
  ADSample s;
  s.sentence = sentence_from_json(j, origin);
  try {
    s.acronym_index = j.at("acronym_index").get<std::size_t>();
    s.acronym = j.at("acronym").get<std::string>();
    s.long_form = j.at("long_form").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  if (s.acronym_index >= s.sentence.size() || s.sentence[s.acronym_index].text != s.acronym)
    throw DataError(origin + ": token at acronym_index is not '" + s.acronym + "'");
  return s;
}

inline std::vector<ADSample> read_ad_dataset(std::istream& in, const std::string& name) {
  std::vector<ADSample> out;
  for_each_json_line(in, name, [&](const nlohmann::json& j, const std::string& origin) {
    out.push_back(ad_sample_from_json(j, origin));
  });
  return out;
}

inline std::vector<ADSample> load_ad_dataset(const std::string& path) {
  auto in = detail::open_input(path);
  return read_ad_dataset(in, path);
}

inline void write_ad_dataset(std::ostream& out, const std::vector<ADSample>& samples) {
  for (const auto& s : samples) out << ad_sample_to_json(s).dump() << '\n';
}

}  // namespace acro
