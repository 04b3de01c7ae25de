#pragma once

// Macro-averaged precision/recall/F1 for identification (exact span
// boundaries) and disambiguation (per long form), dataset splitting, and
// dataset statistics.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "acro/candidates.hpp"
#include "acro/dictionary.hpp"
#include "acro/error.hpp"

namespace acro {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold count
  std::size_t predicted = 0;
  std::size_t correct = 0;
};

struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrfReport {
  std::map<std::string, ClassScores> per_class;
  MacroScores macro;
};

inline double harmonic_f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

// How a class with no predictions (or no gold items) enters the macro mean.
// zero: its precision (recall) counts as 0. exclude: it is left out of the
// macro precision (recall) mean, and out of the macro F1 mean.
enum class UndefinedScore { zero, exclude };

namespace detail {

inline PrfReport finish_report(std::map<std::string, ClassScores> counts, UndefinedScore mode) {
  PrfReport rep;
  double sp = 0, sr = 0, sf = 0;
  std::size_t np = 0, nr = 0, nf = 0;
  for (auto& [name, c] : counts) {
    if (c.support == 0 && c.predicted == 0) {
      // Nothing to find and nothing found: perfect but uninformative.
      c.precision = c.recall = c.f1 = 1.0;
      continue;
    }
    const bool p_def = c.predicted > 0;
    const bool r_def = c.support > 0;
    c.precision = p_def ? static_cast<double>(c.correct) / static_cast<double>(c.predicted) : 0.0;
    c.recall = r_def ? static_cast<double>(c.correct) / static_cast<double>(c.support) : 0.0;
    c.f1 = harmonic_f1(c.precision, c.recall);
    if (mode == UndefinedScore::zero || p_def) sp += c.precision, ++np;
    if (mode == UndefinedScore::zero || r_def) sr += c.recall, ++nr;
    if (mode == UndefinedScore::zero || (p_def && r_def)) sf += c.f1, ++nf;
  }
  rep.per_class = std::move(counts);
  rep.macro.precision = np ? sp / static_cast<double>(np) : 1.0;
  rep.macro.recall = nr ? sr / static_cast<double>(nr) : 1.0;
  rep.macro.f1 = nf ? sf / static_cast<double>(nf) : 1.0;
  return rep;
}

}  // namespace detail

// Per-long-form scores over the union of gold and predicted classes.
inline PrfReport evaluate_ad(const std::vector<std::string>& gold, const std::vector<std::string>& pred,
                             UndefinedScore mode = UndefinedScore::zero) {
  if (gold.size() != pred.size())
    throw DataError("evaluate_ad: " + std::to_string(gold.size()) + " gold labels but " +
                    std::to_string(pred.size()) + " predictions");
  std::map<std::string, ClassScores> counts;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++counts[gold[i]].support;
    ++counts[pred[i]].predicted;
    if (gold[i] == pred[i]) ++counts[gold[i]].correct;
  }
  return detail::finish_report(std::move(counts), mode);
}

inline PrfReport evaluate_ad(const std::vector<ADSample>& gold, const std::vector<std::size_t>& pred,
                             const std::vector<std::string>& id_names,
                             UndefinedScore mode = UndefinedScore::zero) {
  if (gold.size() != pred.size())
    throw DataError("evaluate_ad: " + std::to_string(gold.size()) + " gold samples but " +
                    std::to_string(pred.size()) + " predictions");
  std::vector<std::string> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (pred[i] >= id_names.size()) throw DataError("evaluate_ad: prediction id out of range");
    g.push_back(gold[i].long_form);
    p.push_back(id_names[pred[i]]);
  }
  return evaluate_ad(g, p, mode);
}

inline constexpr const char* kShortClass = "acronym";
inline constexpr const char* kLongClass = "long";

// Exact-boundary span matching per kind. Both sides must annotate the same
// set of sentences.
inline PrfReport evaluate_ai(const std::vector<SpanAnnotation>& gold,
                             const std::vector<SpanAnnotation>& pred) {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, const SpanAnnotation*> by_id;
  for (const auto& g : gold)
    if (!by_id.emplace(Key{g.doc_id, g.sent_id}, &g).second)
      throw DataError("evaluate_ai: duplicate gold sentence " + g.sent_id);
  std::set<Key> seen;
  std::map<std::string, ClassScores> counts{{kShortClass, {}}, {kLongClass, {}}};
  auto cls = [](SpanKind k) { return k == SpanKind::short_form ? kShortClass : kLongClass; };
  for (const auto& p : pred) {
    Key key{p.doc_id, p.sent_id};
    auto it = by_id.find(key);
    if (it == by_id.end()) throw DataError("evaluate_ai: predicted sentence " + p.sent_id + " has no gold annotation");
    if (!seen.insert(key).second) throw DataError("evaluate_ai: duplicate predicted sentence " + p.sent_id);
    const auto& gs = it->second->spans;
    std::set<Span> gold_set(gs.begin(), gs.end());
    for (const auto& s : std::set<Span>(p.spans.begin(), p.spans.end())) {
      auto& c = counts[cls(s.kind)];
      ++c.predicted;
      c.correct += gold_set.count(s);
    }
    for (const auto& s : gold_set) ++counts[cls(s.kind)].support;
  }
  if (seen.size() != by_id.size())
    throw DataError("evaluate_ai: " + std::to_string(by_id.size() - seen.size()) +
                    " gold sentences have no prediction");
  return detail::finish_report(std::move(counts), UndefinedScore::zero);
}

inline nlohmann::json report_to_json(const PrfReport& r) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [name, c] : r.per_class)
    per[name] = {{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1},
                 {"support", c.support},     {"predicted", c.predicted}, {"correct", c.correct}};
  return {{"per_class", per},
          {"macro", {{"precision", r.macro.precision}, {"recall", r.macro.recall}, {"f1", r.macro.f1}}}};
}

inline std::string report_to_table(const PrfReport& r) {
  std::size_t width = 5;
  for (const auto& [name, c] : r.per_class) width = std::max(width, name.size());
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  auto line = [&](const std::string& name, double p, double rc, double f, const std::string& sup) {
    out << std::left << std::setw(static_cast<int>(width)) << name << "  " << std::right
        << std::setw(9) << p << "  " << std::setw(9) << rc << "  " << std::setw(9) << f << "  "
        << std::setw(7) << sup << '\n';
  };
  out << std::left << std::setw(static_cast<int>(width)) << "class" << "  " << std::right
      << std::setw(9) << "precision" << "  " << std::setw(9) << "recall" << "  " << std::setw(9)
      << "f1" << "  " << std::setw(7) << "support" << '\n';
  for (const auto& [name, c] : r.per_class) line(name, c.precision, c.recall, c.f1, std::to_string(c.support));
  line("macro", r.macro.precision, r.macro.recall, r.macro.f1, "");
  return out.str();
}

// ---------------------------------------------------------------------------

enum class SplitUnit { sentence, document };

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

template <class T>
struct Split {
  std::vector<T> train, dev, test;
};

// Seeded shuffle, then a contiguous cut. With SplitUnit::document, items
// sharing a document key stay in one part and the cut falls at the first
// document boundary past each target size.
template <class T>
Split<T> split_dataset(const std::vector<T>& items, SplitRatios ratios, std::uint64_t seed,
                       SplitUnit unit, const std::function<std::string(const T&)>& doc_of = {}) {
  if (items.size() < 3) throw DataError("split_dataset: need at least 3 items, got " + std::to_string(items.size()));
  const double total = ratios.train + ratios.dev + ratios.test;
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0 || std::abs(total - 1.0) > 1e-9)
    throw ConfigError("split ratios must be non-negative and sum to 1");
  if (unit == SplitUnit::document && !doc_of) throw ConfigError("document split needs a document key");

  // Groups of item indices; one per item or one per document.
  std::vector<std::vector<std::size_t>> groups;
  if (unit == SplitUnit::sentence) {
    for (std::size_t i = 0; i < items.size(); ++i) groups.push_back({i});
  } else {
    std::map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto [it, fresh] = where.emplace(doc_of(items[i]), groups.size());
      if (fresh) groups.emplace_back();
      groups[it->second].push_back(i);
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  const auto n = static_cast<double>(items.size());
  const auto train_target = static_cast<std::size_t>(std::llround(n * ratios.train));
  const auto dev_target = static_cast<std::size_t>(std::llround(n * ratios.dev));
  Split<T> out;
  std::size_t g = 0;
  auto fill = [&](std::vector<T>& part, std::size_t target) {
    while (g < groups.size() && part.size() < target) {
      for (auto i : groups[g]) part.push_back(items[i]);
      ++g;
    }
  };
  fill(out.train, train_target);
  fill(out.dev, dev_target);
  fill(out.test, items.size());
  return out;
}

// ---------------------------------------------------------------------------

// Sample counts grouped by how many long forms the acronym has, and long
// forms with fewer than / at least `threshold` samples.
inline nlohmann::json dataset_stats(const std::vector<ADSample>& samples, std::size_t threshold = 10) {
  std::map<std::string, std::set<std::string>> forms;
  std::map<std::string, std::size_t> per_form;
  std::map<std::string, std::size_t> per_acronym;
  for (const auto& s : samples) {
    forms[s.acronym].insert(s.long_form);
    ++per_form[s.long_form];
    ++per_acronym[s.acronym];
  }
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> by_k;  // k -> (acronyms, samples)
  for (const auto& [a, f] : forms) {
    auto& slot = by_k[f.size()];
    ++slot.first;
    slot.second += per_acronym[a];
  }
  nlohmann::json dist = nlohmann::json::array();
  for (const auto& [k, v] : by_k)
    dist.push_back({{"long_forms_per_acronym", k}, {"acronyms", v.first}, {"samples", v.second}});
  std::size_t below = 0, above = 0;
  for (const auto& [f, c] : per_form) (c < threshold ? below : above) += 1;
  return {{"samples", samples.size()},
          {"acronyms", forms.size()},
          {"long_forms", per_form.size()},
          {"by_long_forms_per_acronym", dist},
          {"sample_threshold", threshold},
          {"long_forms_below_threshold", below},
          {"long_forms_at_or_above_threshold", above}};
}

}  // namespace acro
