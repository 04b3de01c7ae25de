#pragma once

// Document model and readers for pre-parsed corpora and static word vectors.

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "acro/error.hpp"

namespace acro {

inline constexpr int kRoot = -1;    // head of the sentence root
inline constexpr int kNoHead = -2;  // head not supplied by the source

struct Token {
  std::string text;
  std::string pos;  // empty when untagged
  int head = kNoHead;
  std::size_t index = 0;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::string doc_id;
  std::string sent_id;

  std::size_t size() const { return tokens.size(); }
  const Token& operator[](std::size_t i) const { return tokens[i]; }

  bool has_heads() const {
    for (const auto& t : tokens)
      if (t.head == kNoHead) return false;
    return !tokens.empty();
  }

  bool has_pos() const {
    for (const auto& t : tokens)
      if (t.pos.empty()) return false;
    return true;
  }

  std::vector<std::string> words() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.text);
    return out;
  }

  bool operator==(const Sentence&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;

  bool operator==(const Document&) const = default;
};

enum class CorpusFormat { conllu_like, json_lines };

namespace detail {

inline std::string where(const std::string& file, std::size_t line) {
  return file + ":" + std::to_string(line);
}

// Returns the index of a token on a head cycle, or nullopt.
inline std::optional<std::size_t> find_head_cycle(const Sentence& s) {
  const std::size_t n = s.size();
  // 0 = unvisited, 1 = on current path, 2 = known to reach root
  std::vector<int> state(n, 0);
  for (std::size_t start = 0; start < n; ++start) {
    std::vector<std::size_t> path;
    std::size_t cur = start;
    while (true) {
      if (state[cur] == 2) break;
      if (state[cur] == 1) return cur;
      state[cur] = 1;
      path.push_back(cur);
      int h = s.tokens[cur].head;
      if (h < 0) break;
      cur = static_cast<std::size_t>(h);
    }
    for (auto p : path) state[p] = 2;
  }
  return std::nullopt;
}

}  // namespace detail

// Checks per-token invariants and, when heads are present, acyclicity.
inline void check_sentence(const Sentence& s, const std::string& origin) {
  const auto n = static_cast<int>(s.size());
  if (n == 0) throw DataError(origin + ": sentence " + s.sent_id + " has no tokens");
  bool any_head = false;
  for (const auto& t : s.tokens) {
    if (t.text.empty())
      throw DataError(origin + ": empty FORM at token " + std::to_string(t.index) +
                      " of sentence " + s.sent_id);
    if (t.head == kNoHead) continue;
    any_head = true;
    if (t.head < kRoot || t.head >= n)
      throw DataError(origin + ": HEAD out of range at token " + std::to_string(t.index) +
                      " of sentence " + s.sent_id);
    if (t.head == static_cast<int>(t.index))
      throw DataError(origin + ": token " + std::to_string(t.index) + " of sentence " +
                      s.sent_id + " is its own head");
  }
  if (any_head && !s.has_heads())
    throw DataError(origin + ": sentence " + s.sent_id + " mixes present and absent heads");
  if (any_head && detail::find_head_cycle(s))
    throw DataError("cyclic head links in sentence " + s.sent_id);
}

// Stricter check for consumers that need a dependency tree.
inline void check_tree(const Sentence& s) {
  if (!s.has_heads()) throw DataError("sentence " + s.sent_id + " has no dependency heads");
  check_sentence(s, "sentence " + s.sent_id);
  std::size_t roots = 0;
  for (const auto& t : s.tokens) roots += t.head == kRoot;
  if (roots != 1)
    throw DataError("sentence " + s.sent_id + " has " + std::to_string(roots) +
                    " root tokens, expected 1");
}

namespace detail {

// Groups sentences into documents in order of first appearance of doc_id.
class DocumentBuilder {
 public:
  void add(Sentence s) {
    auto it = where_.find(s.doc_id);
    if (it == where_.end()) {
      where_.emplace(s.doc_id, docs_.size());
      docs_.push_back(Document{s.doc_id, {}});
      docs_.back().sentences.push_back(std::move(s));
    } else {
      docs_[it->second].sentences.push_back(std::move(s));
    }
  }
  std::vector<Document> take() { return std::move(docs_); }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> where_;
};

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<long> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    long v = std::stol(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

}  // namespace detail

inline std::vector<Document> read_conllu(std::istream& in, const std::string& name) {
  detail::DocumentBuilder docs;
  std::string doc_id = "doc0";
  std::string sent_id;
  Sentence cur;
  std::size_t sent_line = 0;
  std::size_t counter = 0;

  auto flush = [&] {
    if (cur.tokens.empty()) return;
    cur.doc_id = doc_id;
    cur.sent_id = sent_id.empty() ? doc_id + "-" + std::to_string(counter) : sent_id;
    ++counter;
    check_sentence(cur, detail::where(name, sent_line));
    docs.add(std::move(cur));
    cur = Sentence{};
    sent_id.clear();
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto key = detail::trim(std::string_view(line).substr(1, eq - 1));
      auto value = detail::trim(std::string_view(line).substr(eq + 1));
      if (key == "doc_id") {
        if (!cur.tokens.empty())
          throw DataError(detail::where(name, lineno) + ": doc_id inside a sentence");
        doc_id = value;
      } else if (key == "sent_id") {
        sent_id = value;
      }
      continue;
    }
    auto fields = detail::split_tabs(line);
    if (fields.size() != 4)
      throw DataError(detail::where(name, lineno) + ": expected 4 tab-separated fields, got " +
                      std::to_string(fields.size()));
    auto idx = detail::parse_int(fields[0]);
    if (!idx || *idx != static_cast<long>(cur.tokens.size()) + 1)
      throw DataError(detail::where(name, lineno) + ": bad INDEX '" + fields[0] + "'");
    if (fields[1].empty()) throw DataError(detail::where(name, lineno) + ": empty FORM");
    Token t;
    t.text = fields[1];
    t.pos = fields[2] == "_" ? std::string{} : fields[2];
    t.index = cur.tokens.size();
    if (fields[3] == "_") {
      t.head = kNoHead;
    } else {
      auto h = detail::parse_int(fields[3]);
      if (!h || *h < 0) throw DataError(detail::where(name, lineno) + ": bad HEAD '" + fields[3] + "'");
      t.head = static_cast<int>(*h) - 1;  // 0 -> kRoot
    }
    if (cur.tokens.empty()) sent_line = lineno;
    cur.tokens.push_back(std::move(t));
  }
  flush();
  return docs.take();
}

// Parses one corpus JSON object. Shared by the dataset readers.
inline Sentence sentence_from_json(const nlohmann::json& j, const std::string& origin) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw DataError(origin + ": missing field '" + key + "'");
    return j.at(key);
  };
  Sentence s;
  try {
    s.doc_id = need("doc_id").get<std::string>();
    s.sent_id = need("sent_id").get<std::string>();
    auto words = need("tokens").get<std::vector<std::string>>();
    std::vector<std::string> pos;
    if (j.contains("pos")) pos = j.at("pos").get<std::vector<std::string>>();
    std::vector<int> heads;
    if (j.contains("heads")) heads = j.at("heads").get<std::vector<int>>();
    if (!pos.empty() && pos.size() != words.size())
      throw DataError(origin + ": field 'pos' has " + std::to_string(pos.size()) +
                      " entries for " + std::to_string(words.size()) + " tokens");
    if (!heads.empty() && heads.size() != words.size())
      throw DataError(origin + ": field 'heads' has " + std::to_string(heads.size()) +
                      " entries for " + std::to_string(words.size()) + " tokens");
    for (std::size_t i = 0; i < words.size(); ++i) {
      Token t;
      t.text = words[i];
      t.pos = pos.empty() ? std::string{} : pos[i];
      t.head = heads.empty() ? kNoHead : heads[i];
      if (!heads.empty() && t.head < kRoot)
        throw DataError(origin + ": field 'heads' has invalid value " + std::to_string(t.head));
      t.index = i;
      s.tokens.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(origin + ": " + e.what());
  }
  check_sentence(s, origin);
  return s;
}

inline nlohmann::json sentence_to_json(const Sentence& s) {
  nlohmann::json j;
  j["doc_id"] = s.doc_id;
  j["sent_id"] = s.sent_id;
  j["tokens"] = s.words();
  std::vector<std::string> pos;
  std::vector<int> heads;
  for (const auto& t : s.tokens) {
    pos.push_back(t.pos);
    heads.push_back(t.head);
  }
  if (s.has_pos()) j["pos"] = pos;
  if (s.has_heads()) j["heads"] = heads;
  return j;
}

// Calls fn(json, origin) for every non-blank line of a JSON-lines stream.
template <class Fn>
void for_each_json_line(std::istream& in, const std::string& name, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto origin = detail::where(name, lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(origin + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw DataError(origin + ": expected a JSON object");
    fn(j, origin);
  }
}

inline std::vector<Document> read_json_lines(std::istream& in, const std::string& name) {
  detail::DocumentBuilder docs;
  for_each_json_line(in, name, [&](const nlohmann::json& j, const std::string& origin) {
    docs.add(sentence_from_json(j, origin));
  });
  return docs.take();
}

inline std::vector<Document> ingest_corpus(const std::string& path, CorpusFormat format) {
  auto in = detail::open_input(path);
  return format == CorpusFormat::conllu_like ? read_conllu(in, path) : read_json_lines(in, path);
}

inline void write_conllu(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) {
    for (const auto& s : d.sentences) {
      out << "# doc_id = " << s.doc_id << "\n# sent_id = " << s.sent_id << "\n";
      for (const auto& t : s.tokens) {
        out << t.index + 1 << '\t' << t.text << '\t' << (t.pos.empty() ? "_" : t.pos) << '\t';
        if (t.head == kNoHead)
          out << '_';
        else
          out << t.head + 1;
        out << '\n';
      }
      out << '\n';
    }
  }
}

inline void write_json_lines(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs)
    for (const auto& s : d.sentences) out << sentence_to_json(s).dump() << '\n';
}

inline std::vector<Sentence> all_sentences(const std::vector<Document>& docs) {
  std::vector<Sentence> out;
  for (const auto& d : docs) out.insert(out.end(), d.sentences.begin(), d.sentences.end());
  return out;
}

// Word vectors with a mean-vector fallback for unknown words.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::map<std::string, std::vector<double>> vectors)
      : dim_(dim), vectors_(std::move(vectors)), unk_(dim, 0.0) {
    for (const auto& [w, v] : vectors_) {
      if (v.size() != dim_)
        throw DataError("embedding for '" + w + "' has length " + std::to_string(v.size()) +
                        ", expected " + std::to_string(dim_));
      for (std::size_t k = 0; k < dim_; ++k) unk_[k] += v[k];
    }
    if (!vectors_.empty())
      for (auto& x : unk_) x /= static_cast<double>(vectors_.size());
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(const std::string& w) const { return vectors_.count(w) != 0; }
  const std::vector<double>& unk_vector() const { return unk_; }
  const std::map<std::string, std::vector<double>>& vectors() const { return vectors_; }

  const std::vector<double>& lookup(const std::string& w) const {
    auto it = vectors_.find(w);
    return it == vectors_.end() ? unk_ : it->second;
  }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, std::vector<double>> vectors_;
  std::vector<double> unk_;
};

inline EmbeddingTable read_embeddings(std::istream& in, const std::string& name,
                                      std::optional<std::size_t> expected_dim = std::nullopt) {
  std::map<std::string, std::vector<double>> vectors;
  std::optional<std::size_t> dim = expected_dim;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> v;
    std::string tok;
    while (fields >> tok) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw DataError(detail::where(name, lineno) + ": bad number '" + tok + "'");
      }
    }
    if (v.empty()) throw DataError(detail::where(name, lineno) + ": word without a vector");
    if (!dim) dim = v.size();
    if (v.size() != *dim)
      throw DataError(detail::where(name, lineno) + ": vector length " + std::to_string(v.size()) +
                      " differs from " + std::to_string(*dim));
    vectors[word] = std::move(v);
  }
  if (!dim) throw DataError(name + ": no embeddings found");
  return EmbeddingTable(*dim, std::move(vectors));
}

inline EmbeddingTable load_embeddings(const std::string& path,
                                      std::optional<std::size_t> expected_dim = std::nullopt) {
  auto in = detail::open_input(path);
  return read_embeddings(in, path, expected_dim);
}

}  // namespace acro
