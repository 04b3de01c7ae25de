// acro: command-line front end for the acronym pipeline.
//
// Every subcommand takes --config FILE (a JSON object of option values, or
// a manifest written by an earlier run), --seed and --threads. Flags given
// on the command line override config values. Each run writes
// <output>.manifest.json next to its primary output.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cmath>
#include <deque>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <set>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "acro/acro.hpp"

using nlohmann::json;

namespace {

constexpr int kManifestSchema = 1;

std::string to_flag(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw acro::DataError("cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw acro::DataError("cannot write " + path);
  return out;
}

// ---------------------------------------------------------------------------
// Subcommand plumbing

struct Run {
  std::string subcommand;
  json config = json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string manifest;  // path
  json report = json::object();
};

class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& about)
      : app_(parent.add_subcommand(name, about)) {
    app_->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app_->add_option("--config", config_path_, "JSON config or manifest supplying option values");
    add("seed", seed, "random seed");
    add("threads", threads, "worker threads (1 is deterministic)")->check(CLI::PositiveNumber);
  }

  template <class T>
  CLI::Option* add(const std::string& key, T& ref, const std::string& about) {
    getters_[key] = [&ref] { return json(ref); };
    return app_->add_option(to_flag(key), ref, about)->capture_default_str();
  }

  CLI::Option* flag(const std::string& key, bool& ref, const std::string& about) {
    getters_[key] = [&ref] { return json(ref); };
    flags_.insert(key);
    return app_->add_flag(to_flag(key), ref, about);
  }

  // One option per field of a JSON-serializable config struct.
  template <class Config>
  void add_config(const std::string& what) {
    const json defaults = Config{};
    for (const auto& [key, value] : defaults.items()) {
      if (value.is_boolean()) {
        flag(key, bools_.emplace_back(value.template get<bool>()), what + " " + key + " (--" + key + "=false to disable)");
      } else if (value.is_number_unsigned()) {
        add(key, sizes_.emplace_back(value.template get<std::size_t>()), what + " " + key);
      } else {
        add(key, doubles_.emplace_back(value.template get<double>()), what + " " + key);
      }
    }
  }

  template <class Config>
  Config config_struct(const std::string& what) const {
    const json defaults = Config{};
    json j = json::object();
    for (const auto& [key, value] : defaults.items()) j[key] = getters_.at(key)();
    auto cfg = acro::config_from_json<Config>(j, what);
    cfg.validate();
    return cfg;
  }

  void body(std::function<void(Run&)> fn) { body_ = std::move(fn); }

  CLI::App* app() const { return app_; }
  bool has_key(const std::string& key) const { return getters_.count(key) != 0; }
  bool is_bool(const std::string& key) const { return flags_.count(key) != 0; }

  json resolved() const {
    json j = json::object();
    for (const auto& [key, get] : getters_) j[key] = get();
    return j;
  }

  void execute(Run& run) const { body_(run); }

  std::uint64_t seed = 13;
  std::size_t threads = 1;

 private:
  CLI::App* app_;
  std::string config_path_;
  std::map<std::string, std::function<json()>> getters_;
  std::set<std::string> flags_;
  std::deque<bool> bools_;
  std::deque<std::size_t> sizes_;
  std::deque<double> doubles_;
  std::function<void(Run&)> body_;
};

// Expands --config FILE into explicit flags placed ahead of the user's own
// arguments, so the command line wins.
std::vector<std::string> expand_config(const Command& cmd, const std::string& sub,
                                       std::vector<std::string> args, std::string& config_file) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  config_file = path;
  json j;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw acro::ConfigError("cannot open config file " + path);
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw acro::ConfigError(path + ": invalid JSON: " + e.what());
    }
  }
  if (!j.is_object()) throw acro::ConfigError(path + ": config must be a JSON object");
  if (j.contains("schema_version") && j.contains("config")) {
    if (j.value("subcommand", sub) != sub)
      throw acro::ConfigError(path + ": manifest is for subcommand '" + j.value("subcommand", "") + "', not '" + sub + "'");
    j = j.at("config");
  }
  std::vector<std::string> synth;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") continue;
    if (!cmd.has_key(key)) throw acro::ConfigError(path + ": unknown config key '" + key + "'");
    if (value.is_null() || (value.is_string() && value.get<std::string>().empty())) continue;
    if (value.is_array() || value.is_object())
      throw acro::ConfigError(path + ": config key '" + key + "' must be a scalar");
    std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    if (cmd.is_bool(key) && !value.is_boolean())
      throw acro::ConfigError(path + ": config key '" + key + "' must be true or false");
    synth.push_back(to_flag(key) + "=" + text);
  }
  args.insert(args.begin(), synth.begin(), synth.end());
  return args;
}

void write_manifest(const Run& run) {
  json inputs = json::array(), outputs = json::array();
  for (const auto& p : run.inputs) inputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  for (const auto& p : run.outputs) outputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
  json m = {{"schema_version", kManifestSchema}, {"tool", "acro"},          {"version", acro::kVersion},
            {"subcommand", run.subcommand},       {"config", run.config},  {"inputs", inputs},
            {"outputs", outputs}};
  if (!run.report.empty()) m["report"] = run.report;
  auto out = open_output(run.manifest);
  out << m.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Shared option groups

acro::CorpusFormat corpus_format(const std::string& name) {
  if (name == "conllu") return acro::CorpusFormat::conllu_like;
  if (name == "jsonl") return acro::CorpusFormat::json_lines;
  throw acro::ConfigError("unknown corpus format '" + name + "' (expected conllu or jsonl)");
}

struct LimitOptions {
  std::size_t max_window = 0;
  std::size_t max_skips = 2;
  std::size_t min_len = 2;

  void attach(Command& c) {
    c.add("max_window", max_window, "largest long-form window; 0 means letters + 5");
    c.add("max_skips", max_skips, "skipped tokens allowed inside a window");
    c.add("min_len", min_len, "shortest acronym candidate")->check(CLI::PositiveNumber);
  }
  acro::SearchLimits limits() const { return {max_window, max_skips}; }
};

std::vector<acro::AnnotatedSentence> load_annotations(const std::string& path) {
  std::vector<acro::AnnotatedSentence> out;
  for (const auto& ex : acro::load_ai_dataset(path)) out.push_back({ex.sentence, ex.annotation()});
  return out;
}

void write_corpus(const std::string& path, const std::string& format, const std::vector<acro::Document>& docs) {
  auto out = open_output(path);
  if (corpus_format(format) == acro::CorpusFormat::conllu_like) acro::write_conllu(out, docs);
  else acro::write_json_lines(out, docs);
}

std::vector<acro::Document> group_documents(const std::vector<acro::Sentence>& sentences) {
  std::vector<acro::Document> docs;
  for (const auto& s : sentences) {
    if (docs.empty() || docs.back().doc_id != s.doc_id) docs.push_back({s.doc_id, {}});
    docs.back().sentences.push_back(s);
  }
  return docs;
}

json history_to_json(const std::vector<acro::nn::EpochStats>& hist) {
  json arr = json::array();
  for (const auto& h : hist) {
    json e = {{"epoch", h.epoch}, {"mean_loss", h.mean_loss}};
    if (h.dev_score) e["dev_score"] = *h.dev_score;
    arr.push_back(e);
  }
  return arr;
}

acro::nn::EpochCallback epoch_logger() {
  return [](const acro::nn::EpochStats& s) {
    std::cerr << "epoch " << s.epoch << " loss " << s.mean_loss;
    if (s.dev_score) std::cerr << " dev " << *s.dev_score;
    std::cerr << '\n';
    return true;
  };
}

// Label spellings seen in released AI data, mapped onto the native set.
acro::BioLabel adapt_label(std::string label, const std::string& origin) {
  std::string lower = acro::lowercase(label);
  if (lower == "o") return acro::BioLabel::o;
  if (lower.size() > 2 && (lower[0] == 'b' || lower[0] == 'i') && (lower[1] == '-' || lower[1] == '_')) {
    const bool begin = lower[0] == 'b';
    const std::string kind = lower.substr(2);
    static const std::set<std::string> shorts{"short", "acronym", "abbr", "abbreviation", "sf", "short_form", "short-form"};
    static const std::set<std::string> longs{"long", "long_form", "long-form", "longform", "lf", "expansion", "definition"};
    if (shorts.count(kind)) return begin ? acro::BioLabel::b_acronym : acro::BioLabel::i_acronym;
    if (longs.count(kind)) return begin ? acro::BioLabel::b_long : acro::BioLabel::i_long;
  }
  throw acro::DataError(origin + ": unknown label '" + label + "'");
}

// Reads a JSON array file or a JSON-lines file, calling fn(object, origin).
void for_each_record(const std::string& path, const std::function<void(const json&, const std::string&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw acro::DataError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    json arr;
    try {
      arr = json::parse(text);
    } catch (const json::exception& e) {
      throw acro::DataError(path + ": invalid JSON: " + e.what());
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_object()) throw acro::DataError(path + ": record " + std::to_string(i + 1) + " is not an object");
      fn(arr[i], path + ": record " + std::to_string(i + 1));
    }
    return;
  }
  std::istringstream lines(text);
  acro::for_each_json_line(lines, path, fn);
}

std::vector<std::string> record_tokens(const json& j, const std::string& origin) {
  for (const char* key : {"tokens", "token", "words", "sentence"}) {
    if (!j.contains(key)) continue;
    const auto& v = j.at(key);
    if (v.is_array()) return v.get<std::vector<std::string>>();
    if (v.is_string()) {
      std::istringstream words(v.get<std::string>());
      return {std::istream_iterator<std::string>(words), std::istream_iterator<std::string>()};
    }
  }
  throw acro::DataError(origin + ": no token field (tokens, token, words or sentence)");
}

std::string record_id(const json& j, std::size_t ordinal) {
  for (const char* key : {"sent_id", "id", "ID"})
    if (j.contains(key)) return j.at(key).is_string() ? j.at(key).get<std::string>() : j.at(key).dump();
  return std::to_string(ordinal);
}

json adapt_record(const json& j, const std::string& kind, std::size_t ordinal, const std::string& origin) {
  json out;
  out["doc_id"] = j.contains("doc_id") ? j.at("doc_id") : json(record_id(j, ordinal));
  out["sent_id"] = record_id(j, ordinal);
  auto tokens = record_tokens(j, origin);
  out["tokens"] = tokens;
  if (j.contains("pos")) out["pos"] = j.at("pos");
  if (j.contains("heads")) out["heads"] = j.at("heads");
  try {
    if (kind == "ai") {
      json labels = j.contains("labels") ? j.at("labels") : j.value("label", json());
      if (!labels.is_array()) throw acro::DataError(origin + ": no labels array");
      std::vector<std::string> mapped;
      for (const auto& l : labels) mapped.emplace_back(acro::to_string(adapt_label(l.get<std::string>(), origin)));
      out["labels"] = mapped;
      return json(acro::ai_example_to_json(acro::ai_example_from_json(out, origin)));
    }
    std::size_t index = j.contains("acronym_index") ? j.at("acronym_index").get<std::size_t>() : j.at("acronym").get<std::size_t>();
    if (index >= tokens.size()) throw acro::DataError(origin + ": acronym index out of range");
    out["acronym_index"] = index;
    out["acronym"] = tokens[index];
    out["long_form"] = j.contains("long_form") ? j.at("long_form") : j.contains("expansion") ? j.at("expansion") : j.at("label");
    return acro::ad_sample_to_json(acro::ad_sample_from_json(out, origin));
  } catch (const json::exception& e) {
    throw acro::DataError(origin + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acronym identification and disambiguation pipeline"};
  app.set_version_flag("--version", acro::kVersion);
  app.require_subcommand(1);
  std::deque<Command> commands;
  auto command = [&](const std::string& name, const std::string& about) -> Command& {
    return commands.emplace_back(app, name, about);
  };

  // Storage for option values; each subcommand binds what it needs.
  std::string input, output, format = "conllu", output_format = "jsonl", annotations, dictionary, overrides,
                         corpus, train, dev, model, gold, pred, embeddings, output_prefix, kind = "ad",
                         unit = "sentence", undefined = "zero", method = "gad";
  std::size_t threshold = 2, k = 1, topk = 5, stats_threshold = 10;
  double train_ratio = 0.8, dev_ratio = 0.1, test_ratio = 0.1;
  bool require_trees = false;
  LimitOptions limits;

  {
    auto& c = command("ingest", "Validate a pre-parsed corpus and re-serialize it");
    c.add("input", input, "corpus file")->required();
    c.add("format", format, "input format: conllu or jsonl");
    c.add("output", output, "output corpus")->required();
    c.add("output_format", output_format, "output format: conllu or jsonl");
    c.flag("require_trees", require_trees, "reject sentences without a complete dependency tree");
    c.body([&](Run& run) {
      auto docs = acro::ingest_corpus(input, corpus_format(format));
      std::size_t sentences = 0;
      for (const auto& d : docs)
        for (const auto& s : d.sentences) {
          ++sentences;
          if (require_trees) acro::check_tree(s);
        }
      write_corpus(output, output_format, docs);
      run.inputs = {input};
      run.outputs = {output};
      run.report = {{"documents", docs.size()}, {"sentences", sentences}};
    });
  }
  {
    auto& c = command("filter-sentences", "Keep sentences with an acronym candidate that has a long-form window");
    c.add("input", input, "corpus file")->required();
    c.add("format", format, "input format: conllu or jsonl");
    c.add("output", output, "output corpus")->required();
    c.add("output_format", output_format, "output format: conllu or jsonl");
    limits.attach(c);
    c.body([&](Run& run) {
      auto docs = acro::ingest_corpus(input, corpus_format(format));
      auto kept = acro::filter_annotation_sentences(docs, limits.limits(), limits.min_len);
      write_corpus(output, output_format, group_documents(kept));
      run.inputs = {input};
      run.outputs = {output};
      run.report = {{"kept_sentences", kept.size()}};
    });
  }
  {
    auto& c = command("rule-extract", "Label a corpus with the rule-based short/long-form pairing baseline");
    c.add("input", input, "corpus file")->required();
    c.add("format", format, "input format: conllu or jsonl");
    c.add("output", output, "AI dataset (JSON lines)")->required();
    limits.attach(c);
    c.body([&](Run& run) {
      auto docs = acro::ingest_corpus(input, corpus_format(format));
      std::vector<acro::Sentence> sentences = acro::all_sentences(docs);
      std::vector<acro::AiExample> out(sentences.size());
      acro::parallel_for(sentences.size(), c.threads, [&](std::size_t i) {
        out[i] = acro::make_ai_example(sentences[i], acro::rule_pair_baseline(sentences[i], limits.limits(), limits.min_len));
      });
      auto file = open_output(output);
      acro::write_ai_dataset(file, out);
      file.close();
      run.inputs = {input};
      run.outputs = {output};
    });
  }
  {
    auto& c = command("build-dict", "Build the acronym dictionary from annotated sentences");
    c.add("annotations", annotations, "AI dataset with short/long-form spans")->required();
    c.add("threshold", threshold, "Levenshtein distance merging long-form variants");
    c.add("overrides", overrides, "JSON file mapping raw long forms to canonical ones");
    c.add("output", output, "dictionary JSON")->required();
    c.body([&](Run& run) {
      std::map<std::string, std::string> manual;
      run.inputs = {annotations};
      if (!overrides.empty()) {
        manual = acro::load_overrides(overrides);
        run.inputs.push_back(overrides);
      }
      auto dict = acro::build_dictionary(load_annotations(annotations), threshold, manual);
      acro::nn::save_json(acro::dictionary_to_json(dict), output);
      run.outputs = {output};
      run.report = {{"acronyms", dict.size()}, {"mean_long_forms", dict.mean_long_forms()}};
    });
  }
  {
    auto& c = command("gen-ad", "Generate disambiguation samples with one sense per discourse");
    c.add("corpus", corpus, "corpus file")->required();
    c.add("format", format, "corpus format: conllu or jsonl");
    c.add("annotations", annotations, "AI dataset with short/long-form spans")->required();
    c.add("dictionary", dictionary, "dictionary JSON")->required();
    c.add("output", output, "AD dataset (JSON lines)")->required();
    c.body([&](Run& run) {
      auto docs = acro::ingest_corpus(corpus, corpus_format(format));
      auto gen = acro::generate_ad_samples(docs, load_annotations(annotations), acro::load_dictionary(dictionary));
      auto file = open_output(output);
      acro::write_ad_dataset(file, gen.samples);
      file.close();
      json conflicts = json::array();
      for (const auto& r : gen.conflicts) {
        conflicts.push_back({{"doc_id", r.doc_id}, {"acronym", r.acronym}, {"long_forms", r.long_forms}});
        std::cerr << "conflict: document " << r.doc_id << " defines " << r.acronym << " " << r.long_forms.size()
                  << " ways; skipped\n";
      }
      run.inputs = {corpus, annotations, dictionary};
      run.outputs = {output};
      run.report = {{"samples", gen.samples.size()}, {"conflicts", conflicts}};
    });
  }
  {
    auto& c = command("subsample", "Keep at most k samples per long form");
    c.add("input", input, "AD dataset")->required();
    c.add("k", k, "samples kept per long form")->check(CLI::PositiveNumber);
    c.add("output", output, "AD dataset")->required();
    c.body([&](Run& run) {
      auto out = acro::subsample_per_long_form(acro::load_ad_dataset(input), k, c.seed);
      auto file = open_output(output);
      acro::write_ad_dataset(file, out);
      file.close();
      run.inputs = {input};
      run.outputs = {output};
      run.report = {{"samples", out.size()}};
    });
  }
  {
    auto& c = command("split", "Seeded train/dev/test split of an AI or AD dataset");
    c.add("input", input, "dataset (JSON lines)")->required();
    c.add("kind", kind, "dataset kind: ai or ad");
    c.add("unit", unit, "split unit: sentence or document");
    c.add("train_ratio", train_ratio, "training share");
    c.add("dev_ratio", dev_ratio, "development share");
    c.add("test_ratio", test_ratio, "test share");
    c.add("output_prefix", output_prefix, "writes PREFIX.train.jsonl, PREFIX.dev.jsonl, PREFIX.test.jsonl")->required();
    c.body([&](Run& run) {
      if (unit != "sentence" && unit != "document") throw acro::ConfigError("unknown split unit '" + unit + "'");
      const auto u = unit == "document" ? acro::SplitUnit::document : acro::SplitUnit::sentence;
      const acro::SplitRatios ratios{train_ratio, dev_ratio, test_ratio};
      const std::vector<std::string> names{output_prefix + ".train.jsonl", output_prefix + ".dev.jsonl",
                                           output_prefix + ".test.jsonl"};
      auto emit = [&](const auto& parts, auto write) {
        std::size_t i = 0;
        for (const auto* part : {&parts.train, &parts.dev, &parts.test}) {
          auto file = open_output(names[i++]);
          write(file, *part);
        }
        run.report = {{"train", parts.train.size()}, {"dev", parts.dev.size()}, {"test", parts.test.size()}};
      };
      if (kind == "ai") {
        std::function<std::string(const acro::AiExample&)> doc = [](const acro::AiExample& e) { return e.sentence.doc_id; };
        emit(acro::split_dataset(acro::load_ai_dataset(input), ratios, c.seed, u, doc), acro::write_ai_dataset);
      } else if (kind == "ad") {
        std::function<std::string(const acro::ADSample&)> doc = [](const acro::ADSample& s) { return s.sentence.doc_id; };
        emit(acro::split_dataset(acro::load_ad_dataset(input), ratios, c.seed, u, doc), acro::write_ad_dataset);
      } else {
        throw acro::ConfigError("unknown dataset kind '" + kind + "' (expected ai or ad)");
      }
      run.inputs = {input};
      run.outputs = names;
      run.manifest = output_prefix + ".manifest.json";
    });
  }
  {
    auto& c = command("train-ai", "Train the LSTM-CRF acronym identification tagger");
    c.add("train", train, "AI training set")->required();
    c.add("dev", dev, "AI development set for early stopping");
    c.add("embeddings", embeddings, "static word vectors (word v1 ... vd)");
    c.add("output", output, "checkpoint JSON")->required();
    c.add_config<acro::TaggerConfig>("tagger");
    c.body([&](Run& run) {
      auto cfg = c.config_struct<acro::TaggerConfig>("tagger config");
      auto data = acro::load_ai_dataset(train);
      run.inputs = {train};
      std::optional<acro::EmbeddingTable> vectors;
      if (!embeddings.empty()) {
        vectors = acro::load_embeddings(embeddings);
        run.inputs.push_back(embeddings);
      }
      std::vector<acro::AiExample> dev_data;
      if (!dev.empty()) {
        dev_data = acro::load_ai_dataset(dev);
        run.inputs.push_back(dev);
      }
      auto tagger = acro::make_tagger(data, cfg, c.seed, vectors ? &*vectors : nullptr);
      auto hist = acro::train_tagger(tagger, data, c.seed, dev.empty() ? nullptr : &dev_data, epoch_logger());
      acro::nn::save_json(tagger.checkpoint(), output);
      run.outputs = {output};
      run.report = {{"history", history_to_json(hist)}, {"train_token_accuracy", acro::token_accuracy(tagger, data)}};
    });
  }
  {
    auto& c = command("predict-ai", "Tag sentences with a trained tagger");
    c.add("model", model, "tagger checkpoint")->required();
    c.add("input", input, "sentences: a corpus or an AI dataset")->required();
    c.add("format", format, "input format: conllu, jsonl or ai");
    c.add("output", output, "AI dataset with predicted labels")->required();
    c.body([&](Run& run) {
      auto tagger = acro::Tagger::from_checkpoint(acro::nn::load_json(model));
      std::vector<acro::Sentence> sentences;
      if (format == "ai") {
        for (const auto& ex : acro::load_ai_dataset(input)) sentences.push_back(ex.sentence);
      } else {
        sentences = acro::all_sentences(acro::ingest_corpus(input, corpus_format(format)));
      }
      auto annotations = acro::predict_tagger(tagger, sentences, c.threads);
      std::vector<acro::AiExample> out;
      for (std::size_t i = 0; i < sentences.size(); ++i) {
        auto& a = annotations[i];
        a.pairs = acro::infer_pairs(sentences[i], a.spans);
        out.push_back(acro::make_ai_example(sentences[i], a));
      }
      auto file = open_output(output);
      acro::write_ai_dataset(file, out);
      file.close();
      run.inputs = {model, input};
      run.outputs = {output};
    });
  }
  {
    auto& c = command("train-ad", "Train the GAD disambiguation model");
    c.add("train", train, "AD training set")->required();
    c.add("dev", dev, "AD development set for early stopping");
    c.add("dictionary", dictionary, "dictionary JSON fixing the long-form inventory");
    c.add("embeddings", embeddings, "static word vectors (word v1 ... vd)");
    c.add("output", output, "checkpoint JSON")->required();
    c.add_config<acro::GadConfig>("GAD");
    c.body([&](Run& run) {
      auto cfg = c.config_struct<acro::GadConfig>("GAD config");
      auto data = acro::load_ad_dataset(train);
      run.inputs = {train};
      std::optional<acro::AcronymDictionary> dict;
      if (!dictionary.empty()) {
        dict = acro::load_dictionary(dictionary);
        run.inputs.push_back(dictionary);
      }
      std::optional<acro::EmbeddingTable> vectors;
      if (!embeddings.empty()) {
        vectors = acro::load_embeddings(embeddings);
        run.inputs.push_back(embeddings);
      }
      std::vector<acro::ADSample> dev_data;
      if (!dev.empty()) {
        dev_data = acro::load_ad_dataset(dev);
        run.inputs.push_back(dev);
      }
      auto m = acro::make_gad(data, cfg, c.seed, dict ? &*dict : nullptr, vectors ? &*vectors : nullptr);
      auto hist = acro::train_gad(m, data, c.seed, dev.empty() ? nullptr : &dev_data, epoch_logger());
      acro::nn::save_json(m.checkpoint(), output);
      run.outputs = {output};
      run.report = {{"history", history_to_json(hist)}, {"train_accuracy", acro::ad_accuracy(m, data)}};
    });
  }
  {
    auto& c = command("predict-ad", "Disambiguate acronym occurrences");
    c.add("model", model, "GAD checkpoint (method gad)");
    c.add("train", train, "AD training set (method mf)");
    c.add("method", method, "gad, or mf for the most-frequent-meaning baseline");
    c.add("input", input, "AD dataset")->required();
    c.add("topk", topk, "scored candidates written per sample")->check(CLI::PositiveNumber);
    c.add("output", output, "predictions (JSON lines)")->required();
    c.body([&](Run& run) {
      auto samples = acro::load_ad_dataset(input);
      auto file = open_output(output);
      auto emit = [&](const acro::ADSample& s, const std::string& best, json scores) {
        file << json{{"sent_id", s.sentence.sent_id},
                     {"acronym_index", s.acronym_index},
                     {"predicted_long_form", best},
                     {"scores_topk", std::move(scores)}}
                    .dump()
             << '\n';
      };
      if (method == "gad") {
        if (model.empty()) throw acro::ConfigError("predict-ad --method gad needs --model");
        auto m = acro::GadModel::from_checkpoint(acro::nn::load_json(model));
        auto preds = acro::predict_gad(m, samples, c.threads);
        const bool masked = m.config().masked_inference;
        for (std::size_t i = 0; i < samples.size(); ++i) {
          std::vector<std::size_t> ids;
          if (masked) {
            ids = m.inventory().candidates(samples[i].acronym);
          } else {
            ids.resize(m.inventory().size());
            std::iota(ids.begin(), ids.end(), 0);
          }
          // Softmax over the eligible long forms.
          double top = -std::numeric_limits<double>::infinity(), z = 0;
          for (auto id : ids) top = std::max(top, preds[i].scores[id]);
          for (auto id : ids) z += std::exp(preds[i].scores[id] - top);
          std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
            return preds[i].scores[a] > preds[i].scores[b];
          });
          json scores = json::array();
          for (std::size_t r = 0; r < std::min(topk, ids.size()); ++r)
            scores.push_back({{"long_form", m.inventory().name(ids[r])},
                              {"probability", std::exp(preds[i].scores[ids[r]] - top) / z}});
          emit(samples[i], m.inventory().name(preds[i].id), scores);
        }
        run.inputs = {model, input};
      } else if (method == "mf") {
        if (train.empty()) throw acro::ConfigError("predict-ad --method mf needs --train");
        auto data = acro::load_ad_dataset(train);
        auto inv = acro::LongFormInventory::from_samples(data);
        inv.count_training(data);
        auto mf = acro::mf_baseline(inv);
        for (const auto& s : samples) emit(s, inv.name(mf.predict(s.acronym)), json::array());
        run.inputs = {train, input};
      } else {
        throw acro::ConfigError("unknown method '" + method + "' (expected gad or mf)");
      }
      file.close();
      run.outputs = {output};
    });
  }
  {
    auto& c = command("eval-ai", "Score predicted spans against gold spans");
    c.add("gold", gold, "gold AI dataset")->required();
    c.add("pred", pred, "predicted AI dataset")->required();
    c.add("output", output, "report JSON")->required();
    c.body([&](Run& run) {
      auto spans = [](const std::string& path) {
        std::vector<acro::SpanAnnotation> out;
        for (const auto& ex : acro::load_ai_dataset(path)) out.push_back(acro::bio_to_annotation(ex.sentence, ex.labels));
        return out;
      };
      auto report = acro::evaluate_ai(spans(gold), spans(pred));
      acro::nn::save_json(acro::report_to_json(report), output);
      std::cout << acro::report_to_table(report);
      run.inputs = {gold, pred};
      run.outputs = {output};
    });
  }
  {
    auto& c = command("eval-ad", "Score predicted long forms against gold long forms");
    c.add("gold", gold, "gold AD dataset")->required();
    c.add("pred", pred, "predictions (predict-ad output or an AD dataset)")->required();
    c.add("undefined", undefined, "precision of never-predicted classes: zero or exclude");
    c.add("output", output, "report JSON")->required();
    c.body([&](Run& run) {
      if (undefined != "zero" && undefined != "exclude")
        throw acro::ConfigError("unknown --undefined mode '" + undefined + "' (expected zero or exclude)");
      auto samples = acro::load_ad_dataset(gold);
      std::vector<std::string> g, p;
      for (const auto& s : samples) g.push_back(s.long_form);
      std::ifstream in(pred, std::ios::binary);
      if (!in) throw acro::DataError("cannot open " + pred);
      acro::for_each_json_line(in, pred, [&](const json& j, const std::string& origin) {
        const std::size_t i = p.size();
        if (i >= samples.size()) throw acro::DataError(origin + ": more predictions than gold samples");
        try {
          if (j.contains("sent_id") && j.at("sent_id").get<std::string>() != samples[i].sentence.sent_id)
            throw acro::DataError(origin + ": sent_id '" + j.at("sent_id").get<std::string>() + "' does not match gold '" +
                                  samples[i].sentence.sent_id + "'");
          if (j.contains("acronym_index") && j.at("acronym_index").get<std::size_t>() != samples[i].acronym_index)
            throw acro::DataError(origin + ": acronym_index does not match gold");
          p.push_back(j.contains("predicted_long_form") ? j.at("predicted_long_form").get<std::string>()
                                                        : j.at("long_form").get<std::string>());
        } catch (const json::exception& e) {
          throw acro::DataError(origin + ": " + e.what());
        }
      });
      auto report = acro::evaluate_ad(g, p, undefined == "zero" ? acro::UndefinedScore::zero : acro::UndefinedScore::exclude);
      acro::nn::save_json(acro::report_to_json(report), output);
      std::cout << acro::report_to_table(report);
      run.inputs = {gold, pred};
      run.outputs = {output};
    });
  }
  {
    auto& c = command("stats", "Distribution of samples by long forms per acronym");
    c.add("input", input, "AD dataset")->required();
    c.add("threshold", stats_threshold, "sample count separating rare long forms");
    c.add("output", output, "statistics JSON")->required();
    c.body([&](Run& run) {
      auto stats = acro::dataset_stats(acro::load_ad_dataset(input), stats_threshold);
      acro::nn::save_json(stats, output);
      std::cout << "long_forms_per_acronym  acronyms  samples\n";
      for (const auto& row : stats["by_long_forms_per_acronym"])
        std::cout << std::setw(22) << row["long_forms_per_acronym"].get<std::size_t>() << std::setw(10)
                  << row["acronyms"].get<std::size_t>() << std::setw(9) << row["samples"].get<std::size_t>() << '\n';
      std::cout << "long forms with < " << stats_threshold << " samples: " << stats["long_forms_below_threshold"]
                << ", >= " << stats_threshold << ": " << stats["long_forms_at_or_above_threshold"] << '\n';
      run.inputs = {input};
      run.outputs = {output};
    });
  }
  {
    auto& c = command("adapt", "Convert released AI/AD files to the native JSON-lines formats");
    c.add("input", input, "JSON array or JSON-lines file")->required();
    c.add("kind", kind, "dataset kind: ai or ad");
    c.add("output", output, "native dataset (JSON lines)")->required();
    c.body([&](Run& run) {
      if (kind != "ai" && kind != "ad") throw acro::ConfigError("unknown dataset kind '" + kind + "' (expected ai or ad)");
      auto file = open_output(output);
      std::size_t n = 0;
      for_each_record(input, [&](const json& j, const std::string& origin) {
        file << adapt_record(j, kind, ++n, origin).dump() << '\n';
      });
      file.close();
      run.inputs = {input};
      run.outputs = {output};
      run.report = {{"records", n}};
    });
  }

  // Route --config before CLI11 sees the arguments.
  std::vector<std::string> args(argv + 1, argv + argc);
  Command* active = nullptr;
  std::string config_file;
  try {
    if (!args.empty())
      for (auto& c : commands)
        if (c.app()->get_name() == args.front()) active = &c;
    if (active) {
      std::vector<std::string> rest(args.begin() + 1, args.end());
      rest = expand_config(*active, args.front(), rest, config_file);
      args.assign(1, args.front());
      args.insert(args.end(), rest.begin(), rest.end());
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const acro::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  Run run;
  run.subcommand = active->app()->get_name();
  run.config = active->resolved();
  try {
    active->execute(run);
    if (!config_file.empty()) run.inputs.insert(run.inputs.begin(), config_file);
    if (run.manifest.empty()) run.manifest = run.outputs.front() + ".manifest.json";
    write_manifest(run);
  } catch (const acro::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
