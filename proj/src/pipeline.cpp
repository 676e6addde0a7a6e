#include "finespan/pipeline.hpp"

#include <cstdlib>
#include <set>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "finespan/error.hpp"
#include "finespan/io.hpp"
#include "finespan/stats.hpp"
#include "finespan/triage.hpp"

namespace fs = std::filesystem;

namespace finespan {

using nlohmann::json;

json version_and_provenance(const tagcodec::TagScheme& scheme, const weaklabel::FunctionSet& functions) {
  return {{"tool", kToolName},
          {"version", kVersion},
          {"scheme_fingerprint", scheme.fingerprint()},
          {"rules_fingerprint", functions.fingerprint()}};
}

weaklabel::FunctionSet load_function_set(const fs::path& rules, const std::optional<fs::path>& gazetteers) {
  weaklabel::FunctionSet set;
  for (auto& fn : weaklabel::load_rules(rules)) set.add(std::move(fn));
  if (gazetteers)
    for (auto& g : weaklabel::load_gazetteer_dir(*gazetteers)) set.add(weaklabel::GazetteerFunction(std::move(g)));
  return set;
}

tagcodec::TagScheme load_scheme(const std::optional<fs::path>& path) {
  if (!path) return tagcodec::TagScheme::build(tagcodec::default_labels());
  try {
    return tagcodec::TagScheme::from_json(json::parse(io::read_file(*path)));
  } catch (const json::exception& e) {
    throw ConfigError("scheme file " + path->string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace finespan

namespace finespan::pipeline {

namespace {

std::optional<fs::path> optional_path(const json& paths, const char* key, const fs::path& base) {
  if (!paths.contains(key) || paths[key].is_null()) return std::nullopt;
  const fs::path p = paths[key].get<std::string>();
  return p.is_absolute() ? p : base / p;
}

void apply_env(fs::path& target, const char* variable) {
  if (const char* value = std::getenv(variable); value && *value) target = value;
}

void apply_env(std::optional<fs::path>& target, const char* variable) {
  if (const char* value = std::getenv(variable); value && *value) target = fs::path(value);
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& doc, const fs::path& base) {
  PipelineConfig c;
  try {
    const json& paths = doc.at("paths");
    const auto required = [&](const char* key) {
      const auto p = optional_path(paths, key, base);
      if (!p) throw ConfigError(std::string("config paths lack '") + key + "'");
      return *p;
    };
    c.paths.corpus = required("corpus");
    c.paths.rules = required("rules");
    c.paths.output_dir = required("output_dir");
    c.paths.gazetteers = optional_path(paths, "gazetteers", base);
    c.paths.scheme = optional_path(paths, "scheme", base);
    c.paths.predictions = optional_path(paths, "predictions", base);
    c.paths.overrides = optional_path(paths, "overrides", base);
    c.paths.scores = optional_path(paths, "scores", base);

    const json empty = json::object();
    const json& ingest = doc.value("ingest", empty);
    c.format = corpus::parse_format(ingest.value("format", std::string("jsonl")));
    const json& filter = doc.value("filter", empty);
    c.min_words = filter.value("min_words", c.min_words);
    c.dedupe = filter.value("dedupe", c.dedupe);
    const json& stats = doc.value("stats", empty);
    if (stats.contains("group_by") && !stats["group_by"].is_null()) c.group_by = stats["group_by"].get<std::string>();
    c.bin_width = stats.value("bin_width", c.bin_width);
    const json& split = doc.value("split", empty);
    if (split.contains("fractions")) {
      const auto f = split["fractions"].get<std::vector<double>>();
      if (f.size() != 3) throw ConfigError("split.fractions needs three values");
      c.split.train = f[0];
      c.split.validation = f[1];
      c.split.test = f[2];
    }
    c.split.seed = split.value("seed", c.split.seed);
    c.split.validate();
    const json& agg = doc.value("aggregate", empty);
    c.fit.max_iter = agg.value("max_iter", c.fit.max_iter);
    c.fit.tol = agg.value("tol", c.fit.tol);
    c.fit.seed = agg.value("seed", c.fit.seed);
    c.decode_mode = aggregate::parse_decode_mode(agg.value("mode", std::string("viterbi")));
    const json& eval = doc.value("eval", empty);
    c.compare_mode = nereval::parse_compare_mode(eval.value("mode", std::string("label-only")));
    c.eval_partition = eval.value("partition", c.eval_partition);
    if (c.eval_partition != "train" && c.eval_partition != "validation" && c.eval_partition != "test")
      throw ConfigError("eval.partition must be train, validation or test");
    c.model_name = eval.value("model_name", c.model_name);
    const json& compare = doc.value("compare", empty);
    c.alpha = compare.value("alpha", c.alpha);
    c.metric = compare.value("metric", c.metric);
    c.higher_is_better = compare.value("higher_is_better", c.higher_is_better);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  auto c = from_json(doc, path.parent_path());
  apply_env(c.paths.corpus, "FINESPAN_CORPUS");
  apply_env(c.paths.rules, "FINESPAN_RULES");
  apply_env(c.paths.gazetteers, "FINESPAN_GAZETTEERS");
  apply_env(c.paths.scheme, "FINESPAN_SCHEME");
  apply_env(c.paths.output_dir, "FINESPAN_OUTPUT_DIR");
  apply_env(c.paths.predictions, "FINESPAN_PREDICTIONS");
  apply_env(c.paths.overrides, "FINESPAN_OVERRIDES");
  apply_env(c.paths.scores, "FINESPAN_SCORES");
  return c;
}

void PipelineConfig::validate() const {
  const auto need_file = [](const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  };
  need_file(paths.corpus, "corpus file");
  need_file(paths.rules, "rule file");
  if (paths.gazetteers && !fs::is_directory(*paths.gazetteers))
    throw ConfigError("gazetteer directory not found: " + paths.gazetteers->string());
  if (paths.scheme) need_file(*paths.scheme, "scheme file");
  if (paths.predictions) need_file(*paths.predictions, "predictions file");
  if (paths.overrides) need_file(*paths.overrides, "overrides file");
  if (paths.scores) need_file(*paths.scores, "score matrix");
  std::error_code ec;
  fs::create_directories(paths.output_dir, ec);
  if (ec || !fs::is_directory(paths.output_dir))
    throw ConfigError("output directory is not writable: " + paths.output_dir.string());
}

json StageRecord::to_json() const {
  return {{"stage", stage}, {"key", key}, {"parameters", parameters}, {"inputs", inputs}, {"outputs", outputs}};
}

namespace {

constexpr const char* kStageFile = "stage.json";

std::string hash_strings(const std::vector<std::string>& parts) {
  std::string joined;
  for (const auto& p : parts) {
    joined += p;
    joined.push_back('\n');
  }
  return io::sha256_hex(joined);
}

std::string dir_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<std::string> parts;
  for (const auto& f : files) parts.push_back(fs::relative(f, dir).generic_string() + " " + io::sha256_file(f));
  return hash_strings(parts);
}

/// Runs one stage into out/<stage>/<key prefix>, or reuses that directory
/// when a previous run left intact outputs for the same key.
class StageRunner {
 public:
  StageRunner(fs::path out, bool force) : out_(std::move(out)), force_(force) {}

  template <typename Fn>
  StageRecord run(const std::string& stage, json parameters, std::map<std::string, std::string> inputs, Fn&& body) {
    StageRecord rec;
    rec.stage = stage;
    rec.parameters = std::move(parameters);
    rec.inputs = std::move(inputs);
    rec.key = io::sha256_hex(json{{"stage", stage}, {"version", kVersion}, {"parameters", rec.parameters},
                                  {"inputs", rec.inputs}}
                                 .dump());
    rec.dir = out_ / stage / rec.key.substr(0, 16);

    if (!force_ && reusable(rec)) {
      rec.status = "cached";
      spdlog::info("stage {}: cached", stage);
      return rec;
    }
    const fs::path tmp = rec.dir.string() + ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    try {
      body(tmp);
    } catch (const Error& e) {
      fs::remove_all(tmp);
      rethrow(stage, e);
    }
    for (const auto& entry : fs::directory_iterator(tmp))
      if (entry.is_regular_file()) rec.outputs[entry.path().filename().string()] = io::sha256_file(entry.path());
    io::write_file(tmp / kStageFile, rec.to_json().dump(2) + "\n");
    fs::remove_all(rec.dir);
    fs::rename(tmp, rec.dir);
    rec.status = "ran";
    spdlog::info("stage {}: ran", stage);
    return rec;
  }

  StageRecord skip(const std::string& stage, json parameters) {
    StageRecord rec;
    rec.stage = stage;
    rec.parameters = std::move(parameters);
    rec.key = io::sha256_hex(json{{"stage", stage}, {"version", kVersion}, {"parameters", rec.parameters}}.dump());
    rec.status = "skipped";
    spdlog::info("stage {}: skipped", stage);
    return rec;
  }

 private:
  [[noreturn]] static void rethrow(const std::string& stage, const Error& e) {
    const std::string msg = "stage '" + stage + "': " + e.what();
    if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
    if (const auto* d = dynamic_cast<const DataError*>(&e)) throw DataError(msg, d->record());
    if (dynamic_cast<const IoError*>(&e)) throw IoError(msg);
    throw Error(msg);
  }

  static bool reusable(StageRecord& rec) {
    const fs::path meta = rec.dir / kStageFile;
    if (!fs::is_regular_file(meta)) return false;
    try {
      const auto stored = json::parse(io::read_file(meta));
      if (stored.at("key") != rec.key) return false;
      const auto outputs = stored.at("outputs").get<std::map<std::string, std::string>>();
      for (const auto& [name, hash] : outputs)
        if (!fs::is_regular_file(rec.dir / name) || io::sha256_file(rec.dir / name) != hash) return false;
      rec.outputs = outputs;
      return true;
    } catch (const std::exception&) {
      return false;
    }
  }

  fs::path out_;
  bool force_;
};

corpus::Corpus read_corpus(const fs::path& path) {
  corpus::Corpus c;
  io::for_each_jsonl(path, [&](const json& record, std::size_t line) {
    c.sentences.push_back(corpus::sentence_from_json(record, path.stem().string() + ":" + std::to_string(line - 1)));
  });
  return c;
}

std::vector<aggregate::AnnotatedSentence> read_annotated(const fs::path& path) {
  std::vector<aggregate::AnnotatedSentence> out;
  io::for_each_jsonl(path, [&](const json& record, std::size_t) { out.push_back(aggregate::annotated_from_json(record)); });
  return out;
}

std::vector<tagcodec::TaggedSentence> read_tagged(const fs::path& path) {
  std::vector<tagcodec::TaggedSentence> out;
  io::for_each_jsonl(path, [&](const json& record, std::size_t line) {
    try {
      out.push_back(tagcodec::tagged_from_json(record));
    } catch (const DataError& e) {
      throw DataError(path.filename().string() + " line " + std::to_string(line) + ": " + e.what(), line);
    }
  });
  return out;
}

std::string optional_hash(const std::optional<fs::path>& p) {
  if (!p) return "none";
  return fs::is_directory(*p) ? dir_hash(*p) : io::sha256_file(*p);
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& config, bool force) {
  config.validate();
  const auto scheme = load_scheme(config.paths.scheme);
  const auto functions = load_function_set(config.paths.rules, config.paths.gazetteers);
  StageRunner runner(config.paths.output_dir, force);
  RunResult result;

  // 1. ingest
  const auto ingest = runner.run("ingest", {{"format", config.format == corpus::Format::csv ? "csv" : "jsonl"}},
                                 {{"corpus", io::sha256_file(config.paths.corpus)}}, [&](const fs::path& dir) {
                                   auto c = corpus::ingest(config.paths.corpus, config.format);
                                   corpus::write_corpus(dir / "corpus.jsonl", c);
                                 });
  result.stages.push_back(ingest);

  // 2. filter (+ length statistics of the kept sentences)
  const auto filter = runner.run(
      "filter",
      {{"min_words", config.min_words},
       {"dedupe", config.dedupe},
       {"group_by", config.group_by ? json(*config.group_by) : json(nullptr)},
       {"bin_width", config.bin_width}},
      {{"corpus.jsonl", ingest.outputs.at("corpus.jsonl")}}, [&](const fs::path& dir) {
        const auto input = read_corpus(ingest.output("corpus.jsonl"));
        const auto filtered = corpus::filter(input, config.min_words, config.dedupe);
        corpus::write_corpus(dir / "kept.jsonl", filtered.kept);
        std::vector<json> dropped;
        for (std::size_t i = 0; i < filtered.dropped.size(); ++i) {
          auto record = corpus::sentence_to_json(filtered.dropped.sentences[i]);
          record["drop_reason"] = corpus::to_string(filtered.reasons[i]);
          dropped.push_back(std::move(record));
        }
        io::write_jsonl(dir / "dropped.jsonl", dropped);
        auto report = corpus::to_json(corpus::stats(filtered.kept, config.group_by, config.bin_width));
        io::write_file(dir / "stats.json", report.dump(2) + "\n");
      });
  result.stages.push_back(filter);

  // 3. annotate
  const auto annotate = runner.run("annotate", json::object(),
                                   {{"kept.jsonl", filter.outputs.at("kept.jsonl")}, {"functions", functions.fingerprint()}},
                                   [&](const fs::path& dir) {
                                     const auto kept = read_corpus(filter.output("kept.jsonl"));
                                     std::vector<json> records;
                                     for (const auto& s : weaklabel::annotate(kept, functions))
                                       records.push_back(weaklabel::to_json(s));
                                     io::write_jsonl(dir / "spans.jsonl", records);
                                   });
  result.stages.push_back(annotate);

  // 4. aggregate
  const auto aggregate = runner.run(
      "aggregate",
      {{"max_iter", config.fit.max_iter},
       {"tol", config.fit.tol},
       {"seed", config.fit.seed},
       {"mode", config.decode_mode == aggregate::DecodeMode::viterbi ? "viterbi" : "posterior"}},
      {{"kept.jsonl", filter.outputs.at("kept.jsonl")},
       {"spans.jsonl", annotate.outputs.at("spans.jsonl")},
       {"scheme", scheme.fingerprint()}},
      [&](const fs::path& dir) {
        const auto kept = read_corpus(filter.output("kept.jsonl"));
        std::vector<weaklabel::SpanAnnotation> spans;
        io::for_each_jsonl(annotate.output("spans.jsonl"),
                           [&](const json& r, std::size_t) { spans.push_back(weaklabel::span_from_json(r)); });
        aggregate::AggregateConfig cfg;
        cfg.fit = config.fit;
        cfg.mode = config.decode_mode;
        cfg.functions = functions.names();
        const auto out = aggregate::aggregate_corpus(kept, spans, scheme, cfg);
        io::write_file(dir / "model.json", out.model.to_json().dump(2) + "\n");
        std::vector<json> annotated;
        for (const auto& a : out.annotated) annotated.push_back(aggregate::to_json(a));
        io::write_jsonl(dir / "annotated.jsonl", annotated);
        corpus::write_corpus(dir / "unannotated.jsonl", out.unannotated);
        io::write_file(dir / "summary.json", out.summary().dump(2) + "\n");
      });
  result.stages.push_back(aggregate);

  // 5. split
  const auto split = runner.run(
      "split",
      {{"fractions", {config.split.train, config.split.validation, config.split.test}},
       {"seed", config.split.seed},
       {"algorithm", corpus::kSplitAlgorithm}},
      {{"annotated.jsonl", aggregate.outputs.at("annotated.jsonl")}}, [&](const fs::path& dir) {
        const auto annotated = read_annotated(aggregate.output("annotated.jsonl"));
        corpus::Corpus c;
        std::unordered_map<std::string, const aggregate::AnnotatedSentence*> by_id;
        for (const auto& a : annotated) {
          c.sentences.push_back(a.sentence);
          by_id.emplace(a.sentence.id, &a);
        }
        if (c.empty()) throw DataError("no annotated sentences to split");
        const auto parts = corpus::split(c, config.split);
        const auto write_part = [&](const char* name, const corpus::Corpus& part) {
          std::vector<json> records;
          for (const auto& s : part.sentences) records.push_back(aggregate::to_json(*by_id.at(s.id)));
          io::write_jsonl(dir / (std::string(name) + ".jsonl"), records);
        };
        write_part("train", parts.train);
        write_part("validation", parts.validation);
        write_part("test", parts.test);
        io::write_jsonl(dir / "split_manifest.jsonl", corpus::split_manifest(parts, config.split));
        io::write_file(dir / "sizes.json", json{{"train", parts.train.size()},
                                                {"validation", parts.validation.size()},
                                                {"test", parts.test.size()}}
                                                   .dump(2) +
                                               "\n");
      });
  result.stages.push_back(split);

  // 6. encode
  std::map<std::string, std::string> encode_inputs{{"scheme", scheme.fingerprint()}};
  for (const char* p : {"train", "validation", "test"}) encode_inputs[std::string(p) + ".jsonl"] = split.outputs.at(std::string(p) + ".jsonl");
  const auto encode = runner.run("encode", json::object(), encode_inputs, [&](const fs::path& dir) {
    io::write_file(dir / "scheme.json", scheme.to_json().dump(2) + "\n");
    for (const std::string p : {"train", "validation", "test"}) {
      std::vector<json> tagged_out;
      std::vector<json> bio_out;
      std::vector<json> seq_out;
      for (const auto& a : read_annotated(split.output(p + ".jsonl"))) {
        std::vector<tagcodec::EntitySpan> entities;
        for (const auto& e : a.entities) entities.push_back({e.start, e.end, e.label});
        const auto bio = tagcodec::spans_to_bio(a.sentence, entities, scheme);
        tagged_out.push_back(tagcodec::to_json(bio.tagged));
        bio_out.push_back(tagcodec::to_token_classification(bio.tagged, scheme));
        const auto seq = tagcodec::encode_seq(bio.tagged);
        seq_out.push_back({{"id", a.sentence.id}, {"input", a.sentence.text}, {"target", seq.target_text}});
      }
      io::write_jsonl(dir / (p + ".tagged.jsonl"), tagged_out);
      io::write_jsonl(dir / (p + ".bio.jsonl"), bio_out);
      io::write_jsonl(dir / (p + ".seq.jsonl"), seq_out);
    }
  });
  result.stages.push_back(encode);

  // 7. evaluate
  const std::string part = config.eval_partition;
  const auto evaluate = runner.run(
      "evaluate",
      {{"mode", nereval::to_string(config.compare_mode)}, {"partition", part}, {"model_name", config.model_name}},
      {{"gold", encode.outputs.at(part + ".tagged.jsonl")},
       {"targets", encode.outputs.at(part + ".seq.jsonl")},
       {"predictions", optional_hash(config.paths.predictions)},
       {"overrides", optional_hash(config.paths.overrides)},
       {"scheme", scheme.fingerprint()}},
      [&](const fs::path& dir) {
        const auto gold = read_tagged(encode.output(part + ".tagged.jsonl"));
        std::map<std::string, std::string> targets;
        io::for_each_jsonl(encode.output(part + ".seq.jsonl"),
                           [&](const json& r, std::size_t) {
                             targets[r.at("id").get<std::string>()] = r.at("target").get<std::string>();
                           });

        // Without external predictions the encoded targets are decoded back,
        // which scores the codec chain itself.
        std::vector<json> records;
        if (config.paths.predictions) {
          records = io::read_jsonl(*config.paths.predictions);
        } else {
          for (const auto& g : gold) records.push_back({{"id", g.id}, {"generated", targets.at(g.id)}});
        }
        std::vector<tagcodec::TaggedSentence> pred;
        std::vector<nereval::ErrorTriage> triages;
        bool generated_input = false;
        for (const auto& r : records) {
          if (r.contains("generated")) {
            generated_input = true;
            const std::string id = r.value("id", std::string());
            const std::string generated = r.at("generated");
            pred.push_back(tagcodec::decode_seq(generated, scheme, false, id).tagged);
            const auto it = targets.find(id);
            if (it != targets.end())
              if (auto t = nereval::triage_generation(it->second, generated, {}, id)) triages.push_back(std::move(*t));
          } else {
            pred.push_back(tagcodec::tagged_from_json(r));
          }
        }
        const auto muc = nereval::muc_evaluate(gold, pred, config.compare_mode);
        json muc_doc = {{"mode", nereval::to_string(config.compare_mode)},
                        {"counts", {{"COR", muc.tally.totals.cor}, {"INC", muc.tally.totals.inc},
                                    {"MIS", muc.tally.totals.mis}, {"SPU", muc.tally.totals.spu}}},
                        {"metrics", nereval::muc_metrics(muc.tally.totals).to_json()}};
        if (config.paths.overrides) {
          const auto overrides = nereval::parse_overrides(io::read_file(*config.paths.overrides));
          const auto outcome = nereval::apply_overrides(muc, overrides);
          muc_doc["overrides"] = outcome.to_json();
          io::write_file(dir / "muc_table.csv", outcome.to_csv(config.model_name));
        }
        io::write_file(dir / "muc.json", muc_doc.dump(2) + "\n");

        // PRF needs equal token counts; realign drifting generations first.
        std::vector<tagcodec::TaggedSentence> aligned = pred;
        std::unordered_map<std::string, const tagcodec::TaggedSentence*> gold_by_id;
        for (const auto& g : gold) gold_by_id.emplace(g.id, &g);
        for (auto& p : aligned) {
          const auto it = gold_by_id.find(p.id);
          if (it == gold_by_id.end() || p.tokens == it->second->tokens) continue;
          const auto& g = *it->second;
          const auto al = nereval::align_for_muc(g.tokens, p.tokens);
          tagcodec::TaggedSentence fixed{p.id, g.tokens, std::vector<std::string>(g.tokens.size(), "O")};
          for (std::size_t k = 0; k < al.size(); ++k)
            if (al.gold[k] && al.pred[k]) fixed.tags[*al.gold[k]] = p.tags[*al.pred[k]];
          fixed.tags = tagcodec::repair_bio(std::move(fixed.tags));
          p = std::move(fixed);
        }
        const auto prf = nereval::prf_report(gold, aligned, scheme, config.compare_mode);
        io::write_file(dir / "prf.json", prf.to_json().dump(2) + "\n");
        io::write_file(dir / "prf.md", prf.to_markdown("Results per class - " + config.model_name));
        if (generated_input) {
          std::vector<json> triage_out;
          for (const auto& t : triages) triage_out.push_back(t.to_json());
          io::write_jsonl(dir / "triage.jsonl", triage_out);
          io::write_file(dir / "triage_summary.json",
                         nereval::triage_summary(triages, gold.size()).to_json().dump(2) + "\n");
        }
      });
  result.stages.push_back(evaluate);

  // 8. compare
  const json compare_params = {{"alpha", config.alpha}, {"metric", config.metric}, {"higher_is_better", config.higher_is_better}};
  if (config.paths.scores) {
    result.stages.push_back(runner.run("compare", compare_params, {{"scores", io::sha256_file(*config.paths.scores)}},
                                       [&](const fs::path& dir) {
                                         const auto matrix = stats::parse_score_csv(io::read_file(*config.paths.scores),
                                                                                    config.higher_is_better);
                                         const auto cmp = stats::compare(matrix, config.alpha, config.metric);
                                         io::write_file(dir / "comparison.json", cmp.to_json().dump(2) + "\n");
                                         io::write_file(dir / "comparison.md", cmp.to_markdown());
                                       }));
  } else {
    result.stages.push_back(runner.skip("compare", compare_params));
  }

  json stages = json::array();
  for (const auto& s : result.stages) {
    auto entry = s.to_json();
    if (s.status == "skipped") entry["skipped"] = true;
    else entry["artifact_dir"] = fs::relative(s.dir, config.paths.output_dir).generic_string();
    stages.push_back(std::move(entry));
  }
  result.manifest = version_and_provenance(scheme, functions);
  result.manifest["stages"] = std::move(stages);
  result.manifest_path = config.paths.output_dir / "manifest.json";
  io::write_file(result.manifest_path, result.manifest.dump(2) + "\n");
  return result;
}

}  // namespace finespan::pipeline
