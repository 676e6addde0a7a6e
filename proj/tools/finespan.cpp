// finespan <module> <verb> command-line front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "finespan/aggregate.hpp"
#include "finespan/corpus.hpp"
#include "finespan/error.hpp"
#include "finespan/io.hpp"
#include "finespan/nereval.hpp"
#include "finespan/pipeline.hpp"
#include "finespan/stats.hpp"
#include "finespan/tagcodec.hpp"
#include "finespan/triage.hpp"
#include "finespan/weaklabel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace finespan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct Globals {
  std::string log_level = "warn";
  std::optional<std::uint64_t> seed;
};

void emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-")
    std::cout << content;
  else
    io::write_file(out, content);
}

void emit_jsonl(const std::string& out, const std::vector<json>& records) {
  if (out.empty() || out == "-") {
    for (const auto& r : records) std::cout << io::dump_line(r) << "\n";
  } else {
    io::write_jsonl(out, records);
  }
}

corpus::Corpus read_corpus(const fs::path& path) {
  if (path.extension() == ".csv") return corpus::ingest(path, corpus::Format::csv);
  return corpus::ingest(path, corpus::Format::jsonl);
}

std::vector<weaklabel::SpanAnnotation> read_spans(const fs::path& path) {
  std::vector<weaklabel::SpanAnnotation> spans;
  io::for_each_jsonl(path, [&](const json& r, std::size_t line) {
    try {
      spans.push_back(weaklabel::span_from_json(r));
    } catch (const Error& e) {
      throw DataError(path.string() + " line " + std::to_string(line) + ": " + e.what(), line);
    }
  });
  return spans;
}

std::vector<aggregate::AnnotatedSentence> read_annotated(const fs::path& path) {
  std::vector<aggregate::AnnotatedSentence> out;
  io::for_each_jsonl(path, [&](const json& r, std::size_t) { out.push_back(aggregate::annotated_from_json(r)); });
  return out;
}

std::vector<tagcodec::TaggedSentence> read_tagged(const fs::path& path) {
  std::vector<tagcodec::TaggedSentence> out;
  io::for_each_jsonl(path, [&](const json& r, std::size_t line) {
    try {
      out.push_back(tagcodec::tagged_from_json(r));
    } catch (const Error& e) {
      throw DataError(path.string() + " line " + std::to_string(line) + ": " + e.what(), line);
    }
  });
  return out;
}

/// Predictions as tagged records or as generated text decoded leniently.
std::vector<tagcodec::TaggedSentence> read_predictions(const fs::path& path, const tagcodec::TagScheme& scheme) {
  std::vector<tagcodec::TaggedSentence> out;
  io::for_each_jsonl(path, [&](const json& r, std::size_t line) {
    try {
      if (r.contains("generated"))
        out.push_back(tagcodec::decode_seq(r.at("generated").get<std::string>(), scheme, false,
                                           r.value("id", std::string()))
                          .tagged);
      else
        out.push_back(tagcodec::tagged_from_json(r));
    } catch (const Error& e) {
      throw DataError(path.string() + " line " + std::to_string(line) + ": " + e.what(), line);
    }
  });
  return out;
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

// -- corpus ------------------------------------------------------------------

void add_corpus(CLI::App& app, Globals& g) {
  auto* mod = app.add_subcommand("corpus", "Ingest, filter, describe and split sentence corpora");
  mod->require_subcommand(1);

  {
    auto* cmd = mod->add_subcommand("ingest", "Read CSV or JSON-lines into a corpus");
    auto in = std::make_shared<std::string>();
    auto format = std::make_shared<std::string>("jsonl");
    auto out = std::make_shared<std::string>();
    cmd->add_option("--in,input", *in, "Input file")->required();
    cmd->add_option("--format", *format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
    cmd->add_option("--out", *out, "Output JSON-lines (stdout when omitted)");
    cmd->callback([=] {
      const auto c = corpus::ingest(*in, corpus::parse_format(*format));
      std::vector<json> records;
      for (const auto& s : c.sentences) records.push_back(corpus::sentence_to_json(s));
      emit_jsonl(*out, records);
      spdlog::info("ingested {} sentences", c.size());
    });
  }
  {
    auto* cmd = mod->add_subcommand("filter", "Drop short and duplicate sentences");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto dropped = std::make_shared<std::string>();
    auto min_words = std::make_shared<std::size_t>(4);
    auto dedupe = std::make_shared<bool>(false);
    cmd->add_option("--in,input", *in, "Corpus file")->required();
    cmd->add_option("--out", *out, "Kept sentences (stdout when omitted)");
    cmd->add_option("--dropped", *dropped, "Dropped sentences with their reason");
    cmd->add_option("--min-words", *min_words, "Keep sentences with more words than this");
    cmd->add_flag("--dedupe", *dedupe, "Drop repeated sentences");
    cmd->callback([=] {
      const auto r = corpus::filter(read_corpus(*in), *min_words, *dedupe);
      std::vector<json> kept;
      for (const auto& s : r.kept.sentences) kept.push_back(corpus::sentence_to_json(s));
      emit_jsonl(*out, kept);
      if (!dropped->empty()) {
        std::vector<json> records;
        for (std::size_t i = 0; i < r.dropped.size(); ++i) {
          auto rec = corpus::sentence_to_json(r.dropped.sentences[i]);
          rec["drop_reason"] = corpus::to_string(r.reasons[i]);
          records.push_back(std::move(rec));
        }
        io::write_jsonl(*dropped, records);
      }
      spdlog::info("kept {}, dropped {}", r.kept.size(), r.dropped.size());
    });
  }
  {
    auto* cmd = mod->add_subcommand("stats", "Word-count statistics as JSON");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto group_by = std::make_shared<std::string>();
    auto bin_width = std::make_shared<std::size_t>(1);
    cmd->add_option("--in,input", *in, "Corpus file")->required();
    cmd->add_option("--group-by", *group_by, "Meta key to group by");
    cmd->add_option("--bin-width", *bin_width, "Histogram bin width in words");
    cmd->add_option("--out", *out, "Output file (stdout when omitted)");
    cmd->callback([=] {
      std::optional<std::string> key;
      if (!group_by->empty()) key = *group_by;
      emit(*out, corpus::to_json(corpus::stats(read_corpus(*in), key, *bin_width)).dump(2) + "\n");
    });
  }
  {
    auto* cmd = mod->add_subcommand("split", "Seeded train/validation/test split");
    auto in = std::make_shared<std::string>();
    auto out_dir = std::make_shared<std::string>();
    auto fractions = std::make_shared<std::string>("0.7,0.2,0.1");
    auto seed = std::make_shared<std::uint64_t>(42);
    cmd->add_option("--in,input", *in, "Corpus file")->required();
    cmd->add_option("--out-dir", *out_dir, "Directory for the partitions")->required();
    cmd->add_option("--fractions", *fractions, "train,validation,test");
    cmd->add_option("--seed", *seed, "Shuffle seed");
    cmd->callback([=, &g] {
      const auto spec = corpus::parse_fractions(*fractions, g.seed.value_or(*seed));
      const auto parts = corpus::split(read_corpus(*in), spec);
      const fs::path dir = *out_dir;
      corpus::write_corpus(dir / "train.jsonl", parts.train);
      corpus::write_corpus(dir / "validation.jsonl", parts.validation);
      corpus::write_corpus(dir / "test.jsonl", parts.test);
      io::write_jsonl(dir / "split_manifest.jsonl", corpus::split_manifest(parts, spec));
      std::cout << json{{"train", parts.train.size()}, {"validation", parts.validation.size()}, {"test", parts.test.size()}}
                       .dump()
                << "\n";
    });
  }
}

// -- annotate ------------------------------------------------------------------

void add_annotate(CLI::App& app) {
  auto* mod = app.add_subcommand("annotate", "Run labeling functions");
  mod->require_subcommand(1);
  auto* cmd = mod->add_subcommand("run", "Apply regex, heuristic and gazetteer functions");
  auto rules = std::make_shared<std::string>();
  auto gazetteers = std::make_shared<std::string>();
  auto in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto serial = std::make_shared<bool>(false);
  cmd->add_option("--rules", *rules, "Rule file")->required();
  cmd->add_option("--gazetteers", *gazetteers, "Directory of gazetteer JSON files");
  cmd->add_option("--in,input", *in, "Corpus file")->required();
  cmd->add_option("--out", *out, "Span annotations (stdout when omitted)");
  cmd->add_flag("--serial", *serial, "Single-threaded reference path");
  cmd->callback([=] {
    const auto functions = load_function_set(*rules, opt_path(*gazetteers));
    const auto c = read_corpus(*in);
    const auto spans = *serial ? weaklabel::annotate_serial(c, functions) : weaklabel::annotate(c, functions);
    std::vector<json> records;
    for (const auto& s : spans) records.push_back(weaklabel::to_json(s));
    emit_jsonl(*out, records);
    spdlog::info("{} spans from {} functions", spans.size(), functions.size());
  });
}

// -- aggregate -----------------------------------------------------------------

struct AggregateOptions {
  std::string in;
  std::string spans;
  std::string scheme;
  std::size_t max_iter = 50;
  double tol = 1e-6;
  std::string mode = "viterbi";
};

void add_aggregate_inputs(CLI::App* cmd, AggregateOptions& o) {
  cmd->add_option("--in,input", o.in, "Corpus file")->required();
  cmd->add_option("--spans", o.spans, "Span annotations")->required();
  cmd->add_option("--scheme", o.scheme, "Scheme JSON (default labels when omitted)");
}

void write_result(const aggregate::AggregateResult& r, const std::string& out, const std::string& unannotated,
                  const std::string& summary) {
  std::vector<json> records;
  for (const auto& a : r.annotated) records.push_back(aggregate::to_json(a));
  emit_jsonl(out, records);
  if (!unannotated.empty()) corpus::write_corpus(unannotated, r.unannotated);
  if (!summary.empty()) io::write_file(summary, r.summary().dump(2) + "\n");
  spdlog::info("{} annotated, {} unannotated, {} annotations", r.annotated.size(), r.unannotated.size(),
               r.total_annotations);
}

void add_aggregate(CLI::App& app, Globals& g) {
  auto* mod = app.add_subcommand("aggregate", "Combine labeling-function votes");
  mod->require_subcommand(1);
  {
    auto* cmd = mod->add_subcommand("fit", "Fit the HMM aggregator");
    auto o = std::make_shared<AggregateOptions>();
    auto model = std::make_shared<std::string>();
    add_aggregate_inputs(cmd, *o);
    cmd->add_option("--max-iter", o->max_iter, "EM iterations");
    cmd->add_option("--tol", o->tol, "Relative log-likelihood tolerance");
    cmd->add_option("--model", *model, "Model output (stdout when omitted)");
    cmd->callback([=, &g] {
      const auto scheme = load_scheme(opt_path(o->scheme));
      const auto c = read_corpus(o->in);
      const auto spans = read_spans(o->spans);
      const auto matrices = aggregate::build_vote_matrices(c, spans, aggregate::sources_of(spans), scheme);
      const auto m = aggregate::fit_hmm(matrices, scheme, {o->max_iter, o->tol, g.seed.value_or(0)});
      emit(*model, m.to_json().dump(2) + "\n");
    });
  }
  {
    auto* cmd = mod->add_subcommand("decode", "Decode with a fitted model");
    auto o = std::make_shared<AggregateOptions>();
    auto model = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto unannotated = std::make_shared<std::string>();
    auto summary = std::make_shared<std::string>();
    add_aggregate_inputs(cmd, *o);
    cmd->add_option("--model", *model, "Model file")->required();
    cmd->add_option("--mode", o->mode, "viterbi or posterior")->check(CLI::IsMember({"viterbi", "posterior"}));
    cmd->add_option("--out", *out, "Annotated corpus (stdout when omitted)");
    cmd->add_option("--unannotated", *unannotated, "Sentences without entities");
    cmd->add_option("--summary", *summary, "Summary JSON");
    cmd->callback([=] {
      const auto scheme = load_scheme(opt_path(o->scheme));
      const auto m = aggregate::AggregationModel::from_json(json::parse(io::read_file(*model)));
      const auto r = aggregate::decode_corpus(m, read_corpus(o->in), read_spans(o->spans), scheme,
                                              aggregate::parse_decode_mode(o->mode));
      write_result(r, *out, *unannotated, *summary);
    });
  }
  {
    auto* cmd = mod->add_subcommand("run", "Fit, decode and partition");
    auto o = std::make_shared<AggregateOptions>();
    auto model = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto unannotated = std::make_shared<std::string>();
    auto summary = std::make_shared<std::string>();
    add_aggregate_inputs(cmd, *o);
    cmd->add_option("--max-iter", o->max_iter, "EM iterations");
    cmd->add_option("--tol", o->tol, "Relative log-likelihood tolerance");
    cmd->add_option("--mode", o->mode, "viterbi or posterior")->check(CLI::IsMember({"viterbi", "posterior"}));
    cmd->add_option("--model", *model, "Where to write the fitted model");
    cmd->add_option("--out", *out, "Annotated corpus (stdout when omitted)");
    cmd->add_option("--unannotated", *unannotated, "Sentences without entities");
    cmd->add_option("--summary", *summary, "Summary JSON");
    cmd->callback([=, &g] {
      const auto scheme = load_scheme(opt_path(o->scheme));
      aggregate::AggregateConfig cfg;
      cfg.fit = {o->max_iter, o->tol, g.seed.value_or(0)};
      cfg.mode = aggregate::parse_decode_mode(o->mode);
      const auto r = aggregate::aggregate_corpus(read_corpus(o->in), read_spans(o->spans), scheme, cfg);
      if (!model->empty()) io::write_file(*model, r.model.to_json().dump(2) + "\n");
      write_result(r, *out, *unannotated, *summary);
    });
  }
}

// -- codec -----------------------------------------------------------------------

void add_codec(CLI::App& app) {
  auto* mod = app.add_subcommand("codec", "Tag scheme, BIO, subword and seq2seq transforms");
  mod->require_subcommand(1);
  {
    auto* cmd = mod->add_subcommand("scheme", "Write the tag scheme JSON");
    auto labels = std::make_shared<std::vector<std::string>>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--labels", *labels, "Labels (default: the 23 financial labels)")->delimiter(',');
    cmd->add_option("--out", *out, "Output file (stdout when omitted)");
    cmd->callback([=] {
      const auto scheme = tagcodec::TagScheme::build(labels->empty() ? tagcodec::default_labels() : *labels);
      emit(*out, scheme.to_json().dump(2) + "\n");
    });
  }
  {
    auto* cmd = mod->add_subcommand("bio", "Annotated corpus to BIO-tagged sentences");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto scheme_path = std::make_shared<std::string>();
    auto format = std::make_shared<std::string>("tagged");
    cmd->add_option("--in,input", *in, "Annotated corpus")->required();
    cmd->add_option("--scheme", *scheme_path, "Scheme JSON");
    cmd->add_option("--format", *format, "tagged or token-classification")
        ->check(CLI::IsMember({"tagged", "token-classification"}));
    cmd->add_option("--out", *out, "Output (stdout when omitted)");
    cmd->callback([=] {
      const auto scheme = load_scheme(opt_path(*scheme_path));
      std::vector<json> records;
      for (const auto& a : read_annotated(*in)) {
        std::vector<tagcodec::EntitySpan> entities;
        for (const auto& e : a.entities) entities.push_back({e.start, e.end, e.label});
        const auto r = tagcodec::spans_to_bio(a.sentence, entities, scheme);
        for (const auto& d : r.diagnostics) spdlog::warn("{}: {}", a.sentence.id, d);
        records.push_back(*format == "tagged" ? tagcodec::to_json(r.tagged)
                                              : tagcodec::to_token_classification(r.tagged, scheme));
      }
      emit_jsonl(*out, records);
    });
  }
  {
    auto* cmd = mod->add_subcommand("align", "Repeat token tag ids over subword pieces");
    auto in = std::make_shared<std::string>();
    auto segmentation = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto scheme_path = std::make_shared<std::string>();
    auto prefix = std::make_shared<std::size_t>(1);
    auto suffix = std::make_shared<std::size_t>(1);
    cmd->add_option("--in,input", *in, "Tagged sentences")->required();
    cmd->add_option("--segmentation", *segmentation, "JSON-lines {\"id\", \"subwords\": [[...], ...]}")->required();
    cmd->add_option("--prefix", *prefix, "Special tokens before the sentence");
    cmd->add_option("--suffix", *suffix, "Special tokens after the sentence");
    cmd->add_option("--scheme", *scheme_path, "Scheme JSON");
    cmd->add_option("--out", *out, "Output (stdout when omitted)");
    cmd->callback([=] {
      const auto scheme = load_scheme(opt_path(*scheme_path));
      std::map<std::string, std::vector<std::vector<std::string>>> seg;
      io::for_each_jsonl(*segmentation, [&](const json& r, std::size_t) {
        seg[r.at("id").get<std::string>()] = r.at("subwords").get<std::vector<std::vector<std::string>>>();
      });
      tagcodec::SpecialTokens specials;
      specials.prefix = *prefix;
      specials.suffix = *suffix;
      std::vector<json> records;
      std::size_t pieces = 0;
      std::size_t tokens = 0;
      for (const auto& t : read_tagged(*in)) {
        const auto it = seg.find(t.id);
        if (it == seg.end()) throw DataError("no segmentation for sentence '" + t.id + "'");
        const auto a = tagcodec::align_subwords(t, it->second, specials, scheme);
        for (const auto& pieces_of_token : it->second) pieces += pieces_of_token.size();
        tokens += t.tokens.size();
        records.push_back({{"id", t.id}, {"subwords", a.subwords}, {"labels", a.label_ids}});
      }
      emit_jsonl(*out, records);
      spdlog::info("subword ratio {:.2f}", tagcodec::subword_ratio(pieces, tokens));
    });
  }
  {
    auto* cmd = mod->add_subcommand("encode-seq", "Tagged sentences to [entity|LABEL] targets");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    cmd->add_option("--in,input", *in, "Tagged sentences")->required();
    cmd->add_option("--out", *out, "Output (stdout when omitted)");
    cmd->callback([=] {
      std::vector<json> records;
      for (const auto& t : read_tagged(*in)) {
        std::string input;
        for (const auto& tok : t.tokens) input += (input.empty() ? "" : " ") + tok;
        records.push_back({{"id", t.id}, {"input", input}, {"target", tagcodec::encode_seq(t).target_text}});
      }
      emit_jsonl(*out, records);
    });
  }
  {
    auto* cmd = mod->add_subcommand("decode-seq", "Generated text back to BIO tags");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto scheme_path = std::make_shared<std::string>();
    auto diagnostics = std::make_shared<std::string>();
    auto lenient = std::make_shared<bool>(false);
    cmd->add_option("--in,input", *in, "JSON-lines {\"id\", \"generated\"} (or \"target\")")->required();
    cmd->add_option("--scheme", *scheme_path, "Scheme JSON");
    cmd->add_flag("--lenient", *lenient, "Tag malformed tokens O instead of failing");
    cmd->add_option("--diagnostics", *diagnostics, "Where to write decode diagnostics");
    cmd->add_option("--out", *out, "Output (stdout when omitted)");
    cmd->callback([=] {
      const auto scheme = load_scheme(opt_path(*scheme_path));
      std::vector<json> records;
      std::vector<json> diags;
      io::for_each_jsonl(*in, [&](const json& r, std::size_t line) {
        const std::string text = r.contains("generated") ? r["generated"].get<std::string>() : r.at("target").get<std::string>();
        const std::string id = r.value("id", std::to_string(line));
        try {
          const auto d = tagcodec::decode_seq(text, scheme, !*lenient, id);
          records.push_back(tagcodec::to_json(d.tagged));
          for (const auto& diag : d.diagnostics)
            diags.push_back({{"id", id}, {"kind", tagcodec::to_string(diag.kind)}, {"token_index", diag.token_index},
                             {"token", diag.token}});
        } catch (const DataError& e) {
          throw DataError(in->c_str() + (" line " + std::to_string(line) + ": ") + e.what(), line);
        }
      });
      emit_jsonl(*out, records);
      if (!diagnostics->empty()) io::write_jsonl(*diagnostics, diags);
      else
        for (const auto& d : diags) spdlog::warn("{}", d.dump());
    });
  }
}

// -- eval --------------------------------------------------------------------------

void add_eval(CLI::App& app) {
  auto* mod = app.add_subcommand("eval", "Score predictions against gold");
  mod->require_subcommand(1);
  {
    auto* cmd = mod->add_subcommand("prf", "Per-class precision, recall and F1");
    auto gold = std::make_shared<std::string>();
    auto pred = std::make_shared<std::string>();
    auto scheme_path = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("label-only");
    auto format = std::make_shared<std::string>("json");
    auto out = std::make_shared<std::string>();
    cmd->add_option("--gold", *gold, "Gold tagged sentences")->required();
    cmd->add_option("--pred", *pred, "Predictions (tagged or generated)")->required();
    cmd->add_option("--scheme", *scheme_path, "Scheme JSON");
    cmd->add_option("--mode", *mode, "label-only or strict-bio");
    cmd->add_option("--format", *format, "json or markdown")->check(CLI::IsMember({"json", "markdown"}));
    cmd->add_option("--out", *out, "Output (stdout when omitted)");
    cmd->callback([=] {
      const auto scheme = load_scheme(opt_path(*scheme_path));
      const auto r = nereval::prf_report(read_tagged(*gold), read_predictions(*pred, scheme), scheme,
                                         nereval::parse_compare_mode(*mode));
      emit(*out, *format == "json" ? r.to_json().dump(2) + "\n" : r.to_markdown());
    });
  }
  {
    auto* cmd = mod->add_subcommand("muc", "MUC-5 categories and error rates");
    auto gold = std::make_shared<std::string>();
    auto pred = std::make_shared<std::string>();
    auto scheme_path = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("label-only");
    auto overrides = std::make_shared<std::string>();
    auto table = std::make_shared<std::string>();
    auto events = std::make_shared<std::string>();
    auto model_name = std::make_shared<std::string>("model");
    auto out = std::make_shared<std::string>();
    cmd->add_option("--gold", *gold, "Gold tagged sentences")->required();
    cmd->add_option("--pred", *pred, "Predictions (tagged or generated)")->required();
    cmd->add_option("--scheme", *scheme_path, "Scheme JSON");
    cmd->add_option("--mode", *mode, "label-only or strict-bio");
    cmd->add_option("--overrides", *overrides, "Manual verification CSV");
    cmd->add_option("--table", *table, "Verification table CSV");
    cmd->add_option("--events", *events, "Non-COR events as CSV, ready for manual verification");
    cmd->add_option("--model-name", *model_name, "Column name in the verification table");
    cmd->add_option("--out", *out, "Output (stdout when omitted)");
    cmd->callback([=] {
      const auto scheme = load_scheme(opt_path(*scheme_path));
      const auto r = nereval::muc_evaluate(read_tagged(*gold), read_predictions(*pred, scheme),
                                           nereval::parse_compare_mode(*mode));
      json per_class = json::object();
      for (const auto& [label, c] : r.tally.per_class)
        per_class[label] = {{"COR", c.cor}, {"INC", c.inc}, {"MIS", c.mis}, {"SPU", c.spu}};
      json doc = {{"counts", {{"COR", r.tally.totals.cor}, {"INC", r.tally.totals.inc}, {"MIS", r.tally.totals.mis},
                              {"SPU", r.tally.totals.spu}}},
                  {"per_class", std::move(per_class)},
                  {"metrics", nereval::muc_metrics(r.tally.totals).to_json()}};
      if (!overrides->empty()) {
        const auto records = nereval::parse_overrides(io::read_file(*overrides));
        const auto outcome = nereval::apply_overrides(r, records);
        doc["overrides"] = outcome.to_json();
        if (!table->empty()) io::write_file(*table, outcome.to_csv(*model_name));
      }
      if (!events->empty()) {
        std::string csv = "sentence_id,token_index,category,gold_tag,pred_tag\n";
        for (const auto& e : r.events)
          if (e.category != nereval::Category::cor)
            csv += io::csv_escape(e.sentence_id) + "," + std::to_string(e.token_index) + "," +
                   std::string(nereval::to_string(e.category)) + "," + e.gold_tag + "," + e.pred_tag + "\n";
        io::write_file(*events, csv);
      }
      emit(*out, doc.dump(2) + "\n");
    });
  }
  {
    auto* cmd = mod->add_subcommand("triage", "Critical and non-critical generation errors");
    auto in = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto summary = std::make_shared<std::string>();
    auto bin_width = std::make_shared<double>(0.05);
    auto ngram = std::make_shared<std::size_t>(4);
    cmd->add_option("--in,input", *in, "JSON-lines {\"id\", \"target\", \"generated\"}")->required();
    cmd->add_option("--bin-width", *bin_width, "Similarity histogram bin width");
    cmd->add_option("--ngram", *ngram, "Minimum repeated n-gram length");
    cmd->add_option("--out", *out, "Triage records");
    cmd->add_option("--summary", *summary, "Summary JSON (stdout when omitted)");
    cmd->callback([=] {
      std::vector<nereval::ErrorTriage> triages;
      std::size_t evaluated = 0;
      io::for_each_jsonl(*in, [&](const json& r, std::size_t) {
        ++evaluated;
        if (auto t = nereval::triage_generation(r.at("target").get<std::string>(), r.at("generated").get<std::string>(),
                                                {*ngram}, r.value("id", std::string())))
          triages.push_back(std::move(*t));
      });
      if (!out->empty()) {
        std::vector<json> records;
        for (const auto& t : triages) records.push_back(t.to_json());
        io::write_jsonl(*out, records);
      }
      emit(*summary, nereval::triage_summary(triages, evaluated, *bin_width).to_json().dump(2) + "\n");
    });
  }
  {
    auto* cmd = mod->add_subcommand("report", "PRF and MUC reports into a directory");
    auto gold = std::make_shared<std::string>();
    auto pred = std::make_shared<std::string>();
    auto scheme_path = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("label-only");
    auto overrides = std::make_shared<std::string>();
    auto model_name = std::make_shared<std::string>("model");
    auto out_dir = std::make_shared<std::string>();
    cmd->add_option("--gold", *gold, "Gold tagged sentences")->required();
    cmd->add_option("--pred", *pred, "Predictions (tagged or generated)")->required();
    cmd->add_option("--scheme", *scheme_path, "Scheme JSON");
    cmd->add_option("--mode", *mode, "label-only or strict-bio");
    cmd->add_option("--overrides", *overrides, "Manual verification CSV");
    cmd->add_option("--model-name", *model_name, "Model name for titles and tables");
    cmd->add_option("--out-dir", *out_dir, "Report directory")->required();
    cmd->callback([=] {
      const auto scheme = load_scheme(opt_path(*scheme_path));
      const auto g = read_tagged(*gold);
      const auto p = read_predictions(*pred, scheme);
      const auto cmp = nereval::parse_compare_mode(*mode);
      const fs::path dir = *out_dir;
      const auto muc = nereval::muc_evaluate(g, p, cmp);
      json doc = {{"counts", {{"COR", muc.tally.totals.cor}, {"INC", muc.tally.totals.inc},
                              {"MIS", muc.tally.totals.mis}, {"SPU", muc.tally.totals.spu}}},
                  {"metrics", nereval::muc_metrics(muc.tally.totals).to_json()}};
      if (!overrides->empty()) {
        const auto outcome = nereval::apply_overrides(muc, nereval::parse_overrides(io::read_file(*overrides)));
        doc["overrides"] = outcome.to_json();
        io::write_file(dir / "muc_table.csv", outcome.to_csv(*model_name));
      }
      io::write_file(dir / "muc.json", doc.dump(2) + "\n");
      bool same_lengths = g.size() == p.size();
      if (same_lengths)
        for (std::size_t i = 0; i < g.size(); ++i) same_lengths = same_lengths && g[i].tags.size() == p[i].tags.size();
      if (same_lengths) {
        const auto prf = nereval::prf_report(g, p, scheme, cmp);
        io::write_file(dir / "prf.json", prf.to_json().dump(2) + "\n");
        io::write_file(dir / "prf.md", prf.to_markdown("Results per class - " + *model_name));
      } else {
        spdlog::warn("token counts differ between gold and predictions; PRF report skipped");
      }
    });
  }
}

// -- stats -----------------------------------------------------------------------

void add_stats(CLI::App& app) {
  auto* mod = app.add_subcommand("stats", "Statistical comparison of models");
  mod->require_subcommand(1);
  auto* cmd = mod->add_subcommand("compare", "Friedman, Nemenyi and pairwise Wilcoxon tests");
  auto scores = std::make_shared<std::string>();
  auto metric = std::make_shared<std::string>();
  auto alpha = std::make_shared<double>(0.05);
  auto lower = std::make_shared<bool>(false);
  auto method = std::make_shared<std::string>("auto");
  auto out = std::make_shared<std::string>();
  auto markdown = std::make_shared<std::string>();
  cmd->add_option("scores", *scores, "CSV: subset column, then one column per model")->required();
  cmd->add_option("--metric", *metric, "Metric name for the report");
  cmd->add_option("--alpha", *alpha, "Significance level");
  cmd->add_flag("--lower-is-better", *lower, "Rank smaller values first");
  cmd->add_option("--wilcoxon", *method, "auto, exact or normal-approx");
  cmd->add_option("--out", *out, "JSON report (stdout when omitted)");
  cmd->add_option("--markdown", *markdown, "Markdown summary");
  cmd->callback([=] {
    const auto matrix = stats::parse_score_csv(io::read_file(*scores), !*lower);
    const auto c = stats::compare(matrix, *alpha, *metric, stats::parse_wilcoxon_method(*method));
    emit(*out, c.to_json().dump(2) + "\n");
    if (!markdown->empty()) io::write_file(*markdown, c.to_markdown());
  });
}

// -- pipeline and version ----------------------------------------------------

void add_pipeline(CLI::App& app, Globals& g) {
  auto* mod = app.add_subcommand("pipeline", "Run every stage from a config file");
  mod->require_subcommand(1);
  auto* cmd = mod->add_subcommand("run", "Run the pipeline");
  auto config = std::make_shared<std::string>();
  auto force = std::make_shared<bool>(false);
  cmd->add_option("--config", *config, "Pipeline config JSON")->required();
  cmd->add_flag("--force", *force, "Re-run stages even when cached outputs are current");
  cmd->callback([=, &g] {
    auto cfg = pipeline::PipelineConfig::load(*config);
    if (g.seed) cfg.split.seed = *g.seed;
    const auto r = pipeline::run_pipeline(cfg, *force);
    json report = json::array();
    for (const auto& s : r.stages) report.push_back({{"stage", s.stage}, {"status", s.status}});
    std::cout << json{{"manifest", r.manifest_path.string()}, {"stages", report}}.dump(2) << "\n";
  });
}

void add_version(CLI::App& app) {
  auto* cmd = app.add_subcommand("version", "Tool version and input fingerprints");
  auto rules = std::make_shared<std::string>();
  auto gazetteers = std::make_shared<std::string>();
  auto scheme_path = std::make_shared<std::string>();
  cmd->add_option("--rules", *rules, "Rule file to fingerprint");
  cmd->add_option("--gazetteers", *gazetteers, "Gazetteer directory to fingerprint");
  cmd->add_option("--scheme", *scheme_path, "Scheme JSON");
  cmd->callback([=] {
    const auto scheme = load_scheme(opt_path(*scheme_path));
    weaklabel::FunctionSet functions;
    if (!rules->empty()) functions = load_function_set(*rules, opt_path(*gazetteers));
    std::cout << version_and_provenance(scheme, functions).dump(2) << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-supervision NER toolkit for financial text", "finespan"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  app.add_option("--seed", g.seed, "Overrides the split and fitting seeds");
  app.parse_complete_callback([&] {
    auto logger = spdlog::stderr_color_mt("finespan");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(g.log_level));
  });

  add_corpus(app, g);
  add_annotate(app);
  add_aggregate(app, g);
  add_codec(app);
  add_eval(app);
  add_stats(app);
  add_pipeline(app, g);
  add_version(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
