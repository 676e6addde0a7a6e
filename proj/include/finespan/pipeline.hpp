#pragma once

// End-to-end orchestration: ingest, filter, annotate, aggregate, split,
// encode, evaluate and compare, each stage writing content-addressed
// artifacts under the output directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finespan/aggregate.hpp"
#include "finespan/corpus.hpp"
#include "finespan/nereval.hpp"
#include "finespan/tagcodec.hpp"
#include "finespan/weaklabel.hpp"

namespace finespan {

inline constexpr std::string_view kToolName = "finespan";
inline constexpr std::string_view kVersion = "0.1.0";

/// Tool version plus the fingerprints of the scheme and function set in use.
nlohmann::json version_and_provenance(const tagcodec::TagScheme& scheme, const weaklabel::FunctionSet& functions);

/// Builds the function set from a rule file and a gazetteer directory.
weaklabel::FunctionSet load_function_set(const std::filesystem::path& rules,
                                         const std::optional<std::filesystem::path>& gazetteers);

/// Default 23-label scheme unless a scheme JSON file is given.
tagcodec::TagScheme load_scheme(const std::optional<std::filesystem::path>& path);

}  // namespace finespan

namespace finespan::pipeline {

struct Paths {
  std::filesystem::path corpus;
  std::filesystem::path rules;
  std::optional<std::filesystem::path> gazetteers;
  std::optional<std::filesystem::path> scheme;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> predictions;
  std::optional<std::filesystem::path> overrides;
  std::optional<std::filesystem::path> scores;
};

struct PipelineConfig {
  Paths paths;
  corpus::Format format = corpus::Format::jsonl;
  std::size_t min_words = 4;
  bool dedupe = true;
  std::optional<std::string> group_by;
  std::size_t bin_width = 1;
  corpus::SplitSpec split;
  aggregate::FitConfig fit;
  aggregate::DecodeMode decode_mode = aggregate::DecodeMode::viterbi;
  nereval::CompareMode compare_mode = nereval::CompareMode::label_only;
  std::string eval_partition = "test";
  std::string model_name = "model";
  double alpha = 0.05;
  std::string metric = "f1";
  bool higher_is_better = true;

  /// Reads the JSON document; relative paths resolve against the config
  /// file's directory. FINESPAN_CORPUS, FINESPAN_RULES, FINESPAN_GAZETTEERS,
  /// FINESPAN_SCHEME, FINESPAN_OUTPUT_DIR, FINESPAN_PREDICTIONS,
  /// FINESPAN_OVERRIDES and FINESPAN_SCORES replace the matching path.
  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

  /// Throws ConfigError naming the first referenced input that does not exist.
  void validate() const;
};

struct StageRecord {
  std::string stage;
  std::string key;
  nlohmann::json parameters;
  std::map<std::string, std::string> inputs;   // name -> sha256
  std::map<std::string, std::string> outputs;  // file name -> sha256
  std::string status;                          // ran, cached or skipped
  std::filesystem::path dir;

  std::filesystem::path output(const std::string& name) const { return dir / name; }
  nlohmann::json to_json() const;  // status and location excluded
};

struct RunResult {
  std::vector<StageRecord> stages;
  nlohmann::json manifest;
  std::filesystem::path manifest_path;
};

/// Runs all stages in order. Stages whose inputs and parameters are
/// unchanged and whose outputs are intact are reported as cached unless
/// `force` is set. A failing stage aborts the run with an error naming it.
RunResult run_pipeline(const PipelineConfig& config, bool force = false);

}  // namespace finespan::pipeline
