#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "finespan/io.hpp"
#include "finespan/pipeline.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() { return FINESPAN_SOURCE_DIR; }
inline std::filesystem::path data_dir() { return source_dir() / "data"; }
inline std::filesystem::path fixture_dir() { return source_dir() / "tests" / "data"; }

/// Fresh scratch directory under the system temp dir, unique per name.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("finespan-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

/// Sentence and entity accounting of a pipeline run, in the layout of
/// data/golden/expected.json.
inline nlohmann::json accounting(const finespan::pipeline::RunResult& run) {
  nlohmann::json out;
  for (const auto& stage : run.stages) {
    if (stage.stage == "filter") {
      std::size_t kept = 0;
      std::ifstream in(stage.output("kept.jsonl"));
      for (std::string line; std::getline(in, line);) kept += !line.empty();
      out["kept_sentences"] = kept;
    } else if (stage.stage == "aggregate") {
      const auto summary = nlohmann::json::parse(finespan::io::read_file(stage.output("summary.json")));
      for (const char* key : {"annotated_sentences", "total_annotations", "annotations_per_sentence", "per_label"})
        out[key] = summary.at(key);
    } else if (stage.stage == "split") {
      out["split_sizes"] = nlohmann::json::parse(finespan::io::read_file(stage.output("sizes.json")));
    }
  }
  return out;
}

/// Relative path -> sha256 of every regular file below `root`.
inline std::map<std::string, std::string> tree_digest(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      out[std::filesystem::relative(entry.path(), root).generic_string()] = finespan::io::sha256_file(entry.path());
  return out;
}

}  // namespace testing_support
