#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finespan::io {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written artifact.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Calls `fn(record, line_number)` for each non-blank line. Parse failures
/// raise DataError with the 1-based line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn);

std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);

/// Compact single-line dump used for every JSON-lines record.
std::string dump_line(const json& record);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// RFC-4180 CSV: quoted fields, doubled quotes, CRLF or LF line ends.
/// Blank lines are skipped. Each row is paired with its 1-based line number.
struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;
};
std::vector<CsvRow> parse_csv(std::string_view content);
std::string csv_escape(std::string_view field);

}  // namespace finespan::io
