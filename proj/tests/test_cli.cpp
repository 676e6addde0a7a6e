#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <sys/wait.h>

#include "finespan/io.hpp"
#include "support.hpp"

namespace ts = testing_support;
using finespan::io::read_file;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

/// Runs the CLI with stderr discarded and returns its exit code and stdout.
Outcome run(const std::string& args) {
  const std::string command = std::string(FINESPAN_CLI) + " " + args + " 2>/dev/null";
  Outcome r;
  FILE* pipe = ::popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (const auto n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run("--help").code == 0);
  CHECK(run("corpus frobnicate").code == 1);
  CHECK(run("corpus filter --min-words four x.jsonl").code == 1);
  CHECK(run("corpus ingest /nonexistent/corpus.jsonl").code == 2);
  CHECK(run("pipeline run --config /nonexistent/pipeline.json").code == 1);
  const auto dir = ts::scratch("cli-codes");
  ts::write_text(dir / "bad.jsonl", "{\"id\":\"s\",\"tokens\":[\"a\"],\"tags\":[\"I-NOPE\"]}\n");
  CHECK(run("codec encode-seq " + (dir / "bad.jsonl").string()).code == 2);
}

TEST_CASE("version and scheme") {
  const auto v = run("version");
  CHECK(v.code == 0);
  CHECK(v.out.find("0.1.0") != std::string::npos);
  const auto scheme = nlohmann::json::parse(run("codec scheme").out);
  CHECK(scheme.at("labels").size() == 23);
}

TEST_CASE("worked example through encode-seq") {
  const auto dir = ts::scratch("cli-seq");
  ts::write_text(dir / "t.jsonl",
                 "{\"id\":\"s1\",\"tokens\":[\"O\",\"lucro\",\"líquido\",\"do\",\"Santander\",\"aumentou\"],"
                 "\"tags\":[\"O\",\"B-LUCRO\",\"I-LUCRO\",\"O\",\"B-COMPANY\",\"O\"]}\n");
  const auto r = run("codec encode-seq " + (dir / "t.jsonl").string());
  REQUIRE(r.code == 0);
  const auto rec = nlohmann::json::parse(r.out);
  CHECK(rec.at("target") == "O [lucro_líquido|LUCRO] do [Santander|COMPANY] aumentou");
}

TEST_CASE("verification table from the committed fixture") {
  const auto fixture = ts::fixture_dir() / "verification";
  const auto dir = ts::scratch("cli-muc");
  const auto r = run("eval muc --gold " + (fixture / "gold.jsonl").string() + " --pred " +
                     (fixture / "pred.jsonl").string() + " --overrides " + (fixture / "overrides.csv").string() +
                     " --table " + (dir / "table.csv").string() + " --model-name BERTimbau");
  CHECK(r.code == 0);
  CHECK(read_file(dir / "table.csv") == read_file(fixture / "expected.csv"));
}

TEST_CASE("stats compare on the golden scores") {
  const auto r = run("stats compare --metric f1 --alpha 0.05 " + (ts::data_dir() / "golden" / "scores.csv").string());
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc.dump().find("friedman") != std::string::npos);
}
