#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sefun/errors.hpp"
#include "sefun/grading.hpp"

using namespace sefun;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const std::string& l : lines) out << l << '\n';
}

// Every data row ends in the four empty grade cells; replace them.
void fill_grades(const std::string& path, const std::string& grades) {
  std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    REQUIRE(lines[i].size() >= 4);
    REQUIRE(lines[i].substr(lines[i].size() - 4) == ",,,,");
    lines[i] = lines[i].substr(0, lines[i].size() - 4) + grades;
  }
  write_lines(path, lines);
}

struct SheetFiles {
  std::string sheet, key;
  SheetFiles() {
    static int counter = 0;
    const std::string tag = std::to_string(counter++);
    sheet = temp_path(("sefun_sheet" + tag + ".csv").c_str());
    key = temp_path(("sefun_key" + tag + ".csv").c_str());
  }
  ~SheetFiles() {
    std::remove(sheet.c_str());
    std::remove(key.c_str());
  }
};

std::vector<std::string> queries3() { return {"q1", "q2", "q3"}; }
std::vector<std::string> targets3() { return {"Positive DE", "Yes-no IN", "Rhetorical"}; }

std::vector<SystemOutputs> two_systems() {
  return {{"ir-baseline", {"r1", "r2", "r3"}}, {"cseq2seq", {"s1", "s2", "s3"}}};
}

}  // namespace

TEST_CASE("export emits one blind row per query-system combination") {
  SheetFiles f;
  export_grading_sheet(queries3(), targets3(), two_systems(), 3, 5, f.sheet, f.key);

  std::vector<std::string> sheet = read_lines(f.sheet);
  std::vector<std::string> key = read_lines(f.key);
  REQUIRE(sheet.size() == 1 + 3 * 2);
  REQUIRE(key.size() == 1 + 3 * 2);
  CHECK(sheet[0] == "row,query,target_function,response,Fluency,Relevance,Informativeness,Accuracy");
  CHECK(key[0] == "row,system,query_index");
  // The sheet itself never names a system.
  for (const std::string& line : sheet) {
    CHECK(line.find("ir-baseline") == std::string::npos);
    CHECK(line.find("cseq2seq") == std::string::npos);
  }
}

TEST_CASE("sampling caps the row count") {
  SheetFiles f;
  export_grading_sheet(queries3(), targets3(), two_systems(), 2, 5, f.sheet, f.key);
  CHECK(read_lines(f.sheet).size() == 1 + 2 * 2);
  // sample_size beyond the query count takes everything.
  export_grading_sheet(queries3(), targets3(), two_systems(), 50, 5, f.sheet, f.key);
  CHECK(read_lines(f.sheet).size() == 1 + 3 * 2);
}

TEST_CASE("export is deterministic in the seed") {
  SheetFiles a, b;
  export_grading_sheet(queries3(), targets3(), two_systems(), 3, 9, a.sheet, a.key);
  export_grading_sheet(queries3(), targets3(), two_systems(), 3, 9, b.sheet, b.key);
  CHECK(read_lines(a.sheet) == read_lines(b.sheet));
  CHECK(read_lines(a.key) == read_lines(b.key));

  export_grading_sheet(queries3(), targets3(), two_systems(), 3, 10, b.sheet, b.key);
  CHECK(read_lines(a.key) != read_lines(b.key));
}

TEST_CASE("export validates coverage") {
  SheetFiles f;
  std::vector<SystemOutputs> short_system = {{"sys", {"r1", "r2"}}};
  CHECK_THROWS_AS(
      export_grading_sheet(queries3(), targets3(), short_system, 3, 1, f.sheet, f.key),
      CoverageMismatchError);
  CHECK_THROWS_AS(
      export_grading_sheet(queries3(), {"one"}, two_systems(), 3, 1, f.sheet, f.key),
      CoverageMismatchError);
  CHECK_THROWS_AS(export_grading_sheet({}, {}, two_systems(), 3, 1, f.sheet, f.key),
                  EmptyInputError);
}

TEST_CASE("ingest averages grades per system and normalizes by 5") {
  SheetFiles f;
  std::vector<SystemOutputs> one = {{"only", {"r1", "r2", "r3"}}};
  export_grading_sheet(queries3(), targets3(), one, 3, 5, f.sheet, f.key);

  // Rows get fluency 3,4,5 (order irrelevant for the mean), others constant.
  std::vector<std::string> lines = read_lines(f.sheet);
  const char* tails[] = {",3,5,0,1", ",4,5,0,1", ",5,5,0,1"};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    lines[i] = lines[i].substr(0, lines[i].size() - 4) + tails[i - 1];
  }
  write_lines(f.sheet, lines);

  GradingScores scores = ingest_grading_sheet(f.sheet, f.key);
  REQUIRE(scores.count("only"));
  CHECK(scores["only"].fluency == doctest::Approx(0.8));  // mean 4 of max 5
  CHECK(scores["only"].relevance == doctest::Approx(1.0));
  CHECK(scores["only"].informativeness == doctest::Approx(0.0));
  CHECK(scores["only"].accuracy == doctest::Approx(0.2));
}

TEST_CASE("ingest splits scores by the key's system column") {
  SheetFiles f;
  export_grading_sheet(queries3(), targets3(), two_systems(), 3, 6, f.sheet, f.key);
  fill_grades(f.sheet, ",4,4,4,4");
  GradingScores scores = ingest_grading_sheet(f.sheet, f.key);
  REQUIRE(scores.size() == 2);
  CHECK(scores["ir-baseline"].fluency == doctest::Approx(0.8));
  CHECK(scores["cseq2seq"].accuracy == doctest::Approx(0.8));
}

TEST_CASE("out-of-range grades raise a parse error naming the row") {
  SheetFiles f;
  export_grading_sheet(queries3(), targets3(), two_systems(), 1, 7, f.sheet, f.key);
  fill_grades(f.sheet, ",7,1,1,1");
  try {
    ingest_grading_sheet(f.sheet, f.key);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("row") != std::string::npos);
  }

  export_grading_sheet(queries3(), targets3(), two_systems(), 1, 7, f.sheet, f.key);
  fill_grades(f.sheet, ",x,1,1,1");
  CHECK_THROWS_AS(ingest_grading_sheet(f.sheet, f.key), ParseError);
}

TEST_CASE("missing grades are collected into one error") {
  SheetFiles f;
  export_grading_sheet(queries3(), targets3(), two_systems(), 3, 8, f.sheet, f.key);
  // Fill all but rows 2 and 5 (leave their cells empty).
  std::vector<std::string> lines = read_lines(f.sheet);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (i == 2 || i == 5) continue;
    lines[i] = lines[i].substr(0, lines[i].size() - 4) + ",2,2,2,2";
  }
  write_lines(f.sheet, lines);
  try {
    ingest_grading_sheet(f.sheet, f.key);
    FAIL("expected MissingGradesError");
  } catch (const MissingGradesError& e) {
    CHECK(e.rows() == std::vector<std::size_t>{2, 5});
  }
}

TEST_CASE("multiple annotator sheets are averaged") {
  SheetFiles f;
  std::string sheet2 = temp_path("sefun_sheet2.csv");
  std::vector<SystemOutputs> one = {{"only", {"r1", "r2", "r3"}}};
  export_grading_sheet(queries3(), targets3(), one, 3, 11, f.sheet, f.key);
  {
    std::ifstream in(f.sheet, std::ios::binary);
    std::ofstream out(sheet2, std::ios::binary);
    out << in.rdbuf();
  }
  fill_grades(f.sheet, ",4,4,4,4");
  fill_grades(sheet2, ",2,2,2,2");
  GradingScores scores = ingest_grading_sheets({f.sheet, sheet2}, f.key);
  CHECK(scores["only"].fluency == doctest::Approx(0.6));  // mean of 0.8 and 0.4
  CHECK(scores["only"].accuracy == doctest::Approx(0.6));
  std::remove(sheet2.c_str());
}

TEST_CASE("csv fields with commas and quotes survive the round trip") {
  SheetFiles f;
  std::vector<std::string> queries = {"a,b", "say \"hi\"", "plain"};
  std::vector<SystemOutputs> sys = {{"sys,with,commas", {"r,1", "\"r2\"", "r3"}}};
  export_grading_sheet(queries, targets3(), sys, 3, 12, f.sheet, f.key);
  fill_grades(f.sheet, ",3,3,3,3");
  GradingScores scores = ingest_grading_sheet(f.sheet, f.key);
  REQUIRE(scores.count("sys,with,commas"));
  CHECK(scores["sys,with,commas"].fluency == doctest::Approx(0.6));
}

TEST_CASE("ingest rejects corrupt files") {
  SheetFiles f;
  export_grading_sheet(queries3(), targets3(), two_systems(), 3, 13, f.sheet, f.key);
  fill_grades(f.sheet, ",1,1,1,1");

  std::string bad = temp_path("sefun_bad.csv");
  write_lines(bad, {"not a header"});
  CHECK_THROWS_AS(ingest_grading_sheet(bad, f.key), ParseError);
  CHECK_THROWS_AS(ingest_grading_sheet(f.sheet, bad), ParseError);
  CHECK_THROWS_AS(ingest_grading_sheet("/nonexistent/sheet.csv", f.key), IoError);
  std::remove(bad.c_str());
}
