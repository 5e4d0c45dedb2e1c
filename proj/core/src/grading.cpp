#include "sefun/grading.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include "sefun/errors.hpp"
#include "sefun/rng.hpp"

namespace sefun {

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

std::vector<std::string> parse_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", lineno);
  fields.push_back(std::move(cur));
  return fields;
}

std::string sheet_header() {
  std::string h = "row,query,target_function,response";
  for (const char* a : kGradeAspects) {
    h += ',';
    h += a;
  }
  return h;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// row id -> system name
std::map<std::size_t, std::string> load_key(const std::string& key_path) {
  std::ifstream in(key_path, std::ios::binary);
  if (!in) throw IoError("cannot open \"" + key_path + "\"");
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || strip_cr(line) != "row,system,query_index") {
    throw ParseError("bad key file header", lineno);
  }
  std::map<std::size_t, std::string> key;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = parse_csv_line(line, lineno);
    if (fields.size() != 3) throw ParseError("expected row,system,query_index", lineno);
    try {
      key[std::stoull(fields[0])] = fields[1];
    } catch (const std::exception&) {
      throw ParseError("bad row id \"" + fields[0] + "\"", lineno);
    }
  }
  if (key.empty()) throw EmptyInputError("key file \"" + key_path + "\" has no rows");
  return key;
}

struct AspectSums {
  double sum[4] = {0, 0, 0, 0};
  std::size_t n = 0;
};

}  // namespace

void export_grading_sheet(const std::vector<std::string>& queries,
                          const std::vector<std::string>& target_sfs,
                          const std::vector<SystemOutputs>& systems,
                          std::size_t sample_size, std::uint64_t seed,
                          const std::string& sheet_path, const std::string& key_path) {
  if (systems.empty()) throw EmptyInputError("need at least one system to grade");
  if (queries.empty()) throw EmptyInputError("no queries to grade");
  if (target_sfs.size() != queries.size()) {
    throw CoverageMismatchError("have " + std::to_string(queries.size()) +
                                " queries but " + std::to_string(target_sfs.size()) +
                                " target functions");
  }
  for (const SystemOutputs& sys : systems) {
    if (sys.responses.size() != queries.size()) {
      throw CoverageMismatchError("system \"" + sys.system + "\" covers " +
                                  std::to_string(sys.responses.size()) + " of " +
                                  std::to_string(queries.size()) + " queries");
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> qidx(queries.size());
  std::iota(qidx.begin(), qidx.end(), 0);
  rng.shuffle(qidx);
  qidx.resize(std::min(sample_size, qidx.size()));

  struct RowRef {
    std::size_t q;
    std::size_t sys;
  };
  std::vector<RowRef> rows;
  rows.reserve(qidx.size() * systems.size());
  for (std::size_t q : qidx) {
    for (std::size_t s = 0; s < systems.size(); ++s) rows.push_back({q, s});
  }
  rng.shuffle(rows);

  std::ofstream sheet(sheet_path, std::ios::binary);
  if (!sheet) throw IoError("cannot open \"" + sheet_path + "\" for writing");
  std::ofstream key(key_path, std::ios::binary);
  if (!key) throw IoError("cannot open \"" + key_path + "\" for writing");

  sheet << sheet_header() << '\n';
  key << "row,system,query_index\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RowRef& r = rows[i];
    sheet << (i + 1) << ',' << csv_escape(queries[r.q]) << ','
          << csv_escape(target_sfs[r.q]) << ','
          << csv_escape(systems[r.sys].responses[r.q]) << ",,,,\n";
    key << (i + 1) << ',' << csv_escape(systems[r.sys].system) << ',' << r.q << '\n';
  }
  sheet.close();
  key.close();
  if (!sheet || !key) throw IoError("failed writing grading sheet files");
}

GradingScores ingest_grading_sheet(const std::string& sheet_path,
                                   const std::string& key_path) {
  const auto key = load_key(key_path);

  std::ifstream in(sheet_path, std::ios::binary);
  if (!in) throw IoError("cannot open \"" + sheet_path + "\"");
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || strip_cr(line) != sheet_header()) {
    throw ParseError("bad grading sheet header", lineno);
  }

  std::map<std::string, AspectSums> sums;
  std::vector<std::size_t> ungraded;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = parse_csv_line(line, lineno);
    if (fields.size() != 8) {
      throw ParseError("expected 8 columns, got " + std::to_string(fields.size()),
                       lineno);
    }
    std::size_t row_id = 0;
    try {
      row_id = std::stoull(fields[0]);
    } catch (const std::exception&) {
      throw ParseError("bad row id \"" + fields[0] + "\"", lineno);
    }
    const auto key_it = key.find(row_id);
    if (key_it == key.end()) {
      throw ParseError("row " + std::to_string(row_id) + " is not in the key file",
                       lineno);
    }

    bool missing = false;
    int grades[4] = {0, 0, 0, 0};
    for (std::size_t a = 0; a < 4; ++a) {
      const std::string& cell = fields[4 + a];
      if (cell.empty()) {
        missing = true;
        continue;
      }
      std::size_t used = 0;
      int g = -1;
      try {
        g = std::stoi(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || g < 0 || g > kMaxGrade) {
        throw ParseError("row " + std::to_string(row_id) + ": grade \"" + cell +
                             "\" for " + kGradeAspects[a] + " must be an integer 0.." +
                             std::to_string(kMaxGrade),
                         lineno);
      }
      grades[a] = g;
    }
    if (missing) {
      ungraded.push_back(row_id);
      continue;
    }
    AspectSums& s = sums[key_it->second];
    for (std::size_t a = 0; a < 4; ++a) s.sum[a] += grades[a];
    ++s.n;
  }
  if (!ungraded.empty()) {
    throw MissingGradesError(std::to_string(ungraded.size()) +
                                 " rows are missing grades",
                             ungraded);
  }
  if (sums.empty()) throw EmptyInputError("grading sheet has no rows");

  GradingScores scores;
  for (const auto& [system, s] : sums) {
    AspectScores a;
    const double denom = static_cast<double>(s.n) * kMaxGrade;
    a.fluency = s.sum[0] / denom;
    a.relevance = s.sum[1] / denom;
    a.informativeness = s.sum[2] / denom;
    a.accuracy = s.sum[3] / denom;
    scores[system] = a;
  }
  return scores;
}

GradingScores ingest_grading_sheets(const std::vector<std::string>& sheet_paths,
                                    const std::string& key_path) {
  if (sheet_paths.empty()) throw EmptyInputError("no grading sheets given");
  GradingScores total;
  for (const std::string& path : sheet_paths) {
    const GradingScores one = ingest_grading_sheet(path, key_path);
    if (!total.empty()) {
      for (const auto& [system, unused] : one) {
        if (!total.count(system)) {
          throw CoverageMismatchError("sheet \"" + path + "\" grades system \"" +
                                      system + "\" missing from earlier sheets");
        }
      }
      for (const auto& [system, unused] : total) {
        if (!one.count(system)) {
          throw CoverageMismatchError("sheet \"" + path + "\" is missing system \"" +
                                      system + "\"");
        }
      }
    }
    for (const auto& [system, a] : one) {
      AspectScores& t = total[system];
      t.fluency += a.fluency;
      t.relevance += a.relevance;
      t.informativeness += a.informativeness;
      t.accuracy += a.accuracy;
    }
  }
  const double n = static_cast<double>(sheet_paths.size());
  for (auto& [system, a] : total) {
    a.fluency /= n;
    a.relevance /= n;
    a.informativeness /= n;
    a.accuracy /= n;
  }
  return total;
}

}  // namespace sefun
