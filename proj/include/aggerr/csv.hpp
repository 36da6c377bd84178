#pragma once

#include <aggerr/error.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace aggerr::csv {

struct Row {
  std::size_t line = 0;
  std::vector<std::string> cells;
};

struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<Row> rows;

  // Column position by name; throws when absent.
  std::size_t column(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw ParseError(source, 1, "missing column '" + std::string(name) + "'");
  }
  std::optional<std::size_t> findColumn(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    return std::nullopt;
  }
};

// Splits one record; supports double-quoted fields with "" escapes.
inline std::vector<std::string> splitRecord(std::string_view line, char delim = ',') {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  out.push_back(std::move(cell));
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

inline Table parse(std::istream& in, const std::string& source) {
  Table t;
  t.source = source;
  std::string line;
  std::size_t lineNo = 0;
  bool haveHeader = false;
  while (std::getline(in, line)) {
    ++lineNo;
    if (lineNo == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = splitRecord(line);
    for (auto& c : cells) c = trim(c);
    if (!haveHeader) {
      t.header = std::move(cells);
      haveHeader = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError(source, lineNo,
                       "expected " + std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
    t.rows.push_back(Row{lineNo, std::move(cells)});
  }
  if (!haveHeader) throw ParseError(source, 0, "empty file");
  return t;
}

inline Table read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return parse(in, path);
}

inline double parseDouble(const std::string& s, const std::string& source, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty() || !std::isfinite(v))
    throw ParseError(source, line, "not a number: '" + s + "'");
  return v;
}

inline std::int64_t parseInt(const std::string& s, const std::string& source, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError(source, line, "not an integer: '" + s + "'");
  return v;
}

// Shortest representation that round-trips exactly.
inline std::string formatDouble(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string quoteIfNeeded(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

// Row builder: w << "a" << 1.5; w.str() gives "a,1.5".
class RecordWriter {
 public:
  RecordWriter& operator<<(const std::string& s) {
    sep();
    out_ += quoteIfNeeded(s);
    return *this;
  }
  RecordWriter& operator<<(const char* s) { return *this << std::string(s); }
  RecordWriter& operator<<(double v) {
    sep();
    out_ += formatDouble(v);
    return *this;
  }
  RecordWriter& operator<<(std::size_t v) {
    sep();
    out_ += std::to_string(v);
    return *this;
  }
  RecordWriter& operator<<(int v) {
    sep();
    out_ += std::to_string(v);
    return *this;
  }
  const std::string& str() const noexcept { return out_; }

 private:
  void sep() {
    if (!first_) out_.push_back(',');
    first_ = false;
  }
  std::string out_;
  bool first_ = true;
};

inline std::ofstream openForWrite(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace aggerr::csv
