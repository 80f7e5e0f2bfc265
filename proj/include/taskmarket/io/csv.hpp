#pragma once

// RFC 4180 reading and writing, numeric formatting and atomic file output.

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "taskmarket/econometrics.hpp"
#include "taskmarket/error.hpp"

#if defined(_WIN32)
#include <process.h>
#define TASKMARKET_GETPID _getpid
#else
#include <unistd.h>
#define TASKMARKET_GETPID getpid
#endif

namespace taskmarket::io {

class CsvError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw UnknownColumnError(std::string(name));
  }
};

// Accepts CRLF or LF record ends, quoted fields with doubled quotes and
// embedded line breaks. Every record must have as many fields as the header.
inline CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  bool closed = false;  // a quoted field has ended; only a separator may follow
  std::size_t line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    closed = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
          closed = true;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw CsvError("csv line " + std::to_string(line) + ": stray quote inside a field");
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        if (closed) {
          throw CsvError("csv line " + std::to_string(line) + ": text after closing quote");
        }
        field += c;
        field_started = true;
    }
  }
  if (quoted) throw CsvError("csv: unterminated quoted field");
  if (field_started || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw CsvError("csv record " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                     " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

inline std::string quote_field(std::string_view f) {
  if (f.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(f);
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out_ += ',';
      out_ += quote_field(fields[i]);
    }
    out_ += "\r\n";
  }
  const std::string& str() const noexcept { return out_; }

 private:
  std::string out_;
};

// 12 significant digits; NaN (missing) prints as an empty field.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Empty field -> NaN.
inline double parse_number(std::string_view s, std::string_view context) {
  if (s.empty()) return std::nan("");
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || errno == ERANGE) {
    throw CsvError(std::string(context) + ": '" + tmp + "' is not a number");
  }
  return v;
}

// Writes to a sibling temporary file, then renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(TASKMARKET_GETPID());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

inline PanelDataset panel_from_csv(const CsvTable& table) {
  PanelDataset panel;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    std::vector<double> col;
    col.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      col.push_back(parse_number(table.rows[r][c],
                                 "column '" + table.header[c] + "' row " + std::to_string(r + 1)));
    }
    panel.add_column(table.header[c], std::move(col));
  }
  return panel;
}

inline PanelDataset read_panel_csv(const std::filesystem::path& path) { return panel_from_csv(read_csv(path)); }

inline std::string panel_to_csv(const PanelDataset& panel) {
  CsvWriter w;
  w.row(panel.names());
  std::vector<std::string> fields(panel.names().size());
  for (std::size_t r = 0; r < panel.rows(); ++r) {
    for (std::size_t c = 0; c < fields.size(); ++c) fields[c] = format_number(panel.column(panel.names()[c])[r]);
    w.row(fields);
  }
  return w.str();
}

}  // namespace taskmarket::io
