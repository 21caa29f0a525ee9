#ifndef CYLBIF_CLI_CSV_HPP
#define CYLBIF_CLI_CSV_HPP

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "cylbif/error.hpp"

namespace cylbif::cli {

/// Locale-independent, round-trip (17 significant digits) formatting.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::initializer_list<std::string_view> header) : out_(path) {
    if (!out_) throw Error(ErrorKind::Validation, "cannot open " + path + " for writing");
    bool first = true;
    for (auto h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  CsvWriter& cell(double v) { return raw(format_double(v)); }
  CsvWriter& cell(long long v) { return raw(std::to_string(v)); }
  CsvWriter& cell(int v) { return raw(std::to_string(v)); }
  CsvWriter& cell(std::size_t v) { return raw(std::to_string(v)); }
  CsvWriter& cell(bool v) { return raw(v ? "1" : "0"); }
  CsvWriter& cell(std::string_view s) {
    // Labels may contain commas, e.g. "(1,0)".
    if (s.find_first_of(",\"") == std::string_view::npos) return raw(std::string(s));
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return raw(q + "\"");
  }
  CsvWriter& cell(const char* s) { return cell(std::string_view(s)); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  CsvWriter& raw(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }

  std::ofstream out_;
  bool first_ = true;
};

}  // namespace cylbif::cli

#endif  // CYLBIF_CLI_CSV_HPP
