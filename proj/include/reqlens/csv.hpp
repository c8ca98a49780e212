#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "reqlens/error.hpp"

namespace reqlens::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // physical line where the record starts
};

// RFC 4180 reader: quoted fields may hold delimiters, doubled quotes and
// line breaks; CRLF and LF endings are both accepted.
class Reader {
 public:
  explicit Reader(std::istream& in, char delimiter = ',')
      : in_(in), delimiter_(delimiter) {}

  std::optional<Record> next() {
    Record rec;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool any = false;
    rec.line = line_;

    for (;;) {
      const int ic = in_.get();
      if (ic == std::char_traits<char>::eof()) {
        if (in_quotes) {
          throw error(errc::malformed_record, "unterminated quoted field",
                      rec.line);
        }
        if (!any) return std::nullopt;
        rec.fields.push_back(std::move(field));
        return rec;
      }
      any = true;
      const char c = static_cast<char>(ic);
      if (in_quotes) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
        continue;
      }
      if (c == '"' && field.empty() && !field_was_quoted) {
        in_quotes = true;
        field_was_quoted = true;
      } else if (c == delimiter_) {
        rec.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
      } else if (c == '\r' && in_.peek() == '\n') {
        // folded into the '\n' branch on the next read
      } else if (c == '\n') {
        ++line_;
        rec.fields.push_back(std::move(field));
        return rec;
      } else {
        field.push_back(c);
      }
    }
  }

 private:
  std::istream& in_;
  char delimiter_;
  std::size_t line_ = 1;
};

inline std::string quote(std::string_view field, char delimiter = ',') {
  const bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
                         std::string_view::npos ||
                     field.empty();
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields,
                      char delimiter = ',') {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << delimiter;
    out << quote(fields[i], delimiter);
  }
  out << '\n';
}

}  // namespace reqlens::csv
