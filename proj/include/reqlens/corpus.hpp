#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "reqlens/csv.hpp"
#include "reqlens/error.hpp"
#include "reqlens/random.hpp"

namespace reqlens {

// PROMISE label inventory: F plus eleven non-functional subclasses.
enum class RawLabel : std::uint8_t { F, A, FT, L, LF, MN, O, PE, PO, SC, SE, US };

enum class BinaryLabel : std::uint8_t { FR = 0, NFR = 1 };

inline constexpr std::array<RawLabel, 12> kAllRawLabels = {
    RawLabel::F,  RawLabel::A,  RawLabel::FT, RawLabel::L,
    RawLabel::LF, RawLabel::MN, RawLabel::O,  RawLabel::PE,
    RawLabel::PO, RawLabel::SC, RawLabel::SE, RawLabel::US};

constexpr std::string_view to_string(RawLabel label) {
  constexpr std::array<std::string_view, 12> codes = {
      "F", "A", "FT", "L", "LF", "MN", "O", "PE", "PO", "SC", "SE", "US"};
  return codes[static_cast<std::size_t>(label)];
}

constexpr std::string_view subclass_name(RawLabel label) {
  constexpr std::array<std::string_view, 12> names = {
      "Functional",    "Availability",    "Fault Tolerance", "Legal",
      "Look & Feel",   "Maintainability", "Operational",     "Performance",
      "Portability",   "Scalability",     "Security",        "Usability"};
  return names[static_cast<std::size_t>(label)];
}

constexpr std::string_view to_string(BinaryLabel label) {
  return label == BinaryLabel::FR ? "FR" : "NFR";
}

inline std::optional<RawLabel> parse_raw_label(std::string_view token) {
  for (RawLabel label : kAllRawLabels) {
    if (to_string(label) == token) return label;
  }
  return std::nullopt;
}

constexpr BinaryLabel binarize(RawLabel label) {
  return label == RawLabel::F ? BinaryLabel::FR : BinaryLabel::NFR;
}

struct Requirement {
  std::size_t id = 0;
  std::string text;
  RawLabel raw_label = RawLabel::F;

  BinaryLabel binary_label() const { return binarize(raw_label); }

  friend bool operator==(const Requirement&, const Requirement&) = default;
};

using Dataset = std::vector<Requirement>;

struct CsvOptions {
  char delimiter = ',';
  bool has_header = true;
  // Column positions; when unset they follow the record width:
  // (text, label) for two columns, (project_id, text, label) for three.
  std::optional<std::size_t> text_column;
  std::optional<std::size_t> label_column;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

}  // namespace detail

inline Dataset parse_dataset(std::istream& in, const CsvOptions& options = {}) {
  csv::Reader reader(in, options.delimiter);
  std::optional<std::size_t> width;
  Dataset out;

  auto blank = [](const csv::Record& r) {
    return r.fields.size() == 1 && detail::trim(r.fields[0]).empty();
  };

  if (options.has_header) {
    while (auto header = reader.next()) {
      if (blank(*header)) continue;
      width = header->fields.size();
      break;
    }
  }

  while (auto rec = reader.next()) {
    if (blank(*rec)) continue;
    if (!width) width = rec->fields.size();
    if (rec->fields.size() != *width || *width < 2) {
      throw error(errc::malformed_record,
                  "expected " + std::to_string(*width) + " columns, got " +
                      std::to_string(rec->fields.size()),
                  rec->line);
    }
    const std::size_t text_col =
        options.text_column.value_or(*width == 2 ? 0 : *width - 2);
    const std::size_t label_col = options.label_column.value_or(*width - 1);
    if (text_col >= *width || label_col >= *width) {
      throw error(errc::malformed_record, "column index out of range",
                  rec->line);
    }

    const auto text = detail::trim(rec->fields[text_col]);
    if (text.empty()) {
      throw error(errc::empty_text, "requirement text is empty", rec->line);
    }
    const std::string token = detail::upper(detail::trim(rec->fields[label_col]));
    const auto label = parse_raw_label(token);
    if (!label) {
      throw error(errc::unknown_label, "unknown label '" + token + "'",
                  rec->line);
    }
    out.push_back(Requirement{out.size(), std::string(text), *label});
  }
  return out;
}

inline Dataset parse_dataset(std::string_view text, const CsvOptions& options = {}) {
  std::istringstream in{std::string(text)};
  return parse_dataset(in, options);
}

inline Dataset load_dataset(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error(errc::io_error, "cannot open dataset '" + path + "'");
  return parse_dataset(in, options);
}

// Two-column canonical form; parse_dataset reads it back unchanged.
inline void serialize_dataset(std::span<const Requirement> dataset,
                              std::ostream& out) {
  csv::write_row(out, {"RequirementText", "class"});
  for (const auto& r : dataset) {
    csv::write_row(out, {r.text, std::string(to_string(r.raw_label))});
  }
}

// Content fingerprint over the parsed records.
inline std::uint64_t fingerprint(std::span<const Requirement> dataset) {
  std::uint64_t h = fnv1a("reqlens-dataset");
  for (const auto& r : dataset) {
    h = fnv1a(r.text, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(to_string(r.raw_label), h);
    h = fnv1a("\x1e", h);
  }
  return h;
}

struct DatasetSplit {
  Dataset train;
  Dataset test;
  std::uint32_t seed = 0;
  double test_fraction = 0.2;
  std::vector<std::string> warnings;
};

inline std::size_t test_size_for(std::size_t total, double test_fraction) {
  auto n = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(total)));
  if (total >= 2) n = std::clamp<std::size_t>(n, 1, total - 1);
  return n;
}

// Uniform random selection without replacement: shuffle the ids and take
// the first round(fraction * n) as the test set. Both halves keep file order.
inline DatasetSplit split(std::span<const Requirement> dataset,
                          double test_fraction, std::uint32_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw error(errc::invalid_fraction,
                "test fraction must lie in (0, 1), got " +
                    std::to_string(test_fraction));
  }
  if (dataset.empty()) throw error(errc::empty_dataset, "dataset is empty");

  DatasetSplit out;
  out.seed = seed;
  out.test_fraction = test_fraction;

  std::size_t n_fr = 0;
  for (const auto& r : dataset) n_fr += r.binary_label() == BinaryLabel::FR;
  if (dataset.size() < 2) {
    out.warnings.push_back("dataset has fewer than 2 requirements");
  }
  if (n_fr == 0 || n_fr == dataset.size()) {
    out.warnings.push_back("dataset contains a single binary class");
  }

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());

  const std::size_t n_test = test_size_for(dataset.size(), test_fraction);
  std::vector<char> is_test(dataset.size(), 0);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = 1;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (is_test[i] ? out.test : out.train).push_back(dataset[i]);
  }
  return out;
}

}  // namespace reqlens
