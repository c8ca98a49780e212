#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace reqlens {

enum class errc {
  malformed_record,
  unknown_label,
  empty_text,
  invalid_fraction,
  empty_dataset,
  empty_corpus,
  empty_node,
  empty_training_set,
  empty_test_set,
  empty_document,
  non_positive_sigma,
  singular_system,
  zero_total,
  insufficient_sample,
  invalid_stem,
  invalid_config,
  format_error,
  io_error,
  not_found,
  stale_config,
};

constexpr std::string_view to_string(errc code) {
  switch (code) {
    case errc::malformed_record: return "malformed_record";
    case errc::unknown_label: return "unknown_label";
    case errc::empty_text: return "empty_text";
    case errc::invalid_fraction: return "invalid_fraction";
    case errc::empty_dataset: return "empty_dataset";
    case errc::empty_corpus: return "empty_corpus";
    case errc::empty_node: return "empty_node";
    case errc::empty_training_set: return "empty_training_set";
    case errc::empty_test_set: return "empty_test_set";
    case errc::empty_document: return "empty_document";
    case errc::non_positive_sigma: return "non_positive_sigma";
    case errc::singular_system: return "singular_system";
    case errc::zero_total: return "zero_total";
    case errc::insufficient_sample: return "insufficient_sample";
    case errc::invalid_stem: return "invalid_stem";
    case errc::invalid_config: return "invalid_config";
    case errc::format_error: return "format_error";
    case errc::io_error: return "io_error";
    case errc::not_found: return "not_found";
    case errc::stale_config: return "stale_config";
  }
  return "unknown";
}

// Every failure raised by the library. `line()` is set for record-level
// dataset errors (1-based physical line of the record start).
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message),
        line_(line) {}

  errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  errc code_;
  std::string message_;
  std::optional<std::size_t> line_;
};

}  // namespace reqlens
