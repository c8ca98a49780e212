#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "reqlens/corpus.hpp"
#include "reqlens/default_wordlists.hpp"
#include "reqlens/error.hpp"
#include "reqlens/porter.hpp"

namespace reqlens {

using WordSet = std::set<std::string>;

struct Token {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

namespace detail {
constexpr bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
constexpr bool is_digit(char c) { return c >= '0' && c <= '9'; }
constexpr char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}
}  // namespace detail

// Maximal runs of ASCII letters and digits; everything else separates.
// Runs holding a digit are dropped, so "100%" vanishes and "2-day" -> "day".
inline std::vector<Token> tokenize_spans(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!detail::is_alpha(text[i]) && !detail::is_digit(text[i])) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    bool has_digit = false;
    while (i < text.size() && (detail::is_alpha(text[i]) || detail::is_digit(text[i]))) {
      has_digit |= detail::is_digit(text[i]);
      ++i;
    }
    if (has_digit) continue;
    Token tok{std::string(text.substr(begin, i - begin)), begin, i};
    for (char& c : tok.text) c = detail::lower(c);
    out.push_back(std::move(tok));
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& tok : tokenize_spans(text)) out.push_back(std::move(tok.text));
  return out;
}

// One word per line; '#' starts a comment; blank lines skipped.
inline WordSet parse_word_list(std::istream& in) {
  WordSet out;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto word = detail::trim(line);
    if (word.empty()) continue;
    std::string w(word);
    for (char& c : w) c = detail::lower(c);
    out.insert(std::move(w));
  }
  return out;
}

inline WordSet parse_word_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_word_list(in);
}

inline WordSet load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_error, "cannot open word list '" + path + "'");
  return parse_word_list(in);
}

inline WordSet stem_all(const WordSet& words) {
  WordSet out;
  for (const auto& w : words) out.insert(porter_stem(w));
  return out;
}

inline bool is_valid_stem(std::string_view stem) {
  return !stem.empty() &&
         std::all_of(stem.begin(), stem.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

inline const WordSet& default_stopwords() {
  static const WordSet words = parse_word_list(wordlists::kStopwords);
  return words;
}
inline const WordSet& default_modal_words() {
  static const WordSet words = parse_word_list(wordlists::kModalWords);
  return words;
}
inline const WordSet& default_common_words() {
  static const WordSet words = parse_word_list(wordlists::kCommonWords);
  return words;
}

enum class ProfileName { A, AM, AMC, Custom };

constexpr std::string_view to_string(ProfileName name) {
  switch (name) {
    case ProfileName::A: return "A";
    case ProfileName::AM: return "A-M";
    case ProfileName::AMC: return "A-M-C";
    case ProfileName::Custom: return "custom";
  }
  return "custom";
}

inline ProfileName parse_profile_name(std::string_view s) {
  if (s == "A") return ProfileName::A;
  if (s == "A-M") return ProfileName::AM;
  if (s == "A-M-C") return ProfileName::AMC;
  if (s == "custom") return ProfileName::Custom;
  throw error(errc::invalid_config, "unknown removal profile '" + std::string(s) + "'");
}

// Stems removed after stemming. The name is derived from the set: a set
// equal to one of the canonical profiles carries that profile's name,
// anything else is "custom".
class RemovalProfile {
 public:
  RemovalProfile() = default;

  static RemovalProfile all_words() { return RemovalProfile{}; }

  static RemovalProfile without_modals(const WordSet& modal_words = default_modal_words()) {
    return from_stems(stem_all(modal_words));
  }

  static RemovalProfile without_modals_and_common(
      const WordSet& modal_words = default_modal_words(),
      const WordSet& common_words = default_common_words()) {
    WordSet stems = stem_all(modal_words);
    stems.merge(stem_all(common_words));
    return from_stems(std::move(stems));
  }

  static RemovalProfile named(ProfileName name) {
    switch (name) {
      case ProfileName::A: return all_words();
      case ProfileName::AM: return without_modals();
      case ProfileName::AMC: return without_modals_and_common();
      case ProfileName::Custom: break;
    }
    throw error(errc::invalid_config, "custom profile needs an explicit stem set");
  }

  static RemovalProfile from_stems(WordSet stems) {
    for (const auto& s : stems) {
      if (!is_valid_stem(s)) {
        throw error(errc::invalid_stem, "invalid stem '" + s + "'");
      }
    }
    RemovalProfile p;
    p.stems_ = std::move(stems);
    return p;
  }

  RemovalProfile with_added(const WordSet& stems) const {
    WordSet s = stems_;
    s.insert(stems.begin(), stems.end());
    return from_stems(std::move(s));
  }

  RemovalProfile with_removed(const WordSet& stems) const {
    WordSet s = stems_;
    for (const auto& x : stems) s.erase(x);
    return from_stems(std::move(s));
  }

  ProfileName name() const {
    if (stems_.empty()) return ProfileName::A;
    if (stems_ == without_modals_set()) return ProfileName::AM;
    if (stems_ == without_modals_and_common_set()) return ProfileName::AMC;
    return ProfileName::Custom;
  }

  const WordSet& removed_stems() const { return stems_; }
  bool removes(const std::string& stem) const { return stems_.contains(stem); }

  friend bool operator==(const RemovalProfile&, const RemovalProfile&) = default;

 private:
  static const WordSet& without_modals_set() {
    static const WordSet s = stem_all(default_modal_words());
    return s;
  }
  static const WordSet& without_modals_and_common_set() {
    static const WordSet s = [] {
      WordSet x = stem_all(default_modal_words());
      x.merge(stem_all(default_common_words()));
      return x;
    }();
    return s;
  }

  WordSet stems_;
};

// Ordered stems of one requirement.
class ProcessedDoc {
 public:
  ProcessedDoc() = default;
  ProcessedDoc(std::size_t requirement_id, std::vector<std::string> stems)
      : requirement_id_(requirement_id), stems_(std::move(stems)) {
    distinct_ = stems_;
    std::sort(distinct_.begin(), distinct_.end());
    distinct_.erase(std::unique(distinct_.begin(), distinct_.end()), distinct_.end());
  }

  std::size_t requirement_id() const { return requirement_id_; }
  const std::vector<std::string>& stems() const { return stems_; }
  // Sorted, unique.
  const std::vector<std::string>& distinct_stems() const { return distinct_; }
  bool empty() const { return stems_.empty(); }

  friend bool operator==(const ProcessedDoc&, const ProcessedDoc&) = default;

 private:
  std::size_t requirement_id_ = 0;
  std::vector<std::string> stems_;
  std::vector<std::string> distinct_;
};

struct PreprocessConfig {
  WordSet stopwords = default_stopwords();
  RemovalProfile profile;
};

class Preprocessor {
 public:
  Preprocessor() : Preprocessor(PreprocessConfig{}) {}
  explicit Preprocessor(PreprocessConfig config)
      : config_(std::move(config)), stopword_stems_(stem_all(config_.stopwords)) {}

  const PreprocessConfig& config() const { return config_; }
  const RemovalProfile& profile() const { return config_.profile; }

  // Drops stopwords and single letters, stems the survivors, then drops
  // stems that coincide with a stopword stem or the profile's removed set.
  std::vector<std::string> filter_and_stem(const std::vector<std::string>& tokens) const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
      if (tok.size() < 2 || config_.stopwords.contains(tok)) continue;
      std::string stem = stemmer_(tok);
      if (stopword_stems_.contains(stem) || config_.profile.removes(stem)) continue;
      out.push_back(std::move(stem));
    }
    return out;
  }

  std::vector<std::string> stems_of(std::string_view text) const {
    return filter_and_stem(tokenize(text));
  }

  ProcessedDoc operator()(const Requirement& requirement) const {
    return ProcessedDoc(requirement.id, stems_of(requirement.text));
  }

  std::vector<ProcessedDoc> operator()(std::span<const Requirement> requirements) const {
    std::vector<ProcessedDoc> out;
    out.reserve(requirements.size());
    for (const auto& r : requirements) out.push_back((*this)(r));
    return out;
  }

 private:
  PreprocessConfig config_;
  WordSet stopword_stems_;
  PorterStemmer stemmer_;
};

inline std::vector<std::string> filter_and_stem(const std::vector<std::string>& tokens,
                                                const WordSet& stopwords,
                                                const RemovalProfile& profile) {
  return Preprocessor(PreprocessConfig{stopwords, profile}).filter_and_stem(tokens);
}

inline ProcessedDoc preprocess(const Requirement& requirement, const PreprocessConfig& config) {
  return Preprocessor(config)(requirement);
}

}  // namespace reqlens
