#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reqlens/error.hpp"
#include "reqlens/preprocess.hpp"

namespace reqlens {

using FeatureIndex = std::uint32_t;

// Training-set vocabulary. Terms are indexed in lexicographic order.
class Vocabulary {
 public:
  static constexpr int kFormatVersion = 1;

  Vocabulary() = default;

  static Vocabulary build(std::span<const ProcessedDoc> train_docs) {
    if (train_docs.empty()) throw error(errc::empty_corpus, "no training documents");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : train_docs) {
      for (const auto& stem : doc.distinct_stems()) ++df[stem];
    }
    if (df.empty()) throw error(errc::empty_corpus, "training documents have no stems");
    Vocabulary v;
    v.n_train_docs_ = train_docs.size();
    v.terms_.reserve(df.size());
    v.df_.reserve(df.size());
    for (auto& [term, count] : df) {
      v.terms_.push_back(term);
      v.df_.push_back(count);
    }
    v.compute_idf();
    return v;
  }

  std::size_t size() const { return terms_.size(); }
  std::size_t n_train_docs() const { return n_train_docs_; }
  const std::string& term(FeatureIndex i) const { return terms_[i]; }
  const std::vector<std::string>& terms() const { return terms_; }
  std::size_t document_frequency(FeatureIndex i) const { return df_[i]; }
  double idf(FeatureIndex i) const { return idf_[i]; }
  const std::vector<double>& idf_table() const { return idf_; }

  std::optional<FeatureIndex> index_of(std::string_view term) const {
    const auto it = std::lower_bound(terms_.begin(), terms_.end(), term);
    if (it == terms_.end() || *it != term) return std::nullopt;
    return static_cast<FeatureIndex>(it - terms_.begin());
  }

  // idf(t) = ln((1 + n) / (1 + df(t))) + 1
  static double smoothed_idf(std::size_t n_docs, std::size_t df) {
    return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(df))) + 1.0;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.n_train_docs_ == b.n_train_docs_ && a.terms_ == b.terms_ && a.df_ == b.df_;
  }

  friend void to_json(nlohmann::json& j, const Vocabulary& v) {
    nlohmann::json terms = nlohmann::json::array();
    for (std::size_t i = 0; i < v.terms_.size(); ++i) {
      terms.push_back({{"term", v.terms_[i]}, {"index", i}, {"df", v.df_[i]}});
    }
    j = {{"format_version", kFormatVersion},
         {"n_train_docs", v.n_train_docs_},
         {"terms", std::move(terms)}};
  }

  friend void from_json(const nlohmann::json& j, Vocabulary& v) {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw error(errc::format_error, "unsupported vocabulary format version");
    }
    Vocabulary out;
    out.n_train_docs_ = j.at("n_train_docs").get<std::size_t>();
    const auto& terms = j.at("terms");
    out.terms_.resize(terms.size());
    out.df_.resize(terms.size());
    for (const auto& t : terms) {
      const auto index = t.at("index").get<std::size_t>();
      if (index >= terms.size()) throw error(errc::format_error, "vocabulary index out of range");
      out.terms_[index] = t.at("term").get<std::string>();
      out.df_[index] = t.at("df").get<std::size_t>();
    }
    if (!std::is_sorted(out.terms_.begin(), out.terms_.end()) ||
        std::adjacent_find(out.terms_.begin(), out.terms_.end()) != out.terms_.end()) {
      throw error(errc::format_error, "vocabulary terms must be unique and sorted");
    }
    for (auto d : out.df_) {
      if (d < 1 || d > out.n_train_docs_) throw error(errc::format_error, "document frequency out of range");
    }
    out.compute_idf();
    v = std::move(out);
  }

 private:
  void compute_idf() {
    idf_.resize(df_.size());
    for (std::size_t i = 0; i < df_.size(); ++i) idf_[i] = smoothed_idf(n_train_docs_, df_[i]);
  }

  std::size_t n_train_docs_ = 0;
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
};

// Sparse L2-normalized TF-IDF vector; entries sorted by index, all weights > 0.
struct TfIdfVector {
  std::size_t source_id = 0;
  std::vector<std::pair<FeatureIndex, double>> entries;

  double value(FeatureIndex index) const {
    const auto it = std::lower_bound(
        entries.begin(), entries.end(), index,
        [](const auto& e, FeatureIndex i) { return e.first < i; });
    return (it != entries.end() && it->first == index) ? it->second : 0.0;
  }

  bool empty() const { return entries.empty(); }

  friend bool operator==(const TfIdfVector&, const TfIdfVector&) = default;
};

inline TfIdfVector transform(std::span<const std::string> stems, const Vocabulary& vocab,
                             std::size_t source_id = 0) {
  std::map<FeatureIndex, std::size_t> counts;
  for (const auto& s : stems) {
    if (const auto idx = vocab.index_of(s)) ++counts[*idx];
  }
  TfIdfVector v;
  v.source_id = source_id;
  double norm2 = 0.0;
  for (const auto& [idx, c] : counts) {
    const double w = static_cast<double>(c) * vocab.idf(idx);
    v.entries.emplace_back(idx, w);
    norm2 += w * w;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& e : v.entries) e.second *= inv;
  }
  return v;
}

inline TfIdfVector transform(const ProcessedDoc& doc, const Vocabulary& vocab) {
  return transform(doc.stems(), vocab, doc.requirement_id());
}

}  // namespace reqlens
