#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reqlens/corpus.hpp"
#include "reqlens/csv.hpp"
#include "reqlens/error.hpp"
#include "reqlens/lime.hpp"

namespace reqlens {

using WordCounts = std::map<std::string, std::size_t>;

// Per-explanation presence counts of supportive and distractive stems.
struct WordStats {
  WordCounts supportive_counts;
  WordCounts distractive_counts;
  std::size_t n_supportive = 0;
  std::size_t n_distractive = 0;

  void add(const Explanation& e) {
    for (const auto& w : e.words) {
      if (w.weight > 0.0) {
        ++supportive_counts[w.stem];
        ++n_supportive;
      } else if (w.weight < 0.0) {
        ++distractive_counts[w.stem];
        ++n_distractive;
      }
    }
  }

  void merge(const WordStats& other) {
    for (const auto& [k, v] : other.supportive_counts) supportive_counts[k] += v;
    for (const auto& [k, v] : other.distractive_counts) distractive_counts[k] += v;
    n_supportive += other.n_supportive;
    n_distractive += other.n_distractive;
  }

  friend bool operator==(const WordStats&, const WordStats&) = default;
};

inline WordStats aggregate(std::span<const Explanation> explanations) {
  WordStats stats;
  for (const auto& e : explanations) stats.add(e);
  return stats;
}

// pc_i = 100 n_i / N
inline std::map<std::string, double> occurrence_percentage(const WordCounts& counts,
                                                           std::size_t total) {
  if (total == 0) throw error(errc::zero_total, "total word count is zero");
  std::map<std::string, double> out;
  for (const auto& [stem, n] : counts) {
    out[stem] = 100.0 * static_cast<double>(n) / static_cast<double>(total);
  }
  return out;
}

inline std::size_t total_of(const WordCounts& counts) {
  std::size_t n = 0;
  for (const auto& [stem, c] : counts) n += c;
  return n;
}

struct SetPartition {
  WordSet distractive_only;  // A = D - C
  WordSet supportive_only;   // B = S - C
  WordSet common;            // C = S n D

  friend bool operator==(const SetPartition&, const SetPartition&) = default;
};

inline SetPartition partition(const WordStats& stats) {
  SetPartition p;
  for (const auto& [stem, n] : stats.supportive_counts) {
    (stats.distractive_counts.contains(stem) ? p.common : p.supportive_only).insert(stem);
  }
  for (const auto& [stem, n] : stats.distractive_counts) {
    if (!stats.supportive_counts.contains(stem)) p.distractive_only.insert(stem);
  }
  return p;
}

// Descending percentage, ties by stem.
inline std::vector<std::pair<std::string, double>> top_k(const WordCounts& counts, std::size_t k) {
  if (k < 1) throw error(errc::invalid_config, "k must be >= 1");
  std::vector<std::pair<std::string, double>> out;
  const std::size_t total = total_of(counts);
  if (total == 0) return out;
  const auto pct = occurrence_percentage(counts, total);
  out.assign(pct.begin(), pct.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (out.size() > k) out.resize(k);
  return out;
}

struct SubclassMap {
  std::map<std::string, RawLabel> assignments;
  std::map<std::string, std::map<RawLabel, std::size_t>> counts;

  std::optional<RawLabel> subclass_of(const std::string& stem) const {
    const auto it = assignments.find(stem);
    if (it == assignments.end()) return std::nullopt;
    return it->second;
  }
};

// Each supportive stem goes to the NFR subclass whose requirements listed it
// supportively most often; ties resolve to the lexicographically smallest code.
inline SubclassMap map_subclasses(std::span<const Explanation> explanations,
                                  std::span<const Requirement> dataset) {
  std::unordered_map<std::size_t, RawLabel> label_of;
  for (const auto& r : dataset) label_of.emplace(r.id, r.raw_label);

  SubclassMap out;
  for (const auto& e : explanations) {
    const auto it = label_of.find(e.requirement_id);
    if (it == label_of.end() || it->second == RawLabel::F) continue;
    for (const auto& stem : e.supportive()) ++out.counts[stem][it->second];
  }
  for (const auto& [stem, per_label] : out.counts) {
    std::optional<std::pair<RawLabel, std::size_t>> best;
    for (const auto& [label, n] : per_label) {
      if (!best || n > best->second ||
          (n == best->second && to_string(label) < to_string(best->first))) {
        best = {label, n};
      }
    }
    out.assignments[stem] = best->first;
  }
  return out;
}

inline std::string set_of(const SetPartition& p, const std::string& stem) {
  if (p.common.contains(stem)) return "C";
  if (p.supportive_only.contains(stem)) return "B";
  if (p.distractive_only.contains(stem)) return "A";
  return "";
}

struct AnalysisReport {
  WordStats stats;
  SetPartition sets;
  SubclassMap subclasses;
  std::size_t n_explanations = 0;

  static AnalysisReport build(std::span<const Explanation> explanations,
                              std::span<const Requirement> dataset) {
    AnalysisReport r;
    r.stats = aggregate(explanations);
    r.sets = partition(r.stats);
    r.subclasses = map_subclasses(explanations, dataset);
    r.n_explanations = explanations.size();
    return r;
  }

  nlohmann::json to_json(std::size_t k = 30) const {
    auto side = [&](const WordCounts& counts, std::size_t total) {
      nlohmann::json words = nlohmann::json::array();
      if (total > 0) {
        const auto pct = occurrence_percentage(counts, total);
        for (const auto& [stem, n] : counts) {
          words.push_back({{"stem", stem}, {"count", n}, {"percentage", pct.at(stem)},
                           {"set", set_of(sets, stem)}});
        }
      }
      nlohmann::json top = nlohmann::json::array();
      for (const auto& [stem, pc] : top_k(counts, k)) {
        top.push_back({{"stem", stem}, {"percentage", pc}});
      }
      return nlohmann::json{{"total", total}, {"words", std::move(words)}, {"top", std::move(top)}};
    };
    nlohmann::json subclass = nlohmann::json::array();
    for (const auto& [stem, label] : subclasses.assignments) {
      nlohmann::json per = nlohmann::json::object();
      for (const auto& [l, n] : subclasses.counts.at(stem)) per[std::string(to_string(l))] = n;
      subclass.push_back({{"stem", stem},
                          {"subclass", std::string(to_string(label))},
                          {"subclass_name", std::string(subclass_name(label))},
                          {"counts", std::move(per)}});
    }
    return {{"n_explanations", n_explanations},
            {"supportive", side(stats.supportive_counts, stats.n_supportive)},
            {"distractive", side(stats.distractive_counts, stats.n_distractive)},
            {"sets",
             {{"A", sets.distractive_only}, {"B", sets.supportive_only}, {"C", sets.common}}},
            {"subclasses", std::move(subclass)},
            {"top_k", k}};
  }

  // word,side,count,percentage,set,subclass
  void write_words_csv(std::ostream& out) const {
    csv::write_row(out, {"word", "side", "count", "percentage", "set", "subclass"});
    auto rows = [&](const WordCounts& counts, std::size_t total, const char* side) {
      if (total == 0) return;
      const auto pct = occurrence_percentage(counts, total);
      for (const auto& [stem, n] : counts) {
        const auto sub = subclasses.subclass_of(stem);
        csv::write_row(out, {stem, side, std::to_string(n), format_pct(pct.at(stem)),
                             set_of(sets, stem),
                             sub ? std::string(to_string(*sub)) : std::string()});
      }
    };
    rows(stats.supportive_counts, stats.n_supportive, "supportive");
    rows(stats.distractive_counts, stats.n_distractive, "distractive");
  }

  // rank,word,percentage for a bar chart of one side
  static void write_top_csv(std::ostream& out, const WordCounts& counts, std::size_t k) {
    csv::write_row(out, {"rank", "word", "percentage"});
    std::size_t rank = 1;
    for (const auto& [stem, pc] : top_k(counts, k)) {
      csv::write_row(out, {std::to_string(rank++), stem, format_pct(pc)});
    }
  }

 private:
  static std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  }
};

}  // namespace reqlens
