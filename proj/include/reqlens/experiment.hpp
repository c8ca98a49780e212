#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "reqlens/corpus.hpp"
#include "reqlens/error.hpp"
#include "reqlens/forest.hpp"
#include "reqlens/pipeline.hpp"
#include "reqlens/preprocess.hpp"
#include "reqlens/stats.hpp"

namespace reqlens {

enum class Metric { F1, Accuracy, Precision, Recall };

inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::F1, Metric::Accuracy,
                                                      Metric::Precision, Metric::Recall};

constexpr std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::F1: return "f1";
    case Metric::Accuracy: return "accuracy";
    case Metric::Precision: return "precision";
    case Metric::Recall: return "recall";
  }
  return "";
}

constexpr std::string_view display_name(Metric m) {
  switch (m) {
    case Metric::F1: return "F1-score";
    case Metric::Accuracy: return "Accuracy";
    case Metric::Precision: return "Precision";
    case Metric::Recall: return "Recall";
  }
  return "";
}

inline double metric_value(const MetricsReport& r, Metric m) {
  switch (m) {
    case Metric::F1: return r.f1;
    case Metric::Accuracy: return r.accuracy;
    case Metric::Precision: return r.precision;
    case Metric::Recall: return r.recall;
  }
  return 0.0;
}

struct TrialResult {
  std::string profile;
  std::uint32_t seed = 0;
  MetricsReport metrics;
  std::vector<std::string> warnings;

  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct ExperimentSettings {
  WordSet stopwords = default_stopwords();
  ForestParams forest;
  double test_fraction = 0.2;
  unsigned threads = 1;
};

// Trial i re-draws both the split and the forest with seed base_seed + i.
inline std::vector<TrialResult> run_batch(std::span<const Requirement> dataset,
                                          const RemovalProfile& profile, std::size_t n_runs,
                                          std::uint32_t base_seed,
                                          const ExperimentSettings& settings = {}) {
  if (n_runs < 2) throw error(errc::invalid_config, "a batch needs at least two runs");
  std::vector<TrialResult> out;
  out.reserve(n_runs);
  for (std::size_t i = 0; i < n_runs; ++i) {
    const auto seed = static_cast<std::uint32_t>(base_seed + i);
    try {
      const auto ms = ModelSettings::seeded(seed, PreprocessConfig{settings.stopwords, profile},
                                            settings.forest);
      ModelSettings s = ms;
      s.test_fraction = settings.test_fraction;
      auto outcome = train_and_evaluate(dataset, s, {}, settings.threads);
      out.push_back({std::string(to_string(profile.name())), seed, outcome.metrics,
                     std::move(outcome.warnings)});
    } catch (const error& e) {
      throw error(e.code(), "trial " + std::to_string(i) + ": " + e.message(), e.line());
    }
  }
  return out;
}

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;
};

inline std::map<Metric, MetricSummary> summarize(std::span<const TrialResult> trials) {
  std::map<Metric, MetricSummary> out;
  for (Metric m : kAllMetrics) {
    std::vector<double> xs;
    for (const auto& t : trials) xs.push_back(metric_value(t.metrics, m));
    MetricSummary s;
    s.mean = stats::mean(xs);
    s.sd = xs.size() > 1 ? std::sqrt(stats::variance(xs)) : 0.0;
    out[m] = s;
  }
  return out;
}

struct ProfileBatch {
  std::string profile;
  std::vector<TrialResult> trials;
};

// Per metric, a symmetric grid of S/N cells over the batches; the diagonal
// is N by definition.
struct SignificanceMatrix {
  struct Cell {
    bool significant = false;
    std::optional<stats::TTestResult> test;
  };

  std::vector<std::string> profiles;
  std::map<Metric, std::vector<std::vector<Cell>>> cells;
  double alpha = 0.05;
  stats::TTestVariant variant = stats::TTestVariant::Welch;

  std::size_t significant_cells(Metric m) const {
    std::size_t n = 0;
    for (const auto& row : cells.at(m)) {
      for (const auto& c : row) n += c.significant;
    }
    return n;
  }

  std::size_t significant_cells() const {
    std::size_t n = 0;
    for (Metric m : kAllMetrics) n += significant_cells(m);
    return n;
  }

  std::string format_table() const {
    std::ostringstream os;
    auto cell = [&](std::string_view s, int width) {
      os << s;
      for (int i = static_cast<int>(s.size()); i < width; ++i) os << ' ';
    };
    cell("Metric", 11);
    cell("Data", 8);
    for (const auto& p : profiles) cell(p, 8);
    os << '\n';
    for (Metric m : kAllMetrics) {
      const auto& grid = cells.at(m);
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        cell(i == 0 ? display_name(m) : "", 11);
        cell(profiles[i], 8);
        for (std::size_t j = 0; j < profiles.size(); ++j) cell(grid[i][j].significant ? "S" : "N", 8);
        os << '\n';
      }
    }
    return os.str();
  }

  friend void to_json(nlohmann::json& j, const SignificanceMatrix& sm) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [m, grid] : sm.cells) {
      nlohmann::json rows = nlohmann::json::array();
      nlohmann::json tests = nlohmann::json::array();
      for (std::size_t i = 0; i < grid.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t jj = 0; jj < grid[i].size(); ++jj) {
          row.push_back(grid[i][jj].significant ? "S" : "N");
          if (jj > i && grid[i][jj].test) {
            nlohmann::json t = *grid[i][jj].test;
            t["a"] = sm.profiles[i];
            t["b"] = sm.profiles[jj];
            tests.push_back(std::move(t));
          }
        }
        rows.push_back(std::move(row));
      }
      metrics[std::string(to_string(m))] = {{"cells", std::move(rows)}, {"tests", std::move(tests)}};
    }
    j = {{"profiles", sm.profiles},
         {"alpha", sm.alpha},
         {"test", std::string(stats::to_string(sm.variant))},
         {"metrics", std::move(metrics)}};
  }
};

inline SignificanceMatrix significance_matrix(std::span<const ProfileBatch> batches, double alpha,
                                              stats::TTestVariant variant = stats::TTestVariant::Welch) {
  SignificanceMatrix sm;
  sm.alpha = alpha;
  sm.variant = variant;
  for (const auto& b : batches) sm.profiles.push_back(b.profile);
  const std::size_t n = batches.size();
  for (Metric m : kAllMetrics) {
    std::vector<std::vector<double>> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& t : batches[i].trials) samples[i].push_back(metric_value(t.metrics, m));
    }
    auto& grid = sm.cells[m];
    grid.assign(n, std::vector<SignificanceMatrix::Cell>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto r = stats::t_test(samples[i], samples[j], alpha, variant);
        grid[i][j] = {r.significant, r};
        grid[j][i] = grid[i][j];
      }
    }
  }
  return sm;
}

struct AblationReport {
  std::vector<ProfileBatch> batches;
  SignificanceMatrix matrix;
  std::size_t n_runs = 0;
  std::uint32_t base_seed = 0;

  friend void to_json(nlohmann::json& j, const AblationReport& r) {
    nlohmann::json batches = nlohmann::json::array();
    for (const auto& b : r.batches) {
      nlohmann::json summary = nlohmann::json::object();
      for (const auto& [m, s] : summarize(b.trials)) {
        summary[std::string(to_string(m))] = {{"mean", s.mean}, {"sd", s.sd}};
      }
      nlohmann::json trials = nlohmann::json::array();
      for (const auto& t : b.trials) trials.push_back({{"seed", t.seed}, {"metrics", t.metrics}});
      batches.push_back({{"profile", b.profile}, {"summary", std::move(summary)}, {"trials", std::move(trials)}});
    }
    j = {{"runs", r.n_runs},
         {"base_seed", r.base_seed},
         {"batches", std::move(batches)},
         {"matrix", r.matrix}};
  }
};

inline std::vector<RemovalProfile> standard_profiles() {
  return {RemovalProfile::all_words(), RemovalProfile::without_modals(),
          RemovalProfile::without_modals_and_common()};
}

inline AblationReport ablation_matrix(std::span<const Requirement> dataset, std::size_t n_runs,
                                      std::uint32_t base_seed, double alpha,
                                      const ExperimentSettings& settings = {},
                                      stats::TTestVariant variant = stats::TTestVariant::Welch,
                                      const std::vector<RemovalProfile>& profiles = standard_profiles()) {
  AblationReport r;
  r.n_runs = n_runs;
  r.base_seed = base_seed;
  for (const auto& p : profiles) {
    r.batches.push_back({std::string(to_string(p.name())),
                         run_batch(dataset, p, n_runs, base_seed, settings)});
  }
  r.matrix = significance_matrix(r.batches, alpha, variant);
  return r;
}

}  // namespace reqlens
