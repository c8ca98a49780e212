#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reqlens/analysis.hpp"
#include "reqlens/corpus.hpp"
#include "reqlens/error.hpp"
#include "reqlens/lime.hpp"
#include "reqlens/pipeline.hpp"
#include "reqlens/random.hpp"

namespace reqlens {

// Canonical description of everything that determines a trained model.
inline nlohmann::json settings_json(const ModelSettings& s, const DatasetInfo& data) {
  return {{"dataset", hex64(data.fingerprint)},
          {"removed_stems", s.preprocess.profile.removed_stems()},
          {"stopwords", s.preprocess.stopwords},
          {"forest", s.forest},
          {"split", {{"seed", s.split_seed}, {"test_fraction", s.test_fraction}}}};
}

inline std::uint64_t config_hash(const ModelSettings& s, const DatasetInfo& data) {
  return fnv1a(settings_json(s, data).dump());
}

inline std::uint64_t config_hash(const LimeConfig& c) {
  return fnv1a(nlohmann::json(c).dump());
}

// Immutable state served to readers. A retrain builds a new one and swaps it in.
struct SessionSnapshot {
  ModelSettings settings;
  TrainedModel model;
  MetricsReport metrics;
  std::optional<MetricsReport> previous_metrics;
  std::optional<std::size_t> previous_vocabulary_size;
  std::optional<std::uint64_t> previous_config_hash;
  DatasetSplit split;
  std::vector<std::string> warnings;
  std::uint64_t config_hash = 0;
  std::uint64_t generation = 0;
  std::vector<ClassProbabilities> probabilities;  // per dataset row
  std::vector<BinaryLabel> predictions;
  std::vector<bool> in_test;

  std::string hash_hex() const { return hex64(config_hash); }
};

struct WordSetsResult {
  AnalysisReport report;
  std::vector<std::size_t> skipped;
};

class Session {
 public:
  using SnapshotPtr = std::shared_ptr<const SessionSnapshot>;

  Session(Dataset dataset, ModelSettings settings, std::string dataset_path = {},
          unsigned threads = 1)
      : dataset_(std::move(dataset)),
        info_(DatasetInfo::of(dataset_, std::move(dataset_path))),
        threads_(threads) {
    if (dataset_.empty()) throw error(errc::empty_dataset, "dataset is empty");
    for (std::size_t i = 0; i < dataset_.size(); ++i) {
      if (dataset_[i].id != i) throw error(errc::invalid_config, "requirement ids must be row positions");
    }
    current_ = build(std::move(settings), nullptr, 0);
  }

  const Dataset& dataset() const { return dataset_; }
  const DatasetInfo& dataset_info() const { return info_; }
  bool busy() const { return busy_.load(); }

  SnapshotPtr snapshot() const {
    std::shared_lock lock(snap_mutex_);
    return current_;
  }

  // Stems to add to / drop from the custom removal set, then retrain with the
  // session's seed. `expected_hash` guards against edits built on a stale view.
  SnapshotPtr apply_feedback(const WordSet& add, const WordSet& remove,
                             std::optional<std::uint64_t> expected_hash = std::nullopt) {
    for (const auto* set : {&add, &remove}) {
      for (const auto& s : *set) {
        if (!is_valid_stem(s)) throw error(errc::invalid_stem, "invalid stem '" + s + "'");
      }
    }
    return mutate(expected_hash, [&](ModelSettings s) {
      s.preprocess.profile = s.preprocess.profile.with_added(add).with_removed(remove);
      return s;
    });
  }

  SnapshotPtr set_profile(RemovalProfile profile,
                          std::optional<std::uint64_t> expected_hash = std::nullopt) {
    return mutate(expected_hash, [&](ModelSettings s) {
      s.preprocess.profile = std::move(profile);
      return s;
    });
  }

  SnapshotPtr retrain(std::optional<std::uint32_t> seed = std::nullopt,
                      std::optional<std::uint64_t> expected_hash = std::nullopt) {
    return mutate(expected_hash, [&](ModelSettings s) {
      if (seed) {
        s.split_seed = *seed;
        s.forest.seed = *seed;
      }
      return s;
    });
  }

  // Explanation under the given snapshot; cached per (config, id, lime config).
  std::shared_ptr<const Explanation> explanation(const SnapshotPtr& snap, std::size_t id,
                                                 const LimeConfig& config) {
    if (id >= dataset_.size()) {
      throw error(errc::not_found, "no requirement with id " + std::to_string(id));
    }
    const auto key = std::make_tuple(snap->config_hash, id, config_hash(config));
    {
      std::lock_guard lock(cache_mutex_);
      if (auto it = explanations_.find(key); it != explanations_.end()) return it->second;
    }
    auto ex = std::make_shared<const Explanation>(explain(snap->model, dataset_[id], config));
    std::lock_guard lock(cache_mutex_);
    if (current_hash_ == snap->config_hash) explanations_.emplace(key, ex);
    return ex;
  }

  // Aggregated explanations over the snapshot's test split.
  std::shared_ptr<const WordSetsResult> word_sets(const SnapshotPtr& snap, const LimeConfig& config) {
    const auto key = std::make_pair(snap->config_hash, config_hash(config));
    {
      std::lock_guard lock(cache_mutex_);
      if (auto it = word_sets_.find(key); it != word_sets_.end()) return it->second;
    }
    auto batch = explain_all(snap->model, snap->split.test, config);
    auto res = std::make_shared<WordSetsResult>();
    res->report = AnalysisReport::build(batch.explanations, dataset_);
    res->skipped = std::move(batch.skipped);
    std::lock_guard lock(cache_mutex_);
    if (current_hash_ == snap->config_hash) word_sets_.emplace(key, res);
    return res;
  }

  std::optional<std::uint64_t> hash_of_current() const {
    std::lock_guard lock(cache_mutex_);
    return current_hash_;
  }

  unsigned threads() const { return threads_; }

 private:
  template <class Edit>
  SnapshotPtr mutate(std::optional<std::uint64_t> expected_hash, Edit&& edit) {
    std::lock_guard writer(writer_mutex_);
    const auto prev = snapshot();
    if (expected_hash && *expected_hash != prev->config_hash) {
      throw error(errc::stale_config, "config hash " + hex64(*expected_hash) +
                                          " is stale; current is " + prev->hash_hex());
    }
    ModelSettings next = edit(prev->settings);
    busy_.store(true);
    struct Reset {
      std::atomic<bool>& flag;
      ~Reset() { flag.store(false); }
    } reset{busy_};
    auto snap = build(std::move(next), prev.get(), prev->generation + 1);
    {
      std::unique_lock lock(snap_mutex_);
      current_ = snap;
    }
    return snap;
  }

  SnapshotPtr build(ModelSettings settings, const SessionSnapshot* prev, std::uint64_t generation) {
    auto snap = std::make_shared<SessionSnapshot>();
    auto outcome = train_and_evaluate(dataset_, settings, info_, threads_);
    snap->config_hash = config_hash(settings, info_);
    snap->settings = std::move(settings);
    snap->model = std::move(outcome.model);
    snap->metrics = outcome.metrics;
    snap->split = std::move(outcome.split);
    snap->warnings = std::move(outcome.warnings);
    snap->generation = generation;
    if (prev) {
      snap->previous_metrics = prev->metrics;
      snap->previous_vocabulary_size = prev->model.vocabulary.size();
      snap->previous_config_hash = prev->config_hash;
    }
    snap->in_test.assign(dataset_.size(), false);
    for (const auto& r : snap->split.test) snap->in_test[r.id] = true;
    snap->probabilities.reserve(dataset_.size());
    snap->predictions.reserve(dataset_.size());
    for (const auto& r : dataset_) {
      snap->probabilities.push_back(snap->model.predict_proba(r));
      snap->predictions.push_back(snap->model.predict(r));
    }

    // caches only ever hold entries for the live config
    std::lock_guard lock(cache_mutex_);
    if (current_hash_ != snap->config_hash) {
      explanations_.clear();
      word_sets_.clear();
    }
    current_hash_ = snap->config_hash;
    return snap;
  }

  Dataset dataset_;
  DatasetInfo info_;
  unsigned threads_ = 1;

  std::mutex writer_mutex_;
  mutable std::shared_mutex snap_mutex_;
  SnapshotPtr current_;
  std::atomic<bool> busy_{false};

  mutable std::mutex cache_mutex_;
  std::optional<std::uint64_t> current_hash_;
  std::map<std::tuple<std::uint64_t, std::size_t, std::uint64_t>, std::shared_ptr<const Explanation>>
      explanations_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::shared_ptr<const WordSetsResult>> word_sets_;
};

}  // namespace reqlens
