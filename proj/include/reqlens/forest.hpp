#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "reqlens/corpus.hpp"
#include "reqlens/error.hpp"
#include "reqlens/random.hpp"
#include "reqlens/vectorize.hpp"

namespace reqlens {

struct ClassCounts {
  std::uint32_t fr = 0;
  std::uint32_t nfr = 0;

  std::uint64_t total() const { return std::uint64_t{fr} + nfr; }
  // Majority class; ties go to NFR.
  BinaryLabel majority() const { return fr > nfr ? BinaryLabel::FR : BinaryLabel::NFR; }

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

// 1 - p_fr^2 - p_nfr^2, written as 2 fr nfr / total^2 so that integer counts
// below 2^26 give the correctly rounded value.
inline double gini(double fr, double nfr) {
  const double total = fr + nfr;
  if (!(total > 0.0)) throw error(errc::empty_node, "gini of an empty node");
  return (2.0 * fr * nfr) / (total * total);
}

inline double gini(ClassCounts counts) {
  return gini(static_cast<double>(counts.fr), static_cast<double>(counts.nfr));
}

struct ForestParams {
  int n_trees = 100;
  std::optional<int> max_depth;  // unlimited when unset
  int min_samples_split = 2;
  std::optional<int> features_per_split;  // floor(sqrt(V)), at least 1, when unset
  bool bootstrap = true;
  std::uint32_t seed = 0;

  void validate() const {
    if (n_trees < 1) throw error(errc::invalid_config, "n_trees must be >= 1");
    if (min_samples_split < 2) throw error(errc::invalid_config, "min_samples_split must be >= 2");
    if (max_depth && *max_depth < 0) throw error(errc::invalid_config, "max_depth must be >= 0");
    if (features_per_split && *features_per_split < 1) {
      throw error(errc::invalid_config, "features_per_split must be >= 1");
    }
  }

  std::size_t resolved_features_per_split(std::size_t n_features) const {
    if (features_per_split) {
      return std::min<std::size_t>(static_cast<std::size_t>(*features_per_split),
                                   std::max<std::size_t>(n_features, 1));
    }
    const auto k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_features))));
    return std::max<std::size_t>(k, 1);
  }

  friend bool operator==(const ForestParams&, const ForestParams&) = default;

  friend void to_json(nlohmann::json& j, const ForestParams& p) {
    j = {{"n_trees", p.n_trees},
         {"max_depth", p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr)},
         {"min_samples_split", p.min_samples_split},
         {"features_per_split",
          p.features_per_split ? nlohmann::json(*p.features_per_split) : nlohmann::json("sqrt")},
         {"bootstrap", p.bootstrap},
         {"seed", p.seed}};
  }

  friend void from_json(const nlohmann::json& j, ForestParams& p) {
    p.n_trees = j.at("n_trees").get<int>();
    p.max_depth = j.at("max_depth").is_null() ? std::nullopt
                                               : std::optional<int>(j.at("max_depth").get<int>());
    p.min_samples_split = j.at("min_samples_split").get<int>();
    const auto& fps = j.at("features_per_split");
    p.features_per_split = fps.is_string() ? std::nullopt : std::optional<int>(fps.get<int>());
    p.bootstrap = j.at("bootstrap").get<bool>();
    p.seed = j.at("seed").get<std::uint32_t>();
    p.validate();
  }
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  ClassCounts counts;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;  // nodes[0] is the root, preorder

  const TreeNode& leaf_for(const TfIdfVector& x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(
          x.value(static_cast<FeatureIndex>(n.feature)) <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
  }

  BinaryLabel vote(const TfIdfVector& x) const { return leaf_for(x).counts.majority(); }

  std::size_t depth() const { return depth_from(0); }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::size_t depth_from(std::size_t i) const {
    if (nodes[i].is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(nodes[i].left)),
                        depth_from(static_cast<std::size_t>(nodes[i].right)));
  }
};

struct ClassProbabilities {
  double fr = 0.0;
  double nfr = 0.0;
};

struct LabeledVector {
  TfIdfVector vector;
  BinaryLabel label = BinaryLabel::FR;
};

class ForestModel {
 public:
  ForestParams params;
  std::size_t n_features = 0;
  std::vector<DecisionTree> trees;

  std::size_t nfr_votes(const TfIdfVector& x) const {
    std::size_t votes = 0;
    for (const auto& t : trees) votes += t.vote(x) == BinaryLabel::NFR;
    return votes;
  }

  // Vote fractions; denominators are exactly n_trees.
  ClassProbabilities predict_proba(const TfIdfVector& x) const {
    const double n = static_cast<double>(trees.size());
    const auto nfr = nfr_votes(x);
    return {static_cast<double>(trees.size() - nfr) / n, static_cast<double>(nfr) / n};
  }

  // Argmax of the vote fractions; a tie goes to NFR.
  BinaryLabel predict(const TfIdfVector& x) const {
    return 2 * nfr_votes(x) >= trees.size() ? BinaryLabel::NFR : BinaryLabel::FR;
  }

  friend bool operator==(const ForestModel&, const ForestModel&) = default;

  friend void to_json(nlohmann::json& j, const ForestModel& m) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : m.trees) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.counts.fr, n.counts.nfr});
      }
      trees.push_back(std::move(nodes));
    }
    j = {{"params", m.params}, {"n_features", m.n_features}, {"trees", std::move(trees)}};
  }

  friend void from_json(const nlohmann::json& j, ForestModel& m) {
    ForestModel out;
    out.params = j.at("params").get<ForestParams>();
    out.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      for (const auto& jn : jt) {
        TreeNode n;
        n.feature = jn.at(0).get<std::int32_t>();
        n.threshold = jn.at(1).get<double>();
        n.left = jn.at(2).get<std::int32_t>();
        n.right = jn.at(3).get<std::int32_t>();
        n.counts = {jn.at(4).get<std::uint32_t>(), jn.at(5).get<std::uint32_t>()};
        t.nodes.push_back(n);
      }
      const auto size = static_cast<std::int32_t>(t.nodes.size());
      if (size == 0) throw error(errc::format_error, "empty tree");
      for (const auto& n : t.nodes) {
        if (n.is_leaf()) {
          if (n.counts.total() == 0) throw error(errc::format_error, "leaf without samples");
        } else if (static_cast<std::size_t>(n.feature) >= out.n_features || n.left <= 0 ||
                   n.right <= 0 || n.left >= size || n.right >= size) {
          throw error(errc::format_error, "tree node out of range");
        }
      }
      out.trees.push_back(std::move(t));
    }
    if (out.trees.size() != static_cast<std::size_t>(out.params.n_trees)) {
      throw error(errc::format_error, "tree count does not match params");
    }
    m = std::move(out);
  }
};

namespace detail {

struct ColumnEntry {
  std::uint32_t sample;
  double value;
};

// Column-major copy of the sparse training matrix.
struct TrainingMatrix {
  std::vector<std::vector<ColumnEntry>> columns;
  std::vector<BinaryLabel> labels;

  TrainingMatrix(std::span<const LabeledVector> samples, std::size_t n_features)
      : columns(n_features) {
    labels.reserve(samples.size());
    for (std::uint32_t s = 0; s < samples.size(); ++s) {
      labels.push_back(samples[s].label);
      for (const auto& [idx, value] : samples[s].vector.entries) {
        if (idx >= n_features) throw error(errc::invalid_config, "feature index out of range");
        columns[idx].push_back({s, value});
      }
    }
  }

  std::size_t n_samples() const { return labels.size(); }
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingMatrix& m, const ForestParams& params, std::uint32_t seed)
      : m_(m),
        params_(params),
        k_(params.resolved_features_per_split(m.columns.size())),
        rng_(seed),
        in_node_(m.n_samples(), 0),
        value_(m.n_samples(), 0.0),
        feature_order_(m.columns.size()) {
    for (std::size_t f = 0; f < feature_order_.size(); ++f) {
      feature_order_[f] = static_cast<FeatureIndex>(f);
    }
  }

  DecisionTree build() {
    const auto n = static_cast<std::uint32_t>(m_.n_samples());
    std::vector<std::uint32_t> multiplicity(n, params_.bootstrap ? 0 : 1);
    if (params_.bootstrap) {
      for (std::uint32_t i = 0; i < n; ++i) ++multiplicity[rng_.below(n)];
    }
    std::vector<Item> items;
    for (std::uint32_t s = 0; s < n; ++s) {
      if (multiplicity[s] > 0) items.push_back({s, multiplicity[s]});
    }
    tree_ = DecisionTree{};
    grow(std::move(items), 0);
    return std::move(tree_);
  }

 private:
  struct Item {
    std::uint32_t sample;
    std::uint32_t weight;
  };

  struct Split {
    FeatureIndex feature = 0;
    double threshold = 0.0;
    double impurity = 0.0;  // weighted child Gini
  };

  struct Bucket {
    double value;
    std::uint64_t fr;
    std::uint64_t nfr;
  };

  std::int32_t grow(std::vector<Item> items, int depth) {
    ClassCounts counts;
    for (const auto& it : items) {
      (m_.labels[it.sample] == BinaryLabel::FR ? counts.fr : counts.nfr) += it.weight;
    }
    const auto index = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, counts});

    const bool pure = counts.fr == 0 || counts.nfr == 0;
    const bool too_small = counts.total() < static_cast<std::uint64_t>(params_.min_samples_split);
    const bool too_deep = params_.max_depth && depth >= *params_.max_depth;
    if (pure || too_small || too_deep) return index;

    const auto best = find_split(items, counts);
    if (!best || !(gini(counts) - best->impurity > 1e-12)) return index;

    for (const auto& e : m_.columns[best->feature]) value_[e.sample] = e.value;
    std::vector<Item> left;
    std::vector<Item> right;
    for (const auto& it : items) {
      (value_[it.sample] <= best->threshold ? left : right).push_back(it);
    }
    for (const auto& e : m_.columns[best->feature]) value_[e.sample] = 0.0;
    items.clear();
    items.shrink_to_fit();

    const auto l = grow(std::move(left), depth + 1);
    const auto r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<std::int32_t>(best->feature);
    node.threshold = best->threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  // Features are drawn without replacement until k of them vary inside the
  // node (or none remain); constant features do not count towards k.
  std::optional<Split> find_split(const std::vector<Item>& items, ClassCounts counts) {
    for (const auto& it : items) in_node_[it.sample] = it.weight;

    std::optional<Split> best;
    const auto n_features = static_cast<std::uint32_t>(feature_order_.size());
    std::size_t scanned = 0;
    for (std::uint32_t t = 0; t < n_features && scanned < k_; ++t) {
      const std::uint32_t j = t + rng_.below(n_features - t);
      std::swap(feature_order_[t], feature_order_[j]);
      const FeatureIndex f = feature_order_[t];
      if (auto candidate = best_threshold(f, counts)) {
        ++scanned;
        if (!best || candidate->impurity < best->impurity) best = candidate;
      }
    }

    for (const auto& it : items) in_node_[it.sample] = 0;
    return best;
  }

  // Exhaustive scan of midpoints between consecutive distinct values;
  // nullopt when the feature is constant in the node.
  std::optional<Split> best_threshold(FeatureIndex f, ClassCounts counts) {
    buckets_.clear();
    std::uint64_t nz_fr = 0;
    std::uint64_t nz_nfr = 0;
    for (const auto& e : m_.columns[f]) {
      const std::uint32_t w = in_node_[e.sample];
      if (w == 0) continue;
      if (m_.labels[e.sample] == BinaryLabel::FR) {
        buckets_.push_back({e.value, w, 0});
        nz_fr += w;
      } else {
        buckets_.push_back({e.value, 0, w});
        nz_nfr += w;
      }
    }
    const std::uint64_t zero_fr = counts.fr - nz_fr;
    const std::uint64_t zero_nfr = counts.nfr - nz_nfr;
    if (zero_fr + zero_nfr > 0) buckets_.push_back({0.0, zero_fr, zero_nfr});
    if (buckets_.size() < 2) return std::nullopt;

    std::sort(buckets_.begin(), buckets_.end(),
              [](const Bucket& a, const Bucket& b) { return a.value < b.value; });
    std::size_t w = 0;
    for (std::size_t r = 1; r < buckets_.size(); ++r) {
      if (buckets_[r].value == buckets_[w].value) {
        buckets_[w].fr += buckets_[r].fr;
        buckets_[w].nfr += buckets_[r].nfr;
      } else {
        buckets_[++w] = buckets_[r];
      }
    }
    buckets_.resize(w + 1);
    if (buckets_.size() < 2) return std::nullopt;

    const double total = static_cast<double>(counts.total());
    std::uint64_t left_fr = 0;
    std::uint64_t left_nfr = 0;
    std::optional<Split> best;
    for (std::size_t i = 0; i + 1 < buckets_.size(); ++i) {
      left_fr += buckets_[i].fr;
      left_nfr += buckets_[i].nfr;
      const double lf = static_cast<double>(left_fr);
      const double ln = static_cast<double>(left_nfr);
      const double rf = static_cast<double>(counts.fr) - lf;
      const double rn = static_cast<double>(counts.nfr) - ln;
      const double impurity = ((lf + ln) * gini(lf, ln) + (rf + rn) * gini(rf, rn)) / total;
      if (!best || impurity < best->impurity) {
        double threshold = 0.5 * (buckets_[i].value + buckets_[i + 1].value);
        if (!(threshold < buckets_[i + 1].value)) threshold = buckets_[i].value;
        best = Split{f, threshold, impurity};
      }
    }
    return best;
  }

  const TrainingMatrix& m_;
  const ForestParams& params_;
  std::size_t k_;
  Rng rng_;
  std::vector<std::uint32_t> in_node_;
  std::vector<double> value_;
  std::vector<FeatureIndex> feature_order_;
  std::vector<Bucket> buckets_;
  DecisionTree tree_;
};

}  // namespace detail

// Per-tree seeds are fixed before any tree is grown, so the result does not
// depend on `threads` (0 = hardware concurrency).
inline ForestModel fit(std::span<const LabeledVector> samples, std::size_t n_features,
                       const ForestParams& params, std::vector<std::string>* warnings = nullptr,
                       unsigned threads = 1) {
  params.validate();
  if (samples.empty()) throw error(errc::empty_training_set, "no training samples");
  if (warnings) {
    const auto n_fr = std::count_if(samples.begin(), samples.end(),
                                    [](const auto& s) { return s.label == BinaryLabel::FR; });
    if (n_fr == 0 || static_cast<std::size_t>(n_fr) == samples.size()) {
      warnings->push_back("training set contains a single class");
    }
  }

  const detail::TrainingMatrix matrix(samples, n_features);
  ForestModel model;
  model.params = params;
  model.n_features = n_features;
  model.trees.resize(static_cast<std::size_t>(params.n_trees));

  auto grow_tree = [&](std::size_t t) {
    detail::TreeBuilder builder(matrix, params, derive_seed(params.seed, t));
    model.trees[t] = builder.build();
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(params.n_trees));
  if (threads <= 1) {
    for (std::size_t t = 0; t < model.trees.size(); ++t) grow_tree(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < model.trees.size(); t = next++) grow_tree(t);
      });
    }
  }
  return model;
}

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;  // NFR is the positive class
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  // Zero denominators yield 0.
  static MetricsReport from_confusion(std::size_t tp, std::size_t fp, std::size_t fn,
                                      std::size_t tn) {
    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
    MetricsReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.tn = tn;
    const double total = static_cast<double>(tp + fp + fn + tn);
    r.accuracy = ratio(static_cast<double>(tp + tn), total);
    r.precision = ratio(static_cast<double>(tp), static_cast<double>(tp + fp));
    r.recall = ratio(static_cast<double>(tp), static_cast<double>(tp + fn));
    r.f1 = ratio(2.0 * r.precision * r.recall, r.precision + r.recall);
    return r;
  }

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;

  friend void to_json(nlohmann::json& j, const MetricsReport& m) {
    j = {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
         {"f1", m.f1},             {"tp", m.tp},               {"fp", m.fp},
         {"fn", m.fn},             {"tn", m.tn}};
  }

  friend void from_json(const nlohmann::json& j, MetricsReport& m) {
    m = from_confusion(j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                       j.at("fn").get<std::size_t>(), j.at("tn").get<std::size_t>());
  }
};

inline MetricsReport evaluate(const ForestModel& model, std::span<const LabeledVector> test) {
  if (test.empty()) throw error(errc::empty_test_set, "no test samples");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& s : test) {
    const bool predicted_nfr = model.predict(s.vector) == BinaryLabel::NFR;
    const bool actual_nfr = s.label == BinaryLabel::NFR;
    if (predicted_nfr && actual_nfr) ++tp;
    else if (predicted_nfr) ++fp;
    else if (actual_nfr) ++fn;
    else ++tn;
  }
  return MetricsReport::from_confusion(tp, fp, fn, tn);
}

}  // namespace reqlens
