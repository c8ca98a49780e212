#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "reqlens/forest.hpp"
#include "reqlens/preprocess.hpp"
#include "reqlens/random.hpp"
#include "reqlens/vectorize.hpp"

using namespace reqlens;

namespace {
LabeledVector point(double x, bool nfr) {
  LabeledVector v;
  if (x != 0.0) v.vector.entries.push_back({0, x});
  v.label = nfr ? BinaryLabel::NFR : BinaryLabel::FR;
  return v;
}

ForestParams single_tree() {
  ForestParams p;
  p.n_trees = 1;
  p.bootstrap = false;
  return p;
}

std::vector<LabeledVector> sample_vectors() {
  Preprocessor p;
  const auto docs = p(fixtures::sample());
  const auto vocab = Vocabulary::build(docs);
  std::vector<LabeledVector> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    out.push_back({transform(docs[i], vocab), fixtures::sample()[i].binary_label()});
  }
  return out;
}

std::size_t n_features_of(const std::vector<LabeledVector>& v) {
  std::size_t n = 0;
  for (const auto& s : v) {
    for (const auto& [i, x] : s.vector.entries) n = std::max<std::size_t>(n, i + 1);
  }
  return n;
}
}  // namespace

TEST(Gini, ExactOnEnumeratedCounts) {
  for (std::uint32_t a = 0; a <= 80; ++a) {
    for (std::uint32_t b = 0; b <= 80; ++b) {
      if (a + b == 0) continue;
      const std::uint64_t num = 2ull * a * b, den = std::uint64_t{a + b} * (a + b);
      // IEEE division of two exactly representable integers is correctly rounded
      const double exact = static_cast<double>(num) / static_cast<double>(den);
      EXPECT_EQ(gini(ClassCounts{a, b}), exact) << a << "," << b;
      EXPECT_NEAR(gini(ClassCounts{a, b}), oracle::gini_counts(a, b), 1e-15);
    }
  }
  EXPECT_EQ(gini(1, 1), 0.5);
  EXPECT_EQ(gini(1, 3), 0.375);
  EXPECT_EQ(gini(0, 9), 0.0);
  EXPECT_EQ(gini(2, 1), 4.0 / 9.0);
  try {
    gini(ClassCounts{0, 0});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::empty_node);
  }
}

TEST(Gini, MajorityTiesGoToNfr) {
  EXPECT_EQ((ClassCounts{3, 3}).majority(), BinaryLabel::NFR);
  EXPECT_EQ((ClassCounts{4, 3}).majority(), BinaryLabel::FR);
}

TEST(Tree, SeparableOneDimensionMatchesExhaustiveSplit) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const double cut = 0.2 + 0.6 * rng.uniform();
    std::vector<LabeledVector> data;
    std::vector<double> xs;
    std::vector<bool> ys;
    const auto n = 4 + rng.below(40);
    for (std::uint32_t i = 0; i < n; ++i) {
      const double x = 0.01 + 0.98 * rng.uniform();
      data.push_back(point(x, x > cut));
      xs.push_back(x);
      ys.push_back(x > cut);
    }
    const auto want = oracle::best_split(xs, ys);
    const auto model = fit(data, 1, single_tree());
    const auto& nodes = model.trees[0].nodes;
    const bool both = std::count(ys.begin(), ys.end(), true) % n != 0;
    if (!both) {
      EXPECT_EQ(nodes.size(), 1u);
      continue;
    }
    ASSERT_TRUE(want);
    EXPECT_EQ(want->impurity, 0.0);
    ASSERT_EQ(nodes.size(), 3u);
    EXPECT_EQ(nodes[0].feature, 0);
    EXPECT_EQ(nodes[0].threshold, want->threshold);
    EXPECT_EQ(nodes[1].counts.nfr, 0u);
    EXPECT_EQ(nodes[2].counts.fr, 0u);
    for (const auto& d : data) EXPECT_EQ(model.predict(d.vector), d.label);
  }
}

TEST(Tree, NoisyOneDimensionRootMatchesExhaustiveSplit) {
  Rng rng(13);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LabeledVector> data;
    std::vector<double> xs;
    std::vector<bool> ys;
    const auto n = 6 + rng.below(30);
    for (std::uint32_t i = 0; i < n; ++i) {
      const double x = std::round(rng.uniform() * 20) / 20;  // repeats and zeros
      const bool y = rng.uniform() < 0.2 + 0.6 * x;
      data.push_back(point(x, y));
      xs.push_back(x);
      ys.push_back(y);
    }
    const auto want = oracle::best_split(xs, ys);
    const auto model = fit(data, 1, single_tree());
    const auto& root = model.trees[0].nodes[0];
    if (!want || root.is_leaf()) continue;
    // a tied runner-up would make the threshold ambiguous; skip those draws
    bool tie = false;
    std::vector<double> d(xs);
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
      const double thr = (d[i] + d[i + 1]) / 2;
      if (thr == want->threshold) continue;
      std::vector<double> one = {thr};
      double lf = 0, ln = 0, rf = 0, rn = 0;
      for (std::size_t k = 0; k < xs.size(); ++k) {
        (xs[k] <= thr ? (ys[k] ? ln : lf) : (ys[k] ? rn : rf)) += 1;
      }
      const double imp =
          ((lf + ln) * oracle::gini_counts(lf, ln) + (rf + rn) * oracle::gini_counts(rf, rn)) / n;
      if (std::abs(imp - want->impurity) < 1e-9) tie = true;
    }
    if (tie) continue;
    EXPECT_EQ(root.threshold, want->threshold);
    ++compared;
  }
  EXPECT_GT(compared, 50);
}

TEST(Forest, VoteFractionsAreExactRationals) {
  const auto data = sample_vectors();
  ForestParams p;
  p.n_trees = 7;
  p.seed = 4;
  const auto model = fit(data, n_features_of(data), p);
  for (const auto& d : data) {
    std::size_t votes = 0;
    for (const auto& t : model.trees) {
      std::size_t i = 0;
      while (!t.nodes[i].is_leaf()) {
        const auto& n = t.nodes[i];
        i = static_cast<std::size_t>(d.vector.value(static_cast<FeatureIndex>(n.feature)) <= n.threshold
                                         ? n.left
                                         : n.right);
      }
      votes += t.nodes[i].counts.nfr >= t.nodes[i].counts.fr;
    }
    const auto pr = model.predict_proba(d.vector);
    EXPECT_EQ(pr.nfr, static_cast<double>(votes) / 7.0);
    EXPECT_EQ(pr.fr, static_cast<double>(7 - votes) / 7.0);
    EXPECT_EQ(model.predict(d.vector), 2 * votes >= 7 ? BinaryLabel::NFR : BinaryLabel::FR);
  }
}

TEST(Forest, EvenTreeCountTieGoesToNfr) {
  // two trees: one always FR, one always NFR
  ForestModel m;
  m.n_features = 1;
  m.params.n_trees = 2;
  DecisionTree fr, nfr;
  fr.nodes.push_back(TreeNode{-1, 0, -1, -1, {3, 1}});
  nfr.nodes.push_back(TreeNode{-1, 0, -1, -1, {1, 3}});
  m.trees = {fr, nfr};
  const TfIdfVector x;
  EXPECT_EQ(m.predict_proba(x).nfr, 0.5);
  EXPECT_EQ(m.predict(x), BinaryLabel::NFR);
}

TEST(Forest, SeedDeterminismByteIdentical) {
  const auto data = sample_vectors();
  ForestParams p;
  p.n_trees = 25;
  p.seed = 99;
  const auto nf = n_features_of(data);
  const auto a = nlohmann::json(fit(data, nf, p)).dump();
  const auto b = nlohmann::json(fit(data, nf, p)).dump();
  const auto c = nlohmann::json(fit(data, nf, p, nullptr, 4)).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  p.seed = 100;
  EXPECT_NE(a, nlohmann::json(fit(data, nf, p)).dump());
}

TEST(Forest, StructuralInvariants) {
  const auto data = sample_vectors();
  for (auto [depth, mss, boot] : {std::tuple{-1, 2, true}, std::tuple{3, 2, true},
                                  std::tuple{-1, 10, false}, std::tuple{0, 2, true}}) {
    ForestParams p;
    p.n_trees = 10;
    p.min_samples_split = mss;
    p.bootstrap = boot;
    if (depth >= 0) p.max_depth = depth;
    const auto model = fit(data, n_features_of(data), p);
    for (const auto& t : model.trees) {
      EXPECT_EQ(t.nodes[0].counts.total(), data.size());
      if (depth >= 0) {
        EXPECT_LE(t.depth(), static_cast<std::size_t>(depth));
      }
      for (const auto& n : t.nodes) {
        if (n.is_leaf()) continue;
        const auto& l = t.nodes[static_cast<std::size_t>(n.left)];
        const auto& r = t.nodes[static_cast<std::size_t>(n.right)];
        EXPECT_EQ(l.counts.fr + r.counts.fr, n.counts.fr);
        EXPECT_EQ(l.counts.nfr + r.counts.nfr, n.counts.nfr);
        EXPECT_GT(l.counts.total(), 0u);
        EXPECT_GT(r.counts.total(), 0u);
        EXPECT_GE(n.counts.total(), static_cast<std::uint64_t>(mss));
        EXPECT_TRUE(n.counts.fr > 0 && n.counts.nfr > 0);
        // the split strictly lowers impurity
        const double child = (l.counts.total() * gini(l.counts) + r.counts.total() * gini(r.counts)) /
                             static_cast<double>(n.counts.total());
        EXPECT_LT(child, gini(n.counts));
      }
    }
  }
}

TEST(Forest, FitsTrainingDataWell) {
  const auto data = sample_vectors();
  ForestParams p;
  p.seed = 1;
  const auto model = fit(data, n_features_of(data), p);
  const auto m = evaluate(model, data);
  EXPECT_GT(m.accuracy, 0.95);
}

TEST(Forest, JsonRoundTripAndValidation) {
  const auto data = sample_vectors();
  ForestParams p;
  p.n_trees = 5;
  p.max_depth = 6;
  p.features_per_split = 3;
  const auto model = fit(data, n_features_of(data), p);
  const nlohmann::json j = model;
  EXPECT_EQ(j.get<ForestModel>(), model);
  EXPECT_EQ(j["params"]["features_per_split"], 3);
  auto broken = j;
  broken["trees"][0][0][2] = 999;
  EXPECT_THROW(broken.get<ForestModel>(), error);
}

TEST(Forest, ParamsValidation) {
  const std::vector<LabeledVector> data = {point(0.1, false), point(0.9, true)};
  auto bad = [&](std::function<void(ForestParams&)> edit) {
    ForestParams p;
    edit(p);
    try {
      fit(data, 1, p);
      return false;
    } catch (const error& e) {
      return e.code() == errc::invalid_config;
    }
  };
  EXPECT_TRUE(bad([](auto& p) { p.n_trees = 0; }));
  EXPECT_TRUE(bad([](auto& p) { p.min_samples_split = 1; }));
  EXPECT_TRUE(bad([](auto& p) { p.max_depth = -1; }));
  EXPECT_TRUE(bad([](auto& p) { p.features_per_split = 0; }));
  try {
    fit(std::vector<LabeledVector>{}, 1, ForestParams{});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::empty_training_set);
  }
}

TEST(Forest, FeaturesPerSplitDefault) {
  ForestParams p;
  EXPECT_EQ(p.resolved_features_per_split(100), 10u);
  EXPECT_EQ(p.resolved_features_per_split(99), 9u);
  EXPECT_EQ(p.resolved_features_per_split(1), 1u);
  EXPECT_EQ(p.resolved_features_per_split(0), 1u);
}

TEST(Forest, SingleClassWarns) {
  const std::vector<LabeledVector> data = {point(0.1, true), point(0.9, true)};
  std::vector<std::string> warnings;
  const auto m = fit(data, 1, ForestParams{}, &warnings);
  EXPECT_FALSE(warnings.empty());
  EXPECT_EQ(m.predict(data[0].vector), BinaryLabel::NFR);
}

TEST(Metrics, FromConfusion) {
  const auto m = MetricsReport::from_confusion(40, 10, 5, 45);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.85);
  EXPECT_DOUBLE_EQ(m.precision, 0.8);
  EXPECT_DOUBLE_EQ(m.recall, 40.0 / 45.0);
  EXPECT_NEAR(m.f1, 2 * 0.8 * (40.0 / 45.0) / (0.8 + 40.0 / 45.0), 1e-15);
  const auto z = MetricsReport::from_confusion(0, 0, 3, 7);
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.f1, 0.0);
  const nlohmann::json j = m;
  EXPECT_EQ(j.get<MetricsReport>(), m);
  try {
    evaluate(ForestModel{}, std::vector<LabeledVector>{});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::empty_test_set);
  }
}
