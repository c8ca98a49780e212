#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "reqlens/pipeline.hpp"

using namespace reqlens;

namespace {
TrainingOutcome train(std::uint32_t seed, RemovalProfile profile = RemovalProfile::all_words()) {
  PreprocessConfig pc;
  pc.profile = std::move(profile);
  return train_and_evaluate(fixtures::sample(), ModelSettings::seeded(seed, pc),
                            DatasetInfo::of(fixtures::sample(), fixtures::sample_path()));
}
}  // namespace

TEST(Pipeline, TrainEvaluateShapes) {
  const auto out = train(3);
  EXPECT_EQ(out.split.train.size() + out.split.test.size(), fixtures::sample().size());
  EXPECT_EQ(out.split.test.size(), test_size_for(fixtures::sample().size(), 0.2));
  EXPECT_EQ(out.metrics.tp + out.metrics.fp + out.metrics.fn + out.metrics.tn, out.split.test.size());
  EXPECT_EQ(out.model.forest.n_features, out.model.vocabulary.size());
  EXPECT_EQ(out.model.vocabulary.n_train_docs(), out.split.train.size());
  EXPECT_GT(out.metrics.accuracy, 0.7);
}

TEST(Pipeline, ModelRoundTripIsByteIdentical) {
  const auto out = train(5, RemovalProfile::without_modals());
  const auto text = dump_model(out.model);
  const auto path = testing::TempDir() + "pipeline_model.json";
  {
    std::ofstream f(path);
    f << text;
  }
  const auto back = load_model(path);
  EXPECT_EQ(dump_model(back), text);
  EXPECT_EQ(back.forest, out.model.forest);
  EXPECT_EQ(back.vocabulary, out.model.vocabulary);
  EXPECT_EQ(back.preprocessor.config().profile.name(), ProfileName::AM);
  for (const auto& r : fixtures::sample()) {
    EXPECT_EQ(back.predict_proba(r).nfr, out.model.predict_proba(r).nfr);
  }
  // the split is recoverable from the file
  const auto s = back.split_of(fixtures::sample());
  ASSERT_EQ(s.test.size(), out.split.test.size());
  for (std::size_t i = 0; i < s.test.size(); ++i) EXPECT_EQ(s.test[i].id, out.split.test[i].id);
  std::remove(path.c_str());
}

TEST(Pipeline, SameSeedSameModel) {
  EXPECT_EQ(dump_model(train(11).model), dump_model(train(11).model));
  EXPECT_NE(dump_model(train(11).model), dump_model(train(12).model));
}

TEST(Pipeline, SplitOfRejectsOtherDataset) {
  const auto out = train(1);
  auto other = fixtures::sample();
  other[3].text += " extra";
  try {
    out.model.split_of(other);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::invalid_config);
  }
}

TEST(Pipeline, LoadErrors) {
  try {
    load_model("/nonexistent/model.json");
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::io_error);
  }
  const auto path = testing::TempDir() + "bad_model.json";
  auto j = nlohmann::json(train(2).model);
  for (auto edit : {0, 1, 2}) {
    auto k = j;
    if (edit == 0) k["format_version"] = 999;
    if (edit == 1) k["idf"][0] = 123.0;
    if (edit == 2) k["forest"]["n_features"] = 3;
    std::ofstream(path) << k.dump();
    try {
      load_model(path);
      ADD_FAILURE() << edit;
    } catch (const error& e) {
      EXPECT_EQ(e.code(), errc::format_error) << edit;
    }
  }
  std::ofstream(path) << "{not json";
  EXPECT_THROW(load_model(path), error);
  std::remove(path.c_str());
}

TEST(Pipeline, ProfilesShrinkVocabulary) {
  const auto a = train(4).model.vocabulary.size();
  const auto am = train(4, RemovalProfile::without_modals()).model.vocabulary.size();
  const auto amc = train(4, RemovalProfile::without_modals_and_common()).model.vocabulary.size();
  EXPECT_GT(a, am);
  EXPECT_GT(am, amc);
}

TEST(Pipeline, Hex64) {
  EXPECT_EQ(hex64(0), "0000000000000000");
  EXPECT_EQ(hex64(0xdeadbeefULL), "00000000deadbeef");
  EXPECT_EQ(hex64(~0ULL), "ffffffffffffffff");
}
