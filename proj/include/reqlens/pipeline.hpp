#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "reqlens/corpus.hpp"
#include "reqlens/error.hpp"
#include "reqlens/forest.hpp"
#include "reqlens/preprocess.hpp"
#include "reqlens/vectorize.hpp"

namespace reqlens {

struct ModelSettings {
  PreprocessConfig preprocess;
  ForestParams forest;
  double test_fraction = 0.2;
  std::uint32_t split_seed = 0;

  // One seed drives both the split and the forest.
  static ModelSettings seeded(std::uint32_t seed, PreprocessConfig preprocess = {},
                              ForestParams forest = {}) {
    ModelSettings s;
    s.preprocess = std::move(preprocess);
    s.forest = forest;
    s.forest.seed = seed;
    s.split_seed = seed;
    return s;
  }
};

struct DatasetInfo {
  std::string path;
  std::size_t rows = 0;
  std::uint64_t fingerprint = 0;

  static DatasetInfo of(std::span<const Requirement> dataset, std::string path = {}) {
    return {std::move(path), dataset.size(), reqlens::fingerprint(dataset)};
  }

  friend bool operator==(const DatasetInfo&, const DatasetInfo&) = default;
};

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

// Everything needed to score raw requirement text: preprocessing config,
// training vocabulary (with its idf table) and the forest.
class TrainedModel {
 public:
  static constexpr int kFormatVersion = 1;

  Preprocessor preprocessor;
  Vocabulary vocabulary;
  ForestModel forest;
  double test_fraction = 0.2;
  std::uint32_t split_seed = 0;
  DatasetInfo dataset;

  TfIdfVector vectorize(std::span<const std::string> stems, std::size_t source_id = 0) const {
    return transform(stems, vocabulary, source_id);
  }

  ClassProbabilities predict_proba_stems(std::span<const std::string> stems) const {
    return forest.predict_proba(vectorize(stems));
  }

  ClassProbabilities predict_proba(const Requirement& r) const {
    return predict_proba_stems(preprocessor(r).stems());
  }

  BinaryLabel predict(const Requirement& r) const {
    return forest.predict(vectorize(preprocessor(r).stems(), r.id));
  }

  // Re-derives the split this model was trained on.
  DatasetSplit split_of(std::span<const Requirement> data) const {
    if (dataset.rows != 0 && fingerprint(data) != dataset.fingerprint) {
      throw error(errc::invalid_config, "dataset does not match the one the model was trained on");
    }
    return split(data, test_fraction, split_seed);
  }

  std::vector<LabeledVector> labeled_vectors(std::span<const Requirement> reqs) const {
    std::vector<LabeledVector> out;
    out.reserve(reqs.size());
    for (const auto& r : reqs) {
      out.push_back({transform(preprocessor(r), vocabulary), r.binary_label()});
    }
    return out;
  }

  friend void to_json(nlohmann::json& j, const TrainedModel& m) {
    const auto& pc = m.preprocessor.config();
    j = {{"format", "reqlens-model"},
         {"format_version", kFormatVersion},
         {"dataset",
          {{"path", m.dataset.path},
           {"rows", m.dataset.rows},
           {"fingerprint", hex64(m.dataset.fingerprint)}}},
         {"split", {{"seed", m.split_seed}, {"test_fraction", m.test_fraction}}},
         {"preprocess",
          {{"profile", std::string(to_string(pc.profile.name()))},
           {"removed_stems", pc.profile.removed_stems()},
           {"stopwords", pc.stopwords}}},
         {"vocabulary", m.vocabulary},
         {"idf", m.vocabulary.idf_table()},
         {"forest", m.forest}};
  }

  friend void from_json(const nlohmann::json& j, TrainedModel& m) {
    if (j.at("format").get<std::string>() != "reqlens-model" ||
        j.at("format_version").get<int>() != kFormatVersion) {
      throw error(errc::format_error, "not a reqlens model file of a supported version");
    }
    TrainedModel out;
    const auto& ds = j.at("dataset");
    out.dataset.path = ds.at("path").get<std::string>();
    out.dataset.rows = ds.at("rows").get<std::size_t>();
    out.dataset.fingerprint = std::stoull(ds.at("fingerprint").get<std::string>(), nullptr, 16);
    out.split_seed = j.at("split").at("seed").get<std::uint32_t>();
    out.test_fraction = j.at("split").at("test_fraction").get<double>();
    const auto& pp = j.at("preprocess");
    PreprocessConfig pc;
    pc.stopwords = pp.at("stopwords").get<WordSet>();
    pc.profile = RemovalProfile::from_stems(pp.at("removed_stems").get<WordSet>());
    out.preprocessor = Preprocessor(std::move(pc));
    out.vocabulary = j.at("vocabulary").get<Vocabulary>();
    const auto idf = j.at("idf").get<std::vector<double>>();
    if (idf.size() != out.vocabulary.size()) throw error(errc::format_error, "idf table size mismatch");
    for (std::size_t i = 0; i < idf.size(); ++i) {
      if (std::abs(idf[i] - out.vocabulary.idf(static_cast<FeatureIndex>(i))) > 1e-12) {
        throw error(errc::format_error, "idf table inconsistent with document frequencies");
      }
    }
    out.forest = j.at("forest").get<ForestModel>();
    if (out.forest.n_features != out.vocabulary.size()) {
      throw error(errc::format_error, "forest feature count does not match vocabulary");
    }
    m = std::move(out);
  }
};

inline std::string dump_model(const TrainedModel& model) {
  return nlohmann::json(model).dump(1) + "\n";
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_error, "cannot open model '" + path + "'");
  try {
    return nlohmann::json::parse(in).get<TrainedModel>();
  } catch (const nlohmann::json::exception& e) {
    throw error(errc::format_error, std::string("model file: ") + e.what());
  }
}

struct TrainingOutcome {
  TrainedModel model;
  MetricsReport metrics;
  DatasetSplit split;
  std::vector<std::string> warnings;
};

// split -> preprocess -> vocabulary over train -> TF-IDF -> forest -> test metrics
inline TrainingOutcome train_and_evaluate(std::span<const Requirement> dataset,
                                          const ModelSettings& settings, DatasetInfo info = {},
                                          unsigned threads = 1) {
  TrainingOutcome out;
  out.split = split(dataset, settings.test_fraction, settings.split_seed);
  out.warnings = out.split.warnings;

  TrainedModel& m = out.model;
  m.preprocessor = Preprocessor(settings.preprocess);
  m.test_fraction = settings.test_fraction;
  m.split_seed = settings.split_seed;
  m.dataset = info.rows == 0 ? DatasetInfo::of(dataset, info.path) : std::move(info);

  const auto train_docs = m.preprocessor(out.split.train);
  m.vocabulary = Vocabulary::build(train_docs);
  std::vector<LabeledVector> train;
  train.reserve(train_docs.size());
  for (std::size_t i = 0; i < train_docs.size(); ++i) {
    train.push_back({transform(train_docs[i], m.vocabulary), out.split.train[i].binary_label()});
  }
  m.forest = fit(train, m.vocabulary.size(), settings.forest, &out.warnings, threads);
  if (!out.split.test.empty()) {
    out.metrics = evaluate(m.forest, m.labeled_vectors(out.split.test));
  } else {
    out.warnings.push_back("empty test set; metrics are zero");
  }
  return out;
}

}  // namespace reqlens
