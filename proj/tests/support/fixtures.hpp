#pragma once

#include <fstream>
#include <string>

#include "json.hpp"
#include "reqlens/corpus.hpp"

namespace fixtures {

inline const nlohmann::json& frozen() {
  static const nlohmann::json j = [] {
    std::ifstream in(std::string(REQLENS_TEST_DATA) + "/frozen_values.json");
    return nlohmann::json::parse(in);
  }();
  return j;
}

inline std::string sample_path() { return std::string(REQLENS_DATA_DIR) + "/sample_requirements.csv"; }

inline const reqlens::Dataset& sample() {
  static const reqlens::Dataset d = reqlens::load_dataset(sample_path());
  return d;
}

}  // namespace fixtures
