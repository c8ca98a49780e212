// Train on a requirements CSV and print the explanation of one test requirement.
//   explain_one data/sample_requirements.csv [row]

#include <cmath>
#include <cstdlib>
#include <iostream>

#include "reqlens/reqlens.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: explain_one <requirements.csv> [row]\n";
    return 2;
  }
  try {
    const auto data = reqlens::load_dataset(argv[1]);
    const auto outcome = reqlens::train_and_evaluate(data, reqlens::ModelSettings::seeded(7));
    const auto& pick = argc > 2 ? data.at(std::strtoul(argv[2], nullptr, 10)) : outcome.split.test.front();

    const auto ex = reqlens::explain(outcome.model, pick, reqlens::LimeConfig{});
    std::cout << pick.text << "\n";
    std::cout << "label " << to_string(pick.binary_label()) << ", P(NFR) = " << ex.prob_nfr << "\n\n";
    for (const auto& w : ex.words) {
      const int bar = static_cast<int>(std::abs(w.weight) * 60.0 + 0.5);
      std::cout << (w.weight >= 0 ? "  NFR + " : "  FR  - ");
      std::cout.width(14);
      std::cout << std::left << w.stem << std::string(static_cast<std::size_t>(bar), '#') << " "
                << w.weight << "\n";
    }
    std::cout << "\ntest accuracy " << outcome.metrics.accuracy << ", F1 " << outcome.metrics.f1 << "\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
