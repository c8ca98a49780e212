#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "reqlens/error.hpp"
#include "reqlens/pipeline.hpp"
#include "reqlens/preprocess.hpp"
#include "reqlens/random.hpp"

namespace reqlens {

struct LimeConfig {
  std::size_t n_samples = 1000;
  double sigma = 5.0;
  double ridge_lambda = 1.0;
  std::size_t top_k = 10;
  std::uint32_t seed = 0;

  void validate() const {
    if (n_samples < 10) throw error(errc::invalid_config, "n_samples must be >= 10");
    if (!(sigma > 0.0)) throw error(errc::non_positive_sigma, "sigma must be positive");
    if (!(ridge_lambda >= 0.0)) throw error(errc::invalid_config, "ridge_lambda must be >= 0");
    if (top_k < 1) throw error(errc::invalid_config, "top_k must be >= 1");
  }

  friend bool operator==(const LimeConfig&, const LimeConfig&) = default;

  friend void to_json(nlohmann::json& j, const LimeConfig& c) {
    j = {{"n_samples", c.n_samples},
         {"sigma", c.sigma},
         {"ridge_lambda", c.ridge_lambda},
         {"top_k", c.top_k},
         {"seed", c.seed}};
  }
};

// Presence mask over a document's distinct stems; 1 keeps the stem.
using Mask = std::vector<std::uint8_t>;

// Euclidean distance to the all-ones mask: sqrt(number of dropped stems).
inline double mask_distance(const Mask& mask) {
  const auto dropped = std::count(mask.begin(), mask.end(), std::uint8_t{0});
  return std::sqrt(static_cast<double>(dropped));
}

// exp(-d^2 / (2 sigma^2))
inline double kernel_weight(double distance, double sigma) {
  if (!(sigma > 0.0)) throw error(errc::non_positive_sigma, "sigma must be positive");
  return std::exp(-(distance * distance) / (2.0 * sigma * sigma));
}

// All-ones mask first, then n_samples masks: the number of dropped stems is
// uniform on 1..m, and which stems are dropped is uniform given that number.
inline std::vector<Mask> perturb(std::size_t n_distinct, const LimeConfig& config) {
  if (n_distinct == 0) throw error(errc::empty_document, "document has no stems");
  const auto m = static_cast<std::uint32_t>(n_distinct);
  Rng rng(config.seed);
  std::vector<Mask> out;
  out.reserve(config.n_samples + 1);
  out.emplace_back(n_distinct, std::uint8_t{1});
  std::vector<std::uint32_t> order(n_distinct);
  for (std::size_t s = 0; s < config.n_samples; ++s) {
    std::iota(order.begin(), order.end(), 0u);
    const std::uint32_t n_drop = 1 + rng.below(m);
    Mask mask(n_distinct, std::uint8_t{1});
    for (std::uint32_t t = 0; t < n_drop; ++t) {
      const std::uint32_t j = t + rng.below(m - t);
      std::swap(order[t], order[j]);
      mask[order[t]] = 0;
    }
    out.push_back(std::move(mask));
  }
  return out;
}

inline std::vector<Mask> perturb(const ProcessedDoc& doc, const LimeConfig& config) {
  return perturb(doc.distinct_stems().size(), config);
}

struct Perturbation {
  Mask mask;
  double distance = 0.0;
  double black_box_prob = 0.0;
};

struct SurrogateFit {
  double intercept = 0.0;
  std::vector<double> coefficients;
};

namespace detail {

// In-place Cholesky solve of the SPD system a x = b (row-major, n x n).
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
  const double tol = 1e-10 * std::max(scale, 1e-300);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > tol)) return false;
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

}  // namespace detail

// Weighted ridge least squares with an unpenalized intercept:
//   min sum_i w_i (theta0 + theta . z_i - y_i)^2 + lambda |theta|^2
// solved through the normal equations.
inline SurrogateFit fit_surrogate(std::span<const Mask> masks, std::span<const double> probs,
                                  std::span<const double> weights, double ridge_lambda) {
  if (masks.size() < 2) throw error(errc::invalid_config, "need at least two samples");
  if (probs.size() != masks.size() || weights.size() != masks.size()) {
    throw error(errc::invalid_config, "masks, probabilities and weights differ in length");
  }
  if (!(ridge_lambda >= 0.0)) throw error(errc::invalid_config, "ridge_lambda must be >= 0");
  const std::size_t m = masks.front().size();
  const std::size_t p = m + 1;

  std::vector<double> a(p * p, 0.0);
  std::vector<double> b(p, 0.0);
  std::vector<std::size_t> on;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].size() != m) throw error(errc::invalid_config, "masks differ in width");
    const double w = weights[i];
    if (!(w >= 0.0)) throw error(errc::invalid_config, "kernel weights must be non-negative");
    if (w == 0.0) continue;
    const double wy = w * probs[i];
    on.clear();
    on.push_back(0);  // intercept column
    for (std::size_t j = 0; j < m; ++j) {
      if (masks[i][j]) on.push_back(j + 1);
    }
    for (std::size_t r : on) {
      b[r] += wy;
      for (std::size_t c : on) a[r * p + c] += w;
    }
  }
  for (std::size_t j = 1; j < p; ++j) a[j * p + j] += ridge_lambda;

  if (!detail::cholesky_solve(a, b, p)) {
    throw error(errc::singular_system, "surrogate normal equations are singular");
  }
  SurrogateFit fit;
  fit.intercept = b[0];
  fit.coefficients.assign(b.begin() + 1, b.end());
  return fit;
}

struct WordWeight {
  std::string stem;
  double weight = 0.0;

  friend bool operator==(const WordWeight&, const WordWeight&) = default;
};

struct Explanation {
  std::size_t requirement_id = 0;
  double prob_nfr = 0.0;
  double intercept = 0.0;
  std::vector<WordWeight> words;  // by |weight| descending, at most top_k, no zeros

  // Positive toward NFR.
  std::vector<std::string> supportive() const {
    std::vector<std::string> out;
    for (const auto& w : words) {
      if (w.weight > 0.0) out.push_back(w.stem);
    }
    return out;
  }

  std::vector<std::string> distractive() const {
    std::vector<std::string> out;
    for (const auto& w : words) {
      if (w.weight < 0.0) out.push_back(w.stem);
    }
    return out;
  }

  friend bool operator==(const Explanation&, const Explanation&) = default;

  friend void to_json(nlohmann::json& j, const Explanation& e) {
    nlohmann::json words = nlohmann::json::array();
    for (const auto& w : e.words) words.push_back({{"stem", w.stem}, {"weight", w.weight}});
    j = {{"requirement_id", e.requirement_id},
         {"prob_nfr", e.prob_nfr},
         {"intercept", e.intercept},
         {"words", std::move(words)}};
  }

  friend void from_json(const nlohmann::json& j, Explanation& e) {
    e.requirement_id = j.at("requirement_id").get<std::size_t>();
    e.prob_nfr = j.at("prob_nfr").get<double>();
    e.intercept = j.at("intercept").get<double>();
    e.words.clear();
    for (const auto& w : j.at("words")) {
      e.words.push_back({w.at("stem").get<std::string>(), w.at("weight").get<double>()});
    }
  }
};

// Stems of `doc` whose distinct-stem slot is kept by `mask`, in text order.
inline std::vector<std::string> apply_mask(const ProcessedDoc& doc, const Mask& mask) {
  const auto& distinct = doc.distinct_stems();
  std::vector<std::string> out;
  out.reserve(doc.stems().size());
  for (const auto& s : doc.stems()) {
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), s);
    if (mask[static_cast<std::size_t>(it - distinct.begin())]) out.push_back(s);
  }
  return out;
}

inline std::vector<WordWeight> rank_words(const std::vector<std::string>& stems,
                                          const std::vector<double>& coefficients,
                                          std::size_t top_k) {
  std::vector<WordWeight> words;
  for (std::size_t j = 0; j < stems.size(); ++j) {
    if (coefficients[j] != 0.0) words.push_back({stems[j], coefficients[j]});
  }
  std::sort(words.begin(), words.end(), [](const WordWeight& a, const WordWeight& b) {
    const double fa = std::abs(a.weight);
    const double fb = std::abs(b.weight);
    return fa != fb ? fa > fb : a.stem < b.stem;
  });
  if (words.size() > top_k) words.resize(top_k);
  return words;
}

inline constexpr double kRetryRidgeLambda = 1e-3;

// `black_box` maps a (masked) stem sequence to P(NFR).
template <class BlackBox>
  requires std::invocable<BlackBox&, std::span<const std::string>>
Explanation explain_document(const ProcessedDoc& doc, BlackBox&& black_box,
                             const LimeConfig& config) {
  config.validate();
  if (doc.distinct_stems().empty()) {
    throw error(errc::empty_document,
                "requirement " + std::to_string(doc.requirement_id()) + " has no stems");
  }
  const auto masks = perturb(doc, config);
  std::vector<double> probs;
  std::vector<double> weights;
  probs.reserve(masks.size());
  weights.reserve(masks.size());
  for (const auto& mask : masks) {
    const auto kept = apply_mask(doc, mask);
    probs.push_back(static_cast<double>(black_box(std::span<const std::string>(kept))));
    weights.push_back(kernel_weight(mask_distance(mask), config.sigma));
  }

  SurrogateFit fit;
  try {
    fit = fit_surrogate(masks, probs, weights, config.ridge_lambda);
  } catch (const error& e) {
    if (e.code() != errc::singular_system || config.ridge_lambda > 0.0) throw;
    fit = fit_surrogate(masks, probs, weights, kRetryRidgeLambda);
  }

  Explanation out;
  out.requirement_id = doc.requirement_id();
  out.prob_nfr = probs.front();
  out.intercept = fit.intercept;
  out.words = rank_words(doc.distinct_stems(), fit.coefficients, config.top_k);
  return out;
}

inline Explanation explain(const TrainedModel& model, const Requirement& requirement,
                           const LimeConfig& config) {
  const auto doc = model.preprocessor(requirement);
  return explain_document(
      doc,
      [&model](std::span<const std::string> stems) {
        return model.predict_proba_stems(stems).nfr;
      },
      config);
}

struct ExplanationBatch {
  std::vector<Explanation> explanations;
  std::vector<std::size_t> skipped;  // ids whose stems were all removed
};

inline ExplanationBatch explain_all(const TrainedModel& model, std::span<const Requirement> reqs,
                                    const LimeConfig& config) {
  ExplanationBatch out;
  for (const auto& r : reqs) {
    try {
      out.explanations.push_back(explain(model, r, config));
    } catch (const error& e) {
      if (e.code() != errc::empty_document) throw;
      out.skipped.push_back(r.id);
    }
  }
  return out;
}

}  // namespace reqlens
