#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>

#include "json.hpp"
#include "reqlens/error.hpp"

namespace reqlens::stats {

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased (n - 1) sample variance, two-pass.
inline double variance(std::span<const double> xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

namespace detail {

// Continued fraction for the incomplete beta, modified Lentz.
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b), a, b > 0.
namespace detail {
// lgamma(z + d) - lgamma(z) without the cancellation of two huge lgammas.
inline double lgamma_diff(double z, double d) {
  if (z < 15.0) return std::lgamma(z + d) - std::lgamma(z);
  auto corr = [](double v) {
    const double v2 = v * v;
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * v2)) / v2) / v2) / v;
  };
  return (z - 0.5) * std::log1p(d / z) + d * std::log(z + d) - d + corr(z + d) - corr(z);
}
}  // namespace detail

inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double big = std::max(a, b), small = std::min(a, b);
  const double log_front = detail::lgamma_diff(big, small) - std::lgamma(small) +
                           a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

// P(|T| >= |t|) for Student's t with df degrees of freedom.
inline double t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

inline double t_cdf(double t, double df) {
  const double tail = 0.5 * t_two_sided_p(t, df);
  return t > 0.0 ? 1.0 - tail : tail;
}

enum class TTestVariant { Welch, Pooled };

constexpr std::string_view to_string(TTestVariant v) {
  return v == TTestVariant::Welch ? "welch" : "pooled";
}

struct TTestResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
  bool significant = false;
  double alpha = 0.05;

  friend void to_json(nlohmann::json& j, const TTestResult& r) {
    auto finite_or_string = [](double v) {
      return std::isfinite(v) ? nlohmann::json(v)
                              : nlohmann::json(v > 0 ? "inf" : "-inf");
    };
    j = {{"t", finite_or_string(r.t_statistic)},
         {"df", r.degrees_of_freedom},
         {"p", r.p_value},
         {"significant", r.significant},
         {"alpha", r.alpha}};
  }
};

// Two-sided two-sample t-test. Two constant samples are a degenerate case:
// equal constants give t = 0, p = 1; different constants give t = +-inf, p = 0.
inline TTestResult t_test(std::span<const double> a, std::span<const double> b, double alpha,
                          TTestVariant variant = TTestVariant::Welch) {
  if (a.size() < 2 || b.size() < 2) {
    throw error(errc::insufficient_sample, "each sample needs at least two values");
  }
  for (auto xs : {a, b}) {
    for (double x : xs) {
      if (!std::isfinite(x)) throw error(errc::insufficient_sample, "samples must be finite");
    }
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  // constant samples get exact zero variance and their exact value as mean
  auto constant = [](std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
  };
  const bool ca = constant(a);
  const bool cb = constant(b);
  const double ma = ca ? a.front() : mean(a);
  const double mb = cb ? b.front() : mean(b);
  const double va = ca ? 0.0 : variance(a);
  const double vb = cb ? 0.0 : variance(b);
  const double diff = ma - mb;

  TTestResult r;
  r.alpha = alpha;
  double se2 = 0.0;
  if (variant == TTestVariant::Welch) {
    const double qa = va / na;
    const double qb = vb / nb;
    se2 = qa + qb;
    const double denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
    r.degrees_of_freedom = denom > 0.0 ? se2 * se2 / denom : na + nb - 2.0;
  } else {
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    se2 = pooled * (1.0 / na + 1.0 / nb);
    r.degrees_of_freedom = na + nb - 2.0;
  }

  if (se2 == 0.0) {
    r.t_statistic = diff == 0.0 ? 0.0
                                : std::copysign(std::numeric_limits<double>::infinity(), diff);
  } else {
    r.t_statistic = diff / std::sqrt(se2);
  }
  r.p_value = t_two_sided_p(r.t_statistic, r.degrees_of_freedom);
  r.significant = r.p_value < alpha;
  return r;
}

inline TTestResult welch_t_test(std::span<const double> a, std::span<const double> b,
                                double alpha = 0.05) {
  return t_test(a, b, alpha, TTestVariant::Welch);
}

}  // namespace reqlens::stats
