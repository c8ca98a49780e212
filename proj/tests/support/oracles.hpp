#pragma once

// Slow, direct reference implementations used only by the tests. None of
// them calls into the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

// TF-IDF straight from the formula: raw counts times ln((1+n)/(1+df)) + 1,
// then divided by the Euclidean norm. Terms keyed by string.
inline std::map<std::string, double> tfidf(const std::vector<std::vector<std::string>>& train_docs,
                                           const std::vector<std::string>& doc) {
  const double n = static_cast<double>(train_docs.size());
  std::map<std::string, int> df;
  for (const auto& d : train_docs) {
    std::set<std::string> seen(d.begin(), d.end());
    for (const auto& t : seen) df[t] += 1;
  }
  std::map<std::string, double> raw;
  for (const auto& t : doc) {
    if (df.count(t)) raw[t] += 1.0;
  }
  long double norm2 = 0.0L;
  for (auto& [t, v] : raw) {
    v *= std::log((1.0 + n) / (1.0 + df[t])) + 1.0;
    norm2 += static_cast<long double>(v) * v;
  }
  const double norm = static_cast<double>(std::sqrt(norm2));
  if (norm > 0) {
    for (auto& [t, v] : raw) v /= norm;
  }
  return raw;
}

// Weighted ridge with an unpenalised intercept, solved by Gaussian
// elimination with partial pivoting in long double.
//   minimise sum_i w_i (y_i - b - x_i . theta)^2 + lambda |theta|^2
// Returns {b, theta...}.
inline std::vector<double> ridge(const std::vector<std::vector<double>>& x,
                                 const std::vector<double>& y, const std::vector<double>& w,
                                 double lambda) {
  const std::size_t p = x.empty() ? 0 : x[0].size();
  const std::size_t n = p + 1;
  std::vector<std::vector<long double>> a(n, std::vector<long double>(n + 1, 0.0L));
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<long double> row(n);
    row[0] = 1.0L;
    for (std::size_t j = 0; j < p; ++j) row[j + 1] = x[i][j];
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) a[r][c] += w[i] * row[r] * row[c];
      a[r][n] += w[i] * row[r] * y[i];
    }
  }
  for (std::size_t j = 1; j < n; ++j) a[j][j] += lambda;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    if (std::fabs(a[piv][col]) < 1e-300L) throw std::runtime_error("oracle: singular");
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(a[i][n] / a[i][i]);
  return out;
}

// Best single split of 1-D labelled data (label true = NFR), scanning every
// midpoint between consecutive distinct values. Ties keep the lowest threshold.
struct SplitResult {
  double threshold;
  double impurity;
};

inline double gini_counts(double a, double b) {
  const double t = a + b;
  if (t == 0) return 0.0;
  return 1.0 - (a / t) * (a / t) - (b / t) * (b / t);
}

inline std::optional<SplitResult> best_split(const std::vector<double>& xs,
                                             const std::vector<bool>& nfr) {
  std::vector<double> distinct(xs.begin(), xs.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::optional<SplitResult> best;
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    const double thr = (distinct[i] + distinct[i + 1]) / 2.0;
    double lf = 0, ln = 0, rf = 0, rn = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (xs[k] <= thr) {
        (nfr[k] ? ln : lf) += 1;
      } else {
        (nfr[k] ? rn : rf) += 1;
      }
    }
    const double n = static_cast<double>(xs.size());
    const double imp = ((lf + ln) * gini_counts(lf, ln) + (rf + rn) * gini_counts(rf, rn)) / n;
    if (!best || imp < best->impurity - 1e-15) best = SplitResult{thr, imp};
  }
  return best;
}

// Student t density integrated with adaptive Simpson. Independent of any
// incomplete-beta machinery.
inline double t_density(double x, double df) {
  const double lc = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                    0.5 * std::log(df * M_PI);
  return std::exp(lc - (df + 1.0) / 2.0 * std::log1p(x * x / df));
}

namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double whole, double eps, int depth) {
  const double m = (a + b) / 2, lm = (a + m) / 2, rm = (m + b) / 2;
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) <= 15 * eps) {
    return left + right + (left + right - whole) / 15;
  }
  return simpson(f, a, m, fa, flm, fm, left, eps / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, eps / 2, depth - 1);
}
}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double eps = 1e-13) {
  const double fa = f(a), fb = f(b), fm = f((a + b) / 2);
  return detail::simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), eps, 60);
}

// Two-sided p-value P(|T| >= |t|). The tail is integrated after the
// substitution x = |t| / u, which maps [|t|, inf) onto (0, 1].
inline double t_two_sided_p(double t, double df) {
  const double at = std::fabs(t);
  if (at == 0) return 1.0;
  if (at < 1.0) {
    return 1.0 - 2.0 * integrate([&](double x) { return t_density(x, df); }, 0.0, at);
  }
  auto g = [&](double u) {
    if (u <= 0) return 0.0;
    const double x = at / u;
    return t_density(x, df) * at / (u * u);
  };
  return 2.0 * integrate(g, 0.0, 1.0);
}

inline double t_cdf(double t, double df) {
  const double tail = t_two_sided_p(t, df) / 2.0;
  return t >= 0 ? 1.0 - tail : tail;
}

struct WelchResult {
  double t;
  double df;
  double p;
};

inline WelchResult welch(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
  };
  auto var = [&](const std::vector<double>& v) {
    const double m = mean(v);
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return static_cast<double>(s / (v.size() - 1));
  };
  const double va = var(a) / a.size(), vb = var(b) / b.size();
  const double t = (mean(a) - mean(b)) / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) /
                    (va * va / (a.size() - 1) + vb * vb / (b.size() - 1));
  return {t, df, t_two_sided_p(t, df)};
}

}  // namespace oracle
