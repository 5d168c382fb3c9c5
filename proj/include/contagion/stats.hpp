#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "contagion/distributions.hpp"

namespace contagion {

// Significance estimates over randomization ensembles, and chi-squared
// goodness-of-fit diagnostics for the ensemble count distributions.

struct NullTestResult {
  std::string cell;
  std::int64_t empirical_count = 0;
  double p_hat = 1.0;   // fraction of randomized counts >= empirical (ties count)
  double std_err = 0.0;  // sqrt(p_hat * (1 - p_hat) / n_r)
  int n_r = 0;
};

// Plain proportion by default; add_one_smoothing gives (b + 1) / (n_r + 1).
inline NullTestResult estimate_p_hat(std::int64_t empirical,
                                     std::span<const std::int64_t> randomized,
                                     bool add_one_smoothing = false) {
  if (randomized.empty()) throw std::invalid_argument("estimate_p_hat: empty ensemble");
  NullTestResult r;
  r.empirical_count = empirical;
  r.n_r = static_cast<int>(randomized.size());
  std::int64_t at_least = 0;
  for (const std::int64_t count : randomized) {
    if (count >= empirical) ++at_least;
  }
  if (add_one_smoothing) {
    r.p_hat = static_cast<double>(at_least + 1) / static_cast<double>(r.n_r + 1);
  } else {
    r.p_hat = static_cast<double>(at_least) / static_cast<double>(r.n_r);
  }
  r.std_err = std::sqrt(r.p_hat * (1.0 - r.p_hat) / static_cast<double>(r.n_r));
  return r;
}

inline bool is_significant(const NullTestResult& r, double alpha = 0.05) {
  return r.p_hat < alpha;
}

inline double bonferroni_threshold(double alpha, int m) {
  if (m < 1) throw std::invalid_argument("bonferroni_threshold: m >= 1 required");
  return alpha / static_cast<double>(m);
}

enum class GofFamily { normal, poisson };

inline const char* to_string(GofFamily f) {
  return f == GofFamily::normal ? "normal" : "poisson";
}

struct GofResult {
  GofFamily family = GofFamily::normal;
  double statistic = 0.0;
  double p_value = 1.0;
  int bins = 0;
};

// Pearson chi-squared test of the ensemble counts against a Normal
// (moment-fitted mean and sd) or Poisson (sample-mean rate) reference.
// Integer-valued counts are binned on the integer grid with open tails and
// adjacent bins merged until every expected count is >= 5;
// df = bins - 1 - fitted parameters.
inline GofResult gof_chi_squared(std::span<const std::int64_t> values, GofFamily family) {
  if (values.size() < 2) throw std::invalid_argument("gof_chi_squared: degenerate distribution");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const std::int64_t lo = *lo_it;
  const std::int64_t hi = *hi_it;
  if (lo == hi) throw std::invalid_argument("gof_chi_squared: degenerate distribution");

  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (const std::int64_t v : values) mean += static_cast<double>(v);
  mean /= n;

  int params = 1;
  double sd = 0.0;
  if (family == GofFamily::normal) {
    double ss = 0.0;
    for (const std::int64_t v : values) {
      const double d = static_cast<double>(v) - mean;
      ss += d * d;
    }
    sd = std::sqrt(ss / (n - 1.0));
    params = 2;
  } else if (mean <= 0.0) {
    throw std::invalid_argument("gof_chi_squared: poisson requires a positive mean");
  }

  // Expected mass per integer cell; first and last cells absorb the tails.
  const auto cell_expected = [&](std::int64_t v) {
    double p;
    if (family == GofFamily::normal) {
      const double upper = normal_cdf((static_cast<double>(v) + 0.5 - mean) / sd);
      const double lower = normal_cdf((static_cast<double>(v) - 0.5 - mean) / sd);
      p = upper - lower;
      if (v == lo) p = upper;
      if (v == hi) p = 1.0 - lower;
    } else {
      p = poisson_pmf(v, mean);
      if (v == lo) p = poisson_cdf(v, mean);
      if (v == hi) p = 1.0 - poisson_cdf(v - 1, mean);
    }
    return n * std::max(p, 0.0);
  };

  std::vector<double> observed_per_value(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (const std::int64_t v : values) observed_per_value[static_cast<std::size_t>(v - lo)] += 1.0;

  std::vector<double> obs_bins;
  std::vector<double> exp_bins;
  double acc_obs = 0.0;
  double acc_exp = 0.0;
  for (std::int64_t v = lo; v <= hi; ++v) {
    acc_obs += observed_per_value[static_cast<std::size_t>(v - lo)];
    acc_exp += cell_expected(v);
    if (acc_exp >= 5.0) {
      obs_bins.push_back(acc_obs);
      exp_bins.push_back(acc_exp);
      acc_obs = 0.0;
      acc_exp = 0.0;
    }
  }
  if (acc_exp > 0.0) {
    if (exp_bins.empty()) {
      obs_bins.push_back(acc_obs);
      exp_bins.push_back(acc_exp);
    } else {
      obs_bins.back() += acc_obs;
      exp_bins.back() += acc_exp;
    }
  }

  const int df = static_cast<int>(obs_bins.size()) - 1 - params;
  if (df < 1) throw std::invalid_argument("gof_chi_squared: degenerate distribution");

  double stat = 0.0;
  for (std::size_t i = 0; i < obs_bins.size(); ++i) {
    const double d = obs_bins[i] - exp_bins[i];
    stat += d * d / exp_bins[i];
  }

  GofResult r;
  r.family = family;
  r.statistic = stat;
  r.p_value = chi_squared_tail(stat, static_cast<double>(df));
  r.bins = static_cast<int>(obs_bins.size());
  return r;
}

}  // namespace contagion
