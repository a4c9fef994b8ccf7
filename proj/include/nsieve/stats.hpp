#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nsieve {

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

// Kolmogorov distribution upper tail Q(lambda) = P(sup|bridge| > lambda).
double kolmogorov_q(double lambda);

struct KsResult {
  double d;        // statistic sup|F_n - F|
  double p_value;  // asymptotic, Stephens' small-sample correction
  std::size_t n;
};

// One-sample KS against a continuous CDF. Samples need not be sorted.
KsResult ks_one_sample(std::vector<double> samples,
                       const std::function<double(double)>& cdf);

// Two-sample KS; handles ties by comparing the ECDFs between tie blocks
// (conservative for discrete data).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double mean(std::span<const double> xs);
// Unbiased (n-1) sample variance / covariance.
double sample_variance(std::span<const double> xs);
double sample_covariance(std::span<const double> xs, std::span<const double> ys);
// Standard error of the sample mean.
double mean_standard_error(std::span<const double> xs);

// Least-squares slope of y against x.
double regression_slope(std::span<const double> x, std::span<const double> y);

// Runs fn(i) for i in [0, count) across `threads` worker threads. fn must be
// safe to call concurrently for distinct i (each replica owns its Rng).
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

unsigned resolve_thread_count(unsigned requested);

}  // namespace nsieve
