#pragma once

#include "epiinfer/types.hpp"

#include <functional>
#include <vector>

namespace epi {

double chi2_cdf(double x, double k);
// Inverse of the chi-square CDF by bracketed bisection on chi2_cdf.
double chi2_quantile(double level, double k);

double normal_cdf(double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
// One-sample Kolmogorov-Smirnov test against a continuous CDF.
KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf);
// Two-sample test (asymptotic p-value with the effective sample size).
KsResult ks_test(std::vector<double> x, std::vector<double> y);
// Asymptotic Kolmogorov survival function with Stephens' small-sample factor.
double kolmogorov_pvalue(double d, double n_eff);

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);   // unbiased
double median(std::vector<double> x);
double quantile(std::vector<double> x, double q);

double weighted_mean(const std::vector<double>& x, const std::vector<double>& w);
double weighted_variance(const std::vector<double>& x, const std::vector<double>& w);
// Lower weighted quantile: smallest x whose cumulative normalized weight >= q.
double weighted_quantile(const std::vector<double>& x, const std::vector<double>& w, double q);
// Maximizer of a weighted Gaussian KDE with Silverman bandwidth.
double weighted_kde_mode(const std::vector<double>& x, const std::vector<double>& w);

}  // namespace epi
