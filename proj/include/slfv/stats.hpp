#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace slfv::stats {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

inline double z_score(double estimate, double target, double se) {
    return se > 0.0 ? (estimate - target) / se : (estimate == target ? 0.0 : 1e300);
}

double normal_cdf(double x);

/// Regularized lower incomplete gamma P(a,x); Q(a,x) = 1 - P(a,x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

/// Upper-tail p-value of a chi-square statistic.
double chi_square_pvalue(double stat, double df);

/// Pearson statistic of observed counts against expected values.
double pearson_stat(std::span<const double> observed, std::span<const double> expected);

/// Chi-square test of equal cell probabilities.  Returns the p-value.
double uniformity_pvalue(std::span<const double> counts);

/// Two-sided index-of-dispersion test of count data against a Poisson law.
double poisson_dispersion_pvalue(std::span<const double> counts);

/// Chi-square goodness of fit of iid counts against Poisson(mean), pooling
/// bins until every expected cell count is >= 5.
double poisson_fit_pvalue(std::span<const double> counts, double mean);

/// Chi-square homogeneity test of two count samples (equality in
/// distribution); bins are pooled for a minimum expected count of 5.
double count_homogeneity_pvalue(std::span<const double> a, std::span<const double> b);

/// One-sample Kolmogorov-Smirnov against a continuous CDF.
double ks_one_sample_pvalue(std::vector<double> data, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov (asymptotic p-value).
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

} // namespace slfv::stats
