#include "slfv/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace slfv::stats {

MeanSe mean_se(std::span<const double> xs) {
    MeanSe out;
    out.n = xs.size();
    if (out.n == 0) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(out.n);
    if (out.n < 2) return out;
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - out.mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(out.n - 1);
    out.se = std::sqrt(var / static_cast<double>(out.n));
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

namespace {

double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_continued_fraction(double a, double x) {
    // Lentz's algorithm.
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double regularized_gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("regularized_gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("regularized_gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_continued_fraction(a, x);
}

double chi_square_pvalue(double stat, double df) {
    if (stat <= 0.0) return 1.0;
    return regularized_gamma_q(0.5 * df, 0.5 * stat);
}

double pearson_stat(std::span<const double> observed, std::span<const double> expected) {
    if (observed.size() != expected.size())
        throw std::invalid_argument("pearson_stat: size mismatch");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0.0) throw std::invalid_argument("pearson_stat: nonpositive expected");
        const double d = observed[i] - expected[i];
        stat += d * d / expected[i];
    }
    return stat;
}

double uniformity_pvalue(std::span<const double> counts) {
    const std::size_t m = counts.size();
    if (m < 2) return 1.0;
    double total = 0.0;
    for (double c : counts) total += c;
    if (total <= 0.0) return 1.0;
    std::vector<double> expected(m, total / static_cast<double>(m));
    const double stat = pearson_stat(counts, expected);
    return chi_square_pvalue(stat, static_cast<double>(m - 1));
}

double poisson_dispersion_pvalue(std::span<const double> counts) {
    const std::size_t m = counts.size();
    if (m < 2) return 1.0;
    const MeanSe ms = mean_se(counts);
    if (ms.mean <= 0.0) return 1.0;
    double ss = 0.0;
    for (double c : counts) {
        const double d = c - ms.mean;
        ss += d * d;
    }
    const double stat = ss / ms.mean; // ~ chi2 with m-1 df under Poisson
    const double df = static_cast<double>(m - 1);
    const double upper = chi_square_pvalue(stat, df);
    const double lower = 1.0 - upper;
    return 2.0 * std::min(upper, lower);
}

double poisson_fit_pvalue(std::span<const double> counts, double mean) {
    const std::size_t n = counts.size();
    if (n == 0 || mean <= 0.0) return 1.0;
    long max_count = 0;
    for (double c : counts) max_count = std::max(max_count, static_cast<long>(c));

    // Per-value Poisson probabilities, then pool from both tails until each
    // expected cell has mass >= 5 observations.
    std::vector<double> pmf(static_cast<std::size_t>(max_count) + 1);
    double p = std::exp(-mean);
    double tail = 1.0;
    for (long k = 0; k <= max_count; ++k) {
        pmf[static_cast<std::size_t>(k)] = p;
        tail -= p;
        p *= mean / static_cast<double>(k + 1);
    }
    std::vector<double> observed;
    std::vector<double> expected;
    double obs_acc = 0.0, exp_acc = 0.0;
    const double n_d = static_cast<double>(n);
    std::vector<double> hist(pmf.size() + 1, 0.0);
    for (double c : counts) hist[static_cast<std::size_t>(c)] += 1.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        obs_acc += hist[k];
        exp_acc += pmf[k] * n_d;
        if (exp_acc >= 5.0) {
            observed.push_back(obs_acc);
            expected.push_back(exp_acc);
            obs_acc = exp_acc = 0.0;
        }
    }
    // Upper tail (counts beyond max observed plus any unpooled remainder).
    obs_acc += 0.0;
    exp_acc += std::max(tail, 0.0) * n_d;
    if (!expected.empty()) {
        observed.back() += obs_acc;
        expected.back() += exp_acc;
    }
    if (expected.size() < 2) return 1.0;
    const double stat = pearson_stat(observed, expected);
    return chi_square_pvalue(stat, static_cast<double>(expected.size() - 1));
}

double count_homogeneity_pvalue(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return 1.0;
    std::map<long, std::array<double, 2>> cells;
    for (double x : a) cells[static_cast<long>(x)][0] += 1.0;
    for (double x : b) cells[static_cast<long>(x)][1] += 1.0;

    // Pool adjacent cells so each pooled expected count is >= 5.
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double total = na + nb;
    std::vector<std::array<double, 2>> pooled;
    std::array<double, 2> acc{0.0, 0.0};
    for (const auto& [value, pair] : cells) {
        acc[0] += pair[0];
        acc[1] += pair[1];
        const double row = acc[0] + acc[1];
        if (row * na / total >= 5.0 && row * nb / total >= 5.0) {
            pooled.push_back(acc);
            acc = {0.0, 0.0};
        }
    }
    if (acc[0] + acc[1] > 0.0) {
        if (pooled.empty()) return 1.0;
        pooled.back()[0] += acc[0];
        pooled.back()[1] += acc[1];
    }
    if (pooled.size() < 2) return 1.0;
    double stat = 0.0;
    for (const auto& cell : pooled) {
        const double row = cell[0] + cell[1];
        const double ea = row * na / total;
        const double eb = row * nb / total;
        stat += (cell[0] - ea) * (cell[0] - ea) / ea + (cell[1] - eb) * (cell[1] - eb) / eb;
    }
    return chi_square_pvalue(stat, static_cast<double>(pooled.size() - 1));
}

namespace {

double ks_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 101; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? term : -term);
        if (term < 1e-14) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_pvalue_from_distance(double d, double n_eff) {
    const double sn = std::sqrt(n_eff);
    return ks_q((sn + 0.12 + 0.11 / sn) * d);
}

} // namespace

double ks_one_sample_pvalue(std::vector<double> data, const std::function<double(double)>& cdf) {
    if (data.empty()) return 1.0;
    std::sort(data.begin(), data.end());
    const double n = static_cast<double>(data.size());
    double d = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double f = cdf(data[i]);
        const double hi = (static_cast<double>(i) + 1.0) / n - f;
        const double lo = f - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    return ks_pvalue_from_distance(d, n);
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) return 1.0;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return ks_pvalue_from_distance(d, na * nb / (na + nb));
}

} // namespace slfv::stats
