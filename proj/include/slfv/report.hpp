#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace slfv {

/// One verified statement inside an experiment: an estimate against an
/// oracle with an explicit decision rule.
struct CheckResult {
    std::string name;
    std::string kind;        // "z", "ks", "chi2", "bound", "exact", "monotone"
    double estimate = 0.0;
    double se = 0.0;
    double oracle = 0.0;
    double statistic = 0.0;  // z value, p-value, or slack depending on kind
    double threshold = 0.0;  // decision threshold the statistic was held against
    bool pass = false;
    std::string note;
};

/// Per-replicate values kept for external plotting.
struct RawSeries {
    std::string name;
    std::vector<double> values;
};

/// Experiment outcome.  The JSON form is a pure function of (config, seed);
/// wall-clock time appears only in the text rendering.
struct ExperimentReport {
    std::string experiment;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<CheckResult> checks;
    std::vector<RawSeries> raw;
    double runtime_seconds = 0.0;

    void add_parameter(const std::string& key, const std::string& value) {
        parameters.emplace_back(key, value);
    }
    void add_parameter(const std::string& key, double value);
    void add_parameter(const std::string& key, int value);

    [[nodiscard]] bool pass() const;
    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] std::string to_text() const;
    /// Long-format CSV `series,index,value` of the raw replicate values.
    [[nodiscard]] std::string raw_csv() const;
};

CheckResult make_z_check(const std::string& name, double estimate, double se, double oracle,
                         double z_limit = 3.0);
CheckResult make_pvalue_check(const std::string& name, const std::string& kind, double p,
                              double alpha);
CheckResult make_bound_check(const std::string& name, double value, double bound);
CheckResult make_exact_check(const std::string& name, double value, double target,
                             double tolerance);

} // namespace slfv
