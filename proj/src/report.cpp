#include "slfv/report.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "slfv/stats.hpp"

namespace slfv {

namespace {
std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
} // namespace

void ExperimentReport::add_parameter(const std::string& key, double value) {
    parameters.emplace_back(key, format17(value));
}

void ExperimentReport::add_parameter(const std::string& key, int value) {
    parameters.emplace_back(key, std::to_string(value));
}

bool ExperimentReport::pass() const {
    for (const CheckResult& c : checks)
        if (!c.pass) return false;
    return true;
}

std::string ExperimentReport::to_json() const {
    nlohmann::ordered_json j;
    j["experiment"] = experiment;
    j["seed"] = seed;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : parameters) params[k] = v;
    j["parameters"] = params;
    nlohmann::ordered_json checks_json = nlohmann::ordered_json::array();
    for (const CheckResult& c : checks) {
        nlohmann::ordered_json cj;
        cj["name"] = c.name;
        cj["kind"] = c.kind;
        cj["estimate"] = format17(c.estimate);
        cj["se"] = format17(c.se);
        cj["oracle"] = format17(c.oracle);
        cj["statistic"] = format17(c.statistic);
        cj["threshold"] = format17(c.threshold);
        cj["pass"] = c.pass;
        if (!c.note.empty()) cj["note"] = c.note;
        checks_json.push_back(cj);
    }
    j["checks"] = checks_json;
    j["pass"] = pass();
    return j.dump(2) + "\n";
}

std::string ExperimentReport::to_text() const {
    std::string out = "experiment: " + experiment + "\nseed: " + std::to_string(seed) + "\n";
    for (const auto& [k, v] : parameters) out += "  " + k + " = " + v + "\n";
    char buf[256];
    for (const CheckResult& c : checks) {
        std::snprintf(buf, sizeof buf,
                      "  [%s] %-44s est=%.6g se=%.3g oracle=%.6g %s=%.4g (limit %.4g)%s%s\n",
                      c.pass ? "PASS" : "FAIL", c.name.c_str(), c.estimate, c.se, c.oracle,
                      c.kind.c_str(), c.statistic, c.threshold, c.note.empty() ? "" : " ",
                      c.note.c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "result: %s (%.2f s)\n", pass() ? "PASS" : "FAIL",
                  runtime_seconds);
    out += buf;
    return out;
}

std::string ExperimentReport::raw_csv() const {
    std::string out = "series,index,value\n";
    for (const RawSeries& series : raw) {
        for (std::size_t i = 0; i < series.values.size(); ++i) {
            out += series.name + ',' + std::to_string(i) + ',' + format17(series.values[i]) +
                   '\n';
        }
    }
    return out;
}

CheckResult make_z_check(const std::string& name, double estimate, double se, double oracle,
                         double z_limit) {
    CheckResult c;
    c.name = name;
    c.kind = "z";
    c.estimate = estimate;
    c.se = se;
    c.oracle = oracle;
    c.statistic = stats::z_score(estimate, oracle, se);
    c.threshold = z_limit;
    c.pass = std::abs(c.statistic) <= z_limit;
    return c;
}

CheckResult make_pvalue_check(const std::string& name, const std::string& kind, double p,
                              double alpha) {
    CheckResult c;
    c.name = name;
    c.kind = kind;
    c.statistic = p;
    c.threshold = alpha;
    c.pass = p >= alpha;
    return c;
}

CheckResult make_bound_check(const std::string& name, double value, double bound) {
    CheckResult c;
    c.name = name;
    c.kind = "bound";
    c.estimate = value;
    c.oracle = bound;
    c.statistic = bound - value;
    c.threshold = 0.0;
    c.pass = value <= bound;
    return c;
}

CheckResult make_exact_check(const std::string& name, double value, double target,
                             double tolerance) {
    CheckResult c;
    c.name = name;
    c.kind = "exact";
    c.estimate = value;
    c.oracle = target;
    c.statistic = std::abs(value - target);
    c.threshold = tolerance;
    c.pass = c.statistic <= tolerance;
    return c;
}

} // namespace slfv
