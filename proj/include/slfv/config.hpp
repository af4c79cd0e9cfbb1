#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "slfv/event_model.hpp"
#include "slfv/geometry.hpp"
#include "slfv/lookdown.hpp"
#include "slfv/mutation.hpp"
#include "slfv/test_function.hpp"

namespace slfv {

/// Flat key-value run configuration.  Every key read is tracked so that
/// unknown keys can be rejected after a command has consumed its inputs.
class RunConfig {
  public:
    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text);

    [[nodiscard]] bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;

    /// Comma-separated doubles.
    std::vector<double> get_doubles(const std::string& key) const;
    /// Points "x:y;x:y" (or "x;x" in one dimension).
    std::vector<Point> get_points(const std::string& key) const;
    /// Semicolon-separated comma-vectors.
    std::vector<std::vector<double>> get_vectors(const std::string& key) const;

    /// Throws with a diagnostic when any key was never read.
    void reject_unknown() const;

  private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

Domain domain_from_config(const RunConfig& config);
EventModel model_from_config(const RunConfig& config);
MutationModel mutation_from_config(const RunConfig& config);
TypeKernel kernel_from_config(const RunConfig& config);
TestFunction test_function_from_config(const RunConfig& config, int type_count);

} // namespace slfv
