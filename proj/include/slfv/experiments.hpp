#pragma once

#include <functional>
#include <vector>

#include "slfv/ancestry.hpp"
#include "slfv/environment.hpp"
#include "slfv/lookdown.hpp"
#include "slfv/mutation.hpp"
#include "slfv/report.hpp"
#include "slfv/test_function.hpp"

namespace slfv {

/// Runs fn(0), ..., fn(count-1) on up to `workers` threads.  Callers write
/// into per-index slots and reduce sequentially afterwards, so results are
/// independent of the worker count.
void parallel_replicates(int count, int workers, const std::function<void(int)>& fn);

/// A finite weighted point measure on T x K (every atom carries the same
/// weight), the desk-scale stand-in for elements of the measure state space.
struct WeightedPointMeasure {
    struct Atom {
        Point x;
        TypeIndex type = 0;
    };
    std::vector<Atom> atoms;
    double weight = 1.0;

    static WeightedPointMeasure from_state(const LookdownState& state, double cutoff);
};

/// Separating-family distance sum_n 2^-n |<A,g_n> - <B,g_n>| over a fixed
/// enumeration of dyadic box x type indicators, truncated after basis_size
/// terms.
double measure_distance(const WeightedPointMeasure& a, const WeightedPointMeasure& b,
                        int basis_size, const Domain& dom, int type_count);

// ---------------------------------------------------------------------------

struct DualityConfig {
    Domain dom;
    EventModel model;
    MutationModel mutation = MutationModel::none(2);
    TypeKernel kernel = TypeKernel::half_space();
    std::vector<Point> sample_points;
    std::vector<std::vector<double>> type_weights; // g_j, one vector per sample point
    double horizon = 1.0;
    double truncation = 2000.0;
    double readout_epsilon = 0.05;
    /// Shrink the readout epsilon as sqrt(2000/truncation) so the readout
    /// bias falls with the particle density.
    bool refine_epsilon = false;
    int environments = 100;
    int replicates = 100; // per environment and arm
    bool annealed = false;
    int workers = 1;
};

/// Forward lookdown readout vs backward coalescent-plus-mutation estimate of
/// E[prod_j g_j(type at x_j)]; both arms consume the identical serialized
/// environment per replicate pair.
ExperimentReport duality_check(const DualityConfig& config, SeedKey seed);

struct CdiConfig {
    Domain dom;
    EventModel model;
    double horizon = 1.0;
    std::vector<double> intensities{50.0, 100.0, 200.0, 400.0};
    int replicates = 100;
    int workers = 1;
};

/// Samples Poisson(c Vol(B(0,1))) lineages in the unit ball, runs the
/// annealed coalescent, and checks the never-affected fraction against
/// exp(-J t) plus monotone growth of the ancestor count in c.
ExperimentReport cdi_experiment(const CdiConfig& config, SeedKey seed);

struct VariationConfig {
    Domain dom;
    EventModel model;
    TestFunction f; // k = 1
    TypeKernel kernel = TypeKernel::uniform({0.5, 0.5});
    double truncation = 1000.0;
    double horizon = 1.0;
    int replicates = 100;
    int workers = 1;
};

/// Accumulates the total variation of <M^n, f> over one environment and
/// asserts it against 2 ||f||_inf * Upsilon_T in every replicate.
ExperimentReport variation_bound_check(const VariationConfig& config, SeedKey seed);

struct LookdownVsCoalescentConfig {
    Domain dom;
    EventModel model;
    std::vector<Point> sample_points; // k in {2, 3}
    double horizon = 1.0;
    double truncation = 20.0;
    double readout_epsilon = 0.5;
    int replicates = 10000;
    double alpha = 0.01;
    int workers = 1;
};

/// Compares first-merge statistics read off the lookdown genealogy with the
/// quenched coalescent under the identical environment.
ExperimentReport lookdown_vs_coalescent_check(const LookdownVsCoalescentConfig& config,
                                              SeedKey seed);

struct ConvergenceConfig {
    Domain dom;
    EventModel model;
    TypeKernel kernel = TypeKernel::half_space();
    std::vector<double> truncations{100.0, 1000.0, 10000.0};
    double horizon = 1.0;
    int replicates = 20;
    int basis_size = 64;
    int workers = 1;
};

/// measure_distance(M^n_t, M^{2n}_t) trend over a truncation ladder under a
/// shared environment.
ExperimentReport convergence_diagnostic(const ConvergenceConfig& config, SeedKey seed);

} // namespace slfv
