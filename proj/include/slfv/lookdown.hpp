#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slfv/environment.hpp"
#include "slfv/geometry.hpp"
#include "slfv/mutation.hpp"
#include "slfv/rng.hpp"
#include "slfv/test_function.hpp"

namespace slfv {

struct LookdownParticle {
    double level = 0.0;
    Point location;
    TypeIndex type = 0;
};

/// Initial condition rho(x, .): a distribution over types per grid cell
/// (a 1x1 grid is a spatially uniform kernel).
struct TypeKernel {
    int type_count = 1;
    std::array<int, 2> grid{1, 1};
    std::vector<std::vector<double>> cell_dist;

    static TypeKernel uniform(std::vector<double> pmf);
    static TypeKernel piecewise(std::array<int, 2> grid, int type_count,
                                std::vector<std::vector<double>> dists);
    /// Two types split by the mid-line of the first axis.
    static TypeKernel half_space();

    [[nodiscard]] const std::vector<double>& distribution_at(const Point& x,
                                                             const Domain& dom) const;
    TypeIndex sample_at(const Point& x, const Domain& dom, Rng& rng) const;
};

/// Particle system truncated at a level ceiling; particle count is Poisson
/// with mean truncation * Vol(domain) and never changes afterwards.
struct LookdownState {
    double truncation = 1.0;
    double time = 0.0;
    std::vector<LookdownParticle> particles;
};

LookdownState init_state(const Domain& dom, double truncation, const TypeKernel& kernel,
                         SeedKey seed);

/// Who looked down onto whom during one event.
struct LookdownEventRecord {
    int event_id = -1;
    double t = 0.0;
    std::vector<std::pair<int, int>> lookdowns; // (particle, parent)
};

/// Applies one reproduction event to the particle cloud (dispatches on the
/// model kind).  Coins use pre-event locations; relocations and type copies
/// commit atomically.
void apply_event(LookdownState& state, const Event& event, const EventModel& model,
                 const Domain& dom, SeedKey seed, LookdownEventRecord* record = nullptr);

struct EvolveOptions {
    /// Called after each applied event with the lookdown record of that
    /// event.  With mutation enabled, types not touched by the event may
    /// still be pending their lazy update.
    std::function<void(const LookdownState&, const Event&, const LookdownEventRecord&)> on_event;
};

struct EvolveResult {
    std::vector<LookdownEventRecord> records;
};

/// Runs the particle system through the events of env in (t0, t1], evolving
/// types by the mutation process between events.
EvolveResult evolve(LookdownState& state, const Environment& env, double t0, double t1,
                    const MutationModel& mutation, SeedKey seed,
                    const EvolveOptions& options = {});

/// <(M^n)^{⊗k}, F ⊗ G_g>; factorizes over the sample coordinates.
double empirical_integral(const LookdownState& state, const TestFunction& f);

/// Sub-state at a lower level cutoff.
LookdownState truncate_state(const LookdownState& state, double cutoff);

/// Distinct particles nearest to the given points; throws when none lies
/// within epsilon of some point.
std::vector<int> nearest_particles(const LookdownState& state, const std::vector<Point>& points,
                                   double epsilon, const Domain& dom);

/// Backward time of the first common ancestor of particles j1 and j2 read
/// off the recorded lookdown genealogy, if they merged by t0.
std::optional<double> first_merge_backward_time(const std::vector<LookdownEventRecord>& records,
                                                int j1, int j2, double t_sample);

/// CSV snapshot `level,x...,type`.
std::string state_to_csv(const LookdownState& state, const Domain& dom);

} // namespace slfv
