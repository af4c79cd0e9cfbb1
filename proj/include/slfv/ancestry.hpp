#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slfv/environment.hpp"
#include "slfv/geometry.hpp"
#include "slfv/rng.hpp"

namespace slfv {

/// One ancestor: the sample labels it carries and its current location.
struct AncestorBlock {
    std::vector<int> labels; // sorted, 0-based sample indices
    Point location;
};

/// A state change of the coalescent: the blocks listed in `merged` fused
/// into one block at `new_location`, h units of time before the sample.
struct MergeRecord {
    double h = 0.0;
    int event_id = -1; // -1 when the event was generated on the fly
    std::vector<std::vector<int>> merged;
    Point new_location;
    int blocks_after = 0;
    Point event_centre;
    double event_radius = 0.0;
};

/// Marked partition of the sample plus the full record of its changes.
/// Blocks are kept sorted by smallest label.
struct MarkedPartition {
    std::vector<AncestorBlock> blocks;
    std::vector<MergeRecord> history;

    static MarkedPartition singletons(const std::vector<Point>& locations);

    [[nodiscard]] int block_count() const { return static_cast<int>(blocks.size()); }
    [[nodiscard]] int sample_size() const;
    void sort_blocks();
};

/// JSON-lines trajectory export, one record per state change.
std::string trajectory_to_jsonl(const MarkedPartition& partition);

struct CoalescentOptions {
    /// Optional relabeling used when deriving per-block coin streams; lets a
    /// caller check exchangeability by replaying under a permutation.
    const std::vector<int>* coin_label_map = nullptr;
};

/// Replays the events of env backward from t_sample over `horizon` units of
/// time.  Throws if the environment window does not cover the horizon.
MarkedPartition run_quenched(const MarkedPartition& start, const Environment& env,
                             double t_sample, double horizon, SeedKey seed,
                             const CoalescentOptions& options = {});

/// Same dynamics with events generated on the fly by exact thinning of the
/// annealed event law around the current blocks.
MarkedPartition run_annealed(const MarkedPartition& start, const EventModel& model,
                             const Domain& dom, double horizon, SeedKey seed);

/// Genealogy of the parental individuals of a marked environment:
/// parent_of[i] is the event where the parent of event i was born (-1 when
/// no earlier covering event with a successful coin exists in the window).
struct ParentalSkeleton {
    std::vector<int> parent_of;
    SeedKey coin_seed;
};

ParentalSkeleton build_parental_skeleton(const Environment& env, SeedKey seed);

/// Piecewise-constant backward location path of one sampled individual.
struct AncestralPath {
    struct JumpPoint {
        double h = 0.0;
        Point location;
        int event_id = -1;
    };
    Point start;
    std::vector<JumpPoint> jumps; // ascending h

    [[nodiscard]] Point at(double h) const;
};

AncestralPath trace_ancestral_line(const Point& x, double t_sample, const Environment& env,
                                   const ParentalSkeleton& skeleton, SeedKey seed);

} // namespace slfv
