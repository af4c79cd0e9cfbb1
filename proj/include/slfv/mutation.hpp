#pragma once

#include <vector>

#include "slfv/rng.hpp"

namespace slfv {

using TypeIndex = int;

/// Finite-state mutation process given by a rate matrix Q.  Sampling uses
/// uniformization at rate max|Q_ii|, so paths are exact draws of the chain
/// with no time-discretization error.
class MutationModel {
  public:
    /// The frozen process: types never change.
    static MutationModel none(int type_count);
    static MutationModel from_generator(int type_count, std::vector<double> q_row_major);
    /// Jumps at `rate` to an independent draw from `target`.
    static MutationModel parent_independent(double rate, std::vector<double> target);
    /// Two types flipping into each other at `rate` each way.
    static MutationModel two_type_flip(double rate);

    [[nodiscard]] int type_count() const { return type_count_; }
    [[nodiscard]] bool enabled() const { return uniformization_rate_ > 0.0; }
    [[nodiscard]] double uniformization_rate() const { return uniformization_rate_; }
    [[nodiscard]] const std::vector<double>& generator() const { return q_; }

    /// Exact q x q transition matrix over duration dt (row-major), computed
    /// by uniformization series; the analytic oracle for tests.
    [[nodiscard]] std::vector<double> transition_matrix(double dt) const;

    TypeIndex evolve(TypeIndex type, double dt, Rng& rng) const;

  private:
    int type_count_ = 1;
    std::vector<double> q_;      // generator, row-major
    std::vector<double> jump_;   // uniformized jump kernel, row-major
    double uniformization_rate_ = 0.0;
};

TypeIndex evolve_type(TypeIndex type, double dt, const MutationModel& model, SeedKey seed);

/// Rooted tree with branch durations; node i hangs below nodes[i].parent
/// (-1 for the root) at distance nodes[i].branch.  Parents precede children.
struct MutationTree {
    struct Node {
        int parent = -1;
        double branch = 0.0;
    };
    std::vector<Node> nodes;

    void validate() const;
    [[nodiscard]] std::vector<int> leaves() const;
};

/// Evolves types from the root along every branch, independently across
/// subtrees; returns the leaf types in leaf order.
std::vector<TypeIndex> run_along_tree(const MutationTree& tree, TypeIndex root_type,
                                      const MutationModel& model, SeedKey seed);

} // namespace slfv
