#pragma once

#include <vector>

#include "slfv/environment.hpp"

namespace slfv {

/// A bridge: a non-decreasing map [0,1] -> [0,1] with 0 -> 0 and 1 -> 1,
/// made of a linear part of slope p0 plus jumps (l_i, p_i).  Jumps are kept
/// newest-applied first; p0 + sum p_i = 1.
struct Bridge {
    struct Jump {
        double label = 0.0;
        double mass = 0.0;
    };

    double slope = 1.0;
    std::vector<Jump> jumps;

    static Bridge identity() { return {}; }

    [[nodiscard]] double operator()(double w) const;
    [[nodiscard]] double total_mass() const;
};

/// b_{l,u}(w) = (1-u) w + u 1_{[l,1]}(w).
Bridge elementary_bridge(double label, double impact);

/// The diamond composition: the newer event shrinks the older bridge by its
/// slope and inserts an unscaled jump of its own.
Bridge compose(const Bridge& newer, const Bridge& older);

/// Fold of the elementary bridges of all labeled events covering x in
/// (s, t], oldest applied first.
Bridge build_bridge(const Environment& env, const Point& x, double s, double t);

struct BridgeInverse {
    bool hit_jump = false;
    double value = 0.0; // jump label, or the continuity point w
};

/// Pre-image of v: the label l_i when v falls inside jump i's mass interval
/// (ties at the endpoints resolve to the jump), else the unique continuity
/// point.
BridgeInverse invert(const Bridge& bridge, double v);

} // namespace slfv
