#include "slfv/bridge.hpp"

#include <algorithm>
#include <stdexcept>

namespace slfv {

double Bridge::operator()(double w) const {
    double v = slope * w;
    for (const Jump& j : jumps)
        if (w >= j.label) v += j.mass;
    return v;
}

double Bridge::total_mass() const {
    double m = slope;
    for (const Jump& j : jumps) m += j.mass;
    return m;
}

Bridge elementary_bridge(double label, double impact) {
    if (label < 0.0 || label > 1.0)
        throw std::invalid_argument("elementary_bridge: label must be in [0,1]");
    if (!(impact > 0.0) || impact > 1.0)
        throw std::invalid_argument("elementary_bridge: impact must be in (0,1]");
    Bridge b;
    b.slope = 1.0 - impact;
    b.jumps.push_back({label, impact});
    return b;
}

Bridge compose(const Bridge& newer, const Bridge& older) {
    Bridge out;
    out.slope = newer.slope * older.slope;
    out.jumps.reserve(newer.jumps.size() + older.jumps.size());
    out.jumps = newer.jumps;
    for (const Bridge::Jump& j : older.jumps) out.jumps.push_back({j.label, newer.slope * j.mass});
    return out;
}

Bridge build_bridge(const Environment& env, const Point& x, double s, double t) {
    if (!env.marked()) throw std::invalid_argument("build_bridge: environment has no labels");
    Bridge b = Bridge::identity();
    for (int id : env.events_covering(x, s, t)) {
        const Event& e = env.event(id);
        b = compose(elementary_bridge(e.label, e.u), b);
    }
    return b;
}

BridgeInverse invert(const Bridge& bridge, double v) {
    // Scan jump intervals in label order; the continuous part fills the gaps.
    std::vector<Bridge::Jump> sorted = bridge.jumps;
    std::sort(sorted.begin(), sorted.end(),
              [](const Bridge::Jump& a, const Bridge::Jump& b) { return a.label < b.label; });
    double mass_below = 0.0;
    for (const Bridge::Jump& j : sorted) {
        const double lo = bridge.slope * j.label + mass_below;
        const double hi = lo + j.mass;
        if (v < lo) break;
        if (v <= hi) return {true, j.label};
        mass_below += j.mass;
    }
    if (bridge.slope > 0.0) return {false, std::clamp((v - mass_below) / bridge.slope, 0.0, 1.0)};
    // Degenerate slope: v fell in a measure-zero gap; snap to the nearest jump.
    double best_label = sorted.empty() ? 0.0 : sorted.front().label;
    double best_gap = 1e300;
    mass_below = 0.0;
    for (const Bridge::Jump& j : sorted) {
        const double gap = std::abs(v - (mass_below + 0.5 * j.mass));
        if (gap < best_gap) {
            best_gap = gap;
            best_label = j.label;
        }
        mass_below += j.mass;
    }
    return {true, best_label};
}

} // namespace slfv
