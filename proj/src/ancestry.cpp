#include "slfv/ancestry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace slfv {

namespace {

Point wrapped_gaussian(const Point& centre, double sigma, const Domain& dom, Rng& rng) {
    Point p = centre;
    for (int i = 0; i < dom.dimension; ++i) p[i] += sigma * rng.normal();
    if (dom.kind == DomainKind::torus) return dom.wrap(p);
    while (!dom.contains(p)) {
        p = centre;
        for (int i = 0; i < dom.dimension; ++i) p[i] += sigma * rng.normal();
    }
    return p;
}

struct BackwardEvent {
    Point z;
    double r = 0.0; // coverage radius
    double u = 0.0;
    int n_parents = 1;
    int event_id = -1;
    double h = 0.0;
    bool gaussian = false;
};

// Per-block participation probability.
double coin_probability(const BackwardEvent& e, double dist, const EventModel& model) {
    return e.gaussian ? model.gaussian_impact_at(dist) : e.u;
}

// Applies one backward event: `affected` lists block indices, `slots` the
// parent slot each affected block drew.  Blocks sharing a slot fuse.
// Returns true when the state changed.
bool merge_affected(std::vector<AncestorBlock>& blocks, std::vector<MergeRecord>& history,
                    const std::vector<int>& affected, const std::vector<int>& slots,
                    const BackwardEvent& e,
                    const std::function<Point(int slot)>& location_for_slot) {
    if (affected.empty()) return false;
    std::vector<AncestorBlock> next;
    next.reserve(blocks.size());
    std::vector<bool> is_affected(blocks.size(), false);
    for (int idx : affected) is_affected[static_cast<std::size_t>(idx)] = true;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (!is_affected[i]) next.push_back(std::move(blocks[i]));

    // One merged block per occupied parent slot.
    for (int slot = 0; slot < e.n_parents; ++slot) {
        std::vector<std::vector<int>> merged_sets;
        AncestorBlock fused;
        for (std::size_t a = 0; a < affected.size(); ++a) {
            if (slots[a] != slot) continue;
            AncestorBlock& b = blocks[static_cast<std::size_t>(affected[a])];
            merged_sets.push_back(b.labels);
            fused.labels.insert(fused.labels.end(), b.labels.begin(), b.labels.end());
        }
        if (fused.labels.empty()) continue;
        std::sort(fused.labels.begin(), fused.labels.end());
        fused.location = location_for_slot(slot);
        next.push_back(std::move(fused));

        MergeRecord rec;
        rec.h = e.h;
        rec.event_id = e.event_id;
        rec.merged = std::move(merged_sets);
        rec.new_location = next.back().location;
        rec.event_centre = e.z;
        rec.event_radius = e.r;
        history.push_back(std::move(rec));
    }
    blocks = std::move(next);
    std::sort(blocks.begin(), blocks.end(), [](const AncestorBlock& a, const AncestorBlock& b) {
        return a.labels.front() < b.labels.front();
    });
    const int after = static_cast<int>(blocks.size());
    for (auto it = history.rbegin(); it != history.rend() && it->h == e.h; ++it)
        it->blocks_after = after;
    return true;
}

} // namespace

MarkedPartition MarkedPartition::singletons(const std::vector<Point>& locations) {
    MarkedPartition p;
    p.blocks.reserve(locations.size());
    for (std::size_t i = 0; i < locations.size(); ++i)
        p.blocks.push_back({{static_cast<int>(i)}, locations[i]});
    return p;
}

int MarkedPartition::sample_size() const {
    int n = 0;
    for (const AncestorBlock& b : blocks) n += static_cast<int>(b.labels.size());
    return n;
}

void MarkedPartition::sort_blocks() {
    for (AncestorBlock& b : blocks) std::sort(b.labels.begin(), b.labels.end());
    std::sort(blocks.begin(), blocks.end(), [](const AncestorBlock& a, const AncestorBlock& b) {
        return a.labels.front() < b.labels.front();
    });
}

std::string trajectory_to_jsonl(const MarkedPartition& partition) {
    std::string out;
    char buf[64];
    for (const MergeRecord& rec : partition.history) {
        out += "{\"h\":";
        std::snprintf(buf, sizeof buf, "%.17g", rec.h);
        out += buf;
        out += ",\"event_id\":" + std::to_string(rec.event_id);
        out += ",\"merged_blocks\":[";
        for (std::size_t b = 0; b < rec.merged.size(); ++b) {
            if (b) out += ',';
            out += '[';
            for (std::size_t l = 0; l < rec.merged[b].size(); ++l) {
                if (l) out += ',';
                out += std::to_string(rec.merged[b][l]);
            }
            out += ']';
        }
        out += "],\"new_location\":[";
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", rec.new_location[0], rec.new_location[1]);
        out += buf;
        out += "],\"N\":" + std::to_string(rec.blocks_after);
        out += "}\n";
    }
    return out;
}

MarkedPartition run_quenched(const MarkedPartition& start, const Environment& env,
                             double t_sample, double horizon, SeedKey seed,
                             const CoalescentOptions& options) {
    if (!(horizon >= 0.0)) throw std::invalid_argument("run_quenched: negative horizon");
    if (!env.window().covers(t_sample - horizon, t_sample))
        throw std::invalid_argument(
            "run_quenched: environment window does not cover the requested horizon");
    const Domain& dom = env.domain();
    for (const AncestorBlock& b : start.blocks)
        if (!dom.contains(dom.wrap(b.location)))
            throw std::invalid_argument("run_quenched: block location outside the domain");

    MarkedPartition state = start;
    state.sort_blocks();
    state.history.clear();

    const EventModel& model = env.model();
    const SeedKey coin_root = seed.child("coin");
    const SeedKey merge_root = seed.child("merge");
    const auto& events = env.events();

    // Last event with t <= t_sample, walking backward in time.
    auto upper = std::upper_bound(events.begin(), events.end(), t_sample,
                                  [](double t, const Event& e) { return t < e.t; });
    const double t_floor = t_sample - horizon;

    std::vector<int> affected;
    std::vector<int> slots;
    for (auto it = std::make_reverse_iterator(upper); it != events.rend(); ++it) {
        const Event& e = *it;
        if (e.t <= t_floor) break;
        const int event_id = static_cast<int>(&e - events.data());

        BackwardEvent be;
        be.z = e.z;
        be.r = env.coverage_radius(e);
        be.u = e.u;
        be.n_parents = model.kind == ModelKind::multi_parent_ball ? e.n_parents : 1;
        be.event_id = event_id;
        be.h = t_sample - e.t;
        be.gaussian = model.kind == ModelKind::gaussian;

        affected.clear();
        slots.clear();
        const SeedKey event_coins = coin_root.child(static_cast<std::uint64_t>(event_id));
        for (std::size_t i = 0; i < state.blocks.size(); ++i) {
            const double dist = distance(state.blocks[i].location, be.z, dom);
            if (dist > be.r) continue;
            // Coin identity: the smallest (optionally relabeled) sample label.
            int coin_label;
            if (options.coin_label_map) {
                coin_label = (*options.coin_label_map)[static_cast<std::size_t>(
                    state.blocks[i].labels.front())];
                for (int l : state.blocks[i].labels)
                    coin_label =
                        std::min(coin_label, (*options.coin_label_map)[static_cast<std::size_t>(l)]);
            } else {
                coin_label = state.blocks[i].labels.front();
            }
            Rng coin(event_coins.child(static_cast<std::uint64_t>(coin_label)));
            if (coin.uniform01() < coin_probability(be, dist, model)) {
                affected.push_back(static_cast<int>(i));
                slots.push_back(be.n_parents == 1
                                    ? 0
                                    : static_cast<int>(coin.uniform01() * be.n_parents));
            }
        }

        const SeedKey event_merge = merge_root.child(static_cast<std::uint64_t>(event_id));
        merge_affected(state.blocks, state.history, affected, slots, be, [&](int slot) {
            Rng rng(event_merge.child(static_cast<std::uint64_t>(slot)));
            if (be.gaussian)
                return wrapped_gaussian(be.z, model.gaussian_alpha * model.gaussian_theta(), dom,
                                        rng);
            return sample_uniform_ball(be.z, e.r, dom, rng);
        });
    }
    return state;
}

MarkedPartition run_annealed(const MarkedPartition& start, const EventModel& model,
                             const Domain& dom, double horizon, SeedKey seed) {
    model.validate(dom);
    if (!(horizon >= 0.0)) throw std::invalid_argument("run_annealed: negative horizon");

    MarkedPartition state = start;
    state.sort_blocks();
    state.history.clear();
    Rng rng(seed.child("annealed"));

    const bool gaussian = model.kind == ModelKind::gaussian;
    std::vector<double> comp_radius;
    std::vector<double> comp_weight;
    if (gaussian) {
        comp_radius = {model.coverage_radius()};
        comp_weight = {1.0};
    } else {
        comp_radius = model.radius.radii;
        comp_weight = model.radius.weights;
    }
    const double domain_volume = dom.volume();

    double h = 0.0;
    std::vector<double> comp_rate(comp_radius.size());
    std::vector<int> covered;
    std::vector<int> affected;
    std::vector<int> slots;
    for (;;) {
        if (state.blocks.empty()) break;

        // Proposal rate: per radius component, the volume of centres able to
        // touch at least one block, over-counted by multiplicity.
        double total_rate = 0.0;
        std::vector<bool> comp_uniform(comp_radius.size(), false);
        for (std::size_t m = 0; m < comp_radius.size(); ++m) {
            double sum_vol = 0.0;
            for (const AncestorBlock& b : state.blocks)
                sum_vol += ball_volume(b.location, comp_radius[m], dom);
            if (sum_vol >= domain_volume) {
                comp_uniform[m] = true;
                sum_vol = domain_volume;
            }
            comp_rate[m] = model.rate_per_volume_time * comp_weight[m] * sum_vol;
            total_rate += comp_rate[m];
        }
        if (total_rate <= 0.0) break;
        h += rng.exponential(total_rate);
        if (h > horizon) break;

        const std::size_t m = rng.discrete(comp_rate.data(), comp_rate.size());
        const double r = comp_radius[m];

        Point z;
        if (comp_uniform[m]) {
            for (int i = 0; i < dom.dimension; ++i)
                z[i] = rng.uniform(0.0, dom.side[static_cast<std::size_t>(i)]);
        } else {
            const std::size_t pick = static_cast<std::size_t>(
                rng.uniform01() * static_cast<double>(state.blocks.size()));
            z = sample_uniform_ball(state.blocks[std::min(pick, state.blocks.size() - 1)].location,
                                    r, dom, rng);
        }
        covered.clear();
        for (std::size_t i = 0; i < state.blocks.size(); ++i)
            if (distance(state.blocks[i].location, z, dom) <= r)
                covered.push_back(static_cast<int>(i));
        if (covered.empty()) continue;
        if (!comp_uniform[m]) {
            // Correct the multiplicity of the union proposal.
            if (rng.uniform01() * static_cast<double>(covered.size()) >= 1.0) continue;
        }

        BackwardEvent be;
        be.z = z;
        be.r = r;
        be.u = gaussian ? model.gaussian_u0 : model.impact.sample(rng);
        be.n_parents = 1;
        if (model.kind == ModelKind::multi_parent_ball)
            be.n_parents = 1 + static_cast<int>(rng.discrete(model.offspring_weights.data(),
                                                             model.offspring_weights.size()));
        be.event_id = -1;
        be.h = h;
        be.gaussian = gaussian;

        affected.clear();
        slots.clear();
        for (int idx : covered) {
            const double dist = distance(state.blocks[static_cast<std::size_t>(idx)].location,
                                         be.z, dom);
            if (rng.uniform01() < coin_probability(be, dist, model)) {
                affected.push_back(idx);
                slots.push_back(be.n_parents == 1
                                    ? 0
                                    : static_cast<int>(rng.uniform01() * be.n_parents));
            }
        }
        merge_affected(state.blocks, state.history, affected, slots, be, [&](int) {
            if (be.gaussian)
                return wrapped_gaussian(be.z, model.gaussian_alpha * model.gaussian_theta(), dom,
                                        rng);
            return sample_uniform_ball(be.z, r, dom, rng);
        });
    }
    return state;
}

ParentalSkeleton build_parental_skeleton(const Environment& env, SeedKey seed) {
    if (!env.marked())
        throw std::invalid_argument("build_parental_skeleton: environment has no parental marks");

    ParentalSkeleton skeleton;
    skeleton.coin_seed = seed.child("skeleton");
    const auto& events = env.events();
    skeleton.parent_of.assign(events.size(), -1);

    for (std::size_t i = 0; i < events.size(); ++i) {
        const Point& y = events[i].y;
        const auto& candidates = env.cell_events(y);
        const SeedKey own = skeleton.coin_seed.child(i);
        // Most recent earlier event covering y with a successful coin.
        auto pos = std::lower_bound(candidates.begin(), candidates.end(), static_cast<int>(i));
        for (auto it = std::make_reverse_iterator(pos); it != candidates.rend(); ++it) {
            const Event& prior = env.event(*it);
            if (distance(y, prior.z, env.domain()) > env.coverage_radius(prior)) continue;
            Rng coin(own.child(static_cast<std::uint64_t>(*it)));
            if (coin.uniform01() >= 1.0 - prior.u) {
                skeleton.parent_of[i] = *it;
                break;
            }
        }
    }
    return skeleton;
}

Point AncestralPath::at(double h) const {
    Point p = start;
    for (const JumpPoint& j : jumps) {
        if (j.h > h) break;
        p = j.location;
    }
    return p;
}

AncestralPath trace_ancestral_line(const Point& x, double t_sample, const Environment& env,
                                   const ParentalSkeleton& skeleton, SeedKey seed) {
    if (!env.marked())
        throw std::invalid_argument("trace_ancestral_line: environment has no parental marks");
    AncestralPath path;
    path.start = x;

    const auto covering = env.events_covering(x, env.window().t0, t_sample);
    const SeedKey entry_seed = seed.child("entry");
    int entry = -1;
    for (auto it = covering.rbegin(); it != covering.rend(); ++it) {
        Rng coin(entry_seed.child(static_cast<std::uint64_t>(*it)));
        if (coin.uniform01() >= 1.0 - env.event(*it).u) {
            entry = *it;
            break;
        }
    }
    if (entry < 0) return path;

    for (int id = entry; id >= 0; id = skeleton.parent_of[static_cast<std::size_t>(id)]) {
        path.jumps.push_back({t_sample - env.event(id).t, env.event(id).y, id});
    }
    return path;
}

} // namespace slfv
