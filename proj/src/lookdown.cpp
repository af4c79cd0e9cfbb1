#include "slfv/lookdown.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace slfv {

namespace {

// Lazily evolves particle types between events: a particle's type is
// advanced along its own mutation stream only when it is read or written,
// which is exact since mutation is Markov and independent across levels.
class LazyTypes {
  public:
    LazyTypes(LookdownState& state, const MutationModel& mutation, SeedKey seed, double t0)
        : state_(state), mutation_(mutation) {
        const SeedKey root = seed.child("mutation");
        rngs_.reserve(state.particles.size());
        for (std::size_t j = 0; j < state.particles.size(); ++j) rngs_.emplace_back(root.child(j));
        last_sync_.assign(state.particles.size(), t0);
    }

    TypeIndex read(int j, double t) {
        const auto uj = static_cast<std::size_t>(j);
        const double dt = t - last_sync_[uj];
        if (dt > 0.0 && mutation_.enabled()) {
            state_.particles[uj].type =
                mutation_.evolve(state_.particles[uj].type, dt, rngs_[uj]);
        }
        last_sync_[uj] = t;
        return state_.particles[uj].type;
    }

    void write(int j, TypeIndex type, double t) {
        const auto uj = static_cast<std::size_t>(j);
        state_.particles[uj].type = type;
        last_sync_[uj] = t;
    }

    void sync_all(double t) {
        for (std::size_t j = 0; j < state_.particles.size(); ++j)
            read(static_cast<int>(j), t);
    }

  private:
    LookdownState& state_;
    const MutationModel& mutation_;
    std::vector<Rng> rngs_;
    std::vector<double> last_sync_;
};

TypeIndex read_type(const LookdownState& state, int j, double t, LazyTypes* lazy) {
    return lazy ? lazy->read(j, t) : state.particles[static_cast<std::size_t>(j)].type;
}

void write_type(LookdownState& state, int j, TypeIndex type, double t, LazyTypes* lazy) {
    if (lazy)
        lazy->write(j, type, t);
    else
        state.particles[static_cast<std::size_t>(j)].type = type;
}

Point truncated_gaussian_offset(const Point& centre, double sigma, double max_radius,
                                const Domain& dom, Rng& rng) {
    for (;;) {
        Point p = centre;
        double dist_sq = 0.0;
        for (int i = 0; i < dom.dimension; ++i) {
            const double d = sigma * rng.normal();
            dist_sq += d * d;
            p[i] += d;
        }
        if (dist_sq > max_radius * max_radius) continue;
        if (dom.kind == DomainKind::torus) return dom.wrap(p);
        if (dom.contains(p)) return p;
    }
}

void apply_event_impl(LookdownState& state, const Event& event, const EventModel& model,
                      const Domain& dom, SeedKey seed, LookdownEventRecord* record,
                      LazyTypes* lazy) {
    const SeedKey particle_seed = seed.child("p");
    const double cover =
        model.kind == ModelKind::gaussian ? model.coverage_radius() : event.r;

    struct Affected {
        int index;
        Rng rng;
    };
    std::vector<Affected> affected;
    int parent = -1;
    double parent_level = 0.0;

    if (model.kind == ModelKind::gaussian) {
        const double theta = model.gaussian_theta();
        const double parent_reach = model.gaussian_trunc_radii * model.gaussian_alpha * theta;
        const double alpha_sq = model.gaussian_alpha * model.gaussian_alpha;
        for (std::size_t j = 0; j < state.particles.size(); ++j) {
            const LookdownParticle& p = state.particles[j];
            const double dist = distance(p.location, event.z, dom);
            const bool in_kill = dist <= cover;
            const bool in_parent = dist <= parent_reach;
            if (!in_kill && !in_parent) continue;
            Rng rng(particle_seed.child(j));
            if (in_kill && rng.uniform01() < model.gaussian_impact_at(dist))
                affected.push_back({static_cast<int>(j), rng});
            // v-thinning picks the parent among all particles.
            if (in_parent &&
                rng.uniform01() < std::exp(-dist * dist / (2.0 * alpha_sq * theta * theta))) {
                if (parent < 0 || p.level < parent_level) {
                    parent = static_cast<int>(j);
                    parent_level = p.level;
                }
            }
        }
        if (parent < 0) return; // truncation artifact: nobody to look down onto

        const TypeIndex parent_type = read_type(state, parent, event.t, lazy);
        for (Affected& a : affected) {
            if (a.index == parent) continue;
            state.particles[static_cast<std::size_t>(a.index)].location =
                truncated_gaussian_offset(event.z, theta, cover, dom, a.rng);
            write_type(state, a.index, parent_type, event.t, lazy);
            if (record) record->lookdowns.push_back({a.index, parent});
        }
        Rng parent_rng(seed.child("parent"));
        state.particles[static_cast<std::size_t>(parent)].location = truncated_gaussian_offset(
            event.z, model.gaussian_alpha * theta, parent_reach, dom, parent_rng);
        if (record) record->lookdowns.push_back({parent, parent});
        return;
    }

    for (std::size_t j = 0; j < state.particles.size(); ++j) {
        const LookdownParticle& p = state.particles[j];
        if (distance(p.location, event.z, dom) > cover) continue;
        Rng rng(particle_seed.child(j));
        if (rng.uniform01() < event.u) {
            affected.push_back({static_cast<int>(j), rng});
            if (parent < 0 || p.level < parent_level) {
                parent = static_cast<int>(j);
                parent_level = p.level;
            }
        }
    }
    if (affected.empty()) return;

    if (model.kind == ModelKind::multi_parent_ball && event.n_parents > 1) {
        std::vector<int> by_level;
        for (const Affected& a : affected) by_level.push_back(a.index);
        std::sort(by_level.begin(), by_level.end(), [&state](int a, int b) {
            return state.particles[static_cast<std::size_t>(a)].level <
                   state.particles[static_cast<std::size_t>(b)].level;
        });
        const int n_parents = std::min<int>(event.n_parents, static_cast<int>(by_level.size()));
        std::vector<TypeIndex> parent_types;
        for (int s = 0; s < n_parents; ++s)
            parent_types.push_back(read_type(state, by_level[static_cast<std::size_t>(s)],
                                             event.t, lazy));
        for (Affected& a : affected) {
            const int choice = std::min(
                n_parents - 1, static_cast<int>(a.rng.uniform01() * n_parents));
            state.particles[static_cast<std::size_t>(a.index)].location =
                sample_uniform_ball(event.z, event.r, dom, a.rng);
            write_type(state, a.index, parent_types[static_cast<std::size_t>(choice)], event.t,
                       lazy);
            if (record)
                record->lookdowns.push_back({a.index, by_level[static_cast<std::size_t>(choice)]});
        }
        return;
    }

    const TypeIndex parent_type = read_type(state, parent, event.t, lazy);
    for (Affected& a : affected) {
        state.particles[static_cast<std::size_t>(a.index)].location =
            sample_uniform_ball(event.z, event.r, dom, a.rng);
        write_type(state, a.index, parent_type, event.t, lazy);
        if (record) record->lookdowns.push_back({a.index, parent});
    }
}

} // namespace

TypeKernel TypeKernel::uniform(std::vector<double> pmf) {
    TypeKernel k;
    k.type_count = static_cast<int>(pmf.size());
    k.cell_dist = {std::move(pmf)};
    return k;
}

TypeKernel TypeKernel::piecewise(std::array<int, 2> grid, int type_count,
                                 std::vector<std::vector<double>> dists) {
    if (grid[0] < 1 || grid[1] < 1 ||
        dists.size() != static_cast<std::size_t>(grid[0]) * static_cast<std::size_t>(grid[1]))
        throw std::invalid_argument("type kernel: grid/distribution mismatch");
    for (const auto& pmf : dists) {
        if (static_cast<int>(pmf.size()) != type_count)
            throw std::invalid_argument("type kernel: distribution size mismatch");
        double total = 0.0;
        for (double p : pmf) {
            if (p < 0.0) throw std::invalid_argument("type kernel: negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("type kernel: distributions must sum to 1");
    }
    TypeKernel k;
    k.type_count = type_count;
    k.grid = grid;
    k.cell_dist = std::move(dists);
    return k;
}

TypeKernel TypeKernel::half_space() {
    return piecewise({2, 1}, 2, {{1.0, 0.0}, {0.0, 1.0}});
}

const std::vector<double>& TypeKernel::distribution_at(const Point& x, const Domain& dom) const {
    std::array<int, 2> cell{0, 0};
    for (int i = 0; i < dom.dimension; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const int n = grid[ui];
        cell[ui] = std::clamp(
            static_cast<int>(std::floor(x[i] / dom.side[ui] * static_cast<double>(n))), 0, n - 1);
    }
    return cell_dist[static_cast<std::size_t>(cell[1]) * static_cast<std::size_t>(grid[0]) +
                     static_cast<std::size_t>(cell[0])];
}

TypeIndex TypeKernel::sample_at(const Point& x, const Domain& dom, Rng& rng) const {
    const std::vector<double>& pmf = distribution_at(x, dom);
    return static_cast<TypeIndex>(rng.discrete(pmf.data(), pmf.size()));
}

LookdownState init_state(const Domain& dom, double truncation, const TypeKernel& kernel,
                         SeedKey seed) {
    if (!(truncation > 0.0)) throw std::invalid_argument("init_state: truncation must be > 0");
    Rng rng(seed.child("init"));
    LookdownState state;
    state.truncation = truncation;
    const std::uint64_t count = rng.poisson(truncation * dom.volume());
    state.particles.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        LookdownParticle p;
        for (int a = 0; a < dom.dimension; ++a)
            p.location[a] = rng.uniform(0.0, dom.side[static_cast<std::size_t>(a)]);
        p.level = rng.uniform(0.0, truncation);
        p.type = kernel.sample_at(p.location, dom, rng);
        state.particles.push_back(p);
    }
    return state;
}

void apply_event(LookdownState& state, const Event& event, const EventModel& model,
                 const Domain& dom, SeedKey seed, LookdownEventRecord* record) {
    if (record) {
        record->event_id = -1;
        record->t = event.t;
        record->lookdowns.clear();
    }
    apply_event_impl(state, event, model, dom, seed, record, nullptr);
}

EvolveResult evolve(LookdownState& state, const Environment& env, double t0, double t1,
                    const MutationModel& mutation, SeedKey seed, const EvolveOptions& options) {
    if (!env.window().covers(t0, t1))
        throw std::invalid_argument("evolve: environment window does not cover (t0, t1]");
    EvolveResult result;
    state.time = t0;

    LazyTypes lazy(state, mutation, seed, t0);
    LazyTypes* lazy_ptr = mutation.enabled() ? &lazy : nullptr;

    const auto& events = env.events();
    const SeedKey event_root = seed.child("event");
    auto it = std::upper_bound(events.begin(), events.end(), t0,
                               [](double t, const Event& e) { return t < e.t; });
    for (; it != events.end() && it->t <= t1; ++it) {
        const int event_id = static_cast<int>(&*it - events.data());
        LookdownEventRecord record;
        record.event_id = event_id;
        record.t = it->t;
        apply_event_impl(state, *it, env.model(), env.domain(),
                         event_root.child(static_cast<std::uint64_t>(event_id)), &record,
                         lazy_ptr);
        state.time = it->t;
        if (options.on_event) options.on_event(state, *it, record);
        if (!record.lookdowns.empty()) result.records.push_back(std::move(record));
    }
    if (lazy_ptr) lazy.sync_all(t1);
    state.time = t1;
    return result;
}

double empirical_integral(const LookdownState& state, const TestFunction& f) {
    const double n = state.truncation;
    double product = 1.0;
    for (int j = 0; j < f.k(); ++j) {
        const BoxFactor& factor = f.factors[static_cast<std::size_t>(j)];
        const auto& g = f.type_weights[static_cast<std::size_t>(j)];
        double sum = 0.0;
        for (const LookdownParticle& p : state.particles) {
            const double fx = factor(p.location, 2);
            if (fx != 0.0) sum += fx * g[static_cast<std::size_t>(p.type)];
        }
        product *= sum / n;
    }
    return product;
}

LookdownState truncate_state(const LookdownState& state, double cutoff) {
    LookdownState out;
    out.truncation = cutoff;
    out.time = state.time;
    for (const LookdownParticle& p : state.particles)
        if (p.level <= cutoff) out.particles.push_back(p);
    return out;
}

std::vector<int> nearest_particles(const LookdownState& state, const std::vector<Point>& points,
                                   double epsilon, const Domain& dom) {
    std::vector<int> chosen;
    for (const Point& x : points) {
        int best = -1;
        double best_dist = 0.0;
        for (std::size_t j = 0; j < state.particles.size(); ++j) {
            if (std::find(chosen.begin(), chosen.end(), static_cast<int>(j)) != chosen.end())
                continue;
            const double d = distance(state.particles[j].location, x, dom);
            if (best < 0 || d < best_dist) {
                best = static_cast<int>(j);
                best_dist = d;
            }
        }
        if (best < 0 || best_dist > epsilon)
            throw std::runtime_error(
                "nearest_particles: no particle within epsilon of a sample point "
                "(increase the truncation level)");
        chosen.push_back(best);
    }
    return chosen;
}

std::optional<double> first_merge_backward_time(const std::vector<LookdownEventRecord>& records,
                                                int j1, int j2, double t_sample) {
    if (j1 == j2) return 0.0;
    int rep1 = j1, rep2 = j2;
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        for (const auto& [particle, parent] : it->lookdowns) {
            if (particle == rep1) rep1 = parent;
            if (particle == rep2) rep2 = parent;
        }
        if (rep1 == rep2) return t_sample - it->t;
    }
    return std::nullopt;
}

std::string state_to_csv(const LookdownState& state, const Domain& dom) {
    std::string out = dom.dimension == 1 ? "level,x,type\n" : "level,x,y,type\n";
    char buf[96];
    for (const LookdownParticle& p : state.particles) {
        if (dom.dimension == 1)
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", p.level, p.location[0], p.type);
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", p.level, p.location[0],
                          p.location[1], p.type);
        out += buf;
    }
    return out;
}

} // namespace slfv
