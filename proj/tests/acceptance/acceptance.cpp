// Acceptance suite: one self-contained experiment per criterion, each with
// its oracle and tolerance pinned in code.  Prints one PASS/FAIL line per
// criterion; exit code is the number of failures.
//
//   acceptance [--criterion N] [--workers W]

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "slfv/ancestry.hpp"
#include "slfv/bridge.hpp"
#include "slfv/environment.hpp"
#include "slfv/experiments.hpp"
#include "slfv/lookdown.hpp"
#include "slfv/stats.hpp"

using namespace slfv;

namespace {

const double kPi = 3.14159265358979323846;
int g_workers = 8;

EventModel fixed_ball_model(double u = 0.5, double r = 1.0, double rate = 1.0) {
    EventModel m;
    m.kind = ModelKind::ball;
    m.rate_per_volume_time = rate;
    m.radius = RadiusLaw::point_mass(r);
    m.impact = ImpactLaw::point_mass(u);
    return m;
}

struct Line {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        detail += "\n    [" + std::string(ok ? "ok" : "FAIL") + "] " + what;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// 1. Backward single-lineage inter-jump time has mean 1/J, J = u0 pi r0^2.
Line criterion_jump_rate() {
    Line line;
    const Domain dom = Domain::make_torus(2, {10.0, 10.0});
    const EventModel model = fixed_ball_model(0.5, 1.0, 1.0);
    const double j_rate = jump_rate(Point(0, 0), model, dom);
    const double horizon = 10.0;
    const int replicates = 10000;

    std::vector<double> first_jump(replicates, -1.0);
    const SeedKey seed(20001);
    parallel_replicates(replicates, g_workers, [&](int i) {
        const Environment env =
            generate_environment(model, {-horizon, 0.0}, dom, seed.child("env").child(i));
        const MarkedPartition result =
            run_quenched(MarkedPartition::singletons({Point(5.0, 5.0)}), env, 0.0, horizon,
                         seed.child("run").child(i));
        if (!result.history.empty()) first_jump[static_cast<std::size_t>(i)] =
            result.history.front().h;
    });
    std::vector<double> times;
    for (double t : first_jump)
        if (t >= 0.0) times.push_back(t);
    const stats::MeanSe ms = stats::mean_se(times);
    const double oracle = 1.0 / j_rate;
    const double z = stats::z_score(ms.mean, oracle, ms.se);
    line.check(std::abs(z) <= 3.0, "mean inter-jump time " + fmt(ms.mean) + " vs 1/J = " +
                                       fmt(oracle) + " (z = " + fmt(z) + ", n = " +
                                       std::to_string(times.size()) + ")");
    line.check(j_rate == 0.5 * kPi, "J = 0.5*pi exactly");
    return line;
}

// 2. Co-located pair: the first affecting event merges both lineages with
// probability u/(2-u) = 1/3.
Line criterion_pair_merge() {
    Line line;
    const Domain dom = Domain::make_torus(2, {10.0, 10.0});
    const EventModel model = fixed_ball_model(0.5);
    const double horizon = 10.0;
    const int replicates = 10000;

    std::vector<double> outcome(replicates, -1.0); // -1 none, 0 single, 1 merge
    const SeedKey seed(20002);
    parallel_replicates(replicates, g_workers, [&](int i) {
        const Environment env =
            generate_environment(model, {-horizon, 0.0}, dom, seed.child("env").child(i));
        const MarkedPartition result = run_quenched(
            MarkedPartition::singletons({Point(5.0, 5.0), Point(5.0, 5.0)}), env, 0.0, horizon,
            seed.child("run").child(i));
        if (result.history.empty()) return;
        std::size_t labels = 0;
        for (const auto& set : result.history.front().merged) labels += set.size();
        outcome[static_cast<std::size_t>(i)] = labels == 2 ? 1.0 : 0.0;
    });
    int affecting = 0, merged = 0;
    for (double o : outcome) {
        affecting += o >= 0.0;
        merged += o == 1.0;
    }
    const double p = merged / static_cast<double>(affecting);
    const double oracle = 1.0 / 3.0;
    const double se = std::sqrt(oracle * (1.0 - oracle) / affecting);
    const double z = stats::z_score(p, oracle, se);
    line.check(std::abs(z) <= 3.0, "P(first affecting event merges) = " + fmt(p) +
                                       " vs 1/3 (z = " + fmt(z) + ", n = " +
                                       std::to_string(affecting) + ")");
    return line;
}

// 3. Poisson conservation through 100 events at truncation 1000.
Line criterion_poisson_conservation() {
    Line line;
    const Domain dom = Domain::make_torus(2, {5.0, 5.0});
    const EventModel model = fixed_ball_model(0.5);
    const double duration = 100.0 / 25.0; // 100 expected events
    const Environment env = generate_environment(model, {0.0, duration}, dom, SeedKey(20003));
    line.check(env.events().size() >= 70, std::to_string(env.events().size()) +
                                              " events applied (expected about 100)");

    LookdownState state =
        init_state(dom, 1000.0, TypeKernel::uniform({1.0}), SeedKey(20003).child("init"));
    evolve(state, env, 0.0, duration, MutationModel::none(1), SeedKey(20003).child("evolve"));

    const double alpha = 0.01 / 3.0; // Bonferroni over the three cutoffs
    for (const double cutoff : {100.0, 500.0, 1000.0}) {
        std::vector<double> cells(25, 0.0);
        for (const LookdownParticle& p : state.particles) {
            if (p.level > cutoff) continue;
            const int cx = std::min(4, static_cast<int>(p.location[0]));
            const int cy = std::min(4, static_cast<int>(p.location[1]));
            cells[static_cast<std::size_t>(cy * 5 + cx)] += 1.0;
        }
        const double p_disp = stats::poisson_dispersion_pvalue(cells);
        const double p_unif = stats::uniformity_pvalue(cells);
        line.check(p_disp >= alpha, "dispersion at cutoff " + fmt(cutoff) + ": p = " +
                                        fmt(p_disp) + " >= " + fmt(alpha));
        line.check(p_unif >= alpha, "uniformity at cutoff " + fmt(cutoff) + ": p = " +
                                        fmt(p_unif) + " >= " + fmt(alpha));
    }
    return line;
}

// 4. Lookdown genealogy vs quenched coalescent under identical environments.
Line criterion_genealogy_equality() {
    Line line;
    LookdownVsCoalescentConfig config;
    config.dom = Domain::make_torus(2, {5.0, 5.0});
    config.model = fixed_ball_model(0.5);
    config.sample_points = {Point(2.2, 2.5), Point(2.8, 2.5)};
    config.horizon = 1.5;
    config.truncation = 20.0;
    config.readout_epsilon = 0.6;
    config.replicates = 10000;
    config.alpha = 0.01;
    config.workers = g_workers;
    const ExperimentReport report = lookdown_vs_coalescent_check(config, SeedKey(20004));
    for (const CheckResult& c : report.checks)
        line.check(c.pass, c.name + " (" + c.kind + " = " + fmt(c.statistic) + ")");
    return line;
}

// 5. Quenched duality, plain and with flip mutation at rate 1.
Line criterion_duality() {
    Line line;
    DualityConfig config;
    config.dom = Domain::make_torus(2, {4.0, 4.0});
    config.model = fixed_ball_model(0.5);
    config.kernel = TypeKernel::half_space();
    config.sample_points = {Point(1.7, 2.0), Point(2.3, 2.0)};
    config.type_weights = {{1.0, 0.0}, {1.0, 0.0}};
    config.horizon = 1.0;
    config.truncation = 2000.0;
    config.readout_epsilon = 0.05;
    config.environments = 100;
    config.replicates = 100;
    config.workers = g_workers;

    config.mutation = MutationModel::none(2);
    const ExperimentReport plain = duality_check(config, SeedKey(20005));
    line.check(plain.checks[0].pass,
               "no mutation: " + plain.checks[0].note + " (z = " +
                   fmt(plain.checks[0].statistic) + ")");

    config.mutation = MutationModel::two_type_flip(1.0);
    const ExperimentReport mutated = duality_check(config, SeedKey(20006));
    line.check(mutated.checks[0].pass,
               "flip mutation: " + mutated.checks[0].note + " (z = " +
                   fmt(mutated.checks[0].statistic) + ")");
    return line;
}

// 6. Bridge identities: mass conservation, associativity, the one-site flow
// property, and inversion hit probabilities.
Line criterion_bridges() {
    Line line;
    const Domain dom = Domain::make_torus(2, {10.0, 10.0});
    const Point x(5.0, 5.0);
    EventModel model = fixed_ball_model(0.5);

    // 10^3 covering events.
    std::vector<Event> events;
    Rng gen(SeedKey(20007).child("events"));
    for (int i = 0; i < 1000; ++i) {
        Event e;
        e.t = 0.001 + 0.00999 * i;
        e.z = x;
        e.r = 1.0;
        e.u = 0.05 + 0.9 * gen.uniform01();
        e.y = x;
        e.label = gen.uniform01();
        events.push_back(e);
    }
    const Environment env(dom, model, {0.0, 10.0}, SeedKey(0), events, true);
    const Bridge bridge = build_bridge(env, x, 0.0, 10.0);
    line.check(std::abs(bridge.total_mass() - 1.0) < 1e-12,
               "mass identity |p0 + sum p_i - 1| = " +
                   fmt(std::abs(bridge.total_mass() - 1.0)) + " < 1e-12 after 1000 events");

    // Associativity on a 100-point grid.
    const Bridge a = elementary_bridge(0.15, 0.4);
    const Bridge b = elementary_bridge(0.6, 0.7);
    const Bridge c = elementary_bridge(0.85, 0.2);
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double w = i / 100.0;
        worst = std::max(worst,
                         std::abs(compose(compose(a, b), c)(w) - compose(a, compose(b, c))(w)));
    }
    line.check(worst < 1e-12, "diamond associativity sup gap = " + fmt(worst));

    // Flow property on a generated marked environment.
    Environment flow_env = generate_environment(fixed_ball_model(0.5), {0.0, 10.0},
                                                Domain::make_torus(2, {5.0, 5.0}),
                                                SeedKey(20007).child("flow"));
    flow_env = extend_with_parents(flow_env, SeedKey(20007).child("marks"));
    const Point site(2.5, 2.5);
    const Bridge whole = build_bridge(flow_env, site, 1.0, 9.0);
    const Bridge glued = compose(build_bridge(flow_env, site, 4.0, 9.0),
                                 build_bridge(flow_env, site, 1.0, 4.0));
    worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double w = i / 100.0;
        worst = std::max(worst, std::abs(whole(w) - glued(w)));
    }
    line.check(worst < 1e-12, "one-site flow property sup gap = " + fmt(worst));

    // Inversion hit probabilities over 10^5 uniform draws.
    const Bridge inv = compose(elementary_bridge(0.2, 0.45),
                               compose(elementary_bridge(0.6, 0.3),
                                       elementary_bridge(0.85, 0.25)));
    Rng rng(SeedKey(20007).child("invert"));
    const int n = 100000;
    std::vector<double> hits(inv.jumps.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        const BridgeInverse r = invert(inv, rng.uniform01());
        if (!r.hit_jump) continue;
        for (std::size_t j = 0; j < inv.jumps.size(); ++j)
            if (r.value == inv.jumps[j].label) hits[j] += 1.0;
    }
    bool all_within = true;
    double worst_z = 0.0;
    for (std::size_t j = 0; j < hits.size(); ++j) {
        const double p = inv.jumps[j].mass;
        const double z = (hits[j] / n - p) / std::sqrt(p * (1.0 - p) / n);
        worst_z = std::max(worst_z, std::abs(z));
        all_within = all_within && std::abs(z) <= 3.0;
    }
    line.check(all_within, "inversion hit probabilities, worst z = " + fmt(worst_z));
    return line;
}

// 7. Finite variation of <M^n, f> against 2 ||f|| Upsilon_T.
Line criterion_variation() {
    Line line;
    VariationConfig config;
    config.dom = Domain::make_torus(2, {8.0, 8.0});
    config.model = fixed_ball_model(0.5);
    BoxFactor box;
    box.lo = Point(3.0, 3.0);
    box.hi = Point(5.0, 5.0);
    config.f.factors = {box};
    config.f.type_weights = {{1.0, -1.0}};
    config.kernel = TypeKernel::uniform({0.5, 0.5});
    config.truncation = 100.0;
    config.horizon = 1000.0 / 64.0; // about 10^3 events per replicate
    config.replicates = 100;
    config.workers = g_workers;
    const ExperimentReport report = variation_bound_check(config, SeedKey(20008));
    line.check(report.checks[0].pass,
               report.checks[0].note + ", worst TV/bound ratio = " +
                   fmt(report.checks[0].estimate));
    return line;
}

// 8. Never coming down from infinity: untouched fraction and ancestor growth.
Line criterion_cdi() {
    Line line;
    CdiConfig config;
    config.dom = Domain::make_torus(2, {20.0, 20.0});
    config.model = fixed_ball_model(0.5);
    config.horizon = 1.0;
    config.intensities = {50.0, 100.0, 200.0, 400.0};
    config.replicates = 100;
    config.workers = g_workers;
    const ExperimentReport report = cdi_experiment(config, SeedKey(20009));
    const CheckResult& frac = report.checks[0];
    line.check(frac.pass, "untouched fraction " + fmt(frac.estimate) + " vs exp(-J t) = " +
                              fmt(frac.oracle) + " (z = " + fmt(frac.statistic) + ")");
    line.check(std::abs(frac.oracle - 0.20787957635076193) < 1e-12,
               "oracle equals exp(-pi/2)");
    line.check(report.checks[1].pass, report.checks[1].note);
    return line;
}

// 9. Convergence diagnostic: d(M^n, M^2n) strictly decreasing over the ladder.
Line criterion_convergence() {
    Line line;
    ConvergenceConfig config;
    config.dom = Domain::make_torus(2, {3.0, 3.0});
    config.model = fixed_ball_model(0.5);
    config.kernel = TypeKernel::half_space();
    config.truncations = {100.0, 1000.0, 10000.0};
    config.horizon = 1.0;
    config.replicates = 20;
    config.basis_size = 64;
    config.workers = g_workers;
    const ExperimentReport report = convergence_diagnostic(config, SeedKey(20010));
    line.check(report.checks[0].pass, report.checks[0].note);
    return line;
}

// 10. Determinism: byte-identical outputs for fixed (config, seed) across
// worker counts, and byte-identical environment generation.
Line criterion_determinism() {
    Line line;

    DualityConfig dc;
    dc.dom = Domain::make_torus(2, {4.0, 4.0});
    dc.model = fixed_ball_model(0.5);
    dc.mutation = MutationModel::two_type_flip(1.0);
    dc.kernel = TypeKernel::half_space();
    dc.sample_points = {Point(1.7, 2.0), Point(2.3, 2.0)};
    dc.type_weights = {{1.0, 0.0}, {1.0, 0.0}};
    dc.horizon = 0.5;
    dc.truncation = 200.0;
    dc.readout_epsilon = 0.35;
    dc.environments = 8;
    dc.replicates = 6;
    dc.workers = 1;
    const std::string duality_solo = duality_check(dc, SeedKey(20011)).to_json();
    dc.workers = 8;
    const std::string duality_pool = duality_check(dc, SeedKey(20011)).to_json();
    line.check(duality_solo == duality_pool, "duality report identical for 1 vs 8 workers");

    CdiConfig cc;
    cc.dom = Domain::make_torus(2, {20.0, 20.0});
    cc.model = fixed_ball_model(0.5);
    cc.horizon = 0.5;
    cc.intensities = {20.0, 40.0};
    cc.replicates = 16;
    cc.workers = 1;
    const std::string cdi_solo = cdi_experiment(cc, SeedKey(20012)).to_json();
    cc.workers = 8;
    const std::string cdi_pool = cdi_experiment(cc, SeedKey(20012)).to_json();
    line.check(cdi_solo == cdi_pool, "cdi report identical for 1 vs 8 workers");

    const Domain dom = Domain::make_torus(2, {10.0, 10.0});
    const EventModel model = fixed_ball_model(0.5);
    const std::string env_a = environment_to_string(
        extend_with_parents(generate_environment(model, {0.0, 2.0}, dom, SeedKey(42)),
                            SeedKey(42)));
    const std::string env_b = environment_to_string(
        extend_with_parents(generate_environment(model, {0.0, 2.0}, dom, SeedKey(42)),
                            SeedKey(42)));
    line.check(env_a == env_b, "environment generation byte-identical under a fixed seed");
    return line;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Line()> run;
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
        if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc)
            g_workers = std::atoi(argv[++i]);
    }

    const std::vector<Criterion> criteria{
        {1, "single-lineage jump-rate oracle", criterion_jump_rate},
        {2, "co-located pair merge probability", criterion_pair_merge},
        {3, "poisson conservation through events", criterion_poisson_conservation},
        {4, "lookdown genealogy equals the quenched coalescent", criterion_genealogy_equality},
        {5, "quenched duality, plain and with mutation", criterion_duality},
        {6, "bridge identities", criterion_bridges},
        {7, "finite-variation bound", criterion_variation},
        {8, "no coming down from infinity", criterion_cdi},
        {9, "truncation convergence diagnostic", criterion_convergence},
        {10, "determinism across worker counts", criterion_determinism},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        if (only != 0 && criterion.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        const Line line = criterion.run();
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %2d %s (%.1f s): %s%s\n", criterion.id,
                    line.pass ? "PASS" : "FAIL", seconds, criterion.name, line.detail.c_str());
        std::fflush(stdout);
        failures += !line.pass;
    }
    return failures;
}
