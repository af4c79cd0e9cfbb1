#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "slfv/ancestry.hpp"
#include "slfv/lookdown.hpp"
#include "slfv/stats.hpp"

using namespace slfv;

namespace {

const double kPi = 3.14159265358979323846;

EventModel fixed_ball_model(double u = 0.5, double r = 1.0) {
    EventModel m;
    m.kind = ModelKind::ball;
    m.rate_per_volume_time = 1.0;
    m.radius = RadiusLaw::point_mass(r);
    m.impact = ImpactLaw::point_mass(u);
    return m;
}

Event ball_event(double t, Point z, double r, double u, int n_parents = 1) {
    Event e;
    e.t = t;
    e.z = z;
    e.r = r;
    e.u = u;
    e.n_parents = n_parents;
    return e;
}

LookdownState manual_state(std::vector<LookdownParticle> particles, double truncation) {
    LookdownState s;
    s.truncation = truncation;
    s.particles = std::move(particles);
    return s;
}

} // namespace

TEST_CASE("init_state: counts, kernel, and spatial dispersion") {
    const Domain dom = Domain::make_torus(2, {10.0, 10.0});
    const TypeKernel kernel = TypeKernel::uniform({1.0});

    std::vector<double> counts;
    for (int i = 0; i < 150; ++i) {
        const LookdownState s = init_state(dom, 10.0, kernel, SeedKey(61).child(i));
        counts.push_back(static_cast<double>(s.particles.size()));
        if (i == 0) {
            for (const LookdownParticle& p : s.particles) {
                REQUIRE(dom.contains(p.location));
                REQUIRE(p.level >= 0.0);
                REQUIRE(p.level <= 10.0);
                REQUIRE(p.type == 0);
            }
        }
    }
    CHECK(stats::poisson_fit_pvalue(counts, 1000.0) > 0.01);

    SUBCASE("counts in 25 disjoint sub-squares pass the dispersion test") {
        const LookdownState s = init_state(dom, 40.0, kernel, SeedKey(62));
        std::vector<double> cells(25, 0.0);
        for (const LookdownParticle& p : s.particles) {
            const int cx = std::min(4, static_cast<int>(p.location[0] / 2.0));
            const int cy = std::min(4, static_cast<int>(p.location[1] / 2.0));
            cells[static_cast<std::size_t>(cy * 5 + cx)] += 1.0;
        }
        CHECK(stats::poisson_dispersion_pvalue(cells) > 0.01);
        CHECK(stats::uniformity_pvalue(cells) > 0.01);
    }

    SUBCASE("half-space kernel types split at the mid-line") {
        const LookdownState s = init_state(dom, 20.0, TypeKernel::half_space(), SeedKey(63));
        for (const LookdownParticle& p : s.particles)
            REQUIRE(p.type == (p.location[0] < 5.0 ? 0 : 1));
    }

    CHECK_THROWS(init_state(dom, 0.0, kernel, SeedKey(0)));
}

TEST_CASE("apply_event: deterministic coins with u = 1") {
    const Domain dom = Domain::make_torus(2, {10.0, 10.0});
    const EventModel model = fixed_ball_model(1.0);

    SUBCASE("a single particle is its own parent and keeps its type") {
        LookdownState s = manual_state({{0.7, Point(5.0, 5.0), 3}}, 1.0);
        LookdownEventRecord rec;
        apply_event(s, ball_event(0.5, Point(5.2, 5.0), 1.0, 1.0), model, dom, SeedKey(64), &rec);
        CHECK(s.particles[0].type == 3);
        CHECK(distance(s.particles[0].location, Point(5.2, 5.0), dom) <= 1.0);
        REQUIRE(rec.lookdowns.size() == 1);
        CHECK(rec.lookdowns[0] == std::pair<int, int>{0, 0});
    }

    SUBCASE("all in-ball particles adopt the lowest level's pre-event type") {
        LookdownState s = manual_state({{2.0, Point(5.0, 5.0), 0},
                                        {0.5, Point(5.3, 5.0), 1},
                                        {1.0, Point(4.8, 5.1), 2},
                                        {3.0, Point(9.0, 9.0), 3}},
                                       4.0);
        apply_event(s, ball_event(0.5, Point(5.0, 5.0), 1.0, 1.0), model, dom, SeedKey(65));
        CHECK(s.particles[0].type == 1);
        CHECK(s.particles[1].type == 1);
        CHECK(s.particles[2].type == 1);
        CHECK(s.particles[3].type == 3); // untouched outside the ball
        CHECK(s.particles[3].location == Point(9.0, 9.0));
    }
}

TEST_CASE("apply_event: per-particle affection probability is u") {
    const Domain dom = Domain::make_torus(2, {10.0, 10.0});
    const EventModel model = fixed_ball_model(0.37);
    int affected = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        LookdownState s = manual_state({{0.5, Point(5.0, 5.0), 0}}, 1.0);
        LookdownEventRecord rec;
        apply_event(s, ball_event(0.1, Point(5.0, 5.0), 1.0, 0.37), model, dom,
                    SeedKey(66).child(i), &rec);
        affected += !rec.lookdowns.empty();
    }
    const double se = std::sqrt(0.37 * 0.63 / n);
    CHECK(std::abs(affected / static_cast<double>(n) - 0.37) < 3.0 * se);
}

TEST_CASE("multi-parent events") {
    const Domain dom = Domain::make_torus(2, {10.0, 10.0});
    EventModel model = fixed_ball_model(1.0);
    model.kind = ModelKind::multi_parent_ball;
    model.offspring_weights = {1.0};

    SUBCASE("one parent reduces draw-for-draw to the plain event") {
        const std::vector<LookdownParticle> particles{{2.0, Point(5.0, 5.0), 0},
                                                      {0.5, Point(5.3, 5.0), 1},
                                                      {1.0, Point(4.8, 5.1), 2}};
        LookdownState a = manual_state(particles, 4.0);
        LookdownState b = manual_state(particles, 4.0);
        apply_event(a, ball_event(0.5, Point(5, 5), 1.0, 1.0, 1), model, dom, SeedKey(67));
        apply_event(b, ball_event(0.5, Point(5, 5), 1.0, 1.0), fixed_ball_model(1.0), dom,
                    SeedKey(67));
        for (std::size_t j = 0; j < particles.size(); ++j) {
            CHECK(a.particles[j].location == b.particles[j].location);
            CHECK(a.particles[j].type == b.particles[j].type);
        }
    }

    SUBCASE("single affected particle keeps its type while relocating") {
        LookdownState s = manual_state({{0.5, Point(5.0, 5.0), 7}}, 1.0);
        apply_event(s, ball_event(0.5, Point(5, 5), 1.0, 1.0, 3), model, dom, SeedKey(68));
        CHECK(s.particles[0].type == 7);
    }

    SUBCASE("parent adoption fractions are 1/N each") {
        const int n = 10000;
        std::vector<double> adopted(3, 0.0);
        for (int i = 0; i < n; ++i) {
            LookdownState s = manual_state({{0.1, Point(5.0, 5.0), 0},
                                            {0.2, Point(5.1, 5.0), 1},
                                            {0.3, Point(4.9, 5.0), 2},
                                            {0.9, Point(5.0, 5.1), 3}},
                                           1.0);
            apply_event(s, ball_event(0.5, Point(5, 5), 1.0, 1.0, 3), model, dom,
                        SeedKey(69).child(i));
            // The highest-level particle adopted one of the three parents.
            adopted[static_cast<std::size_t>(s.particles[3].type)] += 1.0;
        }
        for (int p = 0; p < 3; ++p) {
            const double frac = adopted[static_cast<std::size_t>(p)] / n;
            CHECK(std::abs(frac - 1.0 / 3.0) < 3.0 * std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / n));
        }
    }
}

TEST_CASE("gaussian events: impact at the centre and the parent kernel") {
    const Domain dom = Domain::make_torus(2, {20.0, 20.0});
    EventModel model;
    model.kind = ModelKind::gaussian;
    model.rate_per_volume_time = 1.0;
    model.gaussian_u0 = 0.6;
    model.gaussian_theta_sq = 0.25;
    model.gaussian_alpha = 1.5;
    model.gaussian_trunc_radii = 5.0;
    model.validate(dom);

    SUBCASE("a particle at the centre is killed with probability u0") {
        // A lower-level particle co-located at the centre is elected parent
        // (its thinning coin succeeds with probability one at distance 0),
        // so the tracked particle changes type exactly when it is killed.
        int killed = 0;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            LookdownState s = manual_state({{0.9, Point(10.0, 10.0), 1},
                                            {0.1, Point(10.0, 10.0), 0}},
                                           1.0);
            Event e = ball_event(0.1, Point(10.0, 10.0), model.gaussian_theta(), 0.6);
            apply_event(s, e, model, dom, SeedKey(70).child(i));
            killed += s.particles[0].type == 0;
        }
        const double se = std::sqrt(0.6 * 0.4 / n);
        CHECK(std::abs(killed / static_cast<double>(n) - 0.6) < 3.0 * se);
    }

    SUBCASE("parent location follows the alpha-widened kernel (radial KS)") {
        std::vector<double> radii;
        for (int i = 0; i < 10000; ++i) {
            LookdownState s = manual_state({{0.5, Point(10.0, 10.0), 0}}, 1.0);
            Event e = ball_event(0.1, Point(10.0, 10.0), model.gaussian_theta(), 0.6);
            apply_event(s, e, model, dom, SeedKey(71).child(i));
            radii.push_back(distance(s.particles[0].location, e.z, dom));
        }
        // Rayleigh(alpha theta) truncated at the parent-reach cutoff.
        const double sigma = model.gaussian_alpha * model.gaussian_theta();
        const double cutoff = model.gaussian_trunc_radii * sigma;
        const double norm = 1.0 - std::exp(-cutoff * cutoff / (2.0 * sigma * sigma));
        const auto cdf = [sigma, norm](double x) {
            return (1.0 - std::exp(-x * x / (2.0 * sigma * sigma))) / norm;
        };
        CHECK(stats::ks_one_sample_pvalue(radii, cdf) > 0.01);
    }
}

TEST_CASE("evolve: constants, mutation marginals, and a whole-torus event") {
    const Domain dom = Domain::make_torus(2, {4.0, 4.0});
    const TypeKernel kernel = TypeKernel::uniform({0.5, 0.5});

    SUBCASE("no events, no mutation: state is constant") {
        EventModel model = fixed_ball_model();
        model.rate_per_volume_time = 0.0;
        const Environment env = generate_environment(model, {0.0, 1.0}, dom, SeedKey(72));
        LookdownState s = init_state(dom, 50.0, kernel, SeedKey(72));
        const LookdownState before = s;
        const EvolveResult run =
            evolve(s, env, 0.0, 1.0, MutationModel::none(2), SeedKey(72).child("e"));
        CHECK(run.records.empty());
        for (std::size_t j = 0; j < s.particles.size(); ++j) {
            CHECK(s.particles[j].location == before.particles[j].location);
            CHECK(s.particles[j].type == before.particles[j].type);
        }
    }

    SUBCASE("no events, mutation on: locations fixed, types follow the chain") {
        EventModel model = fixed_ball_model();
        model.rate_per_volume_time = 0.0;
        const Environment env = generate_environment(model, {0.0, 1.0}, dom, SeedKey(73));
        const MutationModel flip = MutationModel::two_type_flip(1.0);
        std::vector<double> counts(2, 0.0);
        for (int i = 0; i < 60; ++i) {
            LookdownState s = init_state(dom, 40.0, TypeKernel::uniform({1.0, 0.0}),
                                         SeedKey(73).child(i));
            const LookdownState before = s;
            evolve(s, env, 0.0, 1.0, flip, SeedKey(74).child(i));
            for (std::size_t j = 0; j < s.particles.size(); ++j) {
                CHECK(s.particles[j].location == before.particles[j].location);
                counts[static_cast<std::size_t>(s.particles[j].type)] += 1.0;
            }
        }
        const double p_change = (1.0 - std::exp(-2.0)) / 2.0;
        const double total = counts[0] + counts[1];
        std::vector<double> expected{(1.0 - p_change) * total, p_change * total};
        CHECK(stats::chi_square_pvalue(stats::pearson_stat(counts, expected), 1) > 0.01);
    }

    SUBCASE("u=1 event covering the whole torus copies the lowest level's type") {
        EventModel model = fixed_ball_model(1.0, 3.0); // r=3 covers the 4x4 torus
        std::vector<Event> events{ball_event(0.5, Point(2.0, 2.0), 3.0, 1.0)};
        const Environment env(dom, model, {0.0, 1.0}, SeedKey(0), events, false);
        LookdownState s = init_state(dom, 30.0, kernel, SeedKey(75));
        const auto lowest = std::min_element(
            s.particles.begin(), s.particles.end(),
            [](const LookdownParticle& a, const LookdownParticle& b) { return a.level < b.level; });
        const TypeIndex lowest_type = lowest->type;
        evolve(s, env, 0.0, 1.0, MutationModel::none(2), SeedKey(76));
        for (const LookdownParticle& p : s.particles) CHECK(p.type == lowest_type);
    }
}

TEST_CASE("empirical integral: indicators, empty states, factorized double sums") {
    const Domain dom = Domain::make_torus(2, {10.0, 10.0});
    TestFunction f;
    BoxFactor region;
    region.lo = Point(2.0, 2.0);
    region.hi = Point(5.0, 5.0);
    f.factors = {region};
    f.type_weights = {{1.0, 1.0}};

    SUBCASE("g == 1 indicator counts particles in the region") {
        const LookdownState s = init_state(dom, 20.0, TypeKernel::half_space(), SeedKey(80));
        int inside = 0;
        for (const LookdownParticle& p : s.particles)
            inside += p.location[0] >= 2.0 && p.location[0] <= 5.0 && p.location[1] >= 2.0 &&
                      p.location[1] <= 5.0;
        CHECK(empirical_integral(s, f) == doctest::Approx(inside / 20.0));
    }

    SUBCASE("empty state gives zero") {
        const LookdownState s = manual_state({}, 5.0);
        CHECK(empirical_integral(s, f) == 0.0);
    }

    SUBCASE("k=2 on three particles equals the explicit double sum") {
        const LookdownState s = manual_state({{0.5, Point(2.5, 2.5), 0},
                                              {1.0, Point(3.0, 4.0), 1},
                                              {2.0, Point(7.0, 7.0), 1}},
                                             3.0);
        TestFunction f2;
        BoxFactor left;
        left.lo = Point(2.0, 2.0);
        left.hi = Point(5.0, 5.0);
        BoxFactor bump = left;
        bump.shape = BoxFactor::Shape::bump;
        f2.factors = {left, bump};
        f2.type_weights = {{1.0, 2.0}, {0.5, -1.0}};

        double direct = 0.0;
        for (const LookdownParticle& p1 : s.particles)
            for (const LookdownParticle& p2 : s.particles)
                direct += f2.factors[0](p1.location, 2) *
                          f2.type_weights[0][static_cast<std::size_t>(p1.type)] *
                          f2.factors[1](p2.location, 2) *
                          f2.type_weights[1][static_cast<std::size_t>(p2.type)];
        direct /= 9.0; // n^k with n = 3, k = 2
        CHECK(empirical_integral(s, f2) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("poisson conservation and claim-1 uniformity through events") {
    const Domain dom = Domain::make_torus(2, {6.0, 6.0});
    const EventModel model = fixed_ball_model(0.5);

    SUBCASE("region counts at level cutoffs stay Poisson after 60 events") {
        const Environment env = generate_environment(model, {0.0, 60.0 / 36.0}, dom, SeedKey(81));
        LookdownState s = init_state(dom, 50.0, TypeKernel::uniform({1.0}), SeedKey(82));
        evolve(s, env, 0.0, env.window().t1, MutationModel::none(1), SeedKey(83));
        for (const double cutoff : {10.0, 25.0, 50.0}) {
            std::vector<double> cells(36, 0.0);
            for (const LookdownParticle& p : s.particles) {
                if (p.level > cutoff) continue;
                const int cx = std::min(5, static_cast<int>(p.location[0]));
                const int cy = std::min(5, static_cast<int>(p.location[1]));
                cells[static_cast<std::size_t>(cy * 6 + cx)] += 1.0;
            }
            CHECK(stats::poisson_dispersion_pvalue(cells) > 0.01 / 3.0);
            CHECK(stats::uniformity_pvalue(cells) > 0.01 / 3.0);
        }
    }

    SUBCASE("pre-event location of the lowest-level affected particle is uniform") {
        std::vector<double> sectors(8, 0.0);
        const Point centre(3.0, 3.0);
        for (int i = 0; i < 4000; ++i) {
            LookdownState s = init_state(dom, 30.0, TypeKernel::uniform({1.0}),
                                         SeedKey(84).child(i));
            std::vector<Point> before;
            for (const LookdownParticle& p : s.particles) before.push_back(p.location);
            LookdownEventRecord rec;
            apply_event(s, ball_event(0.1, centre, 1.0, 0.5), model, dom, SeedKey(85).child(i),
                        &rec);
            if (rec.lookdowns.empty()) continue;
            const int parent = rec.lookdowns.front().second;
            const Point& loc = before[static_cast<std::size_t>(parent)];
            const double dx = dom.wrap_delta(loc[0], centre[0], 0);
            const double dy = dom.wrap_delta(loc[1], centre[1], 1);
            const double angle = std::atan2(dy, dx) + kPi;
            sectors[static_cast<std::size_t>(
                std::min(7, static_cast<int>(angle / (2 * kPi) * 8)))] += 1.0;
        }
        CHECK(stats::uniformity_pvalue(sectors) > 0.01);
    }

    SUBCASE("a uniform cloud pushed through one event stays uniform") {
        std::vector<double> cells(36, 0.0);
        for (int i = 0; i < 200; ++i) {
            LookdownState s = init_state(dom, 20.0, TypeKernel::uniform({1.0}),
                                         SeedKey(86).child(i));
            apply_event(s, ball_event(0.1, Point(3.0, 3.0), 1.5, 0.8), model, dom,
                        SeedKey(87).child(i));
            for (const LookdownParticle& p : s.particles) {
                const int cx = std::min(5, static_cast<int>(p.location[0]));
                const int cy = std::min(5, static_cast<int>(p.location[1]));
                cells[static_cast<std::size_t>(cy * 6 + cx)] += 1.0;
            }
        }
        CHECK(stats::uniformity_pvalue(cells) > 0.01);
    }
}

TEST_CASE("truncation consistency: restricted run vs independent lower run") {
    const Domain dom = Domain::make_torus(2, {5.0, 5.0});
    const EventModel model = fixed_ball_model(0.5);
    const Environment env = generate_environment(model, {0.0, 2.0}, dom, SeedKey(88));

    std::vector<double> restricted_counts, direct_counts;
    for (int i = 0; i < 300; ++i) {
        LookdownState big = init_state(dom, 20.0, TypeKernel::uniform({1.0}),
                                       SeedKey(89).child(i));
        evolve(big, env, 0.0, 2.0, MutationModel::none(1), SeedKey(90).child(i));
        const LookdownState sub = truncate_state(big, 8.0);
        int in_region = 0;
        for (const LookdownParticle& p : sub.particles)
            in_region += p.location[0] < 2.5;
        restricted_counts.push_back(in_region);

        LookdownState small = init_state(dom, 8.0, TypeKernel::uniform({1.0}),
                                         SeedKey(91).child(i));
        evolve(small, env, 0.0, 2.0, MutationModel::none(1), SeedKey(92).child(i));
        in_region = 0;
        for (const LookdownParticle& p : small.particles)
            in_region += p.location[0] < 2.5;
        direct_counts.push_back(in_region);
    }
    CHECK(stats::count_homogeneity_pvalue(restricted_counts, direct_counts) > 0.01);
}

TEST_CASE("lookdown genealogy equality with the quenched coalescent (small)") {
    const Domain dom = Domain::make_torus(2, {5.0, 5.0});
    const EventModel model = fixed_ball_model(0.5);
    const std::vector<Point> sample{Point(2.3, 2.5), Point(2.9, 2.5)};

    std::vector<double> ld_times, co_times;
    int ld_merged = 0, co_merged = 0;
    const int n = 600;
    for (int i = 0; i < n; ++i) {
        const SeedKey key = SeedKey(93).child(i);
        const Environment env = generate_environment(model, {0.0, 1.5}, dom, key.child("omega"));
        LookdownState s = init_state(dom, 25.0, TypeKernel::uniform({1.0}), key.child("init"));
        const EvolveResult run =
            evolve(s, env, 0.0, 1.5, MutationModel::none(1), key.child("evolve"));
        const std::vector<int> idx = nearest_particles(s, sample, 0.6, dom);
        const auto merge = first_merge_backward_time(run.records, idx[0], idx[1], 1.5);
        if (merge) {
            ++ld_merged;
            ld_times.push_back(*merge);
        }
        std::vector<Point> start{s.particles[static_cast<std::size_t>(idx[0])].location,
                                 s.particles[static_cast<std::size_t>(idx[1])].location};
        const MarkedPartition result = run_quenched(MarkedPartition::singletons(start), env, 1.5,
                                                    1.5, key.child("bw"));
        if (result.block_count() == 1) {
            ++co_merged;
            for (const MergeRecord& rec : result.history) {
                std::size_t labels = 0;
                for (const auto& set : rec.merged) labels += set.size();
                if (labels == 2) {
                    co_times.push_back(rec.h);
                    break;
                }
            }
        }
    }
    REQUIRE(ld_merged > 50);
    const double p1 = ld_merged / static_cast<double>(n);
    const double p2 = co_merged / static_cast<double>(n);
    const double pooled = 0.5 * (p1 + p2);
    CHECK(std::abs(p1 - p2) < 3.0 * std::sqrt(pooled * (1 - pooled) * 2.0 / n));
    CHECK(stats::ks_two_sample_pvalue(ld_times, co_times) > 0.01);
}

TEST_CASE("state csv snapshot shape") {
    const Domain dom = Domain::make_torus(2, {5.0, 5.0});
    const LookdownState s = manual_state({{0.5, Point(1.0, 2.0), 1}}, 1.0);
    const std::string csv = state_to_csv(s, dom);
    CHECK(csv.find("level,x,y,type\n") == 0);
    CHECK(csv.find(",1,") != std::string::npos);
}
