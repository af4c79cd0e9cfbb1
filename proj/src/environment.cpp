#include "slfv/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace slfv {

namespace {

void format_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

} // namespace

Environment::Environment(Domain dom, EventModel model, TimeWindow window, SeedKey seed,
                         std::vector<Event> events, bool marked)
    : dom_(dom), model_(std::move(model)), window_(window), seed_(seed), marked_(marked),
      events_(std::move(events)) {
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    build_index();
}

void Environment::build_index() {
    const double r_eff = std::max(model_.coverage_radius(), 1e-12);
    for (int i = 0; i < dom_.dimension; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double L = dom_.side[ui];
        int n = static_cast<int>(std::floor(L / r_eff));
        n = std::clamp(n, 1, 64);
        grid_n_[ui] = n;
        cell_size_[ui] = L / n;
    }
    if (dom_.dimension == 1) grid_n_[1] = 1;
    cells_.assign(static_cast<std::size_t>(grid_n_[0]) * static_cast<std::size_t>(grid_n_[1]),
                  {});

    for (int id = 0; id < static_cast<int>(events_.size()); ++id) {
        const Event& e = events_[static_cast<std::size_t>(id)];
        const double r = coverage_radius(e);
        std::array<int, 2> from{0, 0}, to{0, 0};
        for (int i = 0; i < dom_.dimension; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const double w = cell_size_[ui];
            const int n = grid_n_[ui];
            int a = static_cast<int>(std::floor((e.z[i] - r) / w));
            int b = static_cast<int>(std::floor((e.z[i] + r) / w));
            if (dom_.kind == DomainKind::box) {
                a = std::clamp(a, 0, n - 1);
                b = std::clamp(b, 0, n - 1);
            } else if (b - a + 1 >= n) {
                a = 0;
                b = n - 1;
            }
            from[ui] = a;
            to[ui] = b;
        }
        for (int cy = from[1]; cy <= to[1]; ++cy) {
            for (int cx = from[0]; cx <= to[0]; ++cx) {
                const int mx = ((cx % grid_n_[0]) + grid_n_[0]) % grid_n_[0];
                const int my = ((cy % grid_n_[1]) + grid_n_[1]) % grid_n_[1];
                const Point lo(mx * cell_size_[0], my * cell_size_[1]);
                const Point hi((mx + 1) * cell_size_[0], (my + 1) * cell_size_[1]);
                if (point_box_distance(e.z, lo, hi, dom_) <= r) {
                    auto& bucket = cells_[static_cast<std::size_t>(my) *
                                              static_cast<std::size_t>(grid_n_[0]) +
                                          static_cast<std::size_t>(mx)];
                    if (bucket.empty() || bucket.back() != id) bucket.push_back(id);
                }
            }
        }
    }
}

std::size_t Environment::cell_of(const Point& x) const {
    std::array<int, 2> idx{0, 0};
    for (int i = 0; i < dom_.dimension; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        int c = static_cast<int>(std::floor(x[i] / cell_size_[ui]));
        c = dom_.kind == DomainKind::torus ? ((c % grid_n_[ui]) + grid_n_[ui]) % grid_n_[ui]
                                           : std::clamp(c, 0, grid_n_[ui] - 1);
        idx[ui] = c;
    }
    return static_cast<std::size_t>(idx[1]) * static_cast<std::size_t>(grid_n_[0]) +
           static_cast<std::size_t>(idx[0]);
}

const std::vector<int>& Environment::cell_events(const Point& x) const {
    return cells_[cell_of(x)];
}

std::vector<int> Environment::events_covering(const Point& x, double t0, double t1) const {
    if (t0 > t1 || !window_.covers(t0, t1))
        throw std::invalid_argument("events_covering: query interval leaves the window");
    std::vector<int> out;
    for (int id : cells_[cell_of(x)]) {
        const Event& e = events_[static_cast<std::size_t>(id)];
        if (e.t <= t0 || e.t > t1) continue;
        if (distance(x, e.z, dom_) <= coverage_radius(e)) out.push_back(id);
    }
    return out;
}

std::vector<int> Environment::events_covering_scan(const Point& x, double t0, double t1) const {
    if (t0 > t1 || !window_.covers(t0, t1))
        throw std::invalid_argument("events_covering: query interval leaves the window");
    std::vector<int> out;
    for (int id = 0; id < static_cast<int>(events_.size()); ++id) {
        const Event& e = events_[static_cast<std::size_t>(id)];
        if (e.t <= t0 || e.t > t1) continue;
        if (distance(x, e.z, dom_) <= coverage_radius(e)) out.push_back(id);
    }
    return out;
}

Environment generate_environment(const EventModel& model, TimeWindow window, const Domain& dom,
                                 SeedKey seed) {
    model.validate(dom);
    if (!(window.duration() > 0.0))
        throw std::invalid_argument("generate_environment: window duration must be positive");

    Rng rng(seed.child("environment"));
    const double mean = model.rate_per_volume_time * window.duration() * dom.volume();
    const std::uint64_t count = rng.poisson(mean);

    std::vector<Event> events;
    events.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Event e;
        e.t = window.t0 + window.duration() * rng.uniform01_pos();
        for (int a = 0; a < dom.dimension; ++a)
            e.z[a] = rng.uniform(0.0, dom.side[static_cast<std::size_t>(a)]);
        if (model.kind == ModelKind::gaussian) {
            e.r = model.gaussian_theta();
            e.u = model.gaussian_u0;
        } else {
            e.r = model.radius.sample(rng);
            e.u = model.impact.sample(rng);
        }
        if (model.kind == ModelKind::multi_parent_ball) {
            e.n_parents = 1 + static_cast<int>(rng.discrete(model.offspring_weights.data(),
                                                            model.offspring_weights.size()));
        }
        events.push_back(e);
    }
    return Environment(dom, model, window, seed, std::move(events), false);
}

Environment extend_with_parents(const Environment& env, SeedKey seed) {
    if (env.model().kind == ModelKind::gaussian)
        throw std::invalid_argument(
            "extend_with_parents: gaussian events draw parents at application time");
    std::vector<Event> events = env.events();
    const SeedKey marks = seed.child("marks");
    for (std::size_t i = 0; i < events.size(); ++i) {
        Rng rng(marks.child(i));
        events[i].y = sample_uniform_ball(events[i].z, events[i].r, env.domain(), rng);
        events[i].label = rng.uniform01();
    }
    return Environment(env.domain(), env.model(), env.window(), env.seed_key(),
                       std::move(events), true);
}

std::string environment_to_string(const Environment& env) {
    std::string out;
    out.reserve(64 * env.events().size() + 256);
    out += "slfv-environment-v1 ";

    const Domain& dom = env.domain();
    out += "domain ";
    out += dom.kind == DomainKind::torus ? "torus" : "box";
    out += ' ';
    out += std::to_string(dom.dimension);
    for (int i = 0; i < dom.dimension; ++i) {
        out += ' ';
        format_double(out, dom.side[static_cast<std::size_t>(i)]);
    }
    out += ' ';

    const EventModel& m = env.model();
    out += "model ";
    switch (m.kind) {
    case ModelKind::ball:
        out += "ball";
        break;
    case ModelKind::gaussian:
        out += "gaussian";
        break;
    case ModelKind::multi_parent_ball:
        out += "multi_parent_ball";
        break;
    }
    out += ' ';
    format_double(out, m.rate_per_volume_time);
    if (m.kind == ModelKind::gaussian) {
        out += ' ';
        format_double(out, m.gaussian_u0);
        out += ' ';
        format_double(out, m.gaussian_theta_sq);
        out += ' ';
        format_double(out, m.gaussian_alpha);
        out += ' ';
        format_double(out, m.gaussian_trunc_radii);
    } else {
        out += " radii " + std::to_string(m.radius.radii.size());
        for (std::size_t i = 0; i < m.radius.radii.size(); ++i) {
            out += ' ';
            format_double(out, m.radius.radii[i]);
            out += ' ';
            format_double(out, m.radius.weights[i]);
        }
        out += " impact ";
        if (m.impact.kind == ImpactLaw::Kind::point) {
            out += "point ";
            format_double(out, m.impact.u0);
        } else {
            out += "beta ";
            format_double(out, m.impact.beta_a);
            out += ' ';
            format_double(out, m.impact.beta_b);
        }
        if (m.kind == ModelKind::multi_parent_ball) {
            out += " offspring " + std::to_string(m.offspring_weights.size());
            for (double w : m.offspring_weights) {
                out += ' ';
                format_double(out, w);
            }
        }
    }
    out += ' ';

    out += "window ";
    format_double(out, env.window().t0);
    out += ' ';
    format_double(out, env.window().t1);
    out += " seed " + std::to_string(env.seed_key().raw());
    out += " marked ";
    out += env.marked() ? '1' : '0';
    out += " count " + std::to_string(env.events().size());
    out += '\n';

    for (const Event& e : env.events()) {
        format_double(out, e.t);
        out += ' ';
        for (int i = 0; i < dom.dimension; ++i) {
            format_double(out, e.z[i]);
            out += ' ';
        }
        format_double(out, e.r);
        out += ' ';
        format_double(out, e.u);
        if (m.kind == ModelKind::multi_parent_ball) {
            out += ' ';
            out += std::to_string(e.n_parents);
        }
        if (env.marked()) {
            out += ' ';
            for (int i = 0; i < dom.dimension; ++i) {
                format_double(out, e.y[i]);
                out += ' ';
            }
            format_double(out, e.label);
        }
        out += '\n';
    }
    return out;
}

void write_environment(const Environment& env, std::ostream& os) {
    os << environment_to_string(env);
}

Environment read_environment(std::istream& is) {
    std::string tag;
    is >> tag;
    if (tag != "slfv-environment-v1")
        throw std::runtime_error("environment parse: unknown format tag '" + tag + "'");

    auto expect = [&is](const char* word) {
        std::string s;
        is >> s;
        if (s != word) throw std::runtime_error("environment parse: expected '" +
                                                std::string(word) + "', got '" + s + "'");
    };

    expect("domain");
    std::string kind;
    int d = 0;
    is >> kind >> d;
    std::array<double, 2> sides{1.0, 1.0};
    for (int i = 0; i < d; ++i) is >> sides[static_cast<std::size_t>(i)];
    const Domain dom = kind == "torus" ? Domain::make_torus(d, sides)
                                       : Domain::make_box(d, sides);

    expect("model");
    std::string mkind;
    is >> mkind;
    EventModel model;
    is >> model.rate_per_volume_time;
    if (mkind == "gaussian") {
        model.kind = ModelKind::gaussian;
        is >> model.gaussian_u0 >> model.gaussian_theta_sq >> model.gaussian_alpha >>
            model.gaussian_trunc_radii;
    } else {
        model.kind = mkind == "ball" ? ModelKind::ball : ModelKind::multi_parent_ball;
        if (mkind != "ball" && mkind != "multi_parent_ball")
            throw std::runtime_error("environment parse: bad model kind '" + mkind + "'");
        expect("radii");
        std::size_t nr = 0;
        is >> nr;
        std::vector<double> radii(nr), weights(nr);
        for (std::size_t i = 0; i < nr; ++i) is >> radii[i] >> weights[i];
        model.radius = RadiusLaw::mixture(std::move(radii), std::move(weights));
        expect("impact");
        std::string ikind;
        is >> ikind;
        if (ikind == "point") {
            double u = 0.0;
            is >> u;
            model.impact = ImpactLaw::point_mass(u);
        } else {
            double a = 0.0, b = 0.0;
            is >> a >> b;
            model.impact = ImpactLaw::beta(a, b);
        }
        if (model.kind == ModelKind::multi_parent_ball) {
            expect("offspring");
            std::size_t no = 0;
            is >> no;
            model.offspring_weights.resize(no);
            for (std::size_t i = 0; i < no; ++i) is >> model.offspring_weights[i];
        }
    }

    expect("window");
    TimeWindow window;
    is >> window.t0 >> window.t1;
    expect("seed");
    std::uint64_t raw = 0;
    is >> raw;
    expect("marked");
    int marked = 0;
    is >> marked;
    expect("count");
    std::size_t count = 0;
    is >> count;

    std::vector<Event> events(count);
    for (std::size_t i = 0; i < count; ++i) {
        Event& e = events[i];
        is >> e.t;
        for (int a = 0; a < d; ++a) is >> e.z[a];
        is >> e.r >> e.u;
        if (model.kind == ModelKind::multi_parent_ball) is >> e.n_parents;
        if (marked != 0) {
            for (int a = 0; a < d; ++a) is >> e.y[a];
            is >> e.label;
        }
    }
    if (!is) throw std::runtime_error("environment parse: truncated event list");
    return Environment(dom, std::move(model), window, SeedKey::from_raw(raw),
                       std::move(events), marked != 0);
}

Environment environment_from_string(const std::string& text) {
    std::istringstream is(text);
    return read_environment(is);
}

std::uint64_t environment_hash(const Environment& env) {
    const std::string bytes = environment_to_string(env);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace slfv
