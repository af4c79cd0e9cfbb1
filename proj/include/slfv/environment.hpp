#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "slfv/event_model.hpp"
#include "slfv/geometry.hpp"
#include "slfv/rng.hpp"

namespace slfv {

/// A single reproduction event.  For the gaussian variant `r` stores the
/// kernel width theta.  Parental marks (y, label) are present only after
/// extend_with_parents.
struct Event {
    double t = 0.0;
    Point z;
    double r = 0.0;
    double u = 0.0;
    int n_parents = 1;
    Point y;
    double label = 0.0;
};

struct TimeWindow {
    double t0 = 0.0;
    double t1 = 0.0;
    [[nodiscard]] double duration() const { return t1 - t0; }
    /// Containment of the half-open query interval (a, b].
    [[nodiscard]] bool covers(double a, double b) const { return a >= t0 && b <= t1; }
};

/// A realized configuration of events on a space-time window, time-sorted
/// and spatially indexed.  Immutable after generation; shared read-only
/// across threads.
class Environment {
  public:
    Environment() = default;
    Environment(Domain dom, EventModel model, TimeWindow window, SeedKey seed,
                std::vector<Event> events, bool marked);

    [[nodiscard]] const Domain& domain() const { return dom_; }
    [[nodiscard]] const EventModel& model() const { return model_; }
    [[nodiscard]] const TimeWindow& window() const { return window_; }
    [[nodiscard]] SeedKey seed_key() const { return seed_; }
    [[nodiscard]] bool marked() const { return marked_; }
    [[nodiscard]] const std::vector<Event>& events() const { return events_; }
    [[nodiscard]] const Event& event(int id) const {
        return events_[static_cast<std::size_t>(id)];
    }

    /// Ids of the events with t in (t0, t1] whose range covers x, in
    /// ascending time order.  Throws if (t0, t1] leaves the window.
    [[nodiscard]] std::vector<int> events_covering(const Point& x, double t0, double t1) const;

    /// Same query without the spatial index; the correctness oracle.
    [[nodiscard]] std::vector<int> events_covering_scan(const Point& x, double t0,
                                                        double t1) const;

    /// Candidate event ids near x (superset filter used by hot loops).
    [[nodiscard]] const std::vector<int>& cell_events(const Point& x) const;

    [[nodiscard]] double coverage_radius(const Event& e) const {
        return model_.kind == ModelKind::gaussian ? model_.coverage_radius() : e.r;
    }

  private:
    void build_index();
    [[nodiscard]] std::size_t cell_of(const Point& x) const;

    Domain dom_;
    EventModel model_;
    TimeWindow window_;
    SeedKey seed_;
    bool marked_ = false;
    std::vector<Event> events_;

    std::array<int, 2> grid_n_{1, 1};
    std::array<double, 2> cell_size_{0.0, 0.0};
    std::vector<std::vector<int>> cells_;
};

/// Draws a Poisson environment of events on window x dom.
Environment generate_environment(const EventModel& model, TimeWindow window, const Domain& dom,
                                 SeedKey seed);

/// Adds parental location and label marks; original fields are unchanged.
Environment extend_with_parents(const Environment& env, SeedKey seed);

/// Text serialization (17 significant digits; round-trips bit-exactly).
void write_environment(const Environment& env, std::ostream& os);
Environment read_environment(std::istream& is);
std::string environment_to_string(const Environment& env);
Environment environment_from_string(const std::string& text);

/// FNV-1a hash of the serialized form; used to assert that two consumers
/// saw the identical environment.
std::uint64_t environment_hash(const Environment& env);

} // namespace slfv
