#pragma once

#include <cstdint>
#include <vector>

#include "slfv/geometry.hpp"
#include "slfv/rng.hpp"

namespace slfv {

/// Law of the event radius: a point mass or a finite mixture.  Bounded
/// support is required so that environments can be materialized on finite
/// windows with an r_max padding.
struct RadiusLaw {
    std::vector<double> radii;
    std::vector<double> weights;

    static RadiusLaw point_mass(double r);
    static RadiusLaw mixture(std::vector<double> radii, std::vector<double> weights);

    [[nodiscard]] double max_radius() const;
    [[nodiscard]] double mean_pow(double p) const;
    double sample(Rng& rng) const;
};

/// Law of the impact u: the replaced fraction of the local population.
struct ImpactLaw {
    enum class Kind : std::uint8_t { point, beta };
    Kind kind = Kind::point;
    double u0 = 0.5;
    double beta_a = 1.0;
    double beta_b = 1.0;

    static ImpactLaw point_mass(double u);
    static ImpactLaw beta(double a, double b);

    [[nodiscard]] double mean() const;
    [[nodiscard]] bool can_be_one() const { return kind == Kind::point && u0 == 1.0; }
    double sample(Rng& rng) const;
};

enum class ModelKind : std::uint8_t { ball, gaussian, multi_parent_ball };

struct EventModel {
    ModelKind kind = ModelKind::ball;

    /// Events per unit volume per unit time (lambda_e, or c for gaussian).
    double rate_per_volume_time = 1.0;

    // ball / multi_parent_ball
    RadiusLaw radius = RadiusLaw::point_mass(1.0);
    ImpactLaw impact = ImpactLaw::point_mass(0.5);

    // gaussian
    double gaussian_u0 = 1.0;
    double gaussian_theta_sq = 1.0;
    double gaussian_alpha = 1.0;
    double gaussian_trunc_radii = 5.0; // killing support cutoff, in units of theta

    // multi_parent_ball: weights of the offspring-parent count law on {1,..,N_max}
    std::vector<double> offspring_weights;

    [[nodiscard]] double gaussian_theta() const;
    /// Largest distance at which an event can touch a lineage.
    [[nodiscard]] double coverage_radius() const;
    /// Killing probability at distance `dist` from a gaussian event centre.
    [[nodiscard]] double gaussian_impact_at(double dist) const;

    void validate(const Domain& dom) const;
};

/// Rate at which a single lineage at x is affected by some event.
double jump_rate(const Point& x, const EventModel& model, const Domain& dom);

/// Gaussian variant only: the rate without the kernel truncation (erf closed
/// form on the torus).  The gap to jump_rate quantifies the truncation error.
double gaussian_jump_rate_untruncated(const EventModel& model, const Domain& dom);

/// lambda_e * E[u * r^d]; finite by construction.
double integrability_value(const EventModel& model, const Domain& dom);

} // namespace slfv
