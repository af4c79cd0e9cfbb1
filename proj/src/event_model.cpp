#include "slfv/event_model.hpp"

#include <cmath>
#include <stdexcept>

namespace slfv {

RadiusLaw RadiusLaw::point_mass(double r) { return mixture({r}, {1.0}); }

RadiusLaw RadiusLaw::mixture(std::vector<double> radii, std::vector<double> weights) {
    if (radii.empty() || radii.size() != weights.size())
        throw std::invalid_argument("radius law: radii and weights must match and be non-empty");
    double total = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw std::invalid_argument("radius law: radii must be positive");
        if (!(weights[i] > 0.0)) throw std::invalid_argument("radius law: weights must be positive");
        total += weights[i];
    }
    RadiusLaw law;
    law.radii = std::move(radii);
    law.weights = std::move(weights);
    for (double& w : law.weights) w /= total;
    return law;
}

double RadiusLaw::max_radius() const {
    double m = 0.0;
    for (double r : radii) m = std::max(m, r);
    return m;
}

double RadiusLaw::mean_pow(double p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) s += weights[i] * std::pow(radii[i], p);
    return s;
}

double RadiusLaw::sample(Rng& rng) const {
    if (radii.size() == 1) return radii[0];
    return radii[rng.discrete(weights.data(), weights.size())];
}

ImpactLaw ImpactLaw::point_mass(double u) {
    if (!(u > 0.0) || u > 1.0) throw std::invalid_argument("impact law: u must be in (0,1]");
    ImpactLaw law;
    law.kind = Kind::point;
    law.u0 = u;
    return law;
}

ImpactLaw ImpactLaw::beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("impact law: beta parameters");
    ImpactLaw law;
    law.kind = Kind::beta;
    law.beta_a = a;
    law.beta_b = b;
    return law;
}

double ImpactLaw::mean() const {
    return kind == Kind::point ? u0 : beta_a / (beta_a + beta_b);
}

double ImpactLaw::sample(Rng& rng) const {
    if (kind == Kind::point) return u0;
    return rng.beta(beta_a, beta_b);
}

double EventModel::gaussian_theta() const { return std::sqrt(gaussian_theta_sq); }

double EventModel::coverage_radius() const {
    return kind == ModelKind::gaussian ? gaussian_trunc_radii * gaussian_theta()
                                       : radius.max_radius();
}

double EventModel::gaussian_impact_at(double dist) const {
    if (dist > coverage_radius()) return 0.0;
    return gaussian_u0 * std::exp(-dist * dist / (2.0 * gaussian_theta_sq));
}

void EventModel::validate(const Domain& dom) const {
    if (!(rate_per_volume_time >= 0.0))
        throw std::invalid_argument("event model: rate must be nonnegative");
    switch (kind) {
    case ModelKind::multi_parent_ball: {
        if (offspring_weights.empty())
            throw std::invalid_argument("event model: offspring law required");
        double total = 0.0;
        for (double w : offspring_weights) {
            if (w < 0.0) throw std::invalid_argument("event model: offspring weights");
            total += w;
        }
        if (!(total > 0.0)) throw std::invalid_argument("event model: offspring weights");
        [[fallthrough]];
    }
    case ModelKind::ball:
        if (radius.radii.empty()) throw std::invalid_argument("event model: radius law required");
        break;
    case ModelKind::gaussian:
        if (!(gaussian_theta_sq > 0.0) || !(gaussian_alpha > 0.0) ||
            !(gaussian_trunc_radii > 0.0) || !(gaussian_u0 > 0.0) || gaussian_u0 > 1.0)
            throw std::invalid_argument("event model: gaussian parameters");
        if (dom.kind != DomainKind::torus)
            throw std::invalid_argument("event model: gaussian variant supported on torus only");
        if (coverage_radius() * std::max(1.0, gaussian_alpha) > 0.5 * dom.min_side())
            throw std::invalid_argument(
                "event model: gaussian truncation radius exceeds half the torus side");
        break;
    }
}

double jump_rate(const Point& x, const EventModel& model, const Domain& dom) {
    if (model.kind == ModelKind::gaussian) {
        // Integral of the (truncated) killing profile over event centres.
        const double theta = model.gaussian_theta();
        const double rt = model.gaussian_trunc_radii;
        double integral = 1.0;
        if (dom.dimension == 2) {
            integral = 2.0 * 3.14159265358979323846 * model.gaussian_theta_sq *
                       (1.0 - std::exp(-0.5 * rt * rt));
        } else {
            integral = theta * std::sqrt(2.0 * 3.14159265358979323846) *
                       std::erf(rt / std::sqrt(2.0));
        }
        return model.rate_per_volume_time * model.gaussian_u0 * integral;
    }
    double vol = 0.0;
    for (std::size_t m = 0; m < model.radius.radii.size(); ++m)
        vol += model.radius.weights[m] * ball_volume(x, model.radius.radii[m], dom);
    return model.rate_per_volume_time * model.impact.mean() * vol;
}

double gaussian_jump_rate_untruncated(const EventModel& model, const Domain& dom) {
    if (model.kind != ModelKind::gaussian)
        throw std::invalid_argument("gaussian_jump_rate_untruncated: not a gaussian model");
    const double theta = model.gaussian_theta();
    double integral = 1.0;
    for (int i = 0; i < dom.dimension; ++i) {
        const double L = dom.side[static_cast<std::size_t>(i)];
        integral *= theta * std::sqrt(2.0 * 3.14159265358979323846) *
                    std::erf(L / (2.0 * std::sqrt(2.0) * theta));
    }
    return model.rate_per_volume_time * model.gaussian_u0 * integral;
}

double integrability_value(const EventModel& model, const Domain& dom) {
    const double d = static_cast<double>(dom.dimension);
    if (model.kind == ModelKind::gaussian) {
        return model.rate_per_volume_time * model.gaussian_u0 *
               std::pow(model.gaussian_theta(), d);
    }
    return model.rate_per_volume_time * model.impact.mean() * model.radius.mean_pow(d);
}

} // namespace slfv
