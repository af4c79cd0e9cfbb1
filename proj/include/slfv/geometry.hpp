#pragma once

#include <array>
#include <cstdint>

#include "slfv/rng.hpp"

namespace slfv {

/// A location in the geographical domain.  Only the first `dimension`
/// coordinates of a Point are meaningful.
struct Point {
    std::array<double, 2> c{0.0, 0.0};

    Point() = default;
    explicit Point(double x) : c{x, 0.0} {}
    Point(double x, double y) : c{x, y} {}

    double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
    bool operator==(const Point&) const = default;
};

enum class DomainKind : std::uint8_t { torus, box };

// The geographical space: a flat torus or a box in R^d, d in {1,2}.
// On the torus distances wrap coordinatewise; the box has hard edges and
// event balls are simply clipped against them.
struct Domain {
    DomainKind kind = DomainKind::torus;
    int dimension = 2;
    std::array<double, 2> side{1.0, 1.0};

    static Domain make_torus(int d, std::array<double, 2> lengths);
    static Domain make_box(int d, std::array<double, 2> lengths);

    [[nodiscard]] double volume() const {
        double v = 1.0;
        for (int i = 0; i < dimension; ++i) v *= side[static_cast<std::size_t>(i)];
        return v;
    }

    [[nodiscard]] double min_side() const;

    [[nodiscard]] bool contains(const Point& p) const;

    /// Maps a point back into the fundamental domain (torus only; boxes are
    /// left untouched).
    [[nodiscard]] Point wrap(const Point& p) const;

    /// Signed coordinate difference a-b, wrapped into [-L/2, L/2] on the torus.
    [[nodiscard]] double wrap_delta(double a, double b, int axis) const;
};

double distance(const Point& a, const Point& b, const Domain& dom);

/// Lebesgue measure of {x in dom : distance(x, z) <= r}.  Exact closed form
/// on the torus and for d=1 boxes; adaptive quadrature (rel. tol 1e-9) for
/// clipped disks on d=2 boxes.
double ball_volume(const Point& z, double r, const Domain& dom);

/// Lebesgue measure of B(z,r) intersected with the axis-aligned box
/// [lo,hi] (given in domain coordinates; torus balls may wrap around).
double ball_box_volume(const Point& z, double r, const Point& lo, const Point& hi,
                       const Domain& dom);

/// Distance from z to the box [lo,hi], zero inside (torus-aware).
double point_box_distance(const Point& z, const Point& lo, const Point& hi, const Domain& dom);

/// Uniform draw from B(z,r) ∩ dom by rejection from the unclipped ball.
Point sample_uniform_ball(const Point& z, double r, const Domain& dom, Rng& rng);

} // namespace slfv
