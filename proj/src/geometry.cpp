#include "slfv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>
#include <stdexcept>

namespace slfv {

namespace {

void check_sides(int d, const std::array<double, 2>& lengths) {
    if (d != 1 && d != 2) throw std::invalid_argument("domain: dimension must be 1 or 2");
    for (int i = 0; i < d; ++i) {
        if (!(lengths[static_cast<std::size_t>(i)] > 0.0))
            throw std::invalid_argument("domain: side lengths must be positive");
    }
}

// Area of [0,a] x [0,b] ∩ {x^2 + y^2 <= r^2}.
double quadrant_disk_area(double a, double b, double r) {
    if (r <= 0.0 || a <= 0.0 || b <= 0.0) return 0.0;
    a = std::min(a, r);
    b = std::min(b, r);
    if (a * a + b * b <= r * r) return a * b;
    const auto antideriv = [r](double x) {
        return 0.5 * (x * std::sqrt(std::max(r * r - x * x, 0.0)) + r * r * std::asin(x / r));
    };
    const double x0 = std::sqrt(std::max(r * r - b * b, 0.0));
    return b * x0 + antideriv(a) - antideriv(x0);
}

// Length of {x in [lo,hi] : circular distance(x, center) <= h} on a circle of
// circumference L.  [lo,hi] is assumed to lie within [0,L].
double arc_interval_length(double center, double h, double lo, double hi, double L) {
    if (h <= 0.0) return 0.0;
    if (2.0 * h >= L) return hi - lo;
    double s = std::fmod(center - h, L);
    if (s < 0.0) s += L;
    const double e = s + 2.0 * h;
    const auto overlap = [lo, hi](double x0, double x1) {
        return std::max(0.0, std::min(x1, hi) - std::max(x0, lo));
    };
    if (e <= L) return overlap(s, e);
    return overlap(s, L) + overlap(0.0, e - L);
}

double plain_interval_length(double center, double h, double lo, double hi) {
    if (h <= 0.0) return 0.0;
    return std::max(0.0, std::min(center + h, hi) - std::max(center - h, lo));
}

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double m, double b, double fa, double fm,
                            double fb, double whole, double eps, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           adaptive_simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double rel_tol) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Guard against a vanishing first estimate on peaked integrands.
    const double scale = std::max(std::abs(whole), 1e-30);
    return adaptive_simpson_rec(f, a, m, b, fa, fm, fb, whole, rel_tol * scale, 48);
}

} // namespace

Domain Domain::make_torus(int d, std::array<double, 2> lengths) {
    check_sides(d, lengths);
    Domain dom;
    dom.kind = DomainKind::torus;
    dom.dimension = d;
    dom.side = lengths;
    if (d == 1) dom.side[1] = 1.0;
    return dom;
}

Domain Domain::make_box(int d, std::array<double, 2> lengths) {
    Domain dom = make_torus(d, lengths);
    dom.kind = DomainKind::box;
    return dom;
}

double Domain::min_side() const {
    double m = side[0];
    for (int i = 1; i < dimension; ++i) m = std::min(m, side[static_cast<std::size_t>(i)]);
    return m;
}

bool Domain::contains(const Point& p) const {
    for (int i = 0; i < dimension; ++i) {
        if (p[i] < 0.0 || p[i] > side[static_cast<std::size_t>(i)]) return false;
    }
    return true;
}

Point Domain::wrap(const Point& p) const {
    if (kind == DomainKind::box) return p;
    Point q = p;
    for (int i = 0; i < dimension; ++i) {
        const double L = side[static_cast<std::size_t>(i)];
        double x = std::fmod(q[i], L);
        if (x < 0.0) x += L;
        q[i] = x;
    }
    return q;
}

double Domain::wrap_delta(double a, double b, int axis) const {
    double diff = a - b;
    if (kind == DomainKind::torus) {
        const double L = side[static_cast<std::size_t>(axis)];
        diff = std::remainder(diff, L);
    }
    return diff;
}

double distance(const Point& a, const Point& b, const Domain& dom) {
    double sum_sq = 0.0;
    for (int i = 0; i < dom.dimension; ++i) {
        const double diff = dom.wrap_delta(a[i], b[i], i);
        sum_sq += diff * diff;
    }
    return std::sqrt(sum_sq);
}

double ball_volume(const Point& z, double r, const Domain& dom) {
    if (r <= 0.0) return 0.0;
    if (dom.kind == DomainKind::torus) {
        if (dom.dimension == 1) return std::min(2.0 * r, dom.side[0]);
        // Disk ∩ centered wrap rectangle; four congruent quadrants.
        return 4.0 * quadrant_disk_area(0.5 * dom.side[0], 0.5 * dom.side[1], r);
    }
    const Point lo(0.0, 0.0);
    const Point hi(dom.side[0], dom.side[1]);
    return ball_box_volume(z, r, lo, hi, dom);
}

double ball_box_volume(const Point& z, double r, const Point& lo, const Point& hi,
                       const Domain& dom) {
    if (r <= 0.0) return 0.0;
    const bool wrapped = dom.kind == DomainKind::torus;
    if (dom.dimension == 1) {
        return wrapped ? arc_interval_length(z[0], r, lo[0], hi[0], dom.side[0])
                       : plain_interval_length(z[0], r, lo[0], hi[0]);
    }
    const double L1 = dom.side[1];
    const auto chord = [&](double x) {
        const double dx = dom.wrap_delta(x, z[0], 0);
        const double h_sq = r * r - dx * dx;
        if (h_sq <= 0.0) return 0.0;
        const double h = std::sqrt(h_sq);
        return wrapped ? arc_interval_length(z[1], h, lo[1], hi[1], L1)
                       : plain_interval_length(z[1], h, lo[1], hi[1]);
    };

    // Restrict the x-integration to the ball's support and split it at every
    // kink of the chord function, so the panel-wise quadrature never steps
    // over a narrow feature.
    std::vector<std::pair<double, double>> pieces;
    if (wrapped) {
        const double L0 = dom.side[0];
        const double reach = std::min(r, 0.5 * L0);
        double s = std::fmod(z[0] - reach, L0);
        if (s < 0.0) s += L0;
        const double e = s + 2.0 * reach;
        const auto clip = [&](double x0, double x1) {
            const double a = std::max(x0, lo[0]);
            const double b = std::min(x1, hi[0]);
            if (b > a) pieces.emplace_back(a, b);
        };
        if (2.0 * reach >= L0) {
            pieces.emplace_back(lo[0], hi[0]);
        } else if (e <= L0) {
            clip(s, e);
        } else {
            clip(s, L0);
            clip(0.0, e - L0);
        }
    } else {
        const double a = std::max(lo[0], z[0] - r);
        const double b = std::min(hi[0], z[0] + r);
        if (b > a) pieces.emplace_back(a, b);
    }

    // Chord half-widths at which the cross-section kinks.
    std::vector<double> critical_w;
    if (wrapped) {
        const double d_lo = std::fmod(std::fmod(z[1] - lo[1], L1) + L1, L1);
        const double d_hi = std::fmod(std::fmod(z[1] - hi[1], L1) + L1, L1);
        critical_w = {d_lo, L1 - d_lo, d_hi, L1 - d_hi, 0.5 * L1};
    } else {
        critical_w = {std::abs(z[1] - lo[1]), std::abs(z[1] - hi[1])};
    }

    double total = 0.0;
    for (const auto& [a, b] : pieces) {
        std::vector<double> cuts{a, b};
        for (double w : critical_w) {
            if (w < 0.0 || w >= r) continue;
            const double dx = std::sqrt(r * r - w * w);
            for (const double x : {z[0] - dx, z[0] + dx}) {
                if (!wrapped) {
                    if (x > a && x < b) cuts.push_back(x);
                    continue;
                }
                double xm = std::fmod(x, dom.side[0]);
                if (xm < 0.0) xm += dom.side[0];
                if (xm > a && xm < b) cuts.push_back(xm);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += adaptive_simpson(chord, cuts[i], cuts[i + 1], 1e-10);
    }
    return total;
}

double point_box_distance(const Point& z, const Point& lo, const Point& hi, const Domain& dom) {
    double sum_sq = 0.0;
    for (int i = 0; i < dom.dimension; ++i) {
        double d = 0.0;
        if (dom.kind == DomainKind::torus) {
            const double L = dom.side[static_cast<std::size_t>(i)];
            double x = std::fmod(z[i], L);
            if (x < 0.0) x += L;
            if (x < lo[i] || x > hi[i]) {
                const double da = std::abs(std::remainder(x - lo[i], L));
                const double db = std::abs(std::remainder(x - hi[i], L));
                d = std::min(da, db);
            }
        } else {
            d = std::max({lo[i] - z[i], z[i] - hi[i], 0.0});
        }
        sum_sq += d * d;
    }
    return std::sqrt(sum_sq);
}

Point sample_uniform_ball(const Point& z, double r, const Domain& dom, Rng& rng) {
    // Whole-domain fast path: the ball covers everything.
    double far_sq = 0.0;
    for (int i = 0; i < dom.dimension; ++i) {
        const double L = dom.side[static_cast<std::size_t>(i)];
        const double reach = dom.kind == DomainKind::torus
                                 ? 0.5 * L
                                 : std::max(z[i], L - z[i]);
        far_sq += reach * reach;
    }
    if (r * r >= far_sq) {
        Point p;
        for (int i = 0; i < dom.dimension; ++i)
            p[i] = rng.uniform(0.0, dom.side[static_cast<std::size_t>(i)]);
        return p;
    }

    for (;;) {
        Point delta;
        if (dom.dimension == 1) {
            delta[0] = rng.uniform(-r, r);
        } else {
            const double ang = rng.uniform(0.0, 6.283185307179586476925287);
            const double rad = r * std::sqrt(rng.uniform01());
            delta[0] = rad * std::cos(ang);
            delta[1] = rad * std::sin(ang);
        }
        if (dom.kind == DomainKind::torus) {
            bool ok = true;
            for (int i = 0; i < dom.dimension; ++i) {
                if (std::abs(delta[i]) > 0.5 * dom.side[static_cast<std::size_t>(i)]) ok = false;
            }
            if (!ok) continue;
            Point p = z;
            for (int i = 0; i < dom.dimension; ++i) p[i] += delta[i];
            return dom.wrap(p);
        }
        Point p = z;
        for (int i = 0; i < dom.dimension; ++i) p[i] += delta[i];
        if (dom.contains(p)) return p;
    }
}

} // namespace slfv
