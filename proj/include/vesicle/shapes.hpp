#ifndef VESICLE_SHAPES_HPP
#define VESICLE_SHAPES_HPP

#include "curve_mesh.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <variant>
#include <vector>

namespace vesicle {

namespace shape {

struct Circle {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;
};

struct Ellipse {
    Vec2 center{0.0, 0.0};
    double semi_axis_x = 2.0;
    double semi_axis_y = 1.0;
};

/// Thick circular arc with rounded ends; the opening is centred on +x.
struct CShape {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;    // centreline radius
    double thickness = 0.4; // wall thickness
    double opening_angle = std::numbers::pi / 2.0;
};

/// Rounded flat capsule: a straight slab capped by half circles.
struct Cisterna {
    Vec2 center{0.0, 0.0};
    double half_length = 2.0;    // half length of the flat part
    double half_thickness = 0.3; // cap radius
};

/// Polygon vertices used as element endpoints; midpoints sit on the chords.
struct PointList {
    std::vector<Vec2> points;
};

} // namespace shape

using ShapeGeometry = std::variant<shape::Circle, shape::Ellipse, shape::CShape, shape::Cisterna,
                                   shape::PointList>;

struct ShapeSpec {
    ShapeGeometry geometry;
    int element_count = 64;
};

inline constexpr int min_element_count = 4;

namespace detail {

/// A smooth closed analytic curve with a periodic parameter.
class AnalyticCurve {
public:
    virtual ~AnalyticCurve() = default;
    virtual double period() const = 0;
    virtual Vec2 point(double u) const = 0;
    virtual Vec2 d1(double u) const = 0;
    virtual Vec2 d2(double u) const = 0;
    virtual double length() const = 0;
    virtual double param_at_arclength(double s) const = 0;
    virtual double min_radius() const = 0;

    /// Closest point to v among parameters in [ua, ub] (ub may exceed the period).
    double project(const Vec2& v, double ua, double ub) const
    {
        constexpr int samples = 32;
        double best_u = ua;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= samples; ++i) {
            const double u = ua + (ub - ua) * i / samples;
            const double d = (point(u) - v).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best_u = u;
            }
        }
        double u = best_u;
        for (int it = 0; it < 50; ++it) {
            const Vec2 r = point(u) - v;
            const Vec2 t = d1(u);
            const double g = r.dot(t);
            const double dg = t.squaredNorm() + r.dot(d2(u));
            if (!(dg > 0.0)) {
                break;
            }
            const double next = std::clamp(u - g / dg, ua, ub);
            if (std::abs(next - u) <= 1e-15 * std::max(1.0, std::abs(u))) {
                u = next;
                break;
            }
            u = next;
        }
        return u;
    }
};

/// Closed curve made of straight pieces and circular arcs, parametrized by arclength.
class PiecewiseCurve final : public AnalyticCurve {
public:
    struct Piece {
        bool arc = false;
        Vec2 origin;        // line start, or arc centre
        Vec2 direction;     // unit direction of a line
        double radius = 0;  // arc radius
        double start_angle = 0;
        double turn = 1;    // +1 counterclockwise arc, -1 clockwise
        double length = 0;
    };

    void add_line(const Vec2& from, const Vec2& to)
    {
        Piece p;
        p.origin = from;
        p.length = (to - from).norm();
        p.direction = (to - from) / p.length;
        push(p);
    }

    void add_arc(const Vec2& centre, double radius, double start_angle, double sweep)
    {
        Piece p;
        p.arc = true;
        p.origin = centre;
        p.radius = radius;
        p.start_angle = start_angle;
        p.turn = sweep >= 0 ? 1.0 : -1.0;
        p.length = std::abs(sweep) * radius;
        push(p);
    }

    double period() const override { return total_; }
    double length() const override { return total_; }
    double param_at_arclength(double s) const override { return s; }

    double min_radius() const override
    {
        double r = std::numeric_limits<double>::infinity();
        for (const Piece& p : pieces_) {
            if (p.arc) {
                r = std::min(r, p.radius);
            }
        }
        return r;
    }

    Vec2 point(double u) const override
    {
        const auto [p, s] = locate(u);
        if (!p->arc) {
            return p->origin + s * p->direction;
        }
        const double a = angle(*p, s);
        return p->origin + p->radius * Vec2(std::cos(a), std::sin(a));
    }

    Vec2 d1(double u) const override
    {
        const auto [p, s] = locate(u);
        if (!p->arc) {
            return p->direction;
        }
        const double a = angle(*p, s);
        return p->turn * Vec2(-std::sin(a), std::cos(a));
    }

    Vec2 d2(double u) const override
    {
        const auto [p, s] = locate(u);
        if (!p->arc) {
            return Vec2::Zero();
        }
        const double a = angle(*p, s);
        return -Vec2(std::cos(a), std::sin(a)) / p->radius;
    }

private:
    static double angle(const Piece& p, double s) { return p.start_angle + p.turn * s / p.radius; }

    void push(const Piece& p)
    {
        starts_.push_back(total_);
        pieces_.push_back(p);
        total_ += p.length;
    }

    std::pair<const Piece*, double> locate(double u) const
    {
        double w = std::fmod(u, total_);
        if (w < 0) {
            w += total_;
        }
        auto it = std::upper_bound(starts_.begin(), starts_.end(), w);
        const std::size_t i = static_cast<std::size_t>(std::distance(starts_.begin(), it)) - 1;
        return {&pieces_[i], w - starts_[i]};
    }

    std::vector<Piece> pieces_;
    std::vector<double> starts_;
    double total_ = 0.0;
};

class EllipseCurve final : public AnalyticCurve {
public:
    EllipseCurve(const Vec2& centre, double ax, double ay) : c_(centre), ax_(ax), ay_(ay)
    {
        constexpr int cells = 4096;
        table_.resize(cells + 1, 0.0);
        const double h = 2.0 * std::numbers::pi / cells;
        for (int i = 0; i < cells; ++i) {
            double acc = 0.0;
            for (const QuadraturePoint& q : gauss4) {
                acc += q.weight * d1(h * (i + q.s)).norm();
            }
            table_[i + 1] = table_[i] + h * acc;
        }
    }

    double period() const override { return 2.0 * std::numbers::pi; }
    double length() const override { return table_.back(); }

    Vec2 point(double u) const override { return c_ + Vec2(ax_ * std::cos(u), ay_ * std::sin(u)); }
    Vec2 d1(double u) const override { return {-ax_ * std::sin(u), ay_ * std::cos(u)}; }
    Vec2 d2(double u) const override { return {-ax_ * std::cos(u), -ay_ * std::sin(u)}; }

    double min_radius() const override
    {
        const double lo = std::min(ax_, ay_);
        const double hi = std::max(ax_, ay_);
        return lo * lo / hi;
    }

    double param_at_arclength(double s) const override
    {
        const int cells = static_cast<int>(table_.size()) - 1;
        const double h = period() / cells;
        auto it = std::upper_bound(table_.begin(), table_.end(), s);
        int i = std::clamp(static_cast<int>(std::distance(table_.begin(), it)) - 1, 0, cells - 1);
        double u = h * i + h * (s - table_[i]) / (table_[i + 1] - table_[i]);
        // Newton on the local arclength using the cell integral as base.
        for (int it2 = 0; it2 < 8; ++it2) {
            const double base = h * i;
            double acc = 0.0;
            for (const QuadraturePoint& q : gauss4) {
                acc += q.weight * d1(base + (u - base) * q.s).norm();
            }
            const double f = table_[i] + (u - base) * acc - s;
            u -= f / d1(u).norm();
        }
        return u;
    }

private:
    Vec2 c_;
    double ax_;
    double ay_;
    std::vector<double> table_;
};

inline std::unique_ptr<AnalyticCurve> make_curve(const shape::Circle& c)
{
    if (!(c.radius > 0)) {
        throw InvalidShapeError("circle radius must be positive");
    }
    auto curve = std::make_unique<PiecewiseCurve>();
    curve->add_arc(c.center, c.radius, 0.0, 2.0 * std::numbers::pi);
    return curve;
}

inline std::unique_ptr<AnalyticCurve> make_curve(const shape::Ellipse& e)
{
    if (!(e.semi_axis_x > 0 && e.semi_axis_y > 0)) {
        throw InvalidShapeError("ellipse semi-axes must be positive");
    }
    return std::make_unique<EllipseCurve>(e.center, e.semi_axis_x, e.semi_axis_y);
}

inline std::unique_ptr<AnalyticCurve> make_curve(const shape::CShape& c)
{
    constexpr double pi = std::numbers::pi;
    if (!(c.radius > 0 && c.thickness > 0 && c.thickness < c.radius)) {
        throw InvalidShapeError("c-shape needs 0 < thickness < radius");
    }
    if (!(c.opening_angle > 0 && c.opening_angle < 2 * pi)) {
        throw InvalidShapeError("c-shape opening angle must lie in (0, 2 pi)");
    }
    const double half_w = 0.5 * c.thickness;
    // Rounded ends must not meet across the opening.
    const double gap = 2.0 * c.radius * std::sin(0.5 * c.opening_angle);
    if (c.opening_angle < pi && !(gap > c.thickness)) {
        throw InvalidShapeError("c-shape opening is closed by its rounded ends");
    }
    const double phi0 = 0.5 * c.opening_angle;
    const double phi1 = 2 * pi - phi0;
    const double sweep = 2 * pi - c.opening_angle;
    auto ring = [&](double a) { return Vec2(std::cos(a), std::sin(a)); };
    auto curve = std::make_unique<PiecewiseCurve>();
    curve->add_arc(c.center, c.radius + half_w, phi0, sweep);
    curve->add_arc(c.center + c.radius * ring(phi1), half_w, phi1, pi);
    curve->add_arc(c.center, c.radius - half_w, phi1, -sweep);
    curve->add_arc(c.center + c.radius * ring(phi0), half_w, phi0 + pi, pi);
    return curve;
}

inline std::unique_ptr<AnalyticCurve> make_curve(const shape::Cisterna& c)
{
    constexpr double pi = std::numbers::pi;
    if (!(c.half_length > 0 && c.half_thickness > 0)) {
        throw InvalidShapeError("cisterna dimensions must be positive");
    }
    const double l = c.half_length;
    const double r = c.half_thickness;
    const Vec2& o = c.center;
    auto curve = std::make_unique<PiecewiseCurve>();
    curve->add_line(o + Vec2(-l, -r), o + Vec2(l, -r));
    curve->add_arc(o + Vec2(l, 0), r, -pi / 2, pi);
    curve->add_line(o + Vec2(l, r), o + Vec2(-l, r));
    curve->add_arc(o + Vec2(-l, 0), r, pi / 2, pi);
    return curve;
}

inline CurveMesh mesh_from_curve(const AnalyticCurve& curve, int n)
{
    const double len = curve.length();
    if (len / n > 0.5 * std::numbers::pi * curve.min_radius() * (1.0 + 1e-12)) {
        throw InvalidShapeError("element count too small to resolve the shape");
    }
    std::vector<double> params(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i) {
        params[i] = curve.param_at_arclength(len * i / n);
    }
    params[n] = params[0] + curve.period();
    std::vector<Vec2> nodes;
    nodes.reserve(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Vec2 a = curve.point(params[i]);
        const Vec2 b = curve.point(params[i + 1]);
        const double u = curve.project(0.5 * (a + b), params[i], params[i + 1]);
        nodes.push_back(a);
        nodes.push_back(curve.point(u));
    }
    return CurveMesh::closed_loop(std::move(nodes));
}

inline CurveMesh mesh_from_points(std::vector<Vec2> points)
{
    if (points.size() < static_cast<std::size_t>(min_element_count)) {
        throw InvalidShapeError("point list needs at least 4 points");
    }
    double twice_area = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        twice_area += cross(points[i], points[(i + 1) % points.size()]);
    }
    if (twice_area < 0.0) {
        std::reverse(points.begin(), points.end());
    }
    std::vector<Vec2> nodes;
    nodes.reserve(2 * points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        nodes.push_back(points[i]);
        nodes.push_back(0.5 * (points[i] + points[(i + 1) % points.size()]));
    }
    return CurveMesh::closed_loop(std::move(nodes));
}

} // namespace detail

/// Meshes the analytic initial curve: endpoints equally spaced in arclength on
/// the curve, midpoints at the closest point to each chord midpoint.
inline CurveMesh build_shape(const ShapeSpec& spec)
{
    if (spec.element_count < min_element_count) {
        throw InvalidShapeError("element count must be at least 4");
    }
    CurveMesh mesh = std::visit(
        [&](const auto& g) -> CurveMesh {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, shape::PointList>) {
                return detail::mesh_from_points(g.points);
            } else {
                return detail::mesh_from_curve(*detail::make_curve(g), spec.element_count);
            }
        },
        spec.geometry);
    validate_geometry(mesh);
    return mesh;
}

/// Perimeter of the analytic curve behind a shape (polygon perimeter for point lists).
inline double analytic_length(const ShapeSpec& spec)
{
    return std::visit(
        [](const auto& g) -> double {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, shape::PointList>) {
                double len = 0.0;
                for (std::size_t i = 0; i < g.points.size(); ++i) {
                    len += (g.points[(i + 1) % g.points.size()] - g.points[i]).norm();
                }
                return len;
            } else {
                return detail::make_curve(g)->length();
            }
        },
        spec.geometry);
}

} // namespace vesicle

#endif
