#ifndef VESICLE_CURVE_MESH_HPP
#define VESICLE_CURVE_MESH_HPP

#include "errors.hpp"
#include "reference_element.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vesicle {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// (endpoint A, midpoint, endpoint B) node indices of one quadratic element.
using Element = std::array<std::size_t, 3>;

inline constexpr double degenerate_jacobian = 1e-14;

/// A closed planar curve discretized by quadratic isoparametric elements.
///
/// The element list is a single cycle: element e ends where element e+1
/// starts. Nodes are ordered counterclockwise so that the normal obtained by
/// rotating the tangent by -90 degrees points outward. Values are immutable;
/// node updates produce a new mesh sharing the topology.
class CurveMesh {
public:
    CurveMesh() = default;

    CurveMesh(std::vector<Vec2> nodes, std::vector<Element> elements)
        : nodes_(std::move(nodes)), elements_(std::move(elements))
    {
        check_topology();
    }

    /// Nodes alternate endpoint, midpoint, endpoint, ... around the loop.
    static CurveMesh closed_loop(std::vector<Vec2> nodes)
    {
        if (nodes.size() < 4 || nodes.size() % 2 != 0) {
            throw InvalidShapeError("closed loop needs an even number (>= 4) of nodes");
        }
        const std::size_t n = nodes.size() / 2;
        std::vector<Element> elements(n);
        for (std::size_t e = 0; e < n; ++e) {
            elements[e] = {2 * e, 2 * e + 1, (2 * e + 2) % nodes.size()};
        }
        return CurveMesh(std::move(nodes), std::move(elements));
    }

    const std::vector<Vec2>& nodes() const noexcept { return nodes_; }
    const std::vector<Element>& elements() const noexcept { return elements_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t element_count() const noexcept { return elements_.size(); }
    std::size_t dof_count() const noexcept { return 2 * nodes_.size(); }
    const Vec2& node(std::size_t i) const { return nodes_.at(i); }
    bool is_midpoint(std::size_t i) const { return is_midpoint_.at(i); }

    std::array<Vec2, 3> element_nodes(std::size_t e) const
    {
        const Element& el = elements_.at(e);
        return {nodes_[el[0]], nodes_[el[1]], nodes_[el[2]]};
    }

    CurveMesh with_nodes(std::vector<Vec2> nodes) const
    {
        if (nodes.size() != nodes_.size()) {
            throw PreconditionError("node count mismatch in with_nodes");
        }
        CurveMesh out;
        out.nodes_ = std::move(nodes);
        out.elements_ = elements_;
        out.is_midpoint_ = is_midpoint_;
        return out;
    }

    /// Node coordinates as a vector field, interleaved (x0, y0, x1, y1, ...).
    Eigen::VectorXd coordinates() const
    {
        Eigen::VectorXd x(dof_count());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            x.segment<2>(2 * static_cast<Eigen::Index>(i)) = nodes_[i];
        }
        return x;
    }

    /// New mesh with node i moved by scale * field(2i, 2i+1).
    CurveMesh displaced(const Eigen::VectorXd& field, double scale) const
    {
        if (field.size() != static_cast<Eigen::Index>(dof_count())) {
            throw PreconditionError("displacement field has wrong size");
        }
        std::vector<Vec2> moved = nodes_;
        for (std::size_t i = 0; i < moved.size(); ++i) {
            moved[i] += scale * field.segment<2>(2 * static_cast<Eigen::Index>(i));
        }
        return with_nodes(std::move(moved));
    }

private:
    void check_topology()
    {
        const std::size_t n_nodes = nodes_.size();
        const std::size_t n_el = elements_.size();
        if (n_el < 2) {
            throw InvalidShapeError("mesh needs at least two elements");
        }
        std::vector<int> endpoint_uses(n_nodes, 0);
        std::vector<int> midpoint_uses(n_nodes, 0);
        for (const Element& el : elements_) {
            for (std::size_t idx : el) {
                if (idx >= n_nodes) {
                    throw InvalidShapeError("element references a missing node");
                }
            }
            ++endpoint_uses[el[0]];
            ++endpoint_uses[el[2]];
            ++midpoint_uses[el[1]];
        }
        is_midpoint_.assign(n_nodes, false);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            const bool endpoint = endpoint_uses[i] == 2 && midpoint_uses[i] == 0;
            const bool midpoint = endpoint_uses[i] == 0 && midpoint_uses[i] == 1;
            if (!endpoint && !midpoint) {
                throw InvalidShapeError("node " + std::to_string(i)
                                        + " is not shared by exactly two elements");
            }
            is_midpoint_[i] = midpoint;
        }
        // Walk the cycle from element 0; it must visit every element once.
        std::vector<std::size_t> starting_at(n_nodes, n_el);
        for (std::size_t e = 0; e < n_el; ++e) {
            if (starting_at[elements_[e][0]] != n_el) {
                throw InvalidShapeError("inconsistent element orientation");
            }
            starting_at[elements_[e][0]] = e;
        }
        std::size_t e = 0;
        for (std::size_t visited = 1; visited < n_el; ++visited) {
            e = starting_at[elements_[e][2]];
            if (e == n_el || e == 0) {
                throw InvalidShapeError("elements do not form a single closed cycle");
            }
        }
        if (starting_at[elements_[e][2]] != 0) {
            throw InvalidShapeError("elements do not form a single closed cycle");
        }
    }

    std::vector<Vec2> nodes_;
    std::vector<Element> elements_;
    std::vector<bool> is_midpoint_;
};

struct ElementGeometry {
    Vec2 position;
    Vec2 tangent;
    Vec2 normal;
    double jacobian;
};

inline Vec2 outward_normal(const Vec2& tangent) { return {tangent.y(), -tangent.x()}; }

inline ElementGeometry element_geometry(const std::array<Vec2, 3>& x, double s)
{
    const BasisEval b = eval_reference_basis(s);
    const Vec2 pos = b.value[0] * x[0] + b.value[1] * x[1] + b.value[2] * x[2];
    const Vec2 dx = b.deriv[0] * x[0] + b.deriv[1] * x[1] + b.deriv[2] * x[2];
    const double jac = dx.norm();
    if (!(jac >= degenerate_jacobian)) {
        throw DegenerateElementError("element jacobian vanishes");
    }
    const Vec2 t = dx / jac;
    return {pos, t, outward_normal(t), jac};
}

inline ElementGeometry element_geometry(const CurveMesh& mesh, std::size_t e, double s)
{
    return element_geometry(mesh.element_nodes(e), s);
}

/// Geometry and basis data at one quadrature point of an element.
struct QuadSample {
    Vec2 position;
    Vec2 tangent;
    double jacobian;
    double weight; // quadrature weight times jacobian, i.e. ds
    std::array<double, 3> phi;
    std::array<double, 3> dphi_ds;
};

inline std::array<QuadSample, 4> element_quadrature(const std::array<Vec2, 3>& x)
{
    const ReferenceElement& ref = reference_element();
    std::array<QuadSample, 4> out{};
    for (std::size_t q = 0; q < ref.quad.size(); ++q) {
        const BasisEval& b = ref.at_quad[q];
        const Vec2 dx = b.deriv[0] * x[0] + b.deriv[1] * x[1] + b.deriv[2] * x[2];
        const double jac = dx.norm();
        if (!(jac >= degenerate_jacobian)) {
            throw DegenerateElementError("element jacobian vanishes at a quadrature point");
        }
        QuadSample& qs = out[q];
        qs.position = b.value[0] * x[0] + b.value[1] * x[1] + b.value[2] * x[2];
        qs.tangent = dx / jac;
        qs.jacobian = jac;
        qs.weight = ref.quad[q].weight * jac;
        qs.phi = b.value;
        for (std::size_t a = 0; a < 3; ++a) {
            qs.dphi_ds[a] = b.deriv[a] / jac;
        }
    }
    return out;
}

inline double mesh_length(const CurveMesh& mesh)
{
    double length = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            length += q.weight;
        }
    }
    return length;
}

/// Enclosed area, 1/2 of the closed integral of x.nu; positive for CCW meshes.
inline double signed_area(const CurveMesh& mesh)
{
    double area = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            area += 0.5 * q.weight * q.position.dot(outward_normal(q.tangent));
        }
    }
    return area;
}

struct BoundingBox {
    Vec2 lo;
    Vec2 hi;
};

inline BoundingBox bounding_box(const CurveMesh& mesh)
{
    BoundingBox box{mesh.node(0), mesh.node(0)};
    for (const Vec2& p : mesh.nodes()) {
        box.lo = box.lo.cwiseMin(p);
        box.hi = box.hi.cwiseMax(p);
    }
    return box;
}

namespace detail {

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool on_segment(const Vec2& p, const Vec2& a, const Vec2& b)
{
    return p.x() >= std::min(a.x(), b.x()) && p.x() <= std::max(a.x(), b.x())
        && p.y() >= std::min(a.y(), b.y()) && p.y() <= std::max(a.y(), b.y());
}

inline int orientation(const Vec2& a, const Vec2& b, const Vec2& c)
{
    const double v = cross(b - a, c - a);
    const double scale = (b - a).norm() * (c - a).norm();
    if (std::abs(v) <= 1e-14 * scale) {
        return 0;
    }
    return v > 0 ? 1 : -1;
}

} // namespace detail

/// Exact-orientation test for closed segments [a,b] and [c,d].
inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    using detail::on_segment;
    using detail::orientation;
    const int o1 = orientation(a, b, c);
    const int o2 = orientation(a, b, d);
    const int o3 = orientation(c, d, a);
    const int o4 = orientation(c, d, b);
    if (o1 != o2 && o3 != o4) {
        return true;
    }
    return (o1 == 0 && on_segment(c, a, b)) || (o2 == 0 && on_segment(d, a, b))
        || (o3 == 0 && on_segment(a, c, d)) || (o4 == 0 && on_segment(b, c, d));
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b)
{
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

inline double segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    if (segments_intersect(a, b, c, d)) {
        return 0.0;
    }
    return std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                     point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
}

/// The closed polyline through all nodes in cycle order (two chords per element).
inline std::vector<Vec2> chord_polygon(const CurveMesh& mesh)
{
    std::vector<Vec2> poly;
    poly.reserve(mesh.node_count());
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements()[e];
        poly.push_back(mesh.node(el[0]));
        poly.push_back(mesh.node(el[1]));
    }
    return poly;
}

/// First pair of crossing non-adjacent chords, reported as element indices.
inline std::optional<std::pair<std::size_t, std::size_t>> find_self_intersection(const CurveMesh& mesh)
{
    const std::vector<Vec2> poly = chord_polygon(mesh);
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % m];
        const Vec2 lo1 = a.cwiseMin(b);
        const Vec2 hi1 = a.cwiseMax(b);
        for (std::size_t j = i + 2; j < m; ++j) {
            if (i == 0 && j == m - 1) {
                continue; // adjacent through the wrap-around
            }
            const Vec2& c = poly[j];
            const Vec2& d = poly[(j + 1) % m];
            const Vec2 lo2 = c.cwiseMin(d);
            const Vec2 hi2 = c.cwiseMax(d);
            if ((lo1.array() > hi2.array()).any() || (lo2.array() > hi1.array()).any()) {
                continue;
            }
            if (segments_intersect(a, b, c, d)) {
                return std::make_pair(i / 2, j / 2);
            }
        }
    }
    return std::nullopt;
}

inline bool meshes_intersect(const CurveMesh& first, const CurveMesh& second)
{
    const std::vector<Vec2> p = chord_polygon(first);
    const std::vector<Vec2> q = chord_polygon(second);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Vec2& a = p[i];
        const Vec2& b = p[(i + 1) % p.size()];
        for (std::size_t j = 0; j < q.size(); ++j) {
            if (segments_intersect(a, b, q[j], q[(j + 1) % q.size()])) {
                return true;
            }
        }
    }
    return false;
}

/// Minimum distance between the chord polygons of two meshes.
inline double mesh_distance(const CurveMesh& first, const CurveMesh& second)
{
    const std::vector<Vec2> p = chord_polygon(first);
    const std::vector<Vec2> q = chord_polygon(second);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            best = std::min(best, segment_distance(p[i], p[(i + 1) % p.size()], q[j],
                                                   q[(j + 1) % q.size()]));
        }
    }
    return best;
}

/// Checks jacobians at all quadrature points, orientation and simplicity.
inline void validate_geometry(const CurveMesh& mesh)
{
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        element_quadrature(mesh.element_nodes(e));
        element_geometry(mesh, e, 0.0);
        element_geometry(mesh, e, 1.0);
    }
    if (auto hit = find_self_intersection(mesh)) {
        throw SelfIntersectionError("curve self-intersects between elements "
                                    + std::to_string(hit->first) + " and "
                                    + std::to_string(hit->second));
    }
    if (!(signed_area(mesh) > 0.0)) {
        throw InvalidShapeError("curve is not counterclockwise");
    }
}

/// Moves every midpoint onto its element's current quadratic image, at the
/// point where the perpendicular bisector of the new chord meets the curve.
/// The result is the foot of the orthogonal projection of the chord midpoint
/// onto the re-interpolated element, so a second application is a no-op.
inline CurveMesh adjust_midpoints(const CurveMesh& mesh)
{
    std::vector<Vec2> nodes = mesh.nodes();
    for (const Element& el : mesh.elements()) {
        const Vec2& a = mesh.node(el[0]);
        const Vec2& m = mesh.node(el[1]);
        const Vec2& b = mesh.node(el[2]);
        const Vec2 chord = b - a;
        const double chord_len = chord.norm();
        if (!(chord_len >= degenerate_jacobian)) {
            throw DegenerateElementError("element chord has zero length");
        }
        const Vec2 centre = 0.5 * (a + b);
        // x(s) = s^2 c2 + s c1 + a; g(s) = (x(s) - centre) . chord
        const Vec2 c2 = 2.0 * a - 4.0 * m + 2.0 * b;
        const Vec2 c1 = -3.0 * a + 4.0 * m - b;
        const double qa = c2.dot(chord);
        const double qb = c1.dot(chord);
        const double qc = (a - centre).dot(chord);
        auto g = [&](double s) { return (qa * s + qb) * s + qc; };
        auto dg = [&](double s) { return 2.0 * qa * s + qb; };

        double s = 0.5;
        if (std::abs(qa) <= 1e-14 * std::abs(qb)) {
            s = -qc / qb;
        } else {
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc < 0.0) {
                throw DegenerateElementError("element folds back over its chord");
            }
            const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
            const double r1 = q / qa;
            const double r2 = q != 0.0 ? qc / q : r1;
            s = std::abs(r1 - 0.5) < std::abs(r2 - 0.5) ? r1 : r2;
        }
        for (int it = 0; it < 2; ++it) {
            const double d = dg(s);
            if (d != 0.0) {
                s -= g(s) / d;
            }
        }
        if (!(s > 0.0 && s < 1.0)) {
            throw DegenerateElementError("midpoint projection leaves the element");
        }
        nodes[el[1]] = s * s * c2 + s * c1 + a;
    }
    return mesh.with_nodes(std::move(nodes));
}

namespace detail {

/// Arclength of the element image over [0, s], 4-point Gauss.
inline double element_arclength(const std::array<Vec2, 3>& x, double s)
{
    double total = 0.0;
    for (const QuadraturePoint& q : gauss4) {
        const BasisEval b = eval_reference_basis(s * q.s);
        total += s * q.weight * (b.deriv[0] * x[0] + b.deriv[1] * x[1] + b.deriv[2] * x[2]).norm();
    }
    return total;
}

} // namespace detail

/// Re-places all nodes at equal arclength spacing along the current
/// piecewise-quadratic curve (node 0 stays put), then re-adjusts midpoints.
/// Only the parametrization changes; the image moves by interpolation error.
inline CurveMesh redistribute_nodes(const CurveMesh& mesh)
{
    const std::size_t n = mesh.element_count();
    std::vector<double> start(n + 1, 0.0);
    for (std::size_t e = 0; e < n; ++e) {
        start[e + 1] = start[e] + detail::element_arclength(mesh.element_nodes(e), 1.0);
    }
    const double total = start[n];
    std::vector<Vec2> nodes(2 * n);
    std::size_t e = 0;
    for (std::size_t k = 0; k < 2 * n; ++k) {
        const double sigma = total * static_cast<double>(k) / static_cast<double>(2 * n);
        while (e + 1 < n && start[e + 1] <= sigma) {
            ++e;
        }
        const auto x = mesh.element_nodes(e);
        const double len = start[e + 1] - start[e];
        const double goal = sigma - start[e];
        double u = std::clamp(goal / len, 0.0, 1.0);
        for (int it = 0; it < 8; ++it) {
            const BasisEval b = eval_reference_basis(u);
            const double speed = (b.deriv[0] * x[0] + b.deriv[1] * x[1] + b.deriv[2] * x[2]).norm();
            const double step = (detail::element_arclength(x, u) - goal) / speed;
            u = std::clamp(u - step, 0.0, 1.0);
            if (std::abs(step) < 1e-15) {
                break;
            }
        }
        const BasisEval b = eval_reference_basis(u);
        nodes[k] = b.value[0] * x[0] + b.value[1] * x[1] + b.value[2] * x[2];
    }
    return adjust_midpoints(mesh.with_nodes(std::move(nodes)));
}

} // namespace vesicle

#endif
