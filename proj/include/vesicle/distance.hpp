#ifndef VESICLE_DISTANCE_HPP
#define VESICLE_DISTANCE_HPP

#include "barrier.hpp"
#include "curve_mesh.hpp"

#include <limits>
#include <string>
#include <vector>

namespace vesicle {

inline constexpr double min_squared_distance = 1e-12;

/// Per-element nearest points on the other vesicles.
///
/// For element K the reference point c_K is its parametric midpoint image and
/// y_K the closest candidate (node or quadrature-point image) on any other
/// vesicle; d_K = |c_K - y_K|^2. The witnesses stay frozen while the element
/// integrand 1/|x - y_K|^2 is evaluated or differentiated.
struct DistanceField {
    std::vector<Vec2> reference;
    std::vector<Vec2> witness;
    std::vector<double> squared_distance;
    std::vector<std::size_t> source; // index of the vesicle in `others`
};

/// Nodes plus quadrature-point images of a mesh.
inline std::vector<Vec2> distance_candidates(const CurveMesh& mesh)
{
    std::vector<Vec2> pts = mesh.nodes();
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            pts.push_back(q.position);
        }
    }
    return pts;
}

inline DistanceField distance_field(const CurveMesh& mesh, const std::vector<CurveMesh>& others)
{
    if (others.empty()) {
        throw PreconditionError("distance field needs at least one other vesicle");
    }
    std::vector<std::vector<Vec2>> candidates;
    candidates.reserve(others.size());
    for (const CurveMesh& o : others) {
        candidates.push_back(distance_candidates(o));
    }
    DistanceField field;
    const std::size_t n = mesh.element_count();
    field.reference.resize(n);
    field.witness.resize(n);
    field.squared_distance.resize(n);
    field.source.resize(n);
    for (std::size_t e = 0; e < n; ++e) {
        const Vec2 c = element_geometry(mesh, e, 0.5).position;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < candidates.size(); ++v) {
            for (const Vec2& y : candidates[v]) {
                const double d = (c - y).squaredNorm();
                if (d < best) {
                    best = d;
                    field.witness[e] = y;
                    field.source[e] = v;
                }
            }
        }
        if (!(best >= min_squared_distance)) {
            throw ContactError("element " + std::to_string(e) + " touches another vesicle");
        }
        field.reference[e] = c;
        field.squared_distance[e] = best;
    }
    return field;
}

/// p -> 1/|p - y|^2 with its gradient and Hessian.
inline PointwiseSample inverse_squared_distance(const Vec2& p, const Vec2& y)
{
    const Vec2 r = p - y;
    const double d = r.squaredNorm();
    if (!(d >= min_squared_distance)) {
        throw ContactError("distance integrand evaluated at contact");
    }
    PointwiseSample s;
    s.value = 1.0 / d;
    s.gradient = (-2.0 / (d * d)) * r;
    s.hessian = (-2.0 / (d * d)) * Mat2::Identity() + (8.0 / (d * d * d)) * r * r.transpose();
    return s;
}

} // namespace vesicle

#endif
