#include "vesicle/curve_mesh.hpp"
#include "vesicle/reference_element.hpp"
#include "vesicle/shapes.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace vesicle;

namespace {

CurveMesh unit_circle(int n) { return build_shape({shape::Circle{{0.0, 0.0}, 1.0}, n}); }

} // namespace

TEST(ReferenceBasis, KroneckerAtNodes)
{
    const auto b0 = eval_reference_basis(0.0);
    const auto bh = eval_reference_basis(0.5);
    const auto b1 = eval_reference_basis(1.0);
    EXPECT_DOUBLE_EQ(b0.value[0], 1.0);
    EXPECT_DOUBLE_EQ(b0.value[1], 0.0);
    EXPECT_DOUBLE_EQ(b0.value[2], 0.0);
    EXPECT_DOUBLE_EQ(bh.value[0], 0.0);
    EXPECT_DOUBLE_EQ(bh.value[1], 1.0);
    EXPECT_DOUBLE_EQ(bh.value[2], 0.0);
    EXPECT_DOUBLE_EQ(b1.value[2], 1.0);
}

TEST(ReferenceBasis, QuarterPoint)
{
    const auto b = eval_reference_basis(0.25);
    EXPECT_NEAR(b.value[0], 3.0 / 8.0, 1e-15);
    EXPECT_NEAR(b.value[1], 3.0 / 4.0, 1e-15);
    EXPECT_NEAR(b.value[2], -1.0 / 8.0, 1e-15);
}

TEST(ReferenceBasis, PartitionOfUnityAndDerivatives)
{
    for (double s = 0.0; s <= 1.0; s += 0.1) {
        const auto b = eval_reference_basis(s);
        EXPECT_NEAR(b.value[0] + b.value[1] + b.value[2], 1.0, 1e-14);
        EXPECT_NEAR(b.deriv[0] + b.deriv[1] + b.deriv[2], 0.0, 1e-14);
        const double h = 1e-6;
        const auto p = eval_reference_basis(s + h);
        const auto m = eval_reference_basis(s - h);
        for (int i = 0; i < 3; ++i) {
            EXPECT_NEAR(b.deriv[i], (p.value[i] - m.value[i]) / (2 * h), 1e-8);
        }
    }
}

TEST(ReferenceBasis, GaussRuleIntegratesSeptics)
{
    // 4-point Gauss on [0,1] is exact up to degree 7.
    for (int k = 0; k <= 7; ++k) {
        double q = 0.0;
        for (const QuadraturePoint& p : gauss4) {
            q += p.weight * std::pow(p.s, k);
        }
        EXPECT_NEAR(q, 1.0 / (k + 1), 1e-14) << "degree " << k;
    }
}

TEST(ElementGeometry, CircleNormalIsRadial)
{
    const CurveMesh mesh = unit_circle(16);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        for (double s : {0.0, 0.3, 0.5, 0.8}) {
            const ElementGeometry g = element_geometry(mesh, e, s);
            EXPECT_NEAR(g.tangent.norm(), 1.0, 1e-14);
            EXPECT_NEAR(g.normal.norm(), 1.0, 1e-14);
            EXPECT_NEAR(g.normal.dot(g.tangent), 0.0, 1e-14);
            // Between nodes the quadratic leaves the circle slightly.
            EXPECT_NEAR(g.position.norm(), 1.0, 2e-4);
            EXPECT_GT(g.normal.dot(g.position), 0.99);
        }
    }
}

TEST(ElementGeometry, StraightElement)
{
    const std::array<Vec2, 3> x{Vec2(0, 0), Vec2(0.5, 0), Vec2(1, 0)};
    const ElementGeometry g = element_geometry(x, 0.5);
    EXPECT_NEAR(g.tangent.x(), 1.0, 1e-15);
    EXPECT_NEAR(g.normal.y(), -1.0, 1e-15);
    EXPECT_NEAR(g.jacobian, 1.0, 1e-15);
}

TEST(ElementGeometry, JacobianMatchesArcLength)
{
    const int n = 64;
    const CurveMesh mesh = build_shape({shape::Circle{{0.0, 0.0}, 2.0}, n});
    const double arc = 2.0 * 2.0 * std::numbers::pi / n;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        EXPECT_NEAR(element_geometry(mesh, e, 0.5).jacobian, arc, 0.01 * arc);
    }
}

TEST(ElementGeometry, DegenerateElementThrows)
{
    const std::array<Vec2, 3> x{Vec2(1, 1), Vec2(1, 1), Vec2(1, 1)};
    EXPECT_THROW(element_geometry(x, 0.5), DegenerateElementError);
}

TEST(MeshLength, UnitCircle)
{
    EXPECT_NEAR(mesh_length(unit_circle(64)), 2.0 * std::numbers::pi, 1e-6);
}

TEST(MeshLength, CircleConvergesAtLeastCubically)
{
    const double e16 = std::abs(mesh_length(unit_circle(16)) - 2.0 * std::numbers::pi);
    const double e32 = std::abs(mesh_length(unit_circle(32)) - 2.0 * std::numbers::pi);
    const double e64 = std::abs(mesh_length(unit_circle(64)) - 2.0 * std::numbers::pi);
    EXPECT_GE(std::log2(e16 / e32), 3.0);
    EXPECT_GE(std::log2(e32 / e64), 3.0);
}

TEST(MeshLength, EllipsePerimeter)
{
    // Complete elliptic integral of the second kind: 4 a E(1 - b^2/a^2) for a=2, b=1.
    const CurveMesh mesh = build_shape({shape::Ellipse{{0.0, 0.0}, 2.0, 1.0}, 64});
    EXPECT_NEAR(mesh_length(mesh), 9.6884482, 1e-4);
}

TEST(SignedArea, PositiveForCounterclockwise)
{
    EXPECT_NEAR(signed_area(unit_circle(64)), std::numbers::pi, 1e-5);
    EXPECT_GT(signed_area(build_shape({shape::Ellipse{{1.0, -2.0}, 2.0, 1.0}, 32})), 0.0);
}

TEST(AdjustMidpoints, IdempotentAndKeepsEndpoints)
{
    const CurveMesh mesh = build_shape({shape::Ellipse{{0.0, 0.0}, 2.0, 1.0}, 32});
    Eigen::VectorXd bump(static_cast<Eigen::Index>(mesh.dof_count()));
    for (Eigen::Index i = 0; i < bump.size(); ++i) {
        bump[i] = 0.01 * std::sin(0.7 * static_cast<double>(i));
    }
    const CurveMesh once = adjust_midpoints(mesh.displaced(bump, 1.0));
    const CurveMesh twice = adjust_midpoints(once);
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        EXPECT_LT((twice.node(i) - once.node(i)).norm(), 1e-12);
        if (!mesh.is_midpoint(i)) {
            EXPECT_EQ(once.node(i), mesh.displaced(bump, 1.0).node(i));
        }
    }
}

TEST(AdjustMidpoints, ProjectedMeshUnchanged)
{
    const CurveMesh mesh = unit_circle(32);
    const CurveMesh adjusted = adjust_midpoints(mesh);
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        EXPECT_LT((adjusted.node(i) - mesh.node(i)).norm(), 1e-12);
    }
}

TEST(AdjustMidpoints, CollinearElementGoesToChordMidpoint)
{
    // Square-ish loop whose first element is straight with an off-centre midpoint.
    const CurveMesh mesh = CurveMesh::closed_loop({Vec2(0, 0), Vec2(0.3, 0), Vec2(1, 0), Vec2(1, 0.5),
                                                   Vec2(1, 1), Vec2(0.5, 1), Vec2(0, 1), Vec2(0, 0.5)});
    const CurveMesh adjusted = adjust_midpoints(mesh);
    EXPECT_NEAR(adjusted.node(1).x(), 0.5, 1e-12);
    EXPECT_NEAR(adjusted.node(1).y(), 0.0, 1e-12);
}

TEST(AdjustMidpoints, PerturbedCircleMidpointMovesTowardCircle)
{
    const CurveMesh mesh = unit_circle(16);
    std::vector<Vec2> nodes = mesh.nodes();
    const ElementGeometry g = element_geometry(mesh, 0, 0.5);
    nodes[1] += 1e-3 * g.tangent;
    const CurveMesh perturbed = mesh.with_nodes(nodes);
    // Distance to the exact arc midpoint of the element.
    const double before = (perturbed.node(1) - mesh.node(1)).norm();
    const double after = (adjust_midpoints(perturbed).node(1) - mesh.node(1)).norm();
    EXPECT_LT(after, before);
}

TEST(Intersections, SegmentPredicates)
{
    EXPECT_TRUE(segments_intersect({0, 0}, {1, 1}, {0, 1}, {1, 0}));
    EXPECT_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
    EXPECT_TRUE(segments_intersect({0, 0}, {1, 0}, {1, 0}, {2, 1}));
    EXPECT_NEAR(segment_distance({0, 0}, {1, 0}, {0, 2}, {1, 2}), 2.0, 1e-15);
}

TEST(Intersections, DisjointAndOverlappingCircles)
{
    const CurveMesh a = unit_circle(32);
    const CurveMesh b = build_shape({shape::Circle{{3.0, 0.0}, 1.0}, 32});
    const CurveMesh c = build_shape({shape::Circle{{1.5, 0.0}, 1.0}, 32});
    EXPECT_FALSE(meshes_intersect(a, b));
    EXPECT_TRUE(meshes_intersect(a, c));
    EXPECT_NEAR(mesh_distance(a, b), 1.0, 1e-2);
    EXPECT_FALSE(find_self_intersection(a).has_value());
}

TEST(Intersections, FigureEightIsRejected)
{
    std::vector<Vec2> pts;
    for (int k = 0; k < 24; ++k) {
        const double u = 2.0 * std::numbers::pi * k / 24.0;
        pts.emplace_back(std::sin(u), std::sin(u) * std::cos(u));
    }
    EXPECT_THROW(build_shape({shape::PointList{pts}, 24}), SelfIntersectionError);
}

TEST(Redistribute, EqualArcLengthAndSameCurve)
{
    const CurveMesh mesh = build_shape({shape::Ellipse{{0.0, 0.0}, 2.0, 1.0}, 32});
    std::vector<Vec2> nodes = mesh.nodes();
    for (std::size_t i = 2; i + 2 < nodes.size(); i += 4) {
        nodes[i] = element_geometry(mesh, i / 2, 0.3).position; // slide endpoints along the curve
    }
    const CurveMesh skewed = adjust_midpoints(mesh.with_nodes(nodes));
    const CurveMesh even = redistribute_nodes(skewed);
    // A new quadratic through re-spaced nodes: same curve up to interpolation error.
    EXPECT_NEAR(mesh_length(even), mesh_length(skewed), 1e-3 * mesh_length(skewed));
    const double h = mesh_length(even) / static_cast<double>(even.element_count());
    for (std::size_t e = 0; e < even.element_count(); ++e) {
        EXPECT_NEAR(detail::element_arclength(even.element_nodes(e), 1.0), h, 1e-3 * h);
    }
}
