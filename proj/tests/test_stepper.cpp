#include "vesicle/derivcheck.hpp"
#include "vesicle/shapes.hpp"
#include "vesicle/stepper.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace vesicle;

namespace {

constexpr double pi = std::numbers::pi;

CurveMesh circle(double r, int n, Vec2 c = Vec2::Zero()) { return build_shape({shape::Circle{c, r}, n}); }

CurveMesh ellipse(int n, Vec2 c = Vec2::Zero()) { return build_shape({shape::Ellipse{c, 2.0, 1.0}, n}); }

FlowParameters willmore(double tau = 1e-4)
{
    FlowParameters p;
    p.model = Model::Model1;
    p.tau = tau;
    return p;
}

Eigen::VectorXd outward_normals(const CurveMesh& mesh, Vec2 c = Vec2::Zero())
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.dof_count()));
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        out.segment<2>(2 * static_cast<Eigen::Index>(i)) = (mesh.node(i) - c).normalized();
    }
    return out;
}

double mean_radius(const CurveMesh& mesh)
{
    double r = 0.0;
    for (const Vec2& p : mesh.nodes()) {
        r += p.norm();
    }
    return r / static_cast<double>(mesh.node_count());
}

// Mass-weighted mean normal speed and the largest nodal deviation from it.
std::pair<double, double> circle_speed(double r, int n, double tau)
{
    const CurveMesh mesh = circle(r, n);
    const SubproblemSolution s = solve_subproblem_main(mesh, willmore(tau), BarrierSpec{});
    const Eigen::VectorXd nu = outward_normals(mesh);
    const SparseMatrix m = assemble_mass(mesh);
    const double mean = nu.dot(m * s.V) / nu.dot(m * nu);
    double spread = 0.0;
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        const auto k = 2 * static_cast<Eigen::Index>(i);
        spread = std::max(spread, std::abs(s.V.segment<2>(k).dot(nu.segment<2>(k)) - mean));
    }
    return {mean, spread};
}

} // namespace

TEST(AreaSubproblem, VelocityIsMinusCurvature)
{
    const CurveMesh mesh = ellipse(32);
    const SubproblemSolution s = solve_subproblem_area(mesh, willmore());
    EXPECT_LT((s.V + s.H).norm(), 1e-10 * s.H.norm());
}

TEST(AreaSubproblem, InwardOnCircleAndShortens)
{
    const CurveMesh mesh = circle(1.0, 32);
    const SubproblemSolution s = solve_subproblem_area(mesh, willmore());
    const Eigen::VectorXd nu = outward_normals(mesh);
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        EXPECT_NEAR(s.V.segment<2>(2 * static_cast<Eigen::Index>(i)).dot(nu.segment<2>(2 * static_cast<Eigen::Index>(i))),
                    -1.0, 1e-2);
    }
    EXPECT_LT(mesh_length(advance_mesh(mesh, s.V, 1e-3)), mesh_length(mesh));
}

TEST(MainSubproblem, CircleExpandsAtWillmoreSpeed)
{
    // W = pi / R on a circle, so the L2 gradient flow has dR/dt = 1/(2 R^3).
    for (double r : {1.0, 2.0}) {
        for (double tau : {1e-3, 1e-5, 1e-7}) {
            const double exact = 1.0 / (2.0 * r * r * r);
            EXPECT_NEAR(circle_speed(r, 64, tau).first, exact, 1e-3 * exact) << r << " " << tau;
        }
    }
}

TEST(MainSubproblem, CircleSpeedOscillationVanishesUnderRefinement)
{
    // The interpolated circle has slightly different curvature at endpoints
    // and midpoints; the fourth order operator turns that into a node to node
    // oscillation of the speed, of size h^4 / tau.
    const double s32 = circle_speed(1.0, 32, 1e-4).second;
    const double s64 = circle_speed(1.0, 64, 1e-4).second;
    const double s128 = circle_speed(1.0, 128, 1e-4).second;
    EXPECT_GE(std::log2(s32 / s64), 3.5);
    EXPECT_GE(std::log2(s64 / s128), 3.5);
    EXPECT_LT(s128, 1e-3);
}

TEST(MainSubproblem, TranslationEquivariant)
{
    const SubproblemSolution a = solve_subproblem_main(ellipse(32), willmore(), BarrierSpec{});
    const SubproblemSolution b = solve_subproblem_main(ellipse(32, {5.0, -3.0}), willmore(), BarrierSpec{});
    EXPECT_LT((a.V - b.V).norm(), 1e-8 * a.V.norm());
    EXPECT_LT((a.H - b.H).norm(), 1e-8 * a.H.norm());
}

TEST(MainSubproblem, DistantBarrierHasNoEffect)
{
    const CurveMesh mesh = ellipse(32);
    FlowParameters p = willmore();
    p.model = Model::Model2;
    p.alpha = 10.0;
    const BarrierSpec far = BarrierSpec::step({{0.0, 1.0}, 10.0, 25.0, ""});
    const SubproblemSolution a = solve_subproblem_main(mesh, p, far);
    const SubproblemSolution b = solve_subproblem_main(mesh, willmore(), BarrierSpec{});
    EXPECT_LT((a.V - b.V).norm(), 1e-10 * b.V.norm());
}

TEST(MainSubproblem, BarrierPushesCurveOut)
{
    // A slab over the top of the circle pushes the top nodes downward.
    const CurveMesh mesh = circle(1.0, 64);
    FlowParameters p = willmore();
    p.model = Model::Model2;
    p.alpha = 10.0;
    const BarrierSpec slab = BarrierSpec::step({{0.0, 1.0}, 0.9, 25.0, ""});
    const SubproblemSolution a = solve_subproblem_main(mesh, p, slab);
    const SubproblemSolution b = solve_subproblem_main(mesh, willmore(), BarrierSpec{});
    std::size_t top = 0;
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        top = mesh.node(i).y() > mesh.node(top).y() ? i : top;
    }
    EXPECT_LT(a.V[2 * static_cast<Eigen::Index>(top) + 1], b.V[2 * static_cast<Eigen::Index>(top) + 1] - 1.0);
}

TEST(MainSubproblem, LengthFlowHasNone)
{
    FlowParameters p = willmore();
    p.model = Model::LengthFlow;
    EXPECT_THROW(solve_subproblem_main(circle(1.0, 16), p, BarrierSpec{}), PreconditionError);
}

TEST(NewtonMultiplier, ZeroDriveGivesZero)
{
    const CurveMesh mesh = adjust_midpoints(ellipse(32));
    const Eigen::VectorXd v2 = solve_subproblem_area(mesh, willmore()).V;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(v2.size());
    const MultiplierResult r = newton_multiplier(mesh, zero, v2, 1e-3, mesh_length(mesh));
    EXPECT_EQ(r.lambda, 0.0);
    EXPECT_EQ(r.iterations, 0);
}

TEST(NewtonMultiplier, RestoresLengthAndMatchesBisection)
{
    const CurveMesh mesh = circle(1.0, 32);
    const Eigen::VectorXd v1 = outward_normals(mesh);
    const Eigen::VectorXd v2 = solve_subproblem_area(mesh, willmore()).V;
    const double tau = 1e-2;
    const double target = mesh_length(mesh);
    const MultiplierResult r = newton_multiplier(mesh, v1, v2, tau, target);
    EXPECT_LE(std::abs(mesh_length(advance_mesh(mesh, v1 + r.lambda * v2, tau)) - target), 1e-9 * target);
    EXPECT_LE(r.iterations, 4);

    auto f = [&](double lam) { return mesh_length(advance_mesh(mesh, v1 + lam * v2, tau)) - target; };
    double lo = 0.0;
    double hi = 10.0;
    ASSERT_LT(f(lo) * f(hi), 0.0);
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((f(mid) < 0) == (f(lo) < 0) ? lo : hi) = mid;
    }
    EXPECT_NEAR(r.lambda, 0.5 * (lo + hi), 1e-6);
    // Outward drive, inward correction of the same magnitude.
    EXPECT_NEAR(r.lambda, 1.0, 0.05);
}

TEST(NewtonMultiplier, TangentialDriveNeedsLittleCorrection)
{
    const CurveMesh mesh = circle(1.0, 32);
    Eigen::VectorXd v1(static_cast<Eigen::Index>(mesh.dof_count()));
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        const Vec2 p = mesh.node(i);
        v1.segment<2>(2 * static_cast<Eigen::Index>(i)) = Vec2(-p.y(), p.x());
    }
    const Eigen::VectorXd v2 = solve_subproblem_area(mesh, willmore()).V;
    const MultiplierResult r = newton_multiplier(mesh, v1, v2, 1e-3, mesh_length(mesh));
    EXPECT_LE(std::abs(r.residual), 1e-9 * mesh_length(mesh));
    // A rotation only lengthens the discrete curve at second order in tau.
    EXPECT_LT(std::abs(r.lambda), 1e-2);
}

TEST(NewtonMultiplier, DegenerateDirectionThrows)
{
    const CurveMesh mesh = circle(1.0, 16);
    Eigen::VectorXd v2(static_cast<Eigen::Index>(mesh.dof_count()));
    for (Eigen::Index i = 0; i < v2.size(); ++i) {
        v2[i] = i % 2 == 0 ? 1.0 : 0.0;
    }
    EXPECT_THROW(newton_multiplier(mesh, outward_normals(mesh), v2, 1e-3, mesh_length(mesh)),
                 PreconditionError);
}

TEST(AdvanceVesicle, CircleIsFixedPoint)
{
    const VesicleState s = VesicleState::from_mesh(circle(1.0, 64));
    const auto [next, rep] = advance_vesicle(s, willmore(1e-4), BarrierSpec{}, {});
    EXPECT_LE(rep.max_displacement, 1e-6);
    EXPECT_NEAR(rep.W, pi, 1e-3);
}

TEST(AdvanceVesicle, LengthFlowShrinksCircle)
{
    // x_t = x_ss on a circle: R(t) = sqrt(1 - 2t).
    FlowParameters p = willmore(1e-3);
    p.model = Model::LengthFlow;
    VesicleState s = VesicleState::from_mesh(circle(1.0, 64));
    for (int k = 0; k < 180; ++k) {
        s = advance_vesicle(s, p, BarrierSpec{}, {}).first;
    }
    EXPECT_NEAR(mean_radius(s.mesh), std::sqrt(1.0 - 2.0 * 0.18), 0.01 * 0.8);
}

TEST(AdvanceVesicle, ConservesLengthAndLowersEnergy)
{
    VesicleState s = VesicleState::from_mesh(ellipse(48));
    const double l0 = s.target_length;
    double w = willmore_energy(s.mesh);
    for (int k = 0; k < 20; ++k) {
        const auto [next, rep] = advance_vesicle(s, willmore(1e-3), BarrierSpec{}, {});
        EXPECT_LE(std::abs(rep.length_after - l0), 1e-9 * l0);
        EXPECT_LT(rep.W, w);
        EXPECT_LE(rep.superposition_residual, 1e-8);
        EXPECT_LE(rep.newton_iters, 4);
        w = rep.W;
        s = next;
    }
}

TEST(AdvanceVesicle, FullyImplicitTangentialTermStillSteps)
{
    FlowParameters p = willmore(1e-4);
    p.lag_tangential = false;
    const VesicleState s = VesicleState::from_mesh(ellipse(32));
    const auto [next, rep] = advance_vesicle(s, p, BarrierSpec{}, {});
    EXPECT_LE(std::abs(rep.length_after - s.target_length), 1e-9 * s.target_length);
    EXPECT_LT(rep.W, willmore_energy(s.mesh));
    EXPECT_LE(rep.superposition_residual, 1e-8);
}

TEST(AdvanceVesicle, BarrierStepKeepsLength)
{
    FlowParameters p = willmore(1e-4);
    p.model = Model::Model2;
    p.alpha = 10.0;
    const BarrierSpec slab = BarrierSpec::step({{0.0, 1.0}, 1.05, 25.0, ""});
    const VesicleState s = VesicleState::from_mesh(adjust_midpoints(ellipse(48)));
    const auto [next, rep] = advance_vesicle(s, p, slab, {});
    EXPECT_GT(rep.H_B, 0.0);
    EXPECT_LT(rep.H_B, barrier_functional(s.mesh, slab));
    EXPECT_LE(std::abs(rep.length_after - s.target_length), 1e-9 * s.target_length);
    // The penalty linearization enters the main subproblem only, so the
    // combined row is not met exactly; it stays a small diagnostic.
    EXPECT_GT(rep.superposition_residual, 0.0);
    EXPECT_LT(rep.superposition_residual, 1e-1);
}

TEST(AdvanceVesicle, NeighbourRepels)
{
    FlowParameters p = willmore(1e-3);
    p.model = Model::Model3;
    p.beta = 1.0;
    const CurveMesh left = circle(1.0, 32);
    const CurveMesh right = circle(1.0, 32, {2.3, 0.0});
    const VesicleState s = VesicleState::from_mesh(left);
    const auto [next, rep] = advance_vesicle(s, p, BarrierSpec{}, {right});
    EXPECT_GT(rep.D, 0.0);
    double shift = 0.0;
    for (const Vec2& q : next.mesh.nodes()) {
        shift += q.x();
    }
    EXPECT_LT(shift / static_cast<double>(next.mesh.node_count()), 0.0);
}
