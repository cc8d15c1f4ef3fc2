#ifndef VESICLE_STEPPER_HPP
#define VESICLE_STEPPER_HPP

#include "assembly.hpp"
#include "barrier.hpp"
#include "curve_mesh.hpp"
#include "distance.hpp"
#include "functionals.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vesicle {

/// length-flow: implicit curve shortening, no constraint (drive -dA only).
/// model1: Willmore. model2: + alpha H_B. model3: + beta D. Models 1-3 keep
/// the length of each curve fixed through a Lagrange multiplier.
enum class Model { LengthFlow, Model1, Model2, Model3 };

inline const char* model_name(Model m)
{
    switch (m) {
    case Model::LengthFlow: return "length-flow";
    case Model::Model1: return "model1";
    case Model::Model2: return "model2";
    case Model::Model3: return "model3";
    }
    return "?";
}

struct FlowParameters {
    Model model = Model::Model1;
    double tau = 1e-4;
    double alpha = 0.0;
    double beta = 0.0;
    double newton_tol = 1e-9;
    int newton_max_iter = 25;
    // Opt-in: re-space nodes by arclength after every update. Off reproduces
    // the plain scheme, whose tangential node drift can degrade long runs.
    bool redistribute = false;
    // Treat the -3/2 (Phi_s . t)(H_s . t) part of dW with the current
    // curvature instead of the unknown one. The fully implicit coupling turns
    // tangential velocity into spurious curvature and is unstable in time.
    bool lag_tangential = true;

    bool uses_barrier() const { return (model == Model::Model2 || model == Model::Model3) && alpha > 0; }
    bool uses_distance() const { return model == Model::Model3 && beta > 0; }
};

struct SubproblemSolution {
    Eigen::VectorXd V;
    Eigen::VectorXd H;
};

struct VesicleState {
    CurveMesh mesh;
    double target_length = 0.0;
    double lambda = 0.0;

    static VesicleState from_mesh(CurveMesh mesh)
    {
        const double len = mesh_length(mesh);
        return {std::move(mesh), len, 0.0};
    }
};

struct EnergyTerms {
    double length = 0.0;
    double W = 0.0;
    double H_B = 0.0;
    double D = 0.0;
    double J = 0.0;
};

struct StepReport {
    double lambda = 0.0;
    int newton_iters = 0;
    bool bisection = false;
    double length_before = 0.0;
    double length_after = 0.0;
    double W = 0.0;
    double H_B = 0.0;
    double D = 0.0;
    double J = 0.0;
    double max_displacement = 0.0;
    // Relative residual of the combined momentum row at V = V1 + lambda V2.
    double superposition_residual = 0.0;
};

/// Energies of one curve. With the length flow J is the length itself;
/// otherwise J = W + alpha H_B + beta D + lambda (A - A0).
inline EnergyTerms evaluate_energy(const CurveMesh& mesh, const FlowParameters& params,
                                   const BarrierSpec& barrier, const std::vector<CurveMesh>& others,
                                   double lambda, double target_length)
{
    EnergyTerms en;
    en.length = mesh_length(mesh);
    en.W = willmore_energy(mesh);
    if (params.model == Model::LengthFlow) {
        en.J = en.length;
        return en;
    }
    if (params.model != Model::Model1 && !barrier.empty()) {
        en.H_B = barrier_functional(mesh, barrier);
    }
    if (params.model == Model::Model3 && !others.empty()) {
        en.D = distance_functional(mesh, distance_field(mesh, others));
    }
    const double a = params.uses_barrier() ? params.alpha : 0.0;
    const double b = params.uses_distance() ? params.beta : 0.0;
    en.J = en.W + a * en.H_B + b * en.D + lambda * (en.length - target_length);
    return en;
}

namespace detail {

struct StepOperators {
    SparseMatrix mass;
    SparseMatrix stiffness;
    SparseMatrix dw;          // couples V to the unknown curvature
    Eigen::VectorXd dw_lagged; // lagged part of dW applied to the current curvature
    Eigen::VectorXd split_rhs;
    std::optional<LinearizedTerms> barrier_terms;
    std::optional<LinearizedTerms> distance_terms;
};

inline StepOperators assemble_step(const CurveMesh& mesh, const FlowParameters& params,
                                   const BarrierSpec& barrier, const DistanceField* field)
{
    StepOperators ops;
    ops.mass = assemble_mass(mesh);
    ops.stiffness = assemble_stiffness(mesh);
    ops.split_rhs = -(ops.stiffness * mesh.coordinates());
    ops.dw_lagged = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.dof_count()));
    if (params.model != Model::LengthFlow) {
        if (params.lag_tangential) {
            ops.dw = ops.stiffness;
            ops.dw_lagged = -1.5 * (assemble_dW_tangential(mesh) * discrete_curvature(mesh));
        } else {
            ops.dw = assemble_dW_operator(mesh);
        }
    }
    if (params.uses_barrier() && !barrier.empty()) {
        ops.barrier_terms = assemble_dH_terms(mesh, barrier, params.tau);
    }
    if (params.uses_distance() && field != nullptr) {
        ops.distance_terms = assemble_dD_terms(mesh, *field, params.tau);
    }
    return ops;
}

inline SubproblemSolution split_solution(const Eigen::VectorXd& x)
{
    const Eigen::Index n = x.size() / 2;
    return {x.head(n), x.tail(n)};
}

inline SubproblemSolution solve_main(const StepOperators& ops, const FlowParameters& params)
{
    BlockSystem sys;
    sys.a_vv = ops.mass;
    sys.b_v = -ops.dw_lagged;
    if (ops.barrier_terms) {
        sys.a_vv += params.alpha * ops.barrier_terms->implicit_part;
        sys.b_v -= params.alpha * ops.barrier_terms->explicit_part;
    }
    if (ops.distance_terms) {
        sys.a_vv += params.beta * ops.distance_terms->implicit_part;
        sys.b_v -= params.beta * ops.distance_terms->explicit_part;
    }
    sys.a_vh = ops.dw;
    sys.a_hv = params.tau * ops.stiffness;
    sys.a_hh = -ops.mass;
    sys.b_h = ops.split_rhs;
    return split_solution(solve_block_system(sys));
}

inline SubproblemSolution solve_area(const StepOperators& ops, const FlowParameters& params)
{
    BlockSystem sys;
    sys.a_vv = ops.mass;
    sys.a_vh = ops.mass;
    sys.a_hv = params.tau * ops.stiffness;
    sys.a_hh = -ops.mass;
    sys.b_v = Eigen::VectorXd::Zero(ops.mass.rows());
    sys.b_h = ops.split_rhs;
    return split_solution(solve_block_system(sys));
}

} // namespace detail

/// Velocity and curvature driven by the Willmore term and the (linearized)
/// barrier and distance penalties.
inline SubproblemSolution solve_subproblem_main(const CurveMesh& mesh, const FlowParameters& params,
                                                const BarrierSpec& barrier,
                                                const DistanceField* field = nullptr)
{
    if (params.model == Model::LengthFlow) {
        throw PreconditionError("the length flow has no main subproblem");
    }
    return detail::solve_main(detail::assemble_step(mesh, params, barrier, field), params);
}

/// Velocity and curvature driven by -dA alone. V2 = -H2, and stepping along
/// V2 shortens the curve.
inline SubproblemSolution solve_subproblem_area(const CurveMesh& mesh, const FlowParameters& params)
{
    FlowParameters area = params;
    area.model = Model::LengthFlow;
    return detail::solve_area(detail::assemble_step(mesh, area, BarrierSpec{}, nullptr), params);
}

/// Integral of div_G V over the curve.
inline double integrate_divergence(const CurveMesh& mesh, const Eigen::VectorXd& field)
{
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements()[e];
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            Vec2 ds = Vec2::Zero();
            for (std::size_t j = 0; j < 3; ++j) {
                ds += q.dphi_ds[j] * field.segment<2>(2 * static_cast<Eigen::Index>(el[j]));
            }
            total += q.weight * ds.dot(q.tangent);
        }
    }
    return total;
}

/// The curve reached from `mesh` with velocity v over one step, midpoints
/// re-adjusted (and nodes re-spaced if asked).
inline CurveMesh advance_mesh(const CurveMesh& mesh, const Eigen::VectorXd& v, double tau,
                              bool redistribute = false)
{
    CurveMesh moved = adjust_midpoints(mesh.displaced(v, tau));
    return redistribute ? redistribute_nodes(moved) : moved;
}

struct MultiplierResult {
    double lambda = 0.0;
    int iterations = 0;
    bool bisection = false;
    double residual = 0.0; // f(lambda) = A(candidate) - target
};

inline constexpr double degenerate_direction = 1e-12;

/// Root of f(lambda) = A(advance(x, V1 + lambda V2)) - target by Newton,
/// f' ~ tau int div V2 on the lambda-displaced curve. Falls back to bisection
/// when |f| fails to drop tenfold over three iterates.
inline MultiplierResult newton_multiplier(const CurveMesh& mesh, const Eigen::VectorXd& v1,
                                          const Eigen::VectorXd& v2, double tau,
                                          double target_length, double tol = 1e-9,
                                          int max_iter = 25, bool redistribute = false)
{
    const double div2 = integrate_divergence(mesh, v2);
    if (!(std::abs(div2) >= degenerate_direction)) {
        throw PreconditionError("constraint direction is degenerate (int div V2 = 0)");
    }
    const double goal = tol * target_length;
    auto f = [&](double lam) {
        return mesh_length(advance_mesh(mesh, v1 + lam * v2, tau, redistribute)) - target_length;
    };

    MultiplierResult res;
    double lam = -integrate_divergence(mesh, v1) / div2;
    std::vector<double> trace;
    double fl = f(lam);
    trace.push_back(std::abs(fl));
    bool stalled = false;
    while (std::abs(fl) > goal) {
        if (res.iterations >= max_iter) {
            stalled = true;
            break;
        }
        const double slope = tau * integrate_divergence(mesh.displaced(v1 + lam * v2, tau), v2);
        if (!std::isfinite(slope) || slope == 0.0) {
            stalled = true;
            break;
        }
        lam -= fl / slope;
        ++res.iterations;
        fl = f(lam);
        trace.push_back(std::abs(fl));
        const std::size_t k = trace.size();
        if (!std::isfinite(fl) || (k >= 4 && trace[k - 1] > 0.1 * trace[k - 4])) {
            stalled = std::abs(fl) > goal;
            break;
        }
    }
    if (!stalled) {
        res.lambda = lam;
        res.residual = fl;
        return res;
    }

    const double lam0 = -integrate_divergence(mesh, v1) / div2;
    double lo = lam0 - 10.0 * std::abs(lam0) - 1.0;
    double hi = lam0 + 10.0 * std::abs(lam0) + 1.0;
    double flo = f(lo);
    double fhi = f(hi);
    if (!(flo * fhi <= 0.0)) {
        throw NoConvergenceError("multiplier search failed: no sign change on the bracket");
    }
    res.bisection = true;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        ++res.iterations;
        if (std::abs(fm) <= goal) {
            res.lambda = mid;
            res.residual = fm;
            return res;
        }
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    throw NoConvergenceError("multiplier search did not reach tolerance");
}

/// One time step of one curve. `others` are the current meshes of the other
/// vesicles (used by the distance term only).
inline std::pair<VesicleState, StepReport> advance_vesicle(const VesicleState& state,
                                                           const FlowParameters& params,
                                                           const BarrierSpec& barrier,
                                                           const std::vector<CurveMesh>& others)
{
    const CurveMesh& mesh = state.mesh;
    StepReport rep;
    rep.length_before = mesh_length(mesh);

    std::optional<DistanceField> field;
    if (params.uses_distance() && !others.empty()) {
        field = distance_field(mesh, others);
    }
    const detail::StepOperators ops
        = detail::assemble_step(mesh, params, barrier, field ? &*field : nullptr);

    const SubproblemSolution s2 = detail::solve_area(ops, params);
    Eigen::VectorXd v;
    double lambda = 0.0;
    if (params.model == Model::LengthFlow) {
        v = s2.V;
    } else {
        const SubproblemSolution s1 = detail::solve_main(ops, params);
        const MultiplierResult mr = newton_multiplier(mesh, s1.V, s2.V, params.tau,
                                                      state.target_length, params.newton_tol,
                                                      params.newton_max_iter, params.redistribute);
        lambda = mr.lambda;
        rep.newton_iters = mr.iterations;
        rep.bisection = mr.bisection;
        v = s1.V + lambda * s2.V;

        Eigen::VectorXd r = ops.mass * v + ops.dw * s1.H + ops.dw_lagged + lambda * (ops.mass * s2.H);
        double scale = (ops.mass * v).norm() + (ops.dw * s1.H).norm() + ops.dw_lagged.norm()
            + std::abs(lambda) * (ops.mass * s2.H).norm();
        if (ops.barrier_terms) {
            r += params.alpha * (ops.barrier_terms->implicit_part * v + ops.barrier_terms->explicit_part);
            scale += params.alpha * ops.barrier_terms->explicit_part.norm();
        }
        if (ops.distance_terms) {
            r += params.beta * (ops.distance_terms->implicit_part * v + ops.distance_terms->explicit_part);
            scale += params.beta * ops.distance_terms->explicit_part.norm();
        }
        rep.superposition_residual = scale > 0 ? r.norm() / scale : 0.0;
    }

    VesicleState next{advance_mesh(mesh, v, params.tau, params.redistribute), state.target_length,
                      lambda};
    validate_geometry(next.mesh);

    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        rep.max_displacement = std::max(rep.max_displacement, (next.mesh.node(i) - mesh.node(i)).norm());
    }
    const EnergyTerms en = evaluate_energy(next.mesh, params, barrier, others, lambda,
                                           state.target_length);
    rep.lambda = lambda;
    rep.length_after = en.length;
    rep.W = en.W;
    rep.H_B = en.H_B;
    rep.D = en.D;
    rep.J = en.J;
    return {std::move(next), rep};
}

} // namespace vesicle

#endif
