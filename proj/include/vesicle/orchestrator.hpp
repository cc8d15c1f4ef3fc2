#ifndef VESICLE_ORCHESTRATOR_HPP
#define VESICLE_ORCHESTRATOR_HPP

#include "barrier.hpp"
#include "curve_mesh.hpp"
#include "stepper.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace vesicle {

/// Vesicle stepping order for outer iteration n: (0..M-1) rotated left by
/// n mod M, so each vesicle leads once every M iterations.
inline std::vector<std::size_t> schedule_order(std::size_t n, std::size_t m)
{
    if (m == 0) {
        throw PreconditionError("schedule needs at least one vesicle");
    }
    std::vector<std::size_t> order(m);
    for (std::size_t k = 0; k < m; ++k) {
        order[k] = (n + k) % m;
    }
    return order;
}

enum class StopReason { None, MaxIterations, Stagnation };

inline const char* stop_reason_name(StopReason r)
{
    switch (r) {
    case StopReason::None: return "none";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Stagnation: return "stagnation";
    }
    return "?";
}

/// `j_history[i]` holds J of vesicle i at steps 0..n. Stops after n >= N
/// outer iterations, or when the last three changes of J are below epsilon
/// for every vesicle.
inline StopReason stopping_check(const std::vector<std::vector<double>>& j_history, double epsilon,
                                 std::size_t n, std::size_t max_iters)
{
    if (n >= max_iters) {
        return StopReason::MaxIterations;
    }
    if (j_history.empty()) {
        return StopReason::None;
    }
    for (const std::vector<double>& j : j_history) {
        if (j.size() < 4) {
            return StopReason::None;
        }
        for (std::size_t k = j.size() - 3; k < j.size(); ++k) {
            if (!(std::abs(j[k] - j[k - 1]) < epsilon)) {
                return StopReason::None;
            }
        }
    }
    return StopReason::Stagnation;
}

/// Keeps the half-planes tagged "top" and "bottom" at a fixed clearance from
/// the membrane extremes, measured along `axis` over a lateral window.
struct MovingBarrierRule {
    double gap = 0.1;
    std::optional<std::array<double, 2>> window; // lateral range; default: central half of the bbox
    Vec2 axis{0.0, 1.0};
};

inline Vec2 lateral_direction(const Vec2& axis) { return {axis.y(), -axis.x()}; }

struct BarrierExtremes {
    double low = 0.0;
    double high = 0.0;
};

inline BarrierExtremes membrane_extremes(const MovingBarrierRule& rule,
                                         const std::vector<CurveMesh>& meshes)
{
    if (meshes.empty()) {
        throw PreconditionError("moving barrier needs at least one vesicle");
    }
    const Vec2 axis = rule.axis.normalized();
    const Vec2 lat = lateral_direction(axis);
    std::array<double, 2> window{};
    if (rule.window) {
        window = *rule.window;
    } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const CurveMesh& m : meshes) {
            for (const Vec2& p : m.nodes()) {
                lo = std::min(lo, lat.dot(p));
                hi = std::max(hi, lat.dot(p));
            }
        }
        const double quarter = 0.25 * (hi - lo);
        window = {lo + quarter, hi - quarter};
    }
    BarrierExtremes ex{std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity()};
    for (const CurveMesh& m : meshes) {
        for (const Vec2& p : m.nodes()) {
            const double l = lat.dot(p);
            if (l >= window[0] && l <= window[1]) {
                ex.low = std::min(ex.low, axis.dot(p));
                ex.high = std::max(ex.high, axis.dot(p));
            }
        }
    }
    if (!(ex.low <= ex.high)) {
        throw PreconditionError("moving-barrier window contains no membrane point");
    }
    return ex;
}

/// Resets the tagged offsets to (max + gap) for "top" and (min - gap) for
/// "bottom", as positions along the rule's axis.
inline BarrierSpec update_moving_barrier(const MovingBarrierRule& rule, const BarrierSpec& barrier,
                                         const std::vector<CurveMesh>& meshes)
{
    if (!(rule.gap > 0)) {
        throw PreconditionError("moving-barrier gap must be positive");
    }
    const BarrierExtremes ex = membrane_extremes(rule, meshes);
    const Vec2 axis = rule.axis.normalized();
    BarrierSpec out = barrier;
    out.for_each_plane([&](HalfPlane& h) {
        if (h.tag == "top") {
            h.offset = h.direction.dot(axis) * (ex.high + rule.gap);
        } else if (h.tag == "bottom") {
            h.offset = h.direction.dot(axis) * (ex.low - rule.gap);
        }
    });
    return out;
}

struct MetricsRow {
    std::size_t step = 0;
    double t = 0.0;
    std::size_t vesicle = 0;
    double length = 0.0;
    double W = 0.0;
    double H_B = 0.0;
    double D = 0.0;
    double J = 0.0;
    double lambda = 0.0;
    int newton_iters = 0;
};

struct ScenarioState {
    std::vector<VesicleState> vesicles;
    BarrierSpec barrier;
    std::optional<MovingBarrierRule> moving;
    FlowParameters params;
    double epsilon = 1e-6;
    std::size_t max_iters = 20000;

    std::size_t iteration = 0;
    double t = 0.0;
    std::vector<std::vector<StepReport>> history; // per vesicle
    std::vector<MetricsRow> metrics;               // step-0 rows first, then per iteration
    std::vector<std::vector<double>> j_series;     // J of each vesicle at steps 0..iteration

    std::vector<CurveMesh> meshes() const
    {
        std::vector<CurveMesh> out;
        out.reserve(vesicles.size());
        for (const VesicleState& v : vesicles) {
            out.push_back(v.mesh);
        }
        return out;
    }

    std::vector<CurveMesh> others(std::size_t i) const
    {
        std::vector<CurveMesh> out;
        for (std::size_t k = 0; k < vesicles.size(); ++k) {
            if (k != i) {
                out.push_back(vesicles[k].mesh);
            }
        }
        return out;
    }
};

inline void check_no_contact(const std::vector<CurveMesh>& meshes)
{
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        for (std::size_t k = i + 1; k < meshes.size(); ++k) {
            if (meshes_intersect(meshes[i], meshes[k])) {
                throw ContactError("vesicles " + std::to_string(i) + " and " + std::to_string(k)
                                   + " intersect");
            }
        }
    }
}

/// Initial scenario: applies the moving-barrier rule once and records the
/// step-0 metrics rows.
inline ScenarioState make_scenario(std::vector<CurveMesh> meshes, FlowParameters params,
                                   BarrierSpec barrier, std::optional<MovingBarrierRule> moving,
                                   double epsilon, std::size_t max_iters)
{
    if (meshes.empty()) {
        throw PreconditionError("scenario needs at least one vesicle");
    }
    if (params.model == Model::Model3 && meshes.size() < 2) {
        throw PreconditionError("model3 needs at least two vesicles");
    }
    ScenarioState s;
    s.params = params;
    s.epsilon = epsilon;
    s.max_iters = max_iters;
    s.moving = moving;
    for (CurveMesh& m : meshes) {
        validate_geometry(m);
        s.vesicles.push_back(VesicleState::from_mesh(std::move(m)));
    }
    check_no_contact(s.meshes());
    s.barrier = moving ? update_moving_barrier(*moving, barrier, s.meshes()) : std::move(barrier);
    s.history.resize(s.vesicles.size());
    s.j_series.resize(s.vesicles.size());
    for (std::size_t i = 0; i < s.vesicles.size(); ++i) {
        const VesicleState& v = s.vesicles[i];
        const EnergyTerms en
            = evaluate_energy(v.mesh, params, s.barrier, s.others(i), 0.0, v.target_length);
        s.metrics.push_back({0, 0.0, i, en.length, en.W, en.H_B, en.D, en.J, 0.0, 0});
        s.j_series[i].push_back(en.J);
    }
    return s;
}

/// One outer iteration: every vesicle once in schedule order, each seeing the
/// latest meshes of the others, then the barrier update.
inline void step_scenario(ScenarioState& s)
{
    const std::size_t n = s.iteration;
    std::vector<StepReport> reports(s.vesicles.size());
    for (std::size_t i : schedule_order(n, s.vesicles.size())) {
        try {
            auto [next, rep] = advance_vesicle(s.vesicles[i], s.params, s.barrier, s.others(i));
            s.vesicles[i] = std::move(next);
            reports[i] = rep;
            for (std::size_t k = 0; k < s.vesicles.size(); ++k) {
                if (k != i && meshes_intersect(s.vesicles[i].mesh, s.vesicles[k].mesh)) {
                    throw ContactError("collides with vesicle " + std::to_string(k));
                }
            }
        } catch (const Error&) {
            rethrow_with_context("vesicle " + std::to_string(i) + ", iteration " + std::to_string(n));
        }
    }
    if (s.moving) {
        s.barrier = update_moving_barrier(*s.moving, s.barrier, s.meshes());
    }
    s.iteration = n + 1;
    s.t = static_cast<double>(s.iteration) * s.params.tau;
    for (std::size_t i = 0; i < s.vesicles.size(); ++i) {
        const StepReport& r = reports[i];
        s.history[i].push_back(r);
        s.metrics.push_back(
            {s.iteration, s.t, i, r.length_after, r.W, r.H_B, r.D, r.J, r.lambda, r.newton_iters});
        s.j_series[i].push_back(r.J);
    }
}

struct RunResult {
    ScenarioState state;
    StopReason reason = StopReason::None;
};

using IterationCallback = std::function<void(const ScenarioState&)>;

/// Runs outer iterations until the stopping rule fires. The callback sees the
/// initial state and the state after every iteration.
inline RunResult run_scenario(ScenarioState state, const IterationCallback& on_iteration = {})
{
    if (on_iteration) {
        on_iteration(state);
    }
    for (;;) {
        const StopReason r
            = stopping_check(state.j_series, state.epsilon, state.iteration, state.max_iters);
        if (r != StopReason::None) {
            return {std::move(state), r};
        }
        step_scenario(state);
        if (on_iteration) {
            on_iteration(state);
        }
    }
}

} // namespace vesicle

#endif
