#ifndef VESICLE_DERIVCHECK_HPP
#define VESICLE_DERIVCHECK_HPP

#include "assembly.hpp"
#include "barrier.hpp"
#include "curve_mesh.hpp"
#include "distance.hpp"
#include "functionals.hpp"
#include "shapes.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace vesicle {

/// Smooth ambient vector field sum_k a_k sin(w_k . p + c_k), sampled at nodes.
struct SmoothField {
    struct Mode {
        Vec2 wave;
        double phase;
        Vec2 amplitude;
    };
    std::vector<Mode> modes;

    Vec2 operator()(const Vec2& p) const
    {
        Vec2 v = Vec2::Zero();
        for (const Mode& m : modes) {
            v += std::sin(m.wave.dot(p) + m.phase) * m.amplitude;
        }
        return v;
    }

    Eigen::VectorXd sample(const CurveMesh& mesh) const
    {
        Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.dof_count()));
        for (std::size_t i = 0; i < mesh.node_count(); ++i) {
            out.segment<2>(2 * static_cast<Eigen::Index>(i)) = (*this)(mesh.node(i));
        }
        return out;
    }
};

inline std::vector<SmoothField> random_fields(std::uint64_t seed, int count, int modes = 3)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);
    std::vector<SmoothField> out(static_cast<std::size_t>(count));
    for (SmoothField& f : out) {
        for (int k = 0; k < modes; ++k) {
            const double a = angle(rng);
            const double freq = 0.5 + k;
            f.modes.push_back({freq * Vec2(std::cos(a), std::sin(a)), angle(rng),
                               Vec2(unit(rng), unit(rng)) / (1.0 + k)});
        }
    }
    return out;
}

/// How a perturbed curve is materialized for the finite differences.
enum class Perturbation {
    Raw,              // x + eps Phi at every node
    AdjustMidpoints,  // then midpoints re-adjusted, as after a time step
};

/// Central difference of F along Phi.
inline double central_difference(const std::function<double(const CurveMesh&)>& functional,
                                 const CurveMesh& mesh, const Eigen::VectorXd& phi, double eps,
                                 Perturbation mode)
{
    auto make = [&](double s) {
        CurveMesh m = mesh.displaced(phi, s);
        return mode == Perturbation::AdjustMidpoints ? adjust_midpoints(m) : m;
    };
    return (functional(make(eps)) - functional(make(-eps))) / (2.0 * eps);
}

struct DerivativeSample {
    double assembled = 0.0;
    double finite_difference = 0.0;

    double relative_error() const
    {
        return std::abs(assembled - finite_difference)
            / std::max(std::abs(finite_difference), 1e-300);
    }
};

struct DerivativeCheck {
    std::string name;
    std::vector<DerivativeSample> samples;

    double max_relative_error() const
    {
        double e = 0.0;
        for (const DerivativeSample& s : samples) {
            e = std::max(e, s.relative_error());
        }
        return e;
    }
};

/// The three shape derivatives checked against finite differences of their
/// functionals: dH_B, dD (witnesses frozen at the unperturbed curve), and
/// dA(Phi) = int H . Phi with the discrete curvature.
inline std::vector<DerivativeCheck> check_shape_derivatives(const CurveMesh& mesh,
                                                            const BarrierSpec& barrier,
                                                            const std::vector<CurveMesh>& others,
                                                            const std::vector<SmoothField>& fields,
                                                            double eps, Perturbation mode)
{
    const Eigen::VectorXd g_h = assemble_dH_terms(mesh, barrier, 0.0).explicit_part;
    const DistanceField dist = distance_field(mesh, others);
    const Eigen::VectorXd g_d = assemble_dD_terms(mesh, dist, 0.0).explicit_part;
    const Eigen::VectorXd g_a = assemble_dA(mesh) * discrete_curvature(mesh);

    std::vector<DerivativeCheck> out{{"dH_B", {}}, {"dD", {}}, {"dA", {}}};
    for (const SmoothField& f : fields) {
        const Eigen::VectorXd phi = f.sample(mesh);
        out[0].samples.push_back(
            {g_h.dot(phi),
             central_difference([&](const CurveMesh& m) { return barrier_functional(m, barrier); },
                                mesh, phi, eps, mode)});
        out[1].samples.push_back(
            {g_d.dot(phi),
             central_difference([&](const CurveMesh& m) { return distance_functional(m, dist); },
                                mesh, phi, eps, mode)});
        out[2].samples.push_back(
            {g_a.dot(phi),
             central_difference([](const CurveMesh& m) { return mesh_length(m); }, mesh, phi, eps,
                                mode)});
    }
    return out;
}

struct DerivcheckRow {
    std::string name;
    double error_coarse = 0.0; // max relative error at the coarse resolution
    double error_fine = 0.0;
    double tolerance = 1e-3;

    bool halves() const { return error_fine <= 0.5 * error_coarse; }
    bool passed() const { return error_fine <= tolerance && halves(); }
};

struct DerivcheckSetup {
    ShapeSpec primary;
    std::optional<ShapeSpec> other;   // default: a circle beside the primary shape
    std::optional<BarrierSpec> barrier; // default: a slab across the primary shape
    std::uint64_t seed = 1;
    int field_count = 5;
    int coarse = 64;
    int fine = 128;
    double eps = 1e-5;
};

/// A barrier whose transition layer crosses the shape, so dH_B is not trivially zero.
inline BarrierSpec default_check_barrier(const CurveMesh& mesh)
{
    const BoundingBox b = bounding_box(mesh);
    const Vec2 c = 0.5 * (b.lo + b.hi);
    const double h = 0.25 * (b.hi.y() - b.lo.y());
    const double w = 0.25 * (b.hi.x() - b.lo.x());
    return BarrierSpec::product({BarrierSpec::step({{0.0, 1.0}, c.y() + h, 4.0, ""}),
                                 BarrierSpec::step({{-1.0, 0.0}, -(c.x() + w), 4.0, ""})});
}

inline ShapeSpec default_check_neighbour(const CurveMesh& mesh, int elements)
{
    const BoundingBox b = bounding_box(mesh);
    const double r = 0.25 * (b.hi.y() - b.lo.y());
    const Vec2 centre(0.5 * (b.lo.x() + b.hi.x()), b.hi.y() + 0.5 * r + r);
    return {shape::Circle{centre, r}, elements};
}

/// Shape-derivative FD suite at two resolutions. Perturbed curves get their
/// midpoints re-adjusted, which is what makes the error resolution dependent.
inline std::vector<DerivcheckRow> run_derivcheck(const DerivcheckSetup& setup)
{
    const std::vector<SmoothField> fields = random_fields(setup.seed, setup.field_count);
    std::vector<DerivcheckRow> rows;
    for (int pass = 0; pass < 2; ++pass) {
        const int n = pass == 0 ? setup.coarse : setup.fine;
        ShapeSpec primary = setup.primary;
        primary.element_count = n;
        const CurveMesh mesh = build_shape(primary);
        ShapeSpec other = setup.other ? *setup.other : default_check_neighbour(mesh, n);
        other.element_count = n;
        const BarrierSpec barrier = setup.barrier ? *setup.barrier : default_check_barrier(mesh);
        const auto checks = check_shape_derivatives(mesh, barrier, {build_shape(other)}, fields,
                                                    setup.eps, Perturbation::AdjustMidpoints);
        for (std::size_t k = 0; k < checks.size(); ++k) {
            if (pass == 0) {
                rows.push_back({checks[k].name, checks[k].max_relative_error(), 0.0});
            } else {
                rows[k].error_fine = checks[k].max_relative_error();
            }
        }
    }
    return rows;
}

} // namespace vesicle

#endif
