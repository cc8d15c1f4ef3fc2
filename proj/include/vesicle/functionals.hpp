#ifndef VESICLE_FUNCTIONALS_HPP
#define VESICLE_FUNCTIONALS_HPP

#include "assembly.hpp"
#include "barrier.hpp"
#include "curve_mesh.hpp"
#include "distance.hpp"

#include <Eigen/SparseCholesky>

namespace vesicle {

/// Integral of the smoothed obstacle indicator over the curve.
inline double barrier_functional(const CurveMesh& mesh, const BarrierSpec& barrier)
{
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            total += q.weight * barrier.eval(q.position).value;
        }
    }
    return total;
}

/// Mean curvature vector H with M H = K x, the weak form of -Laplace(x) = h.
/// H points along the outward normal on convex arcs (h = nu / R on a circle).
inline Eigen::VectorXd discrete_curvature(const CurveMesh& mesh)
{
    const SparseMatrix mass = assemble_scalar_mass(mesh);
    const SparseMatrix stiff = assemble_scalar_stiffness(mesh);
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(mass);
    if (ldlt.info() != Eigen::Success) {
        throw SingularSystemError("mass matrix is singular");
    }
    const auto n = static_cast<Eigen::Index>(mesh.node_count());
    Eigen::MatrixXd coords(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        coords.row(i) = mesh.node(static_cast<std::size_t>(i)).transpose();
    }
    const Eigen::MatrixXd h = ldlt.solve(stiff * coords);
    if (ldlt.info() != Eigen::Success || !h.allFinite()) {
        throw SingularSystemError("curvature solve failed");
    }
    Eigen::VectorXd out(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.segment<2>(2 * i) = h.row(i).transpose();
    }
    return out;
}

/// 1/2 int |H|^2 over the curve for a given nodal curvature field.
inline double willmore_energy(const CurveMesh& mesh, const Eigen::VectorXd& curvature)
{
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements()[e];
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            Vec2 h = Vec2::Zero();
            for (std::size_t j = 0; j < 3; ++j) {
                h += q.phi[j] * curvature.segment<2>(2 * static_cast<Eigen::Index>(el[j]));
            }
            total += 0.5 * q.weight * h.squaredNorm();
        }
    }
    return total;
}

inline double willmore_energy(const CurveMesh& mesh)
{
    return willmore_energy(mesh, discrete_curvature(mesh));
}

/// Sum over elements of int_K 1/|x - y_K|^2 with the witnesses frozen.
inline double distance_functional(const CurveMesh& mesh, const DistanceField& field)
{
    if (field.witness.size() != mesh.element_count()) {
        throw PreconditionError("distance field does not match the mesh");
    }
    double total = 0.0;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            total += q.weight * inverse_squared_distance(q.position, field.witness[e]).value;
        }
    }
    return total;
}

} // namespace vesicle

#endif
