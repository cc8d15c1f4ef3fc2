#ifndef VESICLE_ASSEMBLY_HPP
#define VESICLE_ASSEMBLY_HPP

#include "barrier.hpp"
#include "curve_mesh.hpp"
#include "distance.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <vector>

namespace vesicle {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Vector fields use interleaved dofs: component c of node i lives at 2 i + c.
// On a curve every tangential derivative reduces to the arclength derivative:
// grad_G F = t (dF/ds)^T, div_G F = t . dF/ds, and grad_G Id = t t^T.

namespace detail {

inline Eigen::Index dof(std::size_t node, int comp)
{
    return 2 * static_cast<Eigen::Index>(node) + comp;
}

template <class Kernel>
SparseMatrix assemble_scalar(const CurveMesh& mesh, Kernel kernel)
{
    std::vector<Triplet> trip;
    trip.reserve(mesh.element_count() * 9);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements()[e];
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            for (std::size_t i = 0; i < 3; ++i) {
                for (std::size_t j = 0; j < 3; ++j) {
                    trip.emplace_back(static_cast<Eigen::Index>(el[i]),
                                      static_cast<Eigen::Index>(el[j]), kernel(q, i, j));
                }
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.node_count());
    SparseMatrix m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

/// Kronecker product with the 2x2 identity, in interleaved dof order.
inline SparseMatrix vectorize(const SparseMatrix& scalar)
{
    std::vector<Triplet> trip;
    trip.reserve(2 * static_cast<std::size_t>(scalar.nonZeros()));
    for (Eigen::Index k = 0; k < scalar.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(scalar, k); it; ++it) {
            trip.emplace_back(2 * it.row(), 2 * it.col(), it.value());
            trip.emplace_back(2 * it.row() + 1, 2 * it.col() + 1, it.value());
        }
    }
    SparseMatrix m(2 * scalar.rows(), 2 * scalar.cols());
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

template <class BlockKernel>
SparseMatrix assemble_vector(const CurveMesh& mesh, BlockKernel kernel)
{
    std::vector<Triplet> trip;
    trip.reserve(mesh.element_count() * 36 * 4);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements()[e];
        const auto quad = element_quadrature(mesh.element_nodes(e));
        for (std::size_t qi = 0; qi < quad.size(); ++qi) {
            for (std::size_t i = 0; i < 3; ++i) {
                for (std::size_t j = 0; j < 3; ++j) {
                    const Mat2 block = kernel(e, qi, quad[qi], i, j);
                    for (int a = 0; a < 2; ++a) {
                        for (int b = 0; b < 2; ++b) {
                            trip.emplace_back(dof(el[i], a), dof(el[j], b), block(a, b));
                        }
                    }
                }
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.dof_count());
    SparseMatrix m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
}

} // namespace detail

inline SparseMatrix assemble_scalar_mass(const CurveMesh& mesh)
{
    return detail::assemble_scalar(mesh, [](const QuadSample& q, std::size_t i, std::size_t j) {
        return q.weight * q.phi[i] * q.phi[j];
    });
}

inline SparseMatrix assemble_scalar_stiffness(const CurveMesh& mesh)
{
    return detail::assemble_scalar(mesh, [](const QuadSample& q, std::size_t i, std::size_t j) {
        return q.weight * q.dphi_ds[i] * q.dphi_ds[j];
    });
}

/// Vector L2 pairing: integral of V . Phi.
inline SparseMatrix assemble_mass(const CurveMesh& mesh)
{
    return detail::vectorize(assemble_scalar_mass(mesh));
}

/// Integral of grad_G V : grad_G Phi.
inline SparseMatrix assemble_stiffness(const CurveMesh& mesh)
{
    return detail::vectorize(assemble_scalar_stiffness(mesh));
}

/// The implicit-in-H bilinear form of the Willmore shape derivative,
///
///   int grad Phi : grad H - int grad Phi (grad Id + grad Id^T) : grad H
///       + 1/2 int div H div Phi,
///
/// with Id the current node positions. With grad F = t F_s^T this is
/// int Phi_s . H_s - 3/2 int (Phi_s . t)(H_s . t). Row index = test function.
inline SparseMatrix assemble_dW_operator(const CurveMesh& mesh)
{
    return detail::assemble_vector(
        mesh, [](std::size_t, std::size_t, const QuadSample& q, std::size_t i, std::size_t j) {
            const double s = q.weight * q.dphi_ds[i] * q.dphi_ds[j];
            return Mat2(s * (Mat2::Identity() - 1.5 * q.tangent * q.tangent.transpose()));
        });
}

/// The tangential part of the dW operator: int (Phi_s . t)(H_s . t), so that
/// assemble_dW_operator = assemble_stiffness - 1.5 * this.
inline SparseMatrix assemble_dW_tangential(const CurveMesh& mesh)
{
    return detail::assemble_vector(
        mesh, [](std::size_t, std::size_t, const QuadSample& q, std::size_t i, std::size_t j) {
            const double s = q.weight * q.dphi_ds[i] * q.dphi_ds[j];
            return Mat2(s * q.tangent * q.tangent.transpose());
        });
}

/// dA(Phi) = int H . Phi, implicit in H: the same bilinear form as the mass.
inline SparseMatrix assemble_dA(const CurveMesh& mesh) { return assemble_mass(mesh); }

/// Right-hand side of the curvature split row: -K x.
inline Eigen::VectorXd assemble_split_rhs(const CurveMesh& mesh)
{
    return -(assemble_stiffness(mesh) * mesh.coordinates());
}

/// Shape derivative of int f(x) along Phi, linearized around the current
/// positions: explicit part int grad f . Phi + f div Phi and implicit part
/// tau int (Hess f V) . Phi + tau int (grad f . V) div Phi.
struct LinearizedTerms {
    SparseMatrix implicit_part; // acts on V
    Eigen::VectorXd explicit_part;
};

template <class Sampler>
LinearizedTerms assemble_pointwise_terms(const CurveMesh& mesh, double tau, Sampler sample)
{
    LinearizedTerms out;
    out.explicit_part = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.dof_count()));
    std::vector<Triplet> trip;
    trip.reserve(mesh.element_count() * 36 * 4);
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements()[e];
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            const PointwiseSample f = sample(e, q.position);
            for (std::size_t i = 0; i < 3; ++i) {
                const Vec2 div_test = q.dphi_ds[i] * q.tangent; // div of phi_i e_a is div_test(a)
                for (int a = 0; a < 2; ++a) {
                    out.explicit_part(detail::dof(el[i], a))
                        += q.weight * (q.phi[i] * f.gradient(a) + f.value * div_test(a));
                }
                for (std::size_t j = 0; j < 3; ++j) {
                    const Mat2 block = tau * q.weight
                        * (q.phi[i] * q.phi[j] * f.hessian
                           + q.phi[j] * div_test * f.gradient.transpose());
                    for (int a = 0; a < 2; ++a) {
                        for (int b = 0; b < 2; ++b) {
                            trip.emplace_back(detail::dof(el[i], a), detail::dof(el[j], b),
                                              block(a, b));
                        }
                    }
                }
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.dof_count());
    out.implicit_part.resize(n, n);
    out.implicit_part.setFromTriplets(trip.begin(), trip.end());
    return out;
}

inline LinearizedTerms assemble_dH_terms(const CurveMesh& mesh, const BarrierSpec& barrier,
                                         double tau)
{
    return assemble_pointwise_terms(
        mesh, tau, [&](std::size_t, const Vec2& p) { return barrier.eval(p); });
}

/// Distance repulsion terms with the witnesses y_K frozen per element.
inline LinearizedTerms assemble_dD_terms(const CurveMesh& mesh, const DistanceField& field,
                                         double tau)
{
    if (field.witness.size() != mesh.element_count()) {
        throw PreconditionError("distance field does not match the mesh");
    }
    return assemble_pointwise_terms(mesh, tau, [&](std::size_t e, const Vec2& p) {
        return inverse_squared_distance(p, field.witness[e]);
    });
}

/// Explicit evaluation of the alternative Willmore shape derivative
///
///   -int grad Phi : grad H + int D(Phi) grad Id : grad H
///       - int div H div Phi - 1/2 int |H|^2 div Phi
///
/// against every test function. Kept as a cross-check of the dW operator.
/// The form holds for the inward curvature vector, so `h` (outward, as
/// everywhere else) enters with its sign flipped.
inline Eigen::VectorXd assemble_dW2_diagnostic(const CurveMesh& mesh, const Eigen::VectorXd& h_outward)
{
    const Eigen::VectorXd h = -h_outward;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.dof_count()));
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Element& el = mesh.elements()[e];
        for (const QuadSample& q : element_quadrature(mesh.element_nodes(e))) {
            Vec2 hv = Vec2::Zero();
            Vec2 hs = Vec2::Zero();
            for (std::size_t j = 0; j < 3; ++j) {
                const Vec2 hj = h.segment<2>(detail::dof(el[j], 0));
                hv += q.phi[j] * hj;
                hs += q.dphi_ds[j] * hj;
            }
            const Mat2 grad_h = q.tangent * hs.transpose();
            const Mat2 grad_id = q.tangent * q.tangent.transpose();
            const double div_h = hs.dot(q.tangent);
            for (std::size_t i = 0; i < 3; ++i) {
                for (int a = 0; a < 2; ++a) {
                    Vec2 phis = Vec2::Zero();
                    phis(a) = q.dphi_ds[i];
                    const Mat2 grad_phi = q.tangent * phis.transpose();
                    const Mat2 d_phi = grad_phi + grad_phi.transpose();
                    const double div_phi = phis.dot(q.tangent);
                    const double value = -grad_phi.cwiseProduct(grad_h).sum()
                        + (d_phi * grad_id).cwiseProduct(grad_h).sum() - div_h * div_phi
                        - 0.5 * hv.squaredNorm() * div_phi;
                    out(detail::dof(el[i], a)) += q.weight * value;
                }
            }
        }
    }
    return out;
}

/// The coupled (V, H) system
///
///   [ A_VV  A_VH ] [V]   [b_V]
///   [ A_HV  A_HH ] [H] = [b_H]
///
/// whose second row is the curvature split tau K V - M H = -K x.
struct BlockSystem {
    SparseMatrix a_vv;
    SparseMatrix a_vh;
    SparseMatrix a_hv;
    SparseMatrix a_hh;
    Eigen::VectorXd b_v;
    Eigen::VectorXd b_h;

    Eigen::Index field_size() const { return b_v.size(); }

    SparseMatrix combined() const
    {
        const Eigen::Index n = field_size();
        std::vector<Triplet> trip;
        trip.reserve(static_cast<std::size_t>(a_vv.nonZeros() + a_vh.nonZeros() + a_hv.nonZeros()
                                              + a_hh.nonZeros()));
        auto put = [&](const SparseMatrix& m, Eigen::Index r0, Eigen::Index c0) {
            for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
                for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
                    trip.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
                }
            }
        };
        put(a_vv, 0, 0);
        put(a_vh, 0, n);
        put(a_hv, n, 0);
        put(a_hh, n, n);
        SparseMatrix m(2 * n, 2 * n);
        m.setFromTriplets(trip.begin(), trip.end());
        return m;
    }

    Eigen::VectorXd rhs() const
    {
        Eigen::VectorXd b(2 * field_size());
        b << b_v, b_h;
        return b;
    }
};

inline constexpr double linear_solve_tolerance = 1e-12;

/// Direct sparse LU solve with one step of iterative refinement.
/// Returns the stacked solution (V, H).
inline Eigen::VectorXd solve_block_system(const BlockSystem& sys)
{
    const SparseMatrix a = sys.combined();
    const Eigen::VectorXd b = sys.rhs();
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw SingularSystemError("block system factorization failed: " + lu.lastErrorMessage());
    }
    Eigen::VectorXd x = lu.solve(b);
    const double scale = std::max(b.norm(), 1e-300);
    Eigen::VectorXd r = b - a * x;
    if (r.norm() > linear_solve_tolerance * scale) {
        x += lu.solve(r);
        r = b - a * x;
    }
    if (!x.allFinite() || r.norm() > 1e3 * linear_solve_tolerance * scale) {
        throw SingularSystemError("block system solve is inaccurate (singular system?)");
    }
    return x;
}

} // namespace vesicle

#endif
