#ifndef VESICLE_REFERENCE_ELEMENT_HPP
#define VESICLE_REFERENCE_ELEMENT_HPP

#include <array>

namespace vesicle {

/// Quadratic Lagrange basis on [0,1] with nodes {0, 1/2, 1}.
struct BasisEval {
    std::array<double, 3> value;
    std::array<double, 3> deriv;
};

inline constexpr BasisEval eval_reference_basis(double s) noexcept
{
    return BasisEval{
        {2.0 * (s - 0.5) * (s - 1.0), -4.0 * s * (s - 1.0), 2.0 * s * (s - 0.5)},
        {4.0 * s - 3.0, 4.0 - 8.0 * s, 4.0 * s - 1.0},
    };
}

struct QuadraturePoint {
    double s;
    double weight;
};

// 4-point Gauss-Legendre mapped to [0,1]; exact through degree 7.
inline constexpr std::array<QuadraturePoint, 4> gauss4{{
    {0.5 * (1.0 - 0.8611363115940526), 0.5 * 0.3478548451374538},
    {0.5 * (1.0 - 0.3399810435848563), 0.5 * 0.6521451548625461},
    {0.5 * (1.0 + 0.3399810435848563), 0.5 * 0.6521451548625461},
    {0.5 * (1.0 + 0.8611363115940526), 0.5 * 0.3478548451374538},
}};

struct ReferenceElement {
    static constexpr std::array<double, 3> nodes{0.0, 0.5, 1.0};
    static constexpr std::size_t quad_size = gauss4.size();

    std::array<QuadraturePoint, 4> quad = gauss4;
    std::array<BasisEval, 4> at_quad{
        eval_reference_basis(gauss4[0].s),
        eval_reference_basis(gauss4[1].s),
        eval_reference_basis(gauss4[2].s),
        eval_reference_basis(gauss4[3].s),
    };
};

inline const ReferenceElement& reference_element() noexcept
{
    static const ReferenceElement ref{};
    return ref;
}

} // namespace vesicle

#endif
