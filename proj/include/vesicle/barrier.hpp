#ifndef VESICLE_BARRIER_HPP
#define VESICLE_BARRIER_HPP

#include "curve_mesh.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace vesicle {

/// Value, gradient and Hessian of a smooth scalar field at one point.
struct PointwiseSample {
    double value = 0.0;
    Vec2 gradient = Vec2::Zero();
    Mat2 hessian = Mat2::Zero();
};

/// Smoothed step heav(direction . p - offset) ~ 1 / (1 + exp(-2 k (direction . p - offset))).
struct HalfPlane {
    Vec2 direction{0.0, 1.0};
    double offset = 0.0;
    double sharpness = 25.0;
    std::string tag; // "top" / "bottom" mark the planes a moving-barrier rule drives
};

/// Overflow-safe logistic of z with its first two derivatives.
inline std::array<double, 3> logistic(double z) noexcept
{
    const double e = std::exp(-std::abs(z));
    const double hi = 1.0 / (1.0 + e); // logistic(|z|)
    const double lo = e / (1.0 + e);   // 1 - logistic(|z|)
    const double s = z >= 0 ? hi : lo;
    const double one_minus_s = z >= 0 ? lo : hi;
    const double d1 = s * one_minus_s;
    return {s, d1, d1 * (one_minus_s - s)};
}

inline PointwiseSample eval_half_plane(const HalfPlane& h, const Vec2& p) noexcept
{
    const double k2 = 2.0 * h.sharpness;
    const auto [s, d1, d2] = logistic(k2 * (h.direction.dot(p) - h.offset));
    PointwiseSample out;
    out.value = s;
    out.gradient = k2 * d1 * h.direction;
    out.hessian = k2 * k2 * d2 * h.direction * h.direction.transpose();
    return out;
}

/// A smoothed indicator of the obstacle region, built as a tree of sums and
/// products over half-plane steps, e.g. heav(x-a) heav(b-x) (heav(y-m) + heav(-y-m)).
class BarrierSpec {
public:
    enum class Kind { Step, Product, Sum };

    BarrierSpec() : kind_(Kind::Sum) {} // empty sum: the zero indicator

    static BarrierSpec step(HalfPlane plane)
    {
        if (!(plane.sharpness > 0)) {
            throw PreconditionError("barrier sharpness must be positive");
        }
        const double len = plane.direction.norm();
        if (!(len > 0)) {
            throw PreconditionError("barrier direction must be nonzero");
        }
        plane.direction /= len;
        plane.offset /= len;
        BarrierSpec b;
        b.kind_ = Kind::Step;
        b.plane_ = std::move(plane);
        return b;
    }

    static BarrierSpec product(std::vector<BarrierSpec> factors)
    {
        BarrierSpec b;
        b.kind_ = Kind::Product;
        b.children_ = std::move(factors);
        return b;
    }

    static BarrierSpec sum(std::vector<BarrierSpec> terms)
    {
        BarrierSpec b;
        b.kind_ = Kind::Sum;
        b.children_ = std::move(terms);
        return b;
    }

    Kind kind() const noexcept { return kind_; }
    const HalfPlane& plane() const { return plane_; }
    const std::vector<BarrierSpec>& children() const noexcept { return children_; }
    bool empty() const noexcept { return kind_ == Kind::Sum && children_.empty(); }

    PointwiseSample eval(const Vec2& p) const
    {
        switch (kind_) {
        case Kind::Step:
            return eval_half_plane(plane_, p);
        case Kind::Sum: {
            PointwiseSample acc;
            for (const BarrierSpec& c : children_) {
                const PointwiseSample s = c.eval(p);
                acc.value += s.value;
                acc.gradient += s.gradient;
                acc.hessian += s.hessian;
            }
            return acc;
        }
        case Kind::Product: {
            PointwiseSample acc;
            acc.value = 1.0;
            for (const BarrierSpec& c : children_) {
                const PointwiseSample s = c.eval(p);
                PointwiseSample next;
                next.value = acc.value * s.value;
                next.gradient = acc.value * s.gradient + s.value * acc.gradient;
                next.hessian = acc.value * s.hessian + s.value * acc.hessian
                    + acc.gradient * s.gradient.transpose() + s.gradient * acc.gradient.transpose();
                acc = next;
            }
            return acc;
        }
        }
        return {};
    }

    /// Upper bound of the indicator: 1 for a step, max over terms for sums of
    /// products (each product lies in [0,1]).
    double max_value() const
    {
        switch (kind_) {
        case Kind::Step:
            return 1.0;
        case Kind::Product: {
            double m = 1.0;
            for (const BarrierSpec& c : children_) {
                m *= c.max_value();
            }
            return m;
        }
        case Kind::Sum: {
            double m = 0.0;
            for (const BarrierSpec& c : children_) {
                m += c.max_value();
            }
            return m;
        }
        }
        return 0.0;
    }

    void for_each_plane(const std::function<void(const HalfPlane&)>& fn) const
    {
        if (kind_ == Kind::Step) {
            fn(plane_);
        }
        for (const BarrierSpec& c : children_) {
            c.for_each_plane(fn);
        }
    }

    void for_each_plane(const std::function<void(HalfPlane&)>& fn)
    {
        if (kind_ == Kind::Step) {
            fn(plane_);
        }
        for (BarrierSpec& c : children_) {
            c.for_each_plane(fn);
        }
    }

private:
    Kind kind_;
    HalfPlane plane_;
    std::vector<BarrierSpec> children_;
};

inline PointwiseSample indicator_eval(const BarrierSpec& barrier, const Vec2& p)
{
    return barrier.eval(p);
}

} // namespace vesicle

#endif
