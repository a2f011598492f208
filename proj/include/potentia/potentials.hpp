#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "core.hpp"
#include "grid.hpp"
#include "heavytail.hpp"
#include "kernels.hpp"
#include "payoff.hpp"
#include "renewal.hpp"

namespace potentia {

namespace detail {

// Points where a one-dimensional payoff is discontinuous or kinked.
inline Vec payoff_breaks(const PayoffFn& l) {
    using K = PayoffFn::Kind;
    switch (l.kind) {
        case K::IndicatorBall: {
            const double c = l.center.empty() ? 0.0 : l.center[0];
            return {c - l.radius, c + l.radius};
        }
        case K::IndicatorQuadrant: return {l.radius};
        case K::PowerUtility: return {0.0};
        case K::ClaimTail: return {0.0, l.claims.at(0).laws()[0].floor()};
        default: return {};
    }
}

template <class F>
double integrate_pieces(F&& f, double lo, double hi, Vec brk) {
    brk.push_back(lo);
    brk.push_back(hi);
    std::sort(brk.begin(), brk.end());
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    double s = 0;
    for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
        const double a = std::clamp(brk[i], lo, hi), b = std::clamp(brk[i + 1], lo, hi);
        if (b > a) s += GK::integrate(f, a, b, 12, 1e-13);
    }
    return s;
}

}  // namespace detail

/// Forcing term h(x) = E^x int_0^{min(T, first claim)} l(X_s) ds of a
/// one-dimensional potential under exponential killing at rate mu.
inline double expkill_forcing(const PayoffFn& l, double lambda, const SmallComponent& small, double mu, double x,
                              double t_max_factor = 40.0) {
    const double c = lambda + mu;
    const double a = small.drift.at(0);
    const Vec kinks = detail::payoff_breaks(l);
    switch (small.kind) {
        case SmallComponent::Kind::DriftOnly: {
            const double S = t_max_factor / c;
            auto f = [&](double s) { return std::exp(-c * s) * l(x + a * s); };
            Vec brk;
            if (a != 0)
                for (double k : kinks) brk.push_back((k - x) / a);
            return detail::integrate_pieces(f, 0.0, S, brk);
        }
        case SmallComponent::Kind::DriftBrownian: {
            const double s2 = small.sigma * small.sigma;
            const double r = std::sqrt(a * a + 2 * c * s2);
            const double W_pos = t_max_factor * s2 / (r - a), W_neg = t_max_factor * s2 / (r + a);
            const KillingSpec kill = KillingSpec::exp_kill(mu);
            auto f = [&](double w) { return q_function(lambda, small, kill, w) * l(x + w); };
            Vec brk = {0.0};
            for (double k : kinks) brk.push_back(k - x);
            return detail::integrate_pieces(f, -W_neg, W_pos, brk) / lambda;
        }
        default: throw std::invalid_argument("unsupported small component: " + small.name());
    }
}

/// u = h + u * G on [lower, upper] for a one-dimensional potential with
/// exponential killing. The kernel grid spans every difference of grid points.
inline RenewalProblem expkill_potential_problem(double lambda, const TailModel& claim, const SmallComponent& small,
                                                double mu, const PayoffFn& l, double step, double lower, double upper,
                                                BoundaryRule boundary, QuadratureParams qp = {}) {
    RenewalProblem p;
    p.grid = Grid::uniform(step, lower, upper);
    const double span = p.grid.x_max() - p.grid.x_min();
    const auto k = build_kernel(lambda, claim, small, KillingSpec::exp_kill(mu), Grid::uniform(step, -span, span), qp);
    p.kernel = k.measure;
    p.h.resize(p.grid.size());
    for (std::size_t i = 0; i < p.h.size(); ++i) p.h[i] = expkill_forcing(l, lambda, small, mu, p.grid.at(i), qp.t_max_factor);
    p.boundary = boundary;
    p.label = "expkill_potential";
    return p;
}

/// E^x[e^{-q T}; T < inf] for first-passage ruin below zero with drift-only
/// premium income: u = Ḡ + u * G on [0, extent], u = 0 below zero, where G
/// is the law of claim minus premium income up to the first claim, killed at
/// rate q.
inline RenewalProblem discounted_ruin_problem(double lambda, const TailModel& claim, double drift, double q,
                                              double step, double extent, QuadratureParams qp = {}) {
    detail::require(q > 0, "discounted ruin: q must be > 0");
    RenewalProblem p;
    p.grid = Grid::uniform(step, 0.0, extent);
    const double span = p.grid.x_max();
    const auto k = build_kernel(lambda, claim, SmallComponent::drift_only({drift}), KillingSpec::exp_kill(q),
                                Grid::uniform(step, -span, span), qp);
    p.kernel = k.measure;
    p.h.resize(p.grid.size());
    // Mass of claim minus income beyond x: the first claim already ruins.
    for (std::size_t i = 0; i < p.h.size(); ++i)
        p.h[i] = detail::drift_kernel_tail(lambda, lambda + q, drift, claim, p.grid.at(i), qp);
    p.boundary = {Boundary::Zero, Boundary::Hold};
    p.label = "discounted_ruin";
    return p;
}

}  // namespace potentia
