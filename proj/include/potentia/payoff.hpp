#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "core.hpp"
#include "heavytail.hpp"

namespace potentia {

/// Running payoff l(x). l(cemetery) = 0 is implicit: integrals stop at the
/// killing time.
struct PayoffFn {
    enum class Kind { ClaimTail, IndicatorBall, IndicatorQuadrant, PowerUtility, Constant, Custom };
    Kind kind = Kind::Constant;
    double scale = 1.0;
    double radius = 0.0;          // ball radius / quadrant corner level
    Vec center;                   // ball centre (defaults to the origin)
    double alpha = 0.5;           // power utility exponent
    double withdrawal = 1.0;      // power utility withdrawal rate
    Vec proportions;              // power utility portfolio proportions
    std::vector<ClaimModel> claims;  // ClaimTail: exactly one model
    std::function<double(std::span<const double>)> custom;
    double custom_bound = 1.0;

    static PayoffFn constant(double c) {
        PayoffFn p;
        p.kind = Kind::Constant;
        p.scale = c;
        return p;
    }
    static PayoffFn claim_tail(ClaimModel m, double scale) {
        PayoffFn p;
        p.kind = Kind::ClaimTail;
        p.scale = scale;
        p.claims.push_back(std::move(m));
        return p;
    }
    static PayoffFn indicator_ball(double r, Vec centre = {}, double scale = 1.0) {
        detail::require(r > 0, "indicator ball: radius must be > 0");
        PayoffFn p;
        p.kind = Kind::IndicatorBall;
        p.radius = r;
        p.center = std::move(centre);
        p.scale = scale;
        return p;
    }
    static PayoffFn indicator_quadrant(double r, double scale = 1.0) {
        PayoffFn p;
        p.kind = Kind::IndicatorQuadrant;
        p.radius = r;
        p.scale = scale;
        return p;
    }
    /// (w * sum_i pi_i e^{-max(x_i, 0)})^alpha; the clamp keeps it bounded.
    static PayoffFn power_utility(double alpha, Vec props, double withdrawal) {
        detail::require(alpha > 0 && alpha < 1, "power utility: alpha must be in (0,1)");
        detail::require(withdrawal > 0, "power utility: withdrawal must be > 0");
        for (double p : props) detail::require(p > 0, "power utility: proportions must be > 0");
        PayoffFn p;
        p.kind = Kind::PowerUtility;
        p.alpha = alpha;
        p.proportions = std::move(props);
        p.withdrawal = withdrawal;
        return p;
    }
    static PayoffFn custom_fn(std::function<double(std::span<const double>)> f, double bound) {
        PayoffFn p;
        p.kind = Kind::Custom;
        p.custom = std::move(f);
        p.custom_bound = bound;
        return p;
    }

    std::string name() const {
        switch (kind) {
            case Kind::ClaimTail: return "claim_tail";
            case Kind::IndicatorBall: return "indicator_ball";
            case Kind::IndicatorQuadrant: return "indicator_quadrant";
            case Kind::PowerUtility: return "power_utility";
            case Kind::Constant: return "constant";
            case Kind::Custom: return "custom";
        }
        return {};
    }

    double operator()(std::span<const double> x) const {
        switch (kind) {
            case Kind::Constant: return scale;
            case Kind::ClaimTail: {
                for (double v : x)
                    if (v < 0) return 0.0;
                return scale * claims.at(0).joint_tail(x);
            }
            case Kind::IndicatorBall: {
                double s = 0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = x[i] - (i < center.size() ? center[i] : 0.0);
                    s += d * d;
                }
                return s <= radius * radius ? scale : 0.0;
            }
            case Kind::IndicatorQuadrant: {
                for (double v : x)
                    if (v < radius) return 0.0;
                return scale;
            }
            case Kind::PowerUtility: {
                double s = 0;
                for (std::size_t i = 0; i < x.size(); ++i)
                    s += (i < proportions.size() ? proportions[i] : 1.0) * std::exp(-std::max(x[i], 0.0));
                return std::pow(withdrawal * s, alpha);
            }
            case Kind::Custom: return custom(x);
        }
        return 0;
    }

    double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

    double sup() const {
        switch (kind) {
            case Kind::Constant:
            case Kind::ClaimTail:
            case Kind::IndicatorBall:
            case Kind::IndicatorQuadrant: return std::abs(scale);
            case Kind::PowerUtility: {
                double s = 0;
                for (double p : proportions) s += p;
                return std::pow(withdrawal * s, alpha);
            }
            case Kind::Custom: return custom_bound;
        }
        return 0;
    }
};

namespace detail {

// Set of s in [0, dt] where a linear function y + a s is >= level.
inline std::pair<double, double> linear_at_least(double y, double a, double level, double dt) {
    if (a == 0) return y >= level ? std::pair{0.0, dt} : std::pair{1.0, 0.0};
    const double s = (level - y) / a;
    if (a > 0) return {std::max(0.0, s), dt};
    return {0.0, std::min(dt, s)};
}

// int_0^dt tail(alpha + beta s) ds using the integrated tail.
inline double tail_along_line(const TailModel& F, double alpha, double beta, double dt) {
    if (beta == 0) return F.tail(alpha) * dt;
    if (beta > 0) return (F.integral_beyond(alpha) - F.integral_beyond(alpha + beta * dt)) / beta;
    return (F.integral_beyond(alpha + beta * dt) - F.integral_beyond(alpha)) / (-beta);
}

template <class Fn>
double gauss_pieces(Fn&& f, std::vector<double> brk, double dt) {
    brk.push_back(0.0);
    brk.push_back(dt);
    std::sort(brk.begin(), brk.end());
    double s = 0;
    for (std::size_t k = 0; k + 1 < brk.size(); ++k) {
        const double lo = std::clamp(brk[k], 0.0, dt), hi = std::clamp(brk[k + 1], 0.0, dt);
        if (hi > lo) s += boost::math::quadrature::gauss<double, 20>::integrate(f, lo, hi);
    }
    return s;
}

}  // namespace detail

/// int_0^dt l(y + a s) ds along a straight segment.
inline double segment_integral(const PayoffFn& l, std::span<const double> y, std::span<const double> a, double dt) {
    if (dt <= 0) return 0.0;
    const std::size_t d = y.size();
    using K = PayoffFn::Kind;
    switch (l.kind) {
        case K::Constant: return l.scale * dt;
        case K::IndicatorQuadrant: {
            double lo = 0, hi = dt;
            for (std::size_t i = 0; i < d; ++i) {
                auto [a0, b0] = detail::linear_at_least(y[i], a[i], l.radius, dt);
                lo = std::max(lo, a0);
                hi = std::min(hi, b0);
            }
            return hi > lo ? l.scale * (hi - lo) : 0.0;
        }
        case K::IndicatorBall: {
            double A = 0, B = 0, C = -l.radius * l.radius;
            for (std::size_t i = 0; i < d; ++i) {
                const double z = y[i] - (i < l.center.size() ? l.center[i] : 0.0);
                A += a[i] * a[i];
                B += 2 * z * a[i];
                C += z * z;
            }
            if (A == 0) return C <= 0 ? l.scale * dt : 0.0;
            const double disc = B * B - 4 * A * C;
            if (disc < 0) return 0.0;
            const double sq = std::sqrt(disc);
            const double s0 = (-B - sq) / (2 * A), s1 = (-B + sq) / (2 * A);
            const double lo = std::max(0.0, s0), hi = std::min(dt, s1);
            return hi > lo ? l.scale * (hi - lo) : 0.0;
        }
        case K::ClaimTail: {
            // The payoff vanishes unless every coordinate is >= 0; restrict to that interval.
            double lo = 0, hi = dt;
            for (std::size_t i = 0; i < d; ++i) {
                auto [a0, b0] = detail::linear_at_least(y[i], a[i], 0.0, dt);
                lo = std::max(lo, a0);
                hi = std::min(hi, b0);
            }
            if (hi <= lo) return 0.0;
            double ys_buf[8];
            std::vector<double> ys_heap;
            double* ys = d <= 8 ? ys_buf : (ys_heap.resize(d), ys_heap.data());
            for (std::size_t i = 0; i < d; ++i) ys[i] = std::max(0.0, y[i] + a[i] * lo);
            const double len = hi - lo;
            const ClaimModel& cm = l.claims.at(0);
            using S = ClaimModel::Structure;
            if (cm.structure() == S::Univariate) return l.scale * detail::tail_along_line(cm.laws()[0], ys[0], a[0], len);
            if (cm.structure() == S::ComonotoneSplit) {
                const auto& p = cm.proportions();
                // m(s) = min_i (y_i + a_i s) / p_i is piecewise linear; split at crossings.
                double brk_buf[32];
                std::vector<double> brk_heap;
                const std::size_t cap = 2 + d * (d - 1) / 2;
                double* brk = cap <= 32 ? brk_buf : (brk_heap.resize(cap), brk_heap.data());
                std::size_t nb = 0;
                brk[nb++] = 0.0;
                brk[nb++] = len;
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = i + 1; j < d; ++j) {
                        const double den = a[i] / p[i] - a[j] / p[j];
                        if (den != 0) {
                            const double s = (ys[j] / p[j] - ys[i] / p[i]) / den;
                            if (s > 0 && s < len) brk[nb++] = s;
                        }
                    }
                std::sort(brk, brk + nb);
                double total = 0;
                for (std::size_t k = 0; k + 1 < nb; ++k) {
                    const double mid = 0.5 * (brk[k] + brk[k + 1]);
                    std::size_t arg = 0;
                    double best = kInf;
                    for (std::size_t i = 0; i < d; ++i) {
                        const double v = (ys[i] + a[i] * mid) / p[i];
                        if (v < best) {
                            best = v;
                            arg = i;
                        }
                    }
                    const double alpha = (ys[arg] + a[arg] * brk[k]) / p[arg];
                    total += detail::tail_along_line(cm.laws()[0], alpha, a[arg] / p[arg], brk[k + 1] - brk[k]);
                }
                return l.scale * total;
            }
            // Independent product: 1 - prod(1 - F̄_i). Singles in closed form, the rest by quadrature.
            double singles = 0;
            std::vector<double> brk;
            for (std::size_t i = 0; i < d; ++i) {
                singles += detail::tail_along_line(cm.laws()[i], ys[i], a[i], len);
                if (a[i] != 0) brk.push_back((cm.laws()[i].floor() - ys[i]) / a[i]);
            }
            auto rest = [&](double s) {
                double prod_cdf = 1, sum_tail = 0;
                for (std::size_t i = 0; i < d; ++i) {
                    const double t = cm.laws()[i].tail(ys[i] + a[i] * s);
                    prod_cdf *= 1 - t;
                    sum_tail += t;
                }
                return (1 - prod_cdf) - sum_tail;
            };
            return l.scale * (singles + detail::gauss_pieces(rest, brk, len));
        }
        case K::PowerUtility: {
            std::vector<double> brk;
            for (std::size_t i = 0; i < d; ++i)
                if (a[i] != 0) brk.push_back(-y[i] / a[i]);
            std::vector<double> pt(d);
            auto f = [&](double s) {
                for (std::size_t i = 0; i < d; ++i) pt[i] = y[i] + a[i] * s;
                return l(std::span<const double>(pt));
            };
            return detail::gauss_pieces(f, brk, dt);
        }
        case K::Custom: {
            std::vector<double> pt(d);
            auto f = [&](double s) {
                for (std::size_t i = 0; i < d; ++i) pt[i] = y[i] + a[i] * s;
                return l(std::span<const double>(pt));
            };
            return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, dt, 10, 1e-10);
        }
    }
    return 0;
}

}  // namespace potentia
