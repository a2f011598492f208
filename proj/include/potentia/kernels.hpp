#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "core.hpp"
#include "grid.hpp"
#include "heavytail.hpp"
#include "rng.hpp"

namespace potentia {

/// The part of the process that is not the large-claim compound Poisson part.
struct SmallComponent {
    enum class Kind { DriftOnly, DriftBrownian, DriftSmallJumps, OrnsteinUhlenbeck };
    Kind kind = Kind::DriftOnly;
    Vec drift{0.0};
    double sigma = 0.0;       // DriftBrownian
    double jump_rate = 0.0;   // DriftSmallJumps / OU: rate of small jumps
    double jump_width = 0.0;  // jumps uniform on (-width, width); OU uses (0, width)
    double ou_rate = 0.0;     // OU mean-reversion coefficient, < 0

    static SmallComponent drift_only(Vec a) {
        SmallComponent s;
        s.drift = std::move(a);
        return s;
    }
    static SmallComponent drift_brownian(Vec a, double sigma) {
        SmallComponent s;
        s.kind = Kind::DriftBrownian;
        s.drift = std::move(a);
        s.sigma = sigma;
        return s;
    }
    static SmallComponent drift_small_jumps(Vec a, double rate, double width) {
        SmallComponent s;
        s.kind = Kind::DriftSmallJumps;
        s.drift = std::move(a);
        s.jump_rate = rate;
        s.jump_width = width;
        return s;
    }
    static SmallComponent ornstein_uhlenbeck(Vec a, double theta, double rate, double width) {
        SmallComponent s;
        s.kind = Kind::OrnsteinUhlenbeck;
        s.drift = std::move(a);
        s.ou_rate = theta;
        s.jump_rate = rate;
        s.jump_width = width;
        return s;
    }

    std::size_t dimension() const { return drift.size(); }

    /// Checks the invariants against the claim floor delta.
    void validate(double delta) const {
        detail::require(!drift.empty(), "small component: empty drift");
        detail::require(sigma >= 0, "small component: sigma must be >= 0");
        if (kind == Kind::DriftSmallJumps || kind == Kind::OrnsteinUhlenbeck) {
            detail::require(jump_rate >= 0, "small component: jump rate must be >= 0");
            detail::require(jump_width > 0 && jump_width < delta,
                            "small component: small jumps must lie in (-delta, delta)");
        }
        if (kind == Kind::OrnsteinUhlenbeck) detail::require(ou_rate < 0, "small component: OU rate must be < 0");
    }

    std::string name() const {
        switch (kind) {
            case Kind::DriftOnly: return "drift_only";
            case Kind::DriftBrownian: return "drift_brownian";
            case Kind::DriftSmallJumps: return "drift_small_jumps";
            case Kind::OrnsteinUhlenbeck: return "ornstein_uhlenbeck";
        }
        return {};
    }
};

struct KillingSpec {
    enum class Kind { ExpKill, FirstPassageRuin, QuadrantExit };
    Kind kind = Kind::ExpKill;
    double mu = 0.0;

    static KillingSpec exp_kill(double mu) {
        detail::require(mu > 0, "exp kill: mu must be > 0");
        return {Kind::ExpKill, mu};
    }
    static KillingSpec first_passage() { return {Kind::FirstPassageRuin, 0.0}; }
    static KillingSpec quadrant_exit() { return {Kind::QuadrantExit, 0.0}; }
};

struct QuadratureParams {
    double t_max_factor = 40.0;  // time horizon t_max = factor / (lambda + mu)
    int panels = 4096;
};

struct KernelG {
    GridMeasure measure;
    double rho = 0;           // lambda / (lambda + mu)
    double quadrature_mass = 0;
    double lambda = 0, mu = 0;
    std::string provenance;   // JSON object

    double mass_error() const { return std::abs(measure.mass() - rho); }
    GridMeasure normalized() const { return measure.scaled(1.0 / measure.mass()); }

    void write_csv(std::ostream& os) const {
        os << "# potentia-csv v1\n# provenance: " << provenance << "\nz,weight\n";
        for (std::size_t i = 0; i < measure.weight.size(); ++i)
            os << detail::fmt(measure.grid.at(i)) << ',' << detail::fmt(measure.weight[i]) << '\n';
    }
};

/// Density of the small-component position at the first claim epoch, killed
/// at rate mu, times lambda. Integrates to lambda / (lambda + mu).
inline double q_function(double lambda, const SmallComponent& small, const KillingSpec& kill, double w) {
    detail::require(kill.kind == KillingSpec::Kind::ExpKill, "q_function: exponential killing required");
    const double c = lambda + kill.mu;
    const double a = small.drift.at(0);
    switch (small.kind) {
        case SmallComponent::Kind::DriftOnly:
            if (a == 0) throw std::invalid_argument("q_function: zero drift gives a point mass, not a density");
            return (w / a > 0) ? lambda / std::abs(a) * std::exp(-c * w / a) : 0.0;
        case SmallComponent::Kind::DriftBrownian: {
            const double s2 = small.sigma * small.sigma;
            if (s2 == 0) return q_function(lambda, SmallComponent::drift_only(small.drift), kill, w);
            const double r = std::sqrt(a * a + 2 * c * s2);
            return lambda * std::exp((a * w - std::abs(w) * r) / s2) / r;
        }
        default: throw std::invalid_argument("unsupported small component: " + small.name());
    }
}

namespace detail {

// Ḡ(z) = int lambda e^{-ct} F̄(z + a t) dt over [0, t_max].
inline double drift_kernel_tail(double lambda, double c, double a, const TailModel& F, double z,
                                const QuadratureParams& qp) {
    const double tmax = qp.t_max_factor / c;
    auto f = [&](double t) { return lambda * std::exp(-c * t) * F.tail(z + a * t); };
    double brk = -1;
    if (a != 0) brk = (F.floor() - z) / a;
    return simpson_split(f, 0.0, tmax, brk, qp.panels);
}

// Ḡ(z) = int q(w) F̄(z + w) dw for Brownian small component.
inline double brownian_kernel_tail(double lambda, double c, double a, double sigma, const TailModel& F, double z,
                                   const QuadratureParams& qp) {
    const double s2 = sigma * sigma;
    const double r = std::sqrt(a * a + 2 * c * s2);
    const double rate_pos = (r - a) / s2, rate_neg = (r + a) / s2;
    const double wmax = qp.t_max_factor / rate_pos, wmin = -qp.t_max_factor / rate_neg;
    auto f = [&](double w) {
        return lambda * std::exp((a * w - std::abs(w) * r) / s2) / r * F.tail(z + w);
    };
    const double kink = F.floor() - z;
    auto piece = [&](double lo, double hi, int panels) {
        if (kink > lo && kink < hi) return simpson_split(f, lo, hi, kink, panels);
        return simpson(f, lo, hi, panels);
    };
    return piece(wmin, 0.0, qp.panels / 2) + piece(0.0, wmax, qp.panels / 2);
}

}  // namespace detail

/// Kernel G(dz) = int F(dz + w) q(w) dw on the given grid, for independent
/// exponential killing.
inline KernelG build_kernel(double lambda, const TailModel& claim, const SmallComponent& small,
                            const KillingSpec& kill, const Grid& grid, QuadratureParams qp = {}) {
    detail::require(lambda > 0, "build_kernel: lambda must be > 0");
    detail::require(kill.kind == KillingSpec::Kind::ExpKill, "build_kernel: exponential killing required");
    detail::require(qp.panels >= 2 && qp.t_max_factor > 0, "build_kernel: bad quadrature parameters");
    const double c = lambda + kill.mu;
    const double a = small.drift.at(0);
    KernelG k;
    k.lambda = lambda;
    k.mu = kill.mu;
    k.rho = lambda / c;

    std::function<double(double)> tail;
    double z_all;  // a point where F̄(z + w) = 1 over the whole quadrature range
    switch (small.kind) {
        case SmallComponent::Kind::DriftOnly:
            tail = [&, a, c](double z) { return detail::drift_kernel_tail(lambda, c, a, claim, z, qp); };
            z_all = claim.floor() - std::max(0.0, a) * qp.t_max_factor / c - 1.0;
            break;
        case SmallComponent::Kind::DriftBrownian: {
            detail::require(small.sigma > 0, "build_kernel: Brownian component needs sigma > 0");
            const double s = small.sigma;
            tail = [&, a, c, s](double z) { return detail::brownian_kernel_tail(lambda, c, a, s, claim, z, qp); };
            const double r = std::sqrt(a * a + 2 * c * s * s);
            z_all = claim.floor() - qp.t_max_factor / ((r - a) / (s * s)) - 1.0;
            break;
        }
        default: throw std::invalid_argument("unsupported small component: " + small.name());
    }
    k.quadrature_mass = tail(std::min(z_all, grid.x_min()));
    // Below z_all the kernel tail equals the full mass; skip the quadrature there.
    auto cached = [&](double z) { return z <= z_all ? k.quadrature_mass : tail(z); };
    k.measure = GridMeasure::from_tail(grid, cached, k.quadrature_mass);

    k.provenance = "{\"lambda\":" + detail::fmt(lambda) + ",\"mu\":" + detail::fmt(kill.mu) + ",\"claim\":\"" +
                   claim.describe() + "\",\"small\":\"" + small.name() + "\",\"drift\":" + detail::fmt(a) +
                   ",\"sigma\":" + detail::fmt(small.sigma) + ",\"t_max\":" + detail::fmt(qp.t_max_factor / c) +
                   ",\"panels\":" + std::to_string(qp.panels) + ",\"mass\":" + detail::fmt(k.measure.mass()) +
                   ",\"clipped\":" + detail::fmt(k.measure.clipped()) + ",\"lost\":" + detail::fmt(k.measure.lost) +
                   "}";
    return k;
}

/// Ladder-height kernel of the Cramér–Lundberg model: density (lambda / a) F̄(x)
/// on [0, inf), i.e. rho F_I with rho = lambda E U / a.
inline GridMeasure ladder_height_kernel(double lambda, double drift, const TailModel& claim, const Grid& grid) {
    detail::require(drift > 0, "ladder kernel: drift must be > 0");
    const IntegratedTail FI(claim);
    const double rho = lambda * FI.source_mean() / drift;
    detail::require(rho < 1, "net profit condition violated: lambda E U >= a");
    return GridMeasure::from_tail(grid, [&](double z) { return rho * FI.tail(z); }, rho);
}

struct DecayFit {
    double theta = 0;
    double intercept = 0;
    std::size_t points = 0;
};

/// Least-squares slope of -log q against |w| over |w| in [w_lo, w_hi].
inline DecayFit decay_rate_fit(const Vec& w, const Vec& q, double w_lo, double w_hi) {
    detail::require(w.size() == q.size(), "decay_rate_fit: size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double x = std::abs(w[i]);
        if (x < w_lo || x > w_hi || !(q[i] > 1e-300)) continue;
        const double y = -std::log(q[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 10) throw NumericalError("decay_rate_fit: need at least 10 points with q above underflow");
    const double dn = static_cast<double>(n);
    const double vx = sxx - sx * sx / dn;
    if (!(vx > 0)) throw NumericalError("degenerate fit");
    DecayFit f;
    f.theta = (sxy - sx * sy / dn) / vx;
    f.intercept = (sy - f.theta * sx) / dn;
    f.points = n;
    if (!(std::abs(f.theta) > 1e-12)) throw NumericalError("degenerate fit");
    return f;
}

/// theta_nu ∧ (lambda + mu) / (2 |a|).
inline double theta_q(double lambda, double mu, double a, double theta_nu) {
    const double drift_part = a == 0 ? kInf : (lambda + mu) / (2 * std::abs(a));
    return std::min(theta_nu, drift_part);
}

/// Histogram estimate of q for any small component: position of the small
/// component at an Exp(lambda + mu) time, scaled by rho.
inline Vec q_histogram(double lambda, const SmallComponent& small, const KillingSpec& kill, const Vec& bin_edges,
                       std::size_t samples, std::uint64_t seed, double euler_step = 0.01) {
    detail::require(bin_edges.size() >= 2, "q_histogram: need bins");
    const double c = lambda + kill.mu;
    const double a = small.drift.at(0);
    Vec counts(bin_edges.size() - 1, 0.0);
    for (std::size_t p = 0; p < samples; ++p) {
        PathStream rng(seed, p, 0x71);
        const double t = rng.exponential(c);
        double y = 0;
        switch (small.kind) {
            case SmallComponent::Kind::DriftOnly: y = a * t; break;
            case SmallComponent::Kind::DriftBrownian: y = a * t + small.sigma * std::sqrt(t) * rng.normal(); break;
            case SmallComponent::Kind::DriftSmallJumps: {
                y = a * t;
                double s = small.jump_rate > 0 ? rng.exponential(small.jump_rate) : kInf;
                while (s < t) {
                    y += small.jump_width * (2 * rng.uniform() - 1);
                    s += rng.exponential(small.jump_rate);
                }
                break;
            }
            case SmallComponent::Kind::OrnsteinUhlenbeck: {
                double s = 0, next = small.jump_rate > 0 ? rng.exponential(small.jump_rate) : kInf;
                while (s < t) {
                    const double dt = std::min(euler_step, t - s);
                    y += (a + small.ou_rate * y) * dt;
                    s += dt;
                    while (next <= s) {
                        y += small.jump_width * rng.uniform();
                        next += rng.exponential(small.jump_rate);
                    }
                }
                break;
            }
        }
        auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), y);
        if (it == bin_edges.begin() || it == bin_edges.end()) continue;
        counts[static_cast<std::size_t>(it - bin_edges.begin() - 1)] += 1;
    }
    const double rho = lambda / c;
    for (std::size_t b = 0; b < counts.size(); ++b)
        counts[b] *= rho / (static_cast<double>(samples) * (bin_edges[b + 1] - bin_edges[b]));
    return counts;
}

}  // namespace potentia
