#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "core.hpp"
#include "heavytail.hpp"
#include "payoff.hpp"

namespace potentia {

struct RegimeThresholds {
    double infinite_above = 1e3;
    double zero_below = 1e-3;
    double stable_tol = 0.05;  // relative spread of the last three rungs for a finite limit
    std::size_t min_rungs = 6;
};

struct Regime {
    enum class Kind { Zero, Finite, Infinite, Inconclusive };
    Kind kind = Kind::Inconclusive;
    double B = 0;  // meaningful for Finite only
    Vec ladder, ratios;
    std::string evidence;

    std::string name() const {
        switch (kind) {
            case Kind::Zero: return "zero";
            case Kind::Finite: return "finite";
            case Kind::Infinite: return "infinite";
            case Kind::Inconclusive: return "inconclusive";
        }
        return {};
    }
};

/// Geometric ladder x0, x0 f, x0 f^2, ...
inline Vec geometric_ladder(double x0, double factor, std::size_t rungs) {
    detail::require(x0 > 0 && factor > 1 && rungs >= 1, "ladder: need x0 > 0, factor > 1");
    Vec v(rungs);
    for (std::size_t i = 0; i < rungs; ++i) v[i] = x0 * std::pow(factor, static_cast<double>(i));
    return v;
}

namespace detail {

inline bool strictly(const Vec& r, bool increasing) {
    for (std::size_t i = 1; i < r.size(); ++i)
        if (increasing ? !(r[i] > r[i - 1]) : !(r[i] < r[i - 1])) return false;
    return true;
}

inline void require_geometric(const Vec& ladder, std::size_t min_rungs) {
    require(ladder.size() >= min_rungs, "regime: ladder needs at least " + std::to_string(min_rungs) + " rungs");
    require(ladder[0] > 0, "regime: ladder must be positive");
    const double f = ladder[1] / ladder[0];
    require(f > 1, "regime: ladder must be increasing");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        require(std::abs(ladder[i] / ladder[i - 1] / f - 1) < 1e-9, "regime: ladder must be geometric");
}

}  // namespace detail

/// Classifies the limit B of ratio values observed along a ladder.
inline Regime classify_ratios(const Vec& ladder, const Vec& ratios, const RegimeThresholds& th = {}) {
    detail::require_geometric(ladder, th.min_rungs);
    detail::require(ladder.size() == ratios.size(), "regime: ladder and ratio sizes differ");
    Regime r;
    r.ladder = ladder;
    r.ratios = ratios;
    const double last = ratios.back();
    const std::size_t n = ratios.size();
    if (detail::strictly(ratios, true) && last > th.infinite_above) {
        r.kind = Regime::Kind::Infinite;
        r.evidence = "ratio increasing, last rung " + detail::fmt_short(last) + " > " + detail::fmt_short(th.infinite_above);
        return r;
    }
    if (detail::strictly(ratios, false) && last < th.zero_below) {
        r.kind = Regime::Kind::Zero;
        r.evidence = "ratio decreasing, last rung " + detail::fmt_short(last) + " < " + detail::fmt_short(th.zero_below);
        return r;
    }
    // A payoff with bounded support: decreasing, then identically zero.
    if (last == 0) {
        std::size_t z = n - 1;
        while (z > 0 && ratios[z - 1] == 0) --z;
        const Vec head(ratios.begin(), ratios.begin() + static_cast<long>(z) + 1);
        if (detail::strictly(head, false)) {
            r.kind = Regime::Kind::Zero;
            r.evidence = "ratio vanishes from rung " + detail::fmt_short(ladder[z]) + " on";
            return r;
        }
    }
    double spread = 0;
    for (std::size_t i = n - 3; i < n; ++i) spread = std::max(spread, std::abs(ratios[i] / last - 1));
    if (std::isfinite(last) && last > 0 && spread < th.stable_tol) {
        r.kind = Regime::Kind::Finite;
        r.B = last;
        r.evidence = "last three rungs within " + detail::fmt_short(spread) + " of " + detail::fmt_short(last);
        return r;
    }
    r.evidence = "no monotone trend past a threshold and no stable tail (spread " + detail::fmt_short(spread) + ")";
    return r;
}

/// B = lim l(x) / F̄(x) along the ray x = t * direction, t on the ladder.
/// F̄ is the probability that a claim leaves the quadrant from x.
inline Regime classify_regime(const PayoffFn& l, const ClaimModel& F, const Vec& direction, const Vec& ladder,
                              const RegimeThresholds& th = {}) {
    detail::require(direction.size() == F.dimension(), "regime: direction dimension mismatch");
    Vec ratios;
    Vec x(direction.size());
    for (double t : ladder) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = t * direction[i];
        const double tail = F.joint_tail(x);
        ratios.push_back(tail > 0 ? l(std::span<const double>(x)) / tail : kInf);
    }
    return classify_ratios(ladder, ratios, th);
}

struct AsymptoticPrediction {
    std::string tag;
    double prefactor = 0;
    std::string reference;  // "F", "F_I" or "l"
    std::function<double(double)> reference_fn;
    std::string note;
    bool quantitative = true;

    double operator()(double x) const { return prefactor * reference_fn(x); }
};

/// Potential of the process killed at rate mu = lambda (1 - rho) / rho:
/// Finite B gives (B rho / ((1 - rho) lambda)) F̄, i.e. (B / mu) F̄; Infinite
/// gives l / mu; Zero gives only u = o(F̄).
inline AsymptoticPrediction predict_potential(const Regime& regime, double rho, double lambda,
                                              std::function<double(double)> tail,
                                              std::function<double(double)> payoff) {
    detail::require(rho > 0 && rho < 1, "predict_potential: rho must be in (0,1)");
    detail::require(lambda > 0, "predict_potential: lambda must be > 0");
    const double inv_mu = rho / ((1 - rho) * lambda);
    AsymptoticPrediction p;
    switch (regime.kind) {
        case Regime::Kind::Finite:
            p.tag = "potential_finite";
            p.prefactor = regime.B * inv_mu;
            p.reference = "F";
            p.reference_fn = std::move(tail);
            break;
        case Regime::Kind::Infinite:
            p.tag = "potential_infinite";
            p.prefactor = inv_mu;
            p.reference = "l";
            p.reference_fn = std::move(payoff);
            break;
        case Regime::Kind::Zero:
            p.tag = "potential_zero";
            p.prefactor = 1.0;
            p.reference = "F";
            p.reference_fn = std::move(tail);
            p.note = "u = o(F); one-sided bound, not quantitative";
            p.quantitative = false;
            break;
        case Regime::Kind::Inconclusive:
            throw std::invalid_argument("predict_potential: regime is inconclusive");
    }
    return p;
}

/// u(x) ~ rho / (1 - rho) F̄_I(x).
inline AsymptoticPrediction predict_ruin(double rho, const IntegratedTail& FI, double probe = 0, double step = 0) {
    detail::require(rho > 0 && rho < 1, "predict_ruin: rho must be in (0,1)");
    AsymptoticPrediction p;
    p.tag = "ruin_subexponential";
    p.prefactor = rho / (1 - rho);
    p.reference = "F_I";
    p.reference_fn = [FI](double x) { return FI.tail(x); };
    // A subexponential F_I has F_I*F_I tail / F_I tail -> 2; light tails blow up.
    if (probe <= 0) probe = 100 * FI.source_mean();
    if (step <= 0) step = probe / 2000;
    double r = kInf;
    try {
        r = subexp_ratio(FI, probe, step);
    } catch (const NumericalError&) {
    }
    if (!(r < 3.0)) {
        p.quantitative = false;
        p.note = "F_I not subexponential; asymptotic inapplicable (ratio " + detail::fmt_short(r) + " at " +
                 detail::fmt_short(probe) + ")";
    }
    return p;
}

struct PathPrediction {
    int case_id = 0;  // 0: inconclusive
    std::string tag;
    std::string note;
    bool boundary = false;
    std::function<double(double)> value;  // prediction as a function of the path parameter
};

namespace detail {

inline const family::Pareto& pareto_of(const TailModel& m, const char* what) {
    const auto* p = std::get_if<family::Pareto>(&m.family());
    require(p != nullptr, std::string(what) + ": Pareto marginals required");
    return *p;
}

}  // namespace detail

/// Independent Pareto marginals along x(t): the case is fixed by the limit of
/// x1^{1+a1} / x2^{1+a2} (0: first marginal dominates, inf: second, finite:
/// both terms).
inline PathPrediction predict_2d_product(const TailModel& F1, const TailModel& F2,
                                         const std::function<Vec(double)>& path, const Vec& t_ladder,
                                         const RegimeThresholds& th = {}) {
    const auto& p1 = detail::pareto_of(F1, "predict_2d_product");
    const auto& p2 = detail::pareto_of(F2, "predict_2d_product");
    Vec L;
    for (double t : t_ladder) {
        const Vec x = path(t);
        detail::require(x.size() == 2, "predict_2d_product: path must be two-dimensional");
        L.push_back(std::pow(x[0], 1 + p1.index) / std::pow(x[1], 1 + p2.index));
    }
    const Regime r = classify_ratios(t_ladder, L, th);
    PathPrediction out;
    out.note = r.evidence;
    auto t1 = [F1, path](double t) { return F1.tail(path(t)[0]); };
    auto t2 = [F2, path](double t) { return F2.tail(path(t)[1]); };
    switch (r.kind) {
        case Regime::Kind::Zero:
            out.case_id = 1;
            out.tag = "product_first";
            out.value = t1;
            break;
        case Regime::Kind::Infinite:
            out.case_id = 2;
            out.tag = "product_second";
            out.value = t2;
            break;
        case Regime::Kind::Finite:
            out.case_id = 3;
            out.tag = "product_both";
            out.value = [t1, t2](double t) { return t1(t) + t2(t); };
            break;
        case Regime::Kind::Inconclusive: out.tag = "inconclusive"; break;
    }
    return out;
}

/// Comonotone split (rho, 1 - rho) of a driver H along x(t): H̄(x1 / rho)
/// when x1 (1 - rho) < x2 rho in the limit, else H̄(x2 / (1 - rho)).
inline PathPrediction predict_comonotone(const TailModel& H, double rho, const std::function<Vec(double)>& path,
                                         double t_probe) {
    detail::require(rho > 0 && rho < 1, "predict_comonotone: proportion must be in (0,1)");
    const Vec x = path(t_probe);
    detail::require(x.size() == 2, "predict_comonotone: path must be two-dimensional");
    const double ratio = x[0] * (1 - rho) / (x[1] * rho);
    auto first = [H, rho, path](double t) { return H.tail(path(t)[0] / rho); };
    auto second = [H, rho, path](double t) { return H.tail(path(t)[1] / (1 - rho)); };
    PathPrediction out;
    out.note = "ratio x1(1-rho)/(x2 rho) = " + detail::fmt_short(ratio);
    if (std::abs(ratio - 1) < 1e-12) {
        out.case_id = 3;
        out.tag = "comonotone_boundary";
        out.boundary = true;
        out.value = first;  // both coincide on the boundary
    } else if (ratio < 1) {
        out.case_id = 1;
        out.tag = "comonotone_first";
        out.value = first;
    } else {
        out.case_id = 2;
        out.tag = "comonotone_second";
        out.value = second;
    }
    return out;
}

struct ReinsurancePrediction {
    double value = 0;
    double truncation_error = 0;  // bound on the neglected tail of the time integral
    double c1 = 0, c2 = 0;        // per-claim drifts a_i / lambda - share_i E Z
    double strong_subexp_ratio = 0;
    bool strong_subexp_ok = false;
};

/// Two companies sharing each claim Z as (beta Z, (1 - beta) Z):
/// int_0^inf F̄_Z(min{(x1 + c1 t) / beta, (x2 + c2 t) / (1 - beta)}) dt.
inline ReinsurancePrediction predict_prop_reinsurance(const TailModel& Z, double a1, double a2, double lambda,
                                                      double beta, Vec x, double tol = 1e-9) {
    detail::require(x.size() == 2, "predict_prop_reinsurance: x must be two-dimensional");
    detail::require(beta > 0 && beta < 1, "predict_prop_reinsurance: beta must be in (0,1)");
    detail::require(a1 > a2 && x[0] < x[1], "predict_prop_reinsurance: requires a1 > a2 and x1 < x2");
    ReinsurancePrediction r;
    const double m = Z.mean();
    r.c1 = a1 / lambda - beta * m;
    r.c2 = a2 / lambda - (1 - beta) * m;
    detail::require(r.c1 > 0 && r.c2 > 0, "predict_prop_reinsurance: drift coefficients must be positive");
    const double k1 = r.c1 / beta, k2 = r.c2 / (1 - beta);
    const double m1 = x[0] / beta, m2 = x[1] / (1 - beta);
    auto arg = [&](double t) { return std::min(m1 + k1 * t, m2 + k2 * t); };
    auto f = [&](double t) { return Z.tail(arg(t)); };
    const double kmin = std::min(k1, k2);
    // Beyond T the integrand is at most F̄_Z(arg(T) + kmin (t - T)).
    auto tail_bound = [&](double T) { return Z.integral_beyond(arg(T)) / kmin; };
    double tc = -1;  // crossing of the two arguments, if any
    if (k1 != k2) tc = (m2 - m1) / (k1 - k2);
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto piece = [&](double lo, double hi) {
        if (tc > lo && tc < hi) return GK::integrate(f, lo, tc, 15, 1e-12) + GK::integrate(f, tc, hi, 15, 1e-12);
        return GK::integrate(f, lo, hi, 15, 1e-12);
    };
    // Geometrically growing pieces until the neglected tail is below tol.
    double value = 0, lo = 0, T = 1.0;
    while (true) {
        value += piece(lo, T);
        lo = T;
        if (tail_bound(T) <= tol * value || T > 1e15) break;
        T *= 4;
    }
    r.value = value;
    r.truncation_error = tail_bound(T);
    const double probe = std::max(50.0 * m, 4 * std::max(m1, 1.0));
    r.strong_subexp_ratio = strong_subexp_ratio(Z, probe);
    r.strong_subexp_ok = std::abs(r.strong_subexp_ratio - 1) <= 0.2;
    return r;
}

/// Ratio of observed values to a prediction.
inline Vec ratio_curve(const Vec& xs, const Vec& values, const AsymptoticPrediction& p) {
    detail::require(xs.size() == values.size(), "ratio_curve: size mismatch");
    Vec r(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) r[i] = values[i] / p(xs[i]);
    return r;
}

/// Ratios inside [lo, hi] with |ratio - 1| nonincreasing over the last `tail` rungs.
inline bool ratio_gate(const Vec& ratios, double lo, double hi, std::size_t tail = 3) {
    for (double r : ratios)
        if (!(r >= lo && r <= hi)) return false;
    const std::size_t n = ratios.size();
    for (std::size_t i = n >= tail ? n - tail + 1 : 1; i < n; ++i)
        if (std::abs(ratios[i] - 1) > std::abs(ratios[i - 1] - 1)) return false;
    return true;
}

}  // namespace potentia
