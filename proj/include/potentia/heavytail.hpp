#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "core.hpp"

namespace potentia {

/// Anything that exposes a survival function P(U > z), its logarithm, the
/// support floor and the probability atom sitting on that floor.
template <class T>
concept TailFunction = requires(const T& t, double z) {
    { t.tail(z) } -> std::convertible_to<double>;
    { t.log_tail(z) } -> std::convertible_to<double>;
    { t.floor() } -> std::convertible_to<double>;
    { t.atom_at_floor() } -> std::convertible_to<double>;
};

namespace detail {
// x^-e with exact shortcuts for the small integer indices used most often.
inline double pow_neg(double x, double e) {
    if (e == 1.0) return 1.0 / x;
    if (e == 2.0) return 1.0 / (x * x);
    if (e == 3.0) return 1.0 / (x * x * x);
    return std::pow(x, -e);
}
}  // namespace detail

namespace family {
/// Tail c * z^-(1+index) above the floor.
struct Pareto {
    double coeff;
    double index;
};
struct Exponential {
    double rate;
};
struct Weibull {
    double shape;
    double scale;
};
struct Lognormal {
    double mu;
    double sigma;
};
struct Empirical {
    std::vector<double> sorted;
};
}  // namespace family

/// One-dimensional claim-size law U = max(V, floor), V drawn from a base
/// family. Values are immutable after construction.
class TailModel {
public:
    using Family = std::variant<family::Pareto, family::Exponential, family::Weibull,
                                family::Lognormal, family::Empirical>;

    static TailModel pareto(double coeff, double index, double floor = 1.0) {
        detail::require(floor > 0, "pareto: floor must be > 0");
        detail::require(coeff > 0, "pareto: coefficient must be > 0");
        // index in (-1, 0] gives a proper law with infinite mean.
        detail::require(index > -1.0, "pareto: index must be > -1");
        detail::require(coeff * std::pow(floor, -(1.0 + index)) <= 1.0 + 1e-12,
                        "pareto: tail at the floor exceeds 1; lower the coefficient");
        return TailModel(family::Pareto{coeff, index}, floor);
    }
    static TailModel exponential(double rate, double floor = 0.0) {
        detail::require(rate > 0, "exponential: rate must be > 0");
        detail::require(floor >= 0, "floor must be >= 0");
        return TailModel(family::Exponential{rate}, floor);
    }
    static TailModel weibull(double shape, double scale, double floor = 0.0) {
        detail::require(shape > 0 && scale > 0, "weibull: shape and scale must be > 0");
        detail::require(floor >= 0, "floor must be >= 0");
        return TailModel(family::Weibull{shape, scale}, floor);
    }
    static TailModel lognormal(double mu, double sigma, double floor = 0.0) {
        detail::require(sigma > 0, "lognormal: sigma must be > 0");
        detail::require(floor >= 0, "floor must be >= 0");
        return TailModel(family::Lognormal{mu, sigma}, floor);
    }
    static TailModel empirical(std::vector<double> samples, double floor = 0.0) {
        detail::require(!samples.empty(), "empirical: no samples");
        detail::require(floor >= 0, "floor must be >= 0");
        for (double& s : samples) {
            detail::require(std::isfinite(s), "empirical: non-finite sample");
            s = std::max(s, floor);
        }
        std::sort(samples.begin(), samples.end());
        return TailModel(family::Empirical{std::move(samples)}, floor);
    }

    const Family& family() const { return family_; }
    double floor() const { return floor_; }

    /// P(U > z).
    double tail(double z) const {
        if (z < floor_) return 1.0;
        return base_tail(z);
    }

    double log_tail(double z) const {
        if (z < floor_) return 0.0;
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, family::Pareto>) {
                    return std::log(f.coeff) - (1.0 + f.index) * std::log(z);
                } else if constexpr (std::is_same_v<T, family::Exponential>) {
                    return -f.rate * z;
                } else if constexpr (std::is_same_v<T, family::Weibull>) {
                    return -std::pow(z / f.scale, f.shape);
                } else if constexpr (std::is_same_v<T, family::Lognormal>) {
                    if (z <= 0) return 0.0;
                    const double t = (std::log(z) - f.mu) / f.sigma;
                    if (t < 30.0) return std::log(0.5 * std::erfc(t / M_SQRT2));
                    const double t2 = t * t;
                    return -0.5 * t2 - std::log(t * std::sqrt(2.0 * M_PI)) +
                           std::log1p(-1.0 / t2 + 3.0 / (t2 * t2));
                } else {
                    const double v = base_tail(z);
                    return v > 0 ? std::log(v) : -kInf;
                }
            },
            family_);
    }

    /// Probability mass sitting exactly on the floor (U = max(V, floor)).
    double atom_at_floor() const {
        if (std::holds_alternative<family::Empirical>(family_)) {
            const auto& s = std::get<family::Empirical>(family_).sorted;
            const auto n = std::upper_bound(s.begin(), s.end(), floor_) - s.begin();
            return static_cast<double>(n) / static_cast<double>(s.size());
        }
        return 1.0 - base_tail(floor_);
    }

    /// True when z lies beyond the largest empirical sample; the tail there is
    /// reported as 0 and should not be trusted.
    bool beyond_data(double z) const {
        if (const auto* e = std::get_if<family::Empirical>(&family_)) return z >= e->sorted.back();
        return false;
    }

    /// Smallest z with tail(z) <= p, for p in (0,1].
    double quantile(double p) const {
        detail::require(p > 0 && p <= 1, "quantile: p must be in (0,1]");
        if (p >= base_tail(floor_)) return floor_;
        const double z = std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, family::Pareto>) {
                    return f.index == 1.0 ? std::sqrt(f.coeff / p) : std::pow(f.coeff / p, 1.0 / (1.0 + f.index));
                } else if constexpr (std::is_same_v<T, family::Exponential>) {
                    return -std::log(p) / f.rate;
                } else if constexpr (std::is_same_v<T, family::Weibull>) {
                    return f.scale * std::pow(-std::log(p), 1.0 / f.shape);
                } else if constexpr (std::is_same_v<T, family::Lognormal>) {
                    return std::exp(f.mu + f.sigma * M_SQRT2 * boost::math::erfc_inv(2.0 * p));
                } else {
                    const auto n = static_cast<double>(f.sorted.size());
                    auto k = static_cast<long>(std::ceil(n - 1.0 - p * n - 1e-9));
                    k = std::clamp(k, 0L, static_cast<long>(f.sorted.size()) - 1);
                    return f.sorted[static_cast<std::size_t>(k)];
                }
            },
            family_);
        return std::max(z, floor_);
    }

    template <class Rng>
    double sample(Rng& rng) const {
        if (const auto* e = std::get_if<family::Empirical>(&family_)) {
            const auto n = e->sorted.size();
            auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
            return e->sorted[std::min(k, n - 1)];
        }
        return quantile(rng.uniform());
    }

    /// Integral of the tail over [x, inf). Infinite when the mean is.
    double integral_beyond(double x) const {
        if (x < floor_) return (floor_ - x) + integral_beyond(floor_);
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, family::Pareto>) {
                    if (f.index <= 0) return kInf;
                    return f.coeff * detail::pow_neg(x, f.index) / f.index;
                } else if constexpr (std::is_same_v<T, family::Exponential>) {
                    return std::exp(-f.rate * x) / f.rate;
                } else if constexpr (std::is_same_v<T, family::Weibull>) {
                    const double a = 1.0 / f.shape;
                    return f.scale * a * boost::math::tgamma(a, std::pow(x / f.scale, f.shape));
                } else if constexpr (std::is_same_v<T, family::Lognormal>) {
                    if (x <= 0) return std::exp(f.mu + 0.5 * f.sigma * f.sigma) - x;
                    const double d1 = (f.mu + f.sigma * f.sigma - std::log(x)) / f.sigma;
                    const double d2 = d1 - f.sigma;
                    if (d2 > -5.0) {
                        auto Phi = [](double t) { return 0.5 * std::erfc(-t / M_SQRT2); };
                        return std::exp(f.mu + 0.5 * f.sigma * f.sigma) * Phi(d1) - x * Phi(d2);
                    }
                    boost::math::quadrature::exp_sinh<double> integrator;
                    return integrator.integrate([&](double y) { return base_tail(x + y); });
                } else {
                    double s = 0;
                    for (auto it = std::upper_bound(f.sorted.begin(), f.sorted.end(), x);
                         it != f.sorted.end(); ++it)
                        s += *it - x;
                    return s / static_cast<double>(f.sorted.size());
                }
            },
            family_);
    }

    double mean() const { return floor_ + integral_beyond(floor_); }

    std::string describe() const {
        return std::visit(
            [&](const auto& f) -> std::string {
                using T = std::decay_t<decltype(f)>;
                const std::string fl = ",floor=" + detail::fmt_short(floor_) + ")";
                if constexpr (std::is_same_v<T, family::Pareto>)
                    return "pareto(c=" + detail::fmt_short(f.coeff) + ",alpha=" + detail::fmt_short(f.index) + fl;
                else if constexpr (std::is_same_v<T, family::Exponential>)
                    return "exponential(rate=" + detail::fmt_short(f.rate) + fl;
                else if constexpr (std::is_same_v<T, family::Weibull>)
                    return "weibull(shape=" + detail::fmt_short(f.shape) + ",scale=" + detail::fmt_short(f.scale) + fl;
                else if constexpr (std::is_same_v<T, family::Lognormal>)
                    return "lognormal(mu=" + detail::fmt_short(f.mu) + ",sigma=" + detail::fmt_short(f.sigma) + fl;
                else
                    return "empirical(n=" + std::to_string(f.sorted.size()) + fl;
            },
            family_);
    }

private:
    TailModel(Family f, double floor) : family_(std::move(f)), floor_(floor) {}

    double base_tail(double z) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, family::Pareto>) {
                    return std::min(1.0, f.coeff * detail::pow_neg(z, 1.0 + f.index));
                } else if constexpr (std::is_same_v<T, family::Exponential>) {
                    return z <= 0 ? 1.0 : std::exp(-f.rate * z);
                } else if constexpr (std::is_same_v<T, family::Weibull>) {
                    return z <= 0 ? 1.0 : std::exp(-std::pow(z / f.scale, f.shape));
                } else if constexpr (std::is_same_v<T, family::Lognormal>) {
                    if (z <= 0) return 1.0;
                    return 0.5 * std::erfc((std::log(z) - f.mu) / (f.sigma * M_SQRT2));
                } else {
                    const auto& s = f.sorted;
                    const auto above = s.end() - std::upper_bound(s.begin(), s.end(), z);
                    return static_cast<double>(above) / static_cast<double>(s.size());
                }
            },
            family_);
    }

    Family family_;
    double floor_;
};

/// Law with density tail(y)/mean on [0, inf): the stationary excess of U.
class IntegratedTail {
public:
    explicit IntegratedTail(TailModel source) : source_(std::move(source)) {
        mean_ = source_.mean();
        if (!std::isfinite(mean_))
            throw std::invalid_argument("integrated tail: infinite mean (" + source_.describe() + ")");
    }

    const TailModel& source() const { return source_; }
    double source_mean() const { return mean_; }
    double floor() const { return 0.0; }
    double atom_at_floor() const { return 0.0; }

    double tail(double x) const {
        if (x <= 0) return 1.0;
        return std::min(1.0, source_.integral_beyond(x) / mean_);
    }
    double cdf(double x) const { return 1.0 - tail(x); }

    double log_tail(double x) const {
        if (x <= 0) return 0.0;
        const double d = source_.floor();
        if (x >= d) {
            if (const auto* p = std::get_if<family::Pareto>(&source_.family()))
                return std::log(p->coeff / (p->index * mean_)) - p->index * std::log(x);
            if (const auto* e = std::get_if<family::Exponential>(&source_.family()))
                return -e->rate * x - std::log(e->rate * mean_);
            if (const auto* w = std::get_if<family::Weibull>(&source_.family())) {
                const double a = 1.0 / w->shape;
                const double z = std::pow(x / w->scale, w->shape);
                const double g = boost::math::tgamma(a, z);
                const double lead = std::log(w->scale * a / mean_);
                if (g > 1e-280) return lead + std::log(g);
                return lead + (a - 1.0) * std::log(z) - z +
                       std::log1p((a - 1.0) / z + (a - 1.0) * (a - 2.0) / (z * z));
            }
        }
        const double v = tail(x);
        return v > 0 ? std::log(v) : -kInf;
    }

    /// Smallest x with tail(x) <= p.
    double quantile(double p) const {
        detail::require(p > 0 && p <= 1, "quantile: p must be in (0,1]");
        const double d = source_.floor();
        const double at_floor = tail(d);
        if (p >= at_floor) {
            // Linear piece on [0, floor): tail = (floor - x + I(floor)) / mean.
            return std::max(0.0, d + source_.integral_beyond(d) - p * mean_);
        }
        if (const auto* pa = std::get_if<family::Pareto>(&source_.family()))
            return std::pow(pa->coeff / (pa->index * mean_ * p), 1.0 / pa->index);
        if (const auto* e = std::get_if<family::Exponential>(&source_.family()))
            return -std::log(p * e->rate * mean_) / e->rate;
        double hi = std::max(2.0 * d, 1.0);
        while (tail(hi) > p) hi *= 2.0;
        boost::uintmax_t iters = 200;
        auto r = boost::math::tools::toms748_solve(
            [&](double x) { return tail(x) - p; }, d, hi,
            boost::math::tools::eps_tolerance<double>(50), iters);
        return 0.5 * (r.first + r.second);
    }

    template <class Rng>
    double sample(Rng& rng) const {
        return quantile(rng.uniform());
    }

private:
    TailModel source_;
    double mean_;
};

inline IntegratedTail integrated_tail(const TailModel& model) { return IntegratedTail(model); }

/// d-dimensional claim law built from one-dimensional laws.
class ClaimModel {
public:
    enum class Structure { Univariate, IndependentProduct, ComonotoneSplit };

    static ClaimModel univariate(TailModel m) {
        ClaimModel c(Structure::Univariate);
        c.laws_.push_back(std::move(m));
        c.props_ = {1.0};
        return c;
    }
    static ClaimModel independent_product(std::vector<TailModel> marginals) {
        detail::require(!marginals.empty(), "independent product: no marginals");
        ClaimModel c(Structure::IndependentProduct);
        c.laws_ = std::move(marginals);
        c.props_.assign(c.laws_.size(), 1.0);
        return c;
    }
    /// U = (p_1 Xi, ..., p_d Xi) with proportions summing to one.
    static ClaimModel comonotone_split(TailModel driver, std::vector<double> proportions) {
        detail::require(proportions.size() >= 2, "comonotone split: need >= 2 proportions");
        double s = 0;
        for (double p : proportions) {
            detail::require(p > 0, "comonotone split: proportions must be > 0");
            s += p;
        }
        detail::require(std::abs(s - 1.0) < 1e-9, "comonotone split: proportions must sum to 1");
        ClaimModel c(Structure::ComonotoneSplit);
        c.laws_.push_back(std::move(driver));
        c.props_ = std::move(proportions);
        return c;
    }

    Structure structure() const { return structure_; }
    std::size_t dimension() const {
        return structure_ == Structure::IndependentProduct ? laws_.size() : props_.size();
    }
    const std::vector<TailModel>& laws() const { return laws_; }
    const std::vector<double>& proportions() const { return props_; }

    /// P(U_i > z) for one coordinate.
    double marginal_tail(std::size_t i, double z) const {
        switch (structure_) {
            case Structure::IndependentProduct: return laws_.at(i).tail(z);
            case Structure::ComonotoneSplit: return laws_[0].tail(z / props_.at(i));
            default: return laws_[0].tail(z);
        }
    }

    double marginal_mean(std::size_t i) const {
        switch (structure_) {
            case Structure::IndependentProduct: return laws_.at(i).mean();
            case Structure::ComonotoneSplit: return props_.at(i) * laws_[0].mean();
            default: return laws_[0].mean();
        }
    }

    /// 1 - P(U <= x componentwise): the probability that a claim pushes at
    /// least one coordinate of a surplus x below zero.
    double joint_tail(std::span<const double> x) const {
        detail::require(x.size() == dimension(), "joint_tail: dimension mismatch");
        switch (structure_) {
            case Structure::Univariate: return laws_[0].tail(x[0]);
            case Structure::IndependentProduct: {
                double log_cdf = 0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double t = laws_[i].tail(x[i]);
                    if (t >= 1.0) return 1.0;
                    log_cdf += std::log1p(-t);
                }
                return -std::expm1(log_cdf);
            }
            case Structure::ComonotoneSplit: {
                double m = kInf;
                for (std::size_t i = 0; i < x.size(); ++i) m = std::min(m, x[i] / props_[i]);
                return laws_[0].tail(m);
            }
        }
        return 0;
    }

    /// P(U_i > x_i for every i).
    double joint_survival(std::span<const double> x) const {
        detail::require(x.size() == dimension(), "joint_survival: dimension mismatch");
        switch (structure_) {
            case Structure::Univariate: return laws_[0].tail(x[0]);
            case Structure::IndependentProduct: {
                double p = 1;
                for (std::size_t i = 0; i < x.size(); ++i) p *= laws_[i].tail(x[i]);
                return p;
            }
            case Structure::ComonotoneSplit: {
                double m = -kInf;
                for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, x[i] / props_[i]);
                return laws_[0].tail(m);
            }
        }
        return 0;
    }

    template <class Rng>
    void sample(Rng& rng, std::span<double> out) const {
        switch (structure_) {
            case Structure::Univariate: out[0] = laws_[0].sample(rng); break;
            case Structure::IndependentProduct:
                for (std::size_t i = 0; i < laws_.size(); ++i) out[i] = laws_[i].sample(rng);
                break;
            case Structure::ComonotoneSplit: {
                const double xi = laws_[0].sample(rng);
                for (std::size_t i = 0; i < props_.size(); ++i) out[i] = props_[i] * xi;
                break;
            }
        }
    }

    std::string describe() const {
        switch (structure_) {
            case Structure::Univariate: return laws_[0].describe();
            case Structure::IndependentProduct: {
                std::string s = "product[";
                for (std::size_t i = 0; i < laws_.size(); ++i) s += (i ? "," : "") + laws_[i].describe();
                return s + "]";
            }
            case Structure::ComonotoneSplit: {
                std::string s = "comonotone[" + laws_[0].describe() + ";";
                for (std::size_t i = 0; i < props_.size(); ++i) s += (i ? "," : "") + detail::fmt_short(props_[i]);
                return s + "]";
            }
        }
        return {};
    }

private:
    explicit ClaimModel(Structure s) : structure_(s) {}

    Structure structure_;
    std::vector<TailModel> laws_;
    std::vector<double> props_;
};

// ---------------------------------------------------------------------------
// Subexponentiality diagnostics
// ---------------------------------------------------------------------------

/// F*F tail over F tail at x, by discretized convolution of F with itself.
/// All arithmetic is relative to the tail at x, so probes far beyond the
/// double-precision range of the tail itself stay finite.
template <TailFunction F>
double subexp_ratio(const F& model, double x, double step) {
    detail::require(step > 0, "subexp_ratio: step must be > 0");
    detail::require(x >= 0, "subexp_ratio: x must be >= 0");
    const double lx = model.log_tail(x);
    if (!(lx > -kInf)) throw NumericalError("tail underflow; use log-domain extent");

    // Empirical laws are finite sums: evaluate exactly.
    if constexpr (std::is_same_v<F, TailModel>) {
        if (const auto* e = std::get_if<family::Empirical>(&model.family())) {
            const double inv_n = 1.0 / static_cast<double>(e->sorted.size());
            double r = 1.0;
            for (double s : e->sorted) {
                if (s > x) break;
                r += inv_n * std::exp(model.log_tail(x - s) - lx);
            }
            return r;
        }
    }

    const double d = model.floor();
    double ratio = 1.0;
    const double atom = model.atom_at_floor();
    if (atom > 0 && d <= x) ratio += atom * std::exp(model.log_tail(x - d) - lx);
    if (x <= d) return ratio;

    // Continuous part on (d, x]: hat-function weights w_j at nodes y_j,
    // each represented relative to the tail at y_j.
    const long cells = std::max(1L, static_cast<long>(std::ceil((x - d) / step - 1e-9)));
    const double h = (x - d) / static_cast<double>(cells);
    auto node = [&](long j) { return d + static_cast<double>(j) * h; };
    auto log_cont = [&](double y) { return y <= d ? model.log_tail(d) : model.log_tail(y); };
    // Integral of C(y)/C(ref) over [a, a+h] by 3-point Simpson.
    auto rel_int = [&](double a, double lref) {
        return h / 6.0 *
               (std::exp(log_cont(a) - lref) + 4.0 * std::exp(log_cont(a + 0.5 * h) - lref) +
                std::exp(log_cont(a + h) - lref));
    };
    for (long j = 0; j <= cells; ++j) {
        const double y = node(j);
        const double ly = log_cont(y);
        if (!(ly > -kInf)) break;
        double w = 0;
        if (j < cells) w += 1.0 - rel_int(y, ly) / h;      // right half
        if (j > 0) w += rel_int(y - h, ly) / h - 1.0;      // left half
        if (w <= 0) continue;
        ratio += std::exp(std::log(w) + ly + model.log_tail(x - y) - lx);
    }
    return ratio;
}

/// tail(x - a) / tail(x).
template <TailFunction F>
double long_tail_ratio(const F& model, double x, double a) {
    return std::exp(model.log_tail(x - a) - model.log_tail(x));
}

/// log( tail(x) * exp(s x) ); diverges to +inf for heavy tails.
template <TailFunction F>
double heavy_witness_log(const F& model, double x, double s) {
    return model.log_tail(x) + s * x;
}

struct TailDiagnostics {
    std::vector<std::pair<double, double>> subexp_curve;
    std::vector<std::pair<double, double>> long_tail_curve;
    /// Logarithm of tail(x) e^{s x}; the raw value overflows for heavy tails.
    std::vector<std::pair<double, double>> heavy_witness_log_curve;
    bool beyond_data = false;
};

template <TailFunction F>
TailDiagnostics diagnose(const F& model, std::span<const double> probes, double shift, double exponent,
                         double step) {
    TailDiagnostics out;
    for (double x : probes) {
        out.subexp_curve.emplace_back(x, subexp_ratio(model, x, step));
        out.long_tail_curve.emplace_back(x, long_tail_ratio(model, x, shift));
        out.heavy_witness_log_curve.emplace_back(x, heavy_witness_log(model, x, exponent));
        if constexpr (std::is_same_v<F, TailModel>) out.beyond_data = out.beyond_data || model.beyond_data(x);
    }
    return out;
}

/// (1 / (2 E Z tail(b))) * int_0^b tail(b-y) tail(y) dy; tends to 1 for
/// strong subexponential laws.
inline double strong_subexp_ratio(const TailModel& model, double b) {
    detail::require(b > 0, "strong_subexp_ratio: b must be > 0");
    const double lb = model.log_tail(b);
    if (!(lb > -kInf)) throw NumericalError("tail underflow; use log-domain extent");
    auto integrand = [&](double y) { return std::exp(model.log_tail(y) + model.log_tail(b - y) - lb); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double half = 0.5 * b;
    const double d = model.floor();
    double s = 0;
    if (d > 0 && d < half) {
        s = GK::integrate(integrand, 0.0, d, 12, 1e-12) + GK::integrate(integrand, d, half, 15, 1e-12);
    } else {
        s = GK::integrate(integrand, 0.0, half, 15, 1e-12);
    }
    return 2.0 * s / (2.0 * model.mean());
}

}  // namespace potentia
