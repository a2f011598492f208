#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "core.hpp"
#include "heavytail.hpp"
#include "kernels.hpp"
#include "payoff.hpp"
#include "rng.hpp"

namespace potentia {

/// X_t = x + Y_t - sum_{k <= N_t} U_k with Y the small component.
struct RiskProcessSpec {
    Vec x{0.0};
    double lambda = 1.0;
    ClaimModel claims = ClaimModel::univariate(TailModel::exponential(1.0));
    SmallComponent small = SmallComponent::drift_only({1.0});
    KillingSpec kill = KillingSpec::first_passage();
    PayoffFn payoff = PayoffFn::constant(1.0);
    double delta = 1.0;

    std::size_t dimension() const { return claims.dimension(); }

    void validate() const {
        detail::require(lambda > 0, "risk process: lambda must be > 0");
        detail::require(small.dimension() == dimension(), "risk process: drift dimension does not match claims");
        detail::require(x.size() == dimension(), "risk process: start dimension does not match claims");
        small.validate(delta);
        if (kill.kind != KillingSpec::Kind::ExpKill) {
            for (std::size_t i = 0; i < dimension(); ++i) {
                const double load = lambda * claims.marginal_mean(i);
                detail::require(small.drift[i] > load, "net profit condition violated in coordinate " +
                                                           std::to_string(i) + ": a=" + detail::fmt_short(small.drift[i]) +
                                                           " <= lambda E U=" + detail::fmt_short(load));
            }
        }
    }
};

struct McOptions {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0: hardware concurrency
    double horizon = 0;    // 0: chosen by the late-ruin rule
    double step = 0.05;    // sub-step for Brownian and OU pieces
    std::size_t pilot_paths = 20000;  // upper bound; a quarter of the run otherwise
    double max_horizon = 1e6;
};

struct EstimateCI {
    std::string kind;
    Vec x;
    double estimate = 0;
    double std_error = 0;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double horizon = kInf;
    double bias_proxy = 0;  // share of ruins in the last half of the horizon

    bool within(double value, double sigmas = 3.0, double extra = 0.0) const {
        return std::abs(estimate - value) <= sigmas * std_error + extra;
    }
};

inline double combined_sigma(const EstimateCI& a, const EstimateCI& b) {
    return std::hypot(a.std_error, b.std_error);
}

/// Mean and variance accumulated in a fixed order.
struct RunningStats {
    double n = 0;
    Vec mean, m2;

    explicit RunningStats(std::size_t k = 0) : mean(k, 0.0), m2(k, 0.0) {}

    void add(std::span<const double> v) {
        n += 1;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = v[i] - mean[i];
            mean[i] += d / n;
            m2[i] += d * (v[i] - mean[i]);
        }
    }
    void merge(const RunningStats& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double tot = n + o.n;
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double d = o.mean[i] - mean[i];
            mean[i] += d * o.n / tot;
            m2[i] += o.m2[i] + d * d * n * o.n / tot;
        }
        n = tot;
    }
    double std_error(std::size_t i) const { return n > 1 ? std::sqrt(m2[i] / (n - 1) / n) : kInf; }
};

inline constexpr std::size_t kBlockPaths = 1024;

/// Runs fn(path_index, out) for every path. Paths are grouped in fixed blocks
/// whose statistics are merged in block order, so the result does not depend
/// on the number of threads.
template <class PathFn>
RunningStats run_paths(std::size_t n_paths, std::size_t k, unsigned threads, PathFn&& fn) {
    const std::size_t n_blocks = (n_paths + kBlockPaths - 1) / kBlockPaths;
    std::vector<RunningStats> blocks(n_blocks, RunningStats(k));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        Vec out(k);
        for (std::size_t b; (b = next.fetch_add(1)) < n_blocks;) {
            const std::size_t end = std::min(n_paths, (b + 1) * kBlockPaths);
            for (std::size_t p = b * kBlockPaths; p < end; ++p) {
                std::fill(out.begin(), out.end(), 0.0);
                fn(static_cast<std::uint64_t>(p), std::span<double>(out));
                blocks[b].add(out);
            }
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n_blocks, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    RunningStats total(k);
    for (const auto& b : blocks) total.merge(b);
    return total;
}

namespace detail {

enum StreamTag : std::uint64_t { kPathTag = 0, kKillTag = 1, kDiscountTag = 2 };

// Generates the increment W_t = X_t - x of one path up to t_end. Between
// events the path is reported as straight pieces (exact for drift-only and
// small jumps, chords of the exact curve for OU, Gaussian sub-steps with a
// sampled bridge minimum for Brownian). The consumer returns false to stop.
template <class Consumer>
void walk(const RiskProcessSpec& s, PathStream& rng, double t_end, double step, Consumer& c) {
    using SK = SmallComponent::Kind;
    const std::size_t d = s.dimension();
    const auto& sm = s.small;
    const bool small_jumps = sm.kind == SK::DriftSmallJumps || sm.kind == SK::OrnsteinUhlenbeck;
    const double r_small = small_jumps ? sm.jump_rate : 0.0;
    const double rate = s.lambda + r_small;
    Vec y(d, 0.0), zc(d, 0.0), w0(d), w1(d), wmin(d), u(d);
    double t = 0;
    auto pos = [&](Vec& w) {
        for (std::size_t i = 0; i < d; ++i) w[i] = y[i] - zc[i];
    };
    while (true) {
        const double tn = t + rng.exponential(rate);
        const bool last = tn >= t_end;
        const double t_stop = last ? t_end : tn;
        const double dt = t_stop - t;
        if (dt > 0) {
            if (sm.kind == SK::DriftOnly || sm.kind == SK::DriftSmallJumps) {
                pos(w0);
                for (std::size_t i = 0; i < d; ++i) {
                    y[i] += sm.drift[i] * dt;
                    w1[i] = y[i] - zc[i];
                    wmin[i] = std::min(w0[i], w1[i]);
                }
                if (!c.piece(t, dt, w0, w1, wmin)) return;
            } else {
                const int n_sub = std::max(1, static_cast<int>(std::ceil(dt / step)));
                const double hs = dt / n_sub;
                for (int k = 0; k < n_sub; ++k) {
                    pos(w0);
                    for (std::size_t i = 0; i < d; ++i) {
                        const double y0 = y[i];
                        if (sm.kind == SK::DriftBrownian) {
                            y[i] += sm.drift[i] * hs + sm.sigma * std::sqrt(hs) * rng.normal();
                            const double dy = y[i] - y0;
                            const double m =
                                0.5 * (y0 + y[i] - std::sqrt(dy * dy - 2 * sm.sigma * sm.sigma * hs * std::log(rng.uniform())));
                            wmin[i] = m - zc[i];
                        } else {
                            const double th = sm.ou_rate, eq = -sm.drift[i] / th;
                            y[i] = eq + (y0 - eq) * std::exp(th * hs);
                            wmin[i] = std::min(y0, y[i]) - zc[i];
                        }
                        w1[i] = y[i] - zc[i];
                    }
                    if (!c.piece(t + k * hs, hs, w0, w1, wmin)) return;
                }
            }
        }
        if (last) return;
        t = tn;
        pos(w0);
        const bool claim = r_small == 0 || rng.uniform() * rate < s.lambda;
        if (claim) {
            s.claims.sample(rng, u);
            for (std::size_t i = 0; i < d; ++i) zc[i] += u[i];
        } else {
            for (std::size_t i = 0; i < d; ++i) {
                const double v = rng.uniform();
                y[i] += sm.kind == SK::OrnsteinUhlenbeck ? v * sm.jump_width : (2 * v - 1) * sm.jump_width;
            }
        }
        pos(w1);
        if (!c.jump(t, w0, w1, claim)) return;
    }
}

inline void require_drift_only(const RiskProcessSpec& s, const char* what) {
    require(s.small.kind == SmallComponent::Kind::DriftOnly,
            std::string(what) + ": requires a drift-only small component (ruin only at claim epochs)");
}

}  // namespace detail

/// Event skeleton of one path: claim epochs with the surplus just before and
/// after each claim.
struct PathSkeleton {
    Vec times;
    std::vector<Vec> before, after;
    Vec end;
    double horizon = 0;
};

inline PathSkeleton sample_path(const RiskProcessSpec& s, PathStream& rng, double horizon, double step = 0.05) {
    detail::require(horizon > 0, "sample_path: horizon must be > 0");
    PathSkeleton sk;
    sk.horizon = horizon;
    const std::size_t d = s.dimension();
    auto shift = [&](const Vec& w) {
        Vec v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = s.x[i] + w[i];
        return v;
    };
    struct C {
        PathSkeleton& sk;
        std::function<Vec(const Vec&)> shift;
        bool piece(double, double, const Vec&, const Vec& w1, const Vec&) {
            sk.end = shift(w1);
            return true;
        }
        bool jump(double t, const Vec& w0, const Vec& w1, bool claim) {
            sk.end = shift(w1);
            if (!claim) return true;
            sk.times.push_back(t);
            sk.before.push_back(shift(w0));
            sk.after.push_back(shift(w1));
            return true;
        }
    } c{sk, shift};
    sk.end = s.x;
    detail::walk(s, rng, horizon, step, c);
    return sk;
}

/// E^x int_0^T l(X_s) ds with T ~ Exp(mu), for every start point in xs.
inline std::vector<EstimateCI> estimate_potential_expkill(const RiskProcessSpec& s, const std::vector<Vec>& xs,
                                                          const McOptions& o) {
    s.validate();
    detail::require(s.kill.kind == KillingSpec::Kind::ExpKill, "potential estimator: exponential killing required");
    const std::size_t d = s.dimension(), K = xs.size();
    for (const auto& x : xs) detail::require(x.size() == d, "potential estimator: start dimension mismatch");
    auto stats = run_paths(o.n_paths, K, o.threads, [&](std::uint64_t p, std::span<double> out) {
        PathStream kill_rng(o.seed, p, detail::kKillTag);
        const double T = kill_rng.exponential(s.kill.mu);
        PathStream rng(o.seed, p, detail::kPathTag);
        struct C {
            const RiskProcessSpec& s;
            const std::vector<Vec>& xs;
            std::span<double> out;
            Vec y, a;
            bool piece(double, double dt, const Vec& w0, const Vec& w1, const Vec&) {
                const std::size_t d = w0.size();
                for (std::size_t i = 0; i < d; ++i) a[i] = (w1[i] - w0[i]) / dt;
                for (std::size_t k = 0; k < xs.size(); ++k) {
                    for (std::size_t i = 0; i < d; ++i) y[i] = xs[k][i] + w0[i];
                    out[k] += segment_integral(s.payoff, y, a, dt);
                }
                return true;
            }
            bool jump(double, const Vec&, const Vec&, bool) { return true; }
        } c{s, xs, out, Vec(d), Vec(d)};
        detail::walk(s, rng, T, o.step, c);
    });
    std::vector<EstimateCI> res;
    for (std::size_t k = 0; k < K; ++k)
        res.push_back({"mc_potential", xs[k], stats.mean[k], stats.std_error(k), o.n_paths, o.seed, kInf, 0.0});
    return res;
}

namespace detail {

// Ruin detection for a set of start points sharing one increment path.
// Estimators that use it lay out their per-path columns as
// [1{ruin <= H}]_k, [1{H/2 < ruin <= H}]_k, then their own columns.
struct RuinTracker {
    const std::vector<Vec>& xs;
    double horizon;
    std::vector<char> alive;
    Vec ruin_time;
    std::size_t n_alive;

    RuinTracker(const std::vector<Vec>& x, double H)
        : xs(x), horizon(H), alive(x.size(), 1), ruin_time(x.size(), kInf), n_alive(x.size()) {}

    template <class OnRuin>
    void check(double t, const Vec& w, OnRuin&& on_ruin) {
        for (std::size_t k = 0; k < xs.size(); ++k) {
            if (!alive[k]) continue;
            for (std::size_t i = 0; i < w.size(); ++i)
                if (xs[k][i] + w[i] < 0) {
                    alive[k] = 0;
                    ruin_time[k] = t;
                    --n_alive;
                    on_ruin(k);
                    break;
                }
        }
    }
};

// Picks the horizon: doubles until the share of ruins in the last half of the
// horizon falls below `target` in a pilot run (for start points with enough
// ruins to judge).
template <class RunFn>
double choose_horizon(const RiskProcessSpec& s, const McOptions& o, std::size_t K, RunFn&& run) {
    double H = 16.0 / s.lambda;
    McOptions pilot = o;
    pilot.n_paths = std::min(o.n_paths, std::clamp<std::size_t>(o.n_paths / 4, 5000, o.pilot_paths));
    while (H < o.max_horizon) {
        const RunningStats st = run(pilot, H, false);
        double worst = 0;
        for (std::size_t k = 0; k < K; ++k) {
            const double ruins = st.mean[k] * st.n;
            if (ruins >= 50) worst = std::max(worst, st.mean[K + k] / st.mean[k]);
        }
        if (worst < 0.015) break;
        H *= 2;
    }
    return std::min(H, o.max_horizon);
}

// Runs with the requested or chosen horizon; when the horizon is automatic
// and the main run still shows a late-ruin share of 2% or more, the horizon
// is doubled and the run repeated.
template <class RunFn>
std::pair<RunningStats, double> run_with_horizon(const RiskProcessSpec& s, const McOptions& o, std::size_t K,
                                                 RunFn&& run) {
    if (o.horizon > 0) return {run(o, o.horizon, true), o.horizon};
    double H = choose_horizon(s, o, K, run);
    while (true) {
        RunningStats st = run(o, H, true);
        double worst = 0;
        for (std::size_t k = 0; k < K; ++k)
            if (st.mean[k] > 0) worst = std::max(worst, st.mean[K + k] / st.mean[k]);
        if (worst < 0.02 || 2 * H > o.max_horizon) return {std::move(st), H};
        H *= 2;
    }
}

inline double late_share(const RunningStats& st, std::size_t K, std::size_t k) {
    return st.mean[k] > 0 ? st.mean[K + k] / st.mean[k] : 0.0;
}

}  // namespace detail

/// P^x(T <= H) for first-passage ruin below zero, one estimate per start point.
/// All start points share each path (common random numbers), so the
/// estimates are nonincreasing in x path by path.
inline std::vector<EstimateCI> estimate_ruin_1d(const RiskProcessSpec& s, const Vec& xs, const McOptions& o) {
    detail::require(s.dimension() == 1, "ruin estimator: one-dimensional model required");
    detail::require(s.kill.kind == KillingSpec::Kind::FirstPassageRuin, "ruin estimator: first-passage killing required");
    detail::require(s.small.kind == SmallComponent::Kind::DriftOnly || s.small.kind == SmallComponent::Kind::DriftBrownian,
                    "ruin estimator: drift-only or Brownian small component required");
    s.validate();
    const std::size_t K = xs.size();
    // Sorted view: the running minimum crosses -x in increasing order of x.
    std::vector<std::size_t> ord(K);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    auto run = [&](const McOptions& oo, double H, bool) {
        return run_paths(oo.n_paths, 2 * K, oo.threads, [&](std::uint64_t p, std::span<double> out) {
            PathStream rng(oo.seed, p, detail::kPathTag);
            struct C {
                const Vec& xs;
                const std::vector<std::size_t>& ord;
                std::span<double> out;
                double H, m = 0;
                std::size_t next = 0;
                bool lower(double t, double v) {
                    if (v >= m) return true;
                    m = v;
                    while (next < ord.size() && m < -xs[ord[next]]) {
                        const std::size_t k = ord[next++];
                        out[k] = 1.0;
                        if (t > H / 2) out[ord.size() + k] = 1.0;
                    }
                    return next < ord.size();
                }
                bool piece(double t0, double dt, const Vec&, const Vec&, const Vec& wmin) { return lower(t0 + dt, wmin[0]); }
                bool jump(double t, const Vec&, const Vec& w1, bool) { return lower(t, w1[0]); }
            } c{xs, ord, out, H};
            detail::walk(s, rng, H, oo.step, c);
        });
    };
    auto [st, H] = detail::run_with_horizon(s, o, K, run);
    std::vector<EstimateCI> res;
    for (std::size_t k = 0; k < K; ++k)
        res.push_back({"mc_ruin", {xs[k]}, st.mean[k], st.std_error(k), o.n_paths, o.seed, H, detail::late_share(st, K, k)});
    return res;
}

/// P(S > x) for S = sum of a geometric number of ladder heights with law F_I,
/// P(N >= n) = rho^n. No horizon is involved.
inline std::vector<EstimateCI> estimate_ruin_dual(double lambda, double drift, const TailModel& F, const Vec& xs,
                                                  const McOptions& o) {
    const IntegratedTail FI(F);
    const double rho = lambda * FI.source_mean() / drift;
    detail::require(drift > 0 && rho < 1, "dual estimator: net profit condition violated");
    const std::size_t K = xs.size();
    auto st = run_paths(o.n_paths, K, o.threads, [&](std::uint64_t p, std::span<double> out) {
        PathStream rng(o.seed, p, detail::kPathTag);
        double S = 0;
        while (rng.uniform() < rho) S += FI.sample(rng);
        for (std::size_t k = 0; k < K; ++k) out[k] = S > xs[k] ? 1.0 : 0.0;
    });
    std::vector<EstimateCI> res;
    for (std::size_t k = 0; k < K; ++k)
        res.push_back({"mc_dual", {xs[k]}, st.mean[k], st.std_error(k), o.n_paths, o.seed, kInf, 0.0});
    return res;
}

struct QuadrantRuinResult {
    std::vector<EstimateCI> direct, compensation;
    double horizon = 0;
};

/// Exit from [0, inf)^d before the horizon, estimated twice per start point:
/// directly, and as E int_0^{T ^ H} lambda * joint_tail(X_s) ds.
inline QuadrantRuinResult estimate_quadrant_ruin(const RiskProcessSpec& s, const std::vector<Vec>& xs,
                                                 const McOptions& o) {
    detail::require(s.kill.kind == KillingSpec::Kind::QuadrantExit, "quadrant ruin: quadrant-exit killing required");
    detail::require_drift_only(s, "quadrant ruin");
    s.validate();
    const std::size_t d = s.dimension(), K = xs.size();
    for (const auto& x : xs) detail::require(x.size() == d, "quadrant ruin: start dimension mismatch");
    const PayoffFn comp = PayoffFn::claim_tail(s.claims, s.lambda);
    auto run = [&](const McOptions& oo, double H, bool full) {
        return run_paths(oo.n_paths, 3 * K, oo.threads, [&](std::uint64_t p, std::span<double> out) {
            PathStream rng(oo.seed, p, detail::kPathTag);
            struct C {
                const std::vector<Vec>& xs;
                const PayoffFn& comp;
                const Vec& a;
                std::span<double> out;
                detail::RuinTracker tr;
                Vec y;
                bool full;
                bool piece(double, double dt, const Vec& w0, const Vec&, const Vec&) {
                    if (!full) return true;
                    const std::size_t K = xs.size();
                    for (std::size_t k = 0; k < K; ++k) {
                        if (!tr.alive[k]) continue;
                        for (std::size_t i = 0; i < y.size(); ++i) y[i] = xs[k][i] + w0[i];
                        out[2 * K + k] += segment_integral(comp, y, a, dt);
                    }
                    return true;
                }
                bool jump(double t, const Vec&, const Vec& w1, bool) {
                    const std::size_t K = xs.size();
                    tr.check(t, w1, [&](std::size_t k) {
                        out[k] = 1.0;
                        if (t > tr.horizon / 2) out[K + k] = 1.0;
                    });
                    return tr.n_alive > 0;
                }
            } c{xs, comp, s.small.drift, out, detail::RuinTracker(xs, H), Vec(d), full};
            detail::walk(s, rng, H, oo.step, c);
        });
    };
    auto [st, H] = detail::run_with_horizon(s, o, K, run);
    QuadrantRuinResult r;
    r.horizon = H;
    for (std::size_t k = 0; k < K; ++k) {
        const double late = detail::late_share(st, K, k);
        r.direct.push_back({"mc_direct", xs[k], st.mean[k], st.std_error(k), o.n_paths, o.seed, H, late});
        r.compensation.push_back(
            {"mc_compensation", xs[k], st.mean[2 * K + k], st.std_error(2 * K + k), o.n_paths, o.seed, H, late});
    }
    return r;
}

/// Penalty w(surplus before ruin, deficit at ruin).
struct Penalty {
    enum class Kind { One, DeficitAbove, Custom };
    Kind kind = Kind::One;
    double level = 0;
    std::function<double(double, double)> fn;

    static Penalty one() { return {}; }
    static Penalty deficit_above(double y) { return {Kind::DeficitAbove, y, {}}; }
    static Penalty custom(std::function<double(double, double)> f) { return {Kind::Custom, 0.0, std::move(f)}; }

    double operator()(double before, double deficit) const {
        switch (kind) {
            case Kind::One: return 1.0;
            case Kind::DeficitAbove: return deficit > level ? 1.0 : 0.0;
            case Kind::Custom: return fn(before, deficit);
        }
        return 0;
    }
    bool has_potential_form() const { return kind != Kind::Custom; }
};

struct GerberShiuResult {
    std::vector<EstimateCI> direct, potential;
    double horizon = 0;
};

/// E^x[e^{-q T} w(X_{T-}, |X_T|); T <= H] for one-dimensional first-passage
/// ruin. The potential form integrates l(z) = lambda int_z^inf w(z, u - z) F(du)
/// up to min(T, e_q) with e_q ~ Exp(q) independent killing.
inline GerberShiuResult estimate_gerber_shiu(const RiskProcessSpec& s, const Penalty& w, double q, const Vec& xs,
                                             const McOptions& o) {
    detail::require(s.dimension() == 1, "Gerber-Shiu: one-dimensional model required");
    detail::require(s.kill.kind == KillingSpec::Kind::FirstPassageRuin, "Gerber-Shiu: first-passage killing required");
    detail::require(q >= 0, "Gerber-Shiu: discount must be >= 0");
    detail::require_drift_only(s, "Gerber-Shiu");
    s.validate();
    const std::size_t K = xs.size();
    std::vector<Vec> pts;
    for (double x : xs) pts.push_back({x});
    const TailModel& F = s.claims.laws()[0];
    const double a = s.small.drift[0];
    const double shift = w.kind == Penalty::Kind::DeficitAbove ? w.level : 0.0;
    auto run = [&](const McOptions& oo, double H, bool full) {
        return run_paths(oo.n_paths, 4 * K, oo.threads, [&](std::uint64_t p, std::span<double> out) {
            double eq = kInf;
            if (q > 0) {
                PathStream disc(oo.seed, p, detail::kDiscountTag);
                eq = disc.exponential(q);
            }
            PathStream rng(oo.seed, p, detail::kPathTag);
            struct C {
                const std::vector<Vec>& xs;
                const Penalty& w;
                const TailModel& F;
                double lambda, a, q, eq, shift;
                bool potential;
                std::span<double> out;
                detail::RuinTracker tr;
                bool piece(double t0, double dt, const Vec& w0, const Vec&, const Vec&) {
                    if (!potential) return true;
                    const double len = std::min(t0 + dt, eq) - t0;
                    if (len <= 0) return true;
                    const std::size_t K = xs.size();
                    for (std::size_t k = 0; k < K; ++k)
                        if (tr.alive[k]) out[3 * K + k] += lambda * detail::tail_along_line(F, xs[k][0] + w0[0] + shift, a, len);
                    return true;
                }
                bool jump(double t, const Vec& w0, const Vec& w1, bool) {
                    const std::size_t K = xs.size();
                    tr.check(t, w1, [&](std::size_t k) {
                        const double before = xs[k][0] + w0[0], deficit = -(xs[k][0] + w1[0]);
                        out[k] = 1.0;
                        out[2 * K + k] = std::exp(-q * t) * w(before, deficit);
                        if (t > tr.horizon / 2) out[K + k] = 1.0;
                    });
                    return tr.n_alive > 0;
                }
            } c{pts, w, F, s.lambda, a, q, eq, shift, full && w.has_potential_form(), out, detail::RuinTracker(pts, H)};
            detail::walk(s, rng, H, oo.step, c);
        });
    };
    auto [st, H] = detail::run_with_horizon(s, o, K, run);
    GerberShiuResult r;
    r.horizon = H;
    for (std::size_t k = 0; k < K; ++k) {
        const double late = detail::late_share(st, K, k);
        r.direct.push_back({"mc_gs_direct", pts[k], st.mean[2 * K + k], st.std_error(2 * K + k), o.n_paths, o.seed, H, late});
        if (w.has_potential_form())
            r.potential.push_back(
                {"mc_gs_potential", pts[k], st.mean[3 * K + k], st.std_error(3 * K + k), o.n_paths, o.seed, H, late});
    }
    return r;
}

}  // namespace potentia
