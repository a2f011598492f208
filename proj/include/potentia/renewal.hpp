#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "grid.hpp"
#include "heavytail.hpp"

namespace potentia {

/// How a grid function is extended past its first/last node.
enum class Boundary { Zero, Hold };

struct BoundaryRule {
    Boundary lower = Boundary::Zero;
    Boundary upper = Boundary::Zero;
};

/// (A u)(x_i) = sum over the measure of u(x_i - z). Kernel mass at a node
/// that maps exactly onto an edge of u is split into its left/right halves so
/// that the jump of u at a Zero edge is resolved to second order.
/// `indeterminate`, when given, receives the largest kernel mass whose
/// contribution could only be approximated.
inline Vec apply_measure(const GridMeasure& G, const Grid& ug, const Vec& u, BoundaryRule br,
                         double* indeterminate = nullptr) {
    detail::require(G.grid.same_step(ug), "apply_measure: step mismatch");
    detail::require(u.size() == ug.size(), "apply_measure: size mismatch");
    const std::size_t n = u.size();
    const long ulo = ug.lo, uhi = ug.hi;
    const long glo = G.grid.lo, ghi = G.grid.hi;
    const double h = ug.step;
    const bool hold_lo = br.lower == Boundary::Hold, hold_hi = br.upper == Boundary::Hold;

    const std::size_t ng = G.weight.size();
    Vec pre(ng + 1, 0.0);
    for (std::size_t j = 0; j < ng; ++j) pre[j + 1] = pre[j] + G.weight[j];
    auto wsum = [&](long a, long b) {  // sum of weights over absolute indices [a, b]
        a = std::max(a, glo);
        b = std::min(b, ghi);
        if (a > b) return 0.0;
        return pre[static_cast<std::size_t>(b - glo + 1)] - pre[static_cast<std::size_t>(a - glo)];
    };
    auto wt = [&](long j) { return G.weight[static_cast<std::size_t>(j - glo)]; };
    auto lt = [&](long j) { return G.left[static_cast<std::size_t>(j - glo)]; };

    auto u_ext = [&](double y) {
        if (y < ug.x_min()) return hold_lo ? u.front() : 0.0;
        if (y > ug.x_max()) return hold_hi ? u.back() : 0.0;
        const double t = (y - ug.x_min()) / h;
        auto i = static_cast<std::size_t>(std::floor(t));
        if (i >= n - 1) return u.back();
        const double f = t - static_cast<double>(i);
        return (1 - f) * u[i] + f * u[i + 1];
    };

    double indet = G.lost;
    Vec out(n, 0.0);
    for (std::size_t ii = 0; ii < n; ++ii) {
        const long i = ulo + static_cast<long>(ii);
        double s = 0;
        // Interior: u index m = i - j strictly inside (ulo, uhi).
        const long jlo = std::max(glo, i - uhi + 1);
        const long jhi = std::min(ghi, i - ulo - 1);
        if (jlo <= jhi) {
            const double* w = &G.weight[static_cast<std::size_t>(jlo - glo)];
            const double* uu = &u[static_cast<std::size_t>(i - jlo - ulo)];
            const long cnt = jhi - jlo + 1;
            double acc = 0;
            for (long k = 0; k < cnt; ++k) acc += w[k] * uu[-k];
            s += acc;
        }
        // Lower edge of u: kernel node j = i - ulo.
        {
            const long j = i - ulo;
            if (j >= glo && j <= ghi) s += u.front() * (hold_lo ? wt(j) : lt(j));
            if (hold_lo) s += u.front() * wsum(j + 1, ghi);
        }
        // Upper edge of u: kernel node j = i - uhi.
        {
            const long j = i - uhi;
            if (j >= glo && j <= ghi) s += u.back() * (hold_hi ? wt(j) : wt(j) - lt(j));
            if (hold_hi) s += u.back() * wsum(glo, j - 1);
        }
        for (const auto& a : G.atoms) s += a.mass * u_ext(ug.x(i) - a.location);
        const double xi = ug.x(i);
        if (G.above > 0) {
            if (xi - G.above_floor <= ug.x_min()) {
                if (hold_lo) s += G.above * u.front();
            } else {
                s += G.above * u_ext(xi - G.above_floor);
                indet = std::max(indet, G.above);
            }
        }
        if (G.below > 0) {
            if (xi - G.below_ceiling > ug.x_max()) {
                if (hold_hi) s += G.below * u.back();
            } else {
                s += G.below * u_ext(xi - G.below_ceiling);
                indet = std::max(indet, G.below);
            }
        }
        out[ii] = s;
    }
    if (indeterminate) *indeterminate = indet;
    return out;
}

/// u = h + u * G on a grid.
struct RenewalProblem {
    Grid grid;
    Vec h;
    GridMeasure kernel;
    BoundaryRule boundary{};
    std::string label;

    double rho() const { return kernel.mass(); }

    void validate() const {
        detail::require(h.size() == grid.size(), "renewal problem: forcing term does not match grid");
        detail::require(kernel.grid.same_step(grid), "renewal problem: kernel step differs from grid step");
        for (double v : h) detail::require(std::isfinite(v), "renewal problem: forcing term not finite");
        if (!(rho() < 1.0)) throw std::invalid_argument("renewal problem: kernel mass must be < 1");
    }
};

struct RenewalSolution {
    Grid grid;
    Vec u;
    Vec h;
    Vec residual_contribution;  // u - h - A u, pointwise
    double residual = 0;
    int iterations = 0;
    std::string method;
    Vec trace;  // sup |u_{k+1} - u_k| per iteration, or sup |term_k| per series term
    double tolerance = 0;
    double truncation_bound = 0;
    double indeterminate_mass = 0;
    bool valid = true;

    double at(double x) const {
        const double t = (x - grid.x_min()) / grid.step;
        if (t <= 0) return u.front();
        if (t >= static_cast<double>(u.size() - 1)) return u.back();
        const auto i = static_cast<std::size_t>(std::floor(t));
        const double f = t - static_cast<double>(i);
        return (1 - f) * u[i] + f * u[i + 1];
    }

    void write_csv(std::ostream& os, const std::string& header = {}) const {
        os << "# potentia-csv v1\n";
        if (!header.empty()) os << header;
        os << "x,u,h,residual_contribution\n";
        for (std::size_t i = 0; i < u.size(); ++i)
            os << detail::fmt(grid.at(i)) << ',' << detail::fmt(u[i]) << ',' << detail::fmt(h[i]) << ','
               << detail::fmt(residual_contribution[i]) << '\n';
    }
};

namespace detail {

inline double sup_abs(const Vec& v) {
    double s = 0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline void finish(RenewalSolution& s, const RenewalProblem& p, double indet) {
    double indet2 = 0;
    const Vec au = apply_measure(p.kernel, p.grid, s.u, p.boundary, &indet2);
    s.residual_contribution.resize(s.u.size());
    for (std::size_t i = 0; i < s.u.size(); ++i) s.residual_contribution[i] = s.u[i] - p.h[i] - au[i];
    s.residual = sup_abs(s.residual_contribution);
    s.h = p.h;
    s.grid = p.grid;
    s.indeterminate_mass = std::max(indet, indet2);
    s.valid = s.indeterminate_mass <= 1e-6 * p.rho();
}

}  // namespace detail

/// Iteration cap for the fixed-point solver.
inline int fixed_point_cap(double rho, double tol, double sup_h) {
    if (rho <= 0 || sup_h <= 0) return 50;
    const double k = std::ceil(std::log(tol * (1 - rho) / sup_h) / std::log(rho));
    return static_cast<int>(std::max(0.0, k)) + 50;
}

/// u_{k+1} = h + A u_k from u_0 = h, until the remaining error bound
/// rho/(1-rho) * |u_{k+1} - u_k| drops below tol/2.
inline RenewalSolution solve_fixed_point(const RenewalProblem& p, double tol = 1e-10) {
    p.validate();
    detail::require(tol > 0, "solve_fixed_point: tol must be > 0");
    const double rho = p.rho();
    const double sup_h = detail::sup_abs(p.h);
    RenewalSolution s;
    s.method = "fixed_point";
    s.tolerance = tol;
    s.u = p.h;
    const int cap = fixed_point_cap(rho, tol, sup_h);
    double indet = 0;
    bool done = sup_h == 0;
    while (!done) {
        if (s.iterations >= cap) {
            std::ostringstream msg;
            msg << "fixed point did not converge in " << cap << " iterations; residual trace:";
            const std::size_t from = s.trace.size() > 10 ? s.trace.size() - 10 : 0;
            for (std::size_t k = from; k < s.trace.size(); ++k) msg << ' ' << detail::fmt_short(s.trace[k]);
            throw NumericalError(msg.str());
        }
        double ind = 0;
        Vec next = apply_measure(p.kernel, p.grid, s.u, p.boundary, &ind);
        indet = std::max(indet, ind);
        double diff = 0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] += p.h[i];
            diff = std::max(diff, std::abs(next[i] - s.u[i]));
        }
        s.u.swap(next);
        s.trace.push_back(diff);
        ++s.iterations;
        done = rho / (1 - rho) * diff <= 0.5 * tol || diff == 0;
    }
    s.truncation_bound = s.trace.empty() ? 0.0 : rho / (1 - rho) * s.trace.back();
    detail::finish(s, p, indet);
    return s;
}

/// Truncated series u = sum_{k=0}^{n} A^k h. With n_terms < 0 the number of
/// terms is chosen so that the geometric tail bound is below tol/2.
inline RenewalSolution solve_pk_series(const RenewalProblem& p, int n_terms = -1, double tol = 1e-10) {
    p.validate();
    const double rho = p.rho();
    const double sup_h = detail::sup_abs(p.h);
    RenewalSolution s;
    s.method = "pk_series";
    s.tolerance = tol;
    if (n_terms < 0) {
        n_terms = 0;
        if (rho > 0 && sup_h > 0) {
            const double k = std::ceil(std::log(0.5 * tol * (1 - rho) / sup_h) / std::log(rho)) - 1;
            n_terms = static_cast<int>(std::max(0.0, k));
        }
    }
    s.u = p.h;
    Vec term = p.h;
    double indet = 0;
    for (int k = 1; k <= n_terms; ++k) {
        double ind = 0;
        term = apply_measure(p.kernel, p.grid, term, p.boundary, &ind);
        indet = std::max(indet, ind);
        for (std::size_t i = 0; i < term.size(); ++i) s.u[i] += term[i];
        s.trace.push_back(detail::sup_abs(term));
    }
    s.iterations = n_terms;
    s.truncation_bound = std::pow(rho, n_terms + 1) / (1 - rho) * sup_h;
    detail::finish(s, p, indet);
    return s;
}

/// Ruin problem u = rho * tail_I + rho * u * F_I on [0, extent], u = 0 below 0.
inline RenewalProblem ruin_problem(const IntegratedTail& FI, double rho, double step, double extent) {
    detail::require(rho > 0 && rho < 1, "ruin problem: rho must be in (0,1)");
    RenewalProblem p;
    p.grid = Grid::uniform(step, 0.0, extent);
    p.kernel = GridMeasure::from_tail(p.grid, [&](double z) { return rho * FI.tail(z); }, rho);
    p.h.resize(p.grid.size());
    for (std::size_t i = 0; i < p.h.size(); ++i) p.h[i] = rho * FI.tail(p.grid.at(i));
    p.boundary = {Boundary::Zero, Boundary::Zero};
    p.label = "ruin";
    return p;
}

// ---------------------------------------------------------------------------
// Kesten-type bound on convolution powers
// ---------------------------------------------------------------------------

struct KestenReport {
    std::vector<double> probes;
    std::vector<Vec> ratios;  // ratios[n-1][p] = tail of kernel^{*n} at probe p / reference tail
    Vec C;                    // per n: max over probes of ratio / (n (1+eps)^n)
    double C_max = 0;
    bool violation = false;
    bool light_tail = false;
    std::string note;
};

/// For a normalized kernel, the smallest C with tail_n(x) <= C n (1+eps)^n tail(x)
/// over the probes and n <= n_max. A violation is reported when the required
/// constant grows with n; rapidly growing ratios mark a light tail.
template <TailFunction F>
KestenReport kesten_check(const GridMeasure& kernel, const F& reference, int n_max, double eps,
                          std::vector<double> probes) {
    detail::require(n_max >= 1, "kesten_check: n_max must be >= 1");
    detail::require(!probes.empty(), "kesten_check: no probes");
    KestenReport r;
    std::sort(probes.begin(), probes.end());
    r.probes = probes;
    GridMeasure power = GridMeasure::delta(kernel.grid);
    for (int n = 1; n <= n_max; ++n) {
        power = convolve(power, kernel);
        Vec row;
        double c = 0;
        for (double x : probes) {
            const double ratio = power.tail(x) / reference.tail(x);
            row.push_back(ratio);
            c = std::max(c, ratio / (n * std::pow(1 + eps, n)));
        }
        r.ratios.push_back(row);
        r.C.push_back(c);
        r.C_max = std::max(r.C_max, c);
    }
    for (std::size_t n = 1; n < r.C.size(); ++n)
        if (r.C[n] > r.C[0] * (1 + 1e-9)) r.violation = true;
    if (n_max >= 2) {
        const Vec& two = r.ratios[1];
        const bool growing = two.size() < 2 || two.back() > two[two.size() - 2];
        if (two.back() > 3.0 && growing) r.light_tail = true;
    }
    if (r.light_tail) r.note = "light-tail: bound not applicable";
    else if (r.violation) r.note = "violation: constant grows with n";
    else r.note = "ok";
    return r;
}

// ---------------------------------------------------------------------------
// State-dependent kernels (verification only)
// ---------------------------------------------------------------------------

/// Brute-force iterate u = h + sum_k H^k h for a kernel that depends on the
/// current point: kernel(x_i) returns weights over the target nodes.
/// Coarse grids only; cost is O(n_terms * n^2).
inline Vec iterate_state_dependent(const Vec& h, const std::function<Vec(std::size_t)>& kernel_row, int n_terms) {
    const std::size_t n = h.size();
    std::vector<Vec> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i] = kernel_row(i);
        detail::require(rows[i].size() == n, "state-dependent kernel: row size mismatch");
    }
    Vec u = h, term = h;
    for (int k = 0; k < n_terms; ++k) {
        Vec next(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < n; ++j) s += rows[i][j] * term[j];
            next[i] = s;
        }
        term.swap(next);
        for (std::size_t i = 0; i < n; ++i) u[i] += term[i];
    }
    return u;
}

}  // namespace potentia
