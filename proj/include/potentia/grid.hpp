#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "core.hpp"

namespace potentia {

/// Uniform grid of points k*step for integer k in [lo, hi].
struct Grid {
    double step = 1.0;
    long lo = 0;
    long hi = 1;

    static Grid uniform(double step, double x_min, double x_max) {
        detail::require(step > 0 && std::isfinite(step), "grid: step must be > 0");
        detail::require(x_max > x_min, "grid: empty extent");
        Grid g;
        g.step = step;
        g.lo = static_cast<long>(std::floor(x_min / step + 1e-9));
        g.hi = static_cast<long>(std::ceil(x_max / step - 1e-9));
        detail::require(g.hi - g.lo >= 1, "grid: need at least two points");
        return g;
    }

    std::size_t size() const { return static_cast<std::size_t>(hi - lo + 1); }
    double x(long k) const { return static_cast<double>(k) * step; }
    double at(std::size_t i) const { return x(lo + static_cast<long>(i)); }
    double x_min() const { return x(lo); }
    double x_max() const { return x(hi); }
    bool contains(long k) const { return k >= lo && k <= hi; }
    bool same_step(const Grid& o) const { return std::abs(step - o.step) <= 1e-12 * step; }
    Vec points() const {
        Vec p(size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = at(i);
        return p;
    }
};

struct Atom {
    double location;
    double mass;
};

/// Sub-probability measure on a grid. The continuous part is stored as
/// hat-function masses per node; `left` holds the share of each node mass
/// that came from the cell to its left, needed where a function jumps at a
/// node. Mass that leaves the grid is kept in `above`/`below` together with a
/// bound on its location; mass whose location cannot be bounded is `lost`.
class GridMeasure {
public:
    Grid grid;
    Vec weight;
    Vec left;
    std::vector<Atom> atoms;
    double above = 0.0;
    double above_floor = kInf;  // every unit of `above` sits strictly beyond this
    double below = 0.0;
    double below_ceiling = -kInf;  // every unit of `below` sits at or before this
    double lost = 0.0;

    GridMeasure() = default;
    explicit GridMeasure(Grid g) : grid(g), weight(g.size(), 0.0), left(g.size(), 0.0) {}

    static GridMeasure zero(Grid g) { return GridMeasure(g); }

    static GridMeasure delta(Grid g, double location = 0.0, double mass = 1.0) {
        GridMeasure m(g);
        m.add_atom(location, mass);
        return m;
    }

    /// Hat-function discretization of a measure given by z -> G((z, inf)).
    /// `total` is the full mass of the measure; whatever lies at or below the
    /// first node goes to `below`, beyond the last node to `above`.
    /// Atoms must be added separately; the tail passed here must be continuous.
    template <class TailFn>
    static GridMeasure from_tail(Grid g, TailFn&& tail, double total, int panels_per_cell = 2) {
        GridMeasure m(g);
        const std::size_t n = g.size();
        const double h = g.step;
        Vec T(n), I(n - 1);
        for (std::size_t i = 0; i < n; ++i) T[i] = tail(g.at(i));
        for (std::size_t i = 0; i + 1 < n; ++i) I[i] = detail::simpson(tail, g.at(i), g.at(i + 1), panels_per_cell);
        for (std::size_t i = 0; i < n; ++i) {
            const double l = i > 0 ? I[i - 1] / h - T[i] : 0.0;
            const double r = i + 1 < n ? T[i] - I[i] / h : 0.0;
            m.left[i] = std::max(l, 0.0);
            m.weight[i] = m.left[i] + std::max(r, 0.0);
        }
        m.above = T[n - 1];
        m.above_floor = g.x_max();
        m.below = std::max(0.0, total - T[0]);
        m.below_ceiling = g.x_min();
        if (m.above == 0) m.above_floor = kInf;
        if (m.below == 0) m.below_ceiling = -kInf;
        return m;
    }

    void add_atom(double location, double mass) {
        if (mass == 0) return;
        for (auto& a : atoms) {
            if (std::abs(a.location - location) <= 1e-12 * std::max(1.0, std::abs(location))) {
                a.mass += mass;
                return;
            }
        }
        atoms.push_back({location, mass});
    }

    double grid_mass() const {
        double s = 0;
        for (double w : weight) s += w;
        return s;
    }
    double atom_mass() const {
        double s = 0;
        for (const auto& a : atoms) s += a.mass;
        return s;
    }
    double mass() const { return grid_mass() + atom_mass() + above + below + lost; }
    double clipped() const { return above + below; }

    /// Lowest location carrying mass; -inf when some mass sits below the grid.
    double min_support() const {
        if (below > 0 || lost > 0) return -kInf;
        double s = kInf;
        for (std::size_t i = 0; i < weight.size(); ++i)
            if (weight[i] > 0) {
                s = grid.at(i) - (weight[i] > left[i] ? 0.0 : grid.step);
                break;
            }
        for (const auto& a : atoms)
            if (a.mass > 0) s = std::min(s, a.location);
        if (above > 0) s = std::min(s, above_floor);
        return s;
    }

    double max_support() const {
        if (above > 0 || lost > 0) return kInf;
        double s = -kInf;
        for (std::size_t i = weight.size(); i-- > 0;)
            if (weight[i] > 0) {
                s = grid.at(i) + (left[i] < weight[i] ? grid.step : 0.0);
                break;
            }
        for (const auto& a : atoms)
            if (a.mass > 0) s = std::max(s, a.location);
        if (below > 0) s = std::max(s, below_ceiling);
        return s;
    }

    /// Mass strictly above x (linear between nodes for the grid part).
    double tail(double x) const {
        double s = above;
        for (const auto& a : atoms)
            if (a.location > x) s += a.mass;
        if (x < grid.x_min()) {
            s += grid_mass();
            if (x < below_ceiling) s += below;
            return s;
        }
        if (x >= grid.x_max()) return s;
        const double t = (x - grid.x_min()) / grid.step;
        const auto i = static_cast<std::size_t>(std::floor(t));
        const double f = t - static_cast<double>(i);
        auto node_tail = [&](std::size_t k) {
            double r = weight[k] - left[k];
            for (std::size_t j = k + 1; j < weight.size(); ++j) r += weight[j];
            return r;
        };
        const double a = node_tail(i);
        if (f == 0) return s + a;
        const double b = node_tail(i + 1);
        return s + (1 - f) * a + f * b;
    }

    GridMeasure scaled(double c) const {
        GridMeasure m = *this;
        for (auto& w : m.weight) w *= c;
        for (auto& l : m.left) l *= c;
        for (auto& a : m.atoms) a.mass *= c;
        m.above *= c;
        m.below *= c;
        m.lost *= c;
        return m;
    }

    /// this += c * other (same grid).
    void accumulate(const GridMeasure& o, double c = 1.0) {
        detail::require(o.grid.same_step(grid) && o.grid.lo == grid.lo && o.grid.hi == grid.hi,
                        "grid measure: grid mismatch");
        for (std::size_t i = 0; i < weight.size(); ++i) {
            weight[i] += c * o.weight[i];
            left[i] += c * o.left[i];
        }
        for (const auto& a : o.atoms) add_atom(a.location, c * a.mass);
        if (o.above > 0) {
            above += c * o.above;
            above_floor = std::min(above_floor, o.above_floor);
        }
        if (o.below > 0) {
            below += c * o.below;
            below_ceiling = std::max(below_ceiling, o.below_ceiling);
        }
        lost += c * o.lost;
    }

    std::string describe() const {
        return "grid[" + detail::fmt_short(grid.x_min()) + "," + detail::fmt_short(grid.x_max()) +
               "] step " + detail::fmt_short(grid.step) + " mass " + detail::fmt_short(mass(), 10) +
               " clipped " + detail::fmt_short(clipped()) + " lost " + detail::fmt_short(lost);
    }

    // Used by convolve.
    void put(long k, double w, double l) {
        if (k > grid.hi) {
            above += w;
            above_floor = std::min(above_floor, grid.x(k) - grid.step);
        } else if (k < grid.lo) {
            below += w;
            below_ceiling = std::max(below_ceiling, grid.x(k) + grid.step);
        } else {
            const auto i = static_cast<std::size_t>(k - grid.lo);
            weight[i] += w;
            left[i] += l;
        }
    }
};

namespace detail {

// Spread the grid part of `b`, translated by an atom (loc, m), into `out`.
inline void shift_into(GridMeasure& out, const GridMeasure& b, double loc, double m) {
    const double h = b.grid.step;
    const double t = loc / h;
    const double r = std::round(t);
    const bool on_grid = std::abs(t - r) <= 1e-9 * std::max(1.0, std::abs(t));
    const long s0 = on_grid ? static_cast<long>(r) : static_cast<long>(std::floor(t));
    const double f = on_grid ? 0.0 : t - static_cast<double>(s0);
    for (std::size_t j = 0; j < b.weight.size(); ++j) {
        const double w = b.weight[j];
        if (w == 0) continue;
        const long k = b.grid.lo + static_cast<long>(j) + s0;
        out.put(k, (1 - f) * m * w, (1 - f) * m * b.left[j]);
        if (f > 0) out.put(k + 1, f * m * w, f * m * b.left[j]);
    }
}

}  // namespace detail

/// a * b on a's grid. Requires equal steps.
inline GridMeasure convolve(const GridMeasure& a, const GridMeasure& b) {
    if (!a.grid.same_step(b.grid)) throw std::invalid_argument("convolve: grid mismatch");
    GridMeasure out(a.grid);
    const long olo = out.grid.lo, ohi = out.grid.hi;
    // grid * grid, with out-of-range parts summed through suffix/prefix sums of b.
    const std::size_t nb = b.weight.size();
    Vec b_pre(nb + 1, 0.0);
    for (std::size_t j = 0; j < nb; ++j) b_pre[j + 1] = b_pre[j] + b.weight[j];
    for (std::size_t i = 0; i < a.weight.size(); ++i) {
        const double wa = a.weight[i], la = a.left[i];
        if (wa == 0) continue;
        const long ia = a.grid.lo + static_cast<long>(i);
        // Absolute b-index range landing inside the output grid.
        const long jlo = std::max(b.grid.lo, olo - ia);
        const long jhi = std::min(b.grid.hi, ohi - ia);
        if (jlo <= jhi) {
            const auto j0 = static_cast<std::size_t>(jlo - b.grid.lo);
            const auto j1 = static_cast<std::size_t>(jhi - b.grid.lo);
            double* ow = &out.weight[static_cast<std::size_t>(ia + jlo - olo)];
            double* ol = &out.left[static_cast<std::size_t>(ia + jlo - olo)];
            for (std::size_t j = j0; j <= j1; ++j) {
                const double wb = b.weight[j];
                ow[j - j0] += wa * wb;
                ol[j - j0] += 0.5 * (la * wb + wa * b.left[j]);
            }
        }
        // Beyond the top.
        const long jt = std::max(b.grid.lo, ohi - ia + 1);
        if (jt <= b.grid.hi) {
            const double m = b_pre[nb] - b_pre[static_cast<std::size_t>(jt - b.grid.lo)];
            if (m > 0) out.put(ia + jt, wa * m, 0.0);
        }
        // Below the bottom.
        const long jb = std::min(b.grid.hi, olo - ia - 1);
        if (jb >= b.grid.lo) {
            const double m = b_pre[static_cast<std::size_t>(jb - b.grid.lo + 1)];
            if (m > 0) out.put(ia + jb, wa * m, 0.0);
        }
    }

    // Atoms against grid parts and against each other.
    for (const auto& at : a.atoms) detail::shift_into(out, b, at.location, at.mass);
    for (const auto& bt : b.atoms) detail::shift_into(out, a, bt.location, bt.mass);
    for (const auto& at : a.atoms)
        for (const auto& bt : b.atoms) out.add_atom(at.location + bt.location, at.mass * bt.mass);

    // Off-grid masses: located by their bounds when those stay meaningful.
    const double ma = a.mass(), mb = b.mass();
    const double a_in = ma - a.above - a.below - a.lost;
    const double b_in = mb - b.above - b.below - b.lost;
    auto push_above = [&](double m, double floor) {
        if (m <= 0) return;
        out.above += m;
        out.above_floor = std::min(out.above_floor, floor);
    };
    auto push_below = [&](double m, double ceil) {
        if (m <= 0) return;
        out.below += m;
        out.below_ceiling = std::max(out.below_ceiling, ceil);
    };
    auto min_in = [&](const GridMeasure& m) {
        GridMeasure t = m;
        t.above = t.below = t.lost = 0;
        return t.min_support();
    };
    auto max_in = [&](const GridMeasure& m) {
        GridMeasure t = m;
        t.above = t.below = t.lost = 0;
        return t.max_support();
    };
    if (a.above > 0) push_above(a.above * b_in, a.above_floor + min_in(b));
    if (b.above > 0) push_above(b.above * a_in, b.above_floor + min_in(a));
    if (a.below > 0) push_below(a.below * b_in, a.below_ceiling + max_in(b));
    if (b.below > 0) push_below(b.below * a_in, b.below_ceiling + max_in(a));
    push_above(a.above * b.above, a.above_floor + b.above_floor);
    push_below(a.below * b.below, a.below_ceiling + b.below_ceiling);
    out.lost += a.above * b.below + a.below * b.above;
    out.lost += a.lost * mb + b.lost * (ma - a.lost);
    return out;
}

/// m^{*n}; n = 0 gives a unit atom at 0.
inline GridMeasure convolution_power(const GridMeasure& m, int n) {
    detail::require(n >= 0, "convolution_power: n must be >= 0");
    GridMeasure r = GridMeasure::delta(m.grid);
    for (int k = 0; k < n; ++k) r = convolve(r, m);
    return r;
}

struct NeumannResult {
    GridMeasure measure;
    double rho = 0;
    int terms = 0;
    double truncation_bound = 0;  // mass missing from the infinite series
};

/// (1 - rho) * sum_{k=0}^{n} kernel^{*k} for a kernel of mass rho < 1; this
/// equals (1 - rho) * sum rho^k G_rho^{*k} with G_rho the normalized kernel.
inline NeumannResult neumann_sum(const GridMeasure& kernel, int n_terms) {
    const double rho = kernel.mass();
    if (!(rho < 1.0)) throw std::invalid_argument("neumann_sum: kernel mass must be < 1");
    detail::require(n_terms >= 0, "neumann_sum: n_terms must be >= 0");
    NeumannResult res;
    res.rho = rho;
    res.terms = n_terms;
    GridMeasure power = GridMeasure::delta(kernel.grid);
    GridMeasure acc = power.scaled(1.0 - rho);
    for (int k = 1; k <= n_terms; ++k) {
        power = convolve(power, kernel);
        acc.accumulate(power, 1.0 - rho);
    }
    res.measure = std::move(acc);
    res.truncation_bound = std::pow(rho, n_terms + 1) / (1.0 - rho);
    return res;
}

/// Smallest n with rho^{n+1} / (1 - rho) <= tol.
inline int neumann_terms_for(double rho, double tol) {
    detail::require(rho < 1 && rho >= 0, "rho must be in [0,1)");
    if (rho == 0) return 0;
    return std::max(0, static_cast<int>(std::ceil(std::log(tol * (1.0 - rho)) / std::log(rho))) - 1);
}

}  // namespace potentia
