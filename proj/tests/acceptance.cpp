#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <potentia/potentia.hpp>

using namespace potentia;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Timed {
    Scenario sc;
    Report rep;
    double secs = 0;
};

Timed run_timed(const Json& j, Overrides ov = {}, unsigned threads = 0) {
    Timed t;
    t.sc = parse_scenario(j, ov);
    const auto t0 = Clock::now();
    t.rep = run_scenario(t.sc, {threads});
    t.secs = seconds_since(t0);
    return t;
}

std::vector<const ReportRow*> rows(const Report& r, const std::string& label) {
    std::vector<const ReportRow*> out;
    for (const auto& row : r.rows)
        if (row.label == label) out.push_back(&row);
    return out;
}

std::string num(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void info(const std::string& what) {
        if (pass) detail += (detail.empty() ? "" : "; ") + what;
    }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " C" << id << " " << title << ": " << o.detail << std::endl;
}

// Classical ruin with Exp(beta) claims: psi(x) = rho e^{-(beta - lambda/a) x}.
double cl_exp_ruin(double lambda, double a, double beta, double x) {
    return lambda / (a * beta) * std::exp(-(beta - lambda / a) * x);
}

double combined(double s1, double s2) { return std::sqrt(s1 * s1 + s2 * s2); }

Json quadrant_variant(const std::string& id, Vec drift, Vec props, std::uint64_t seed, const std::string& xs) {
    Json j = *builtin_config("quadrant_ruin_2d");
    j["id"] = id;
    j["model"]["small"]["drift"] = drift;
    j["model"]["claims"]["proportions"] = props;
    j["mc"]["seed"] = seed;
    j["mc"]["x"] = Json::parse(xs);
    return j;
}

}  // namespace

int main() {
    std::map<std::string, Timed> runs;
    for (const auto& b : list_scenarios()) {
        runs[b.id] = run_timed(*builtin_config(b.id));
        std::cout << "ran " << b.id << " in " << num(runs[b.id].secs) << " s, status " << runs[b.id].rep.status()
                  << std::endl;
    }

    report(1, "Cramer-Lundberg exponential", [&] {
        Outcome o;
        const auto& t = runs.at("cramer_lundberg_exp");
        const auto& M = t.sc.model;
        const double lambda = M.lambda, a = M.small.drift[0];
        o.require(lambda == 1 && a == 2, "builtin is not lambda=1, a=2");
        const IntegratedTail FI(M.claims.laws()[0]);
        const double rho = lambda * FI.source_mean() / a;
        const auto sol = solve_fixed_point(ruin_problem(FI, rho, 0.01, 40), t.sc.solver_tol);
        double sup = 0;
        for (std::size_t i = 0; i < sol.u.size(); ++i) {
            const double x = 0.01 * static_cast<double>(i);
            sup = std::max(sup, std::abs(sol.u[i] - 0.5 * std::exp(-0.5 * x)));
        }
        o.require(sup < 1e-3, "solver sup error " + num(sup));
        const auto mc = rows(t.rep, "ruin");
        o.require(mc.size() == 4, "expected 4 simulated points");
        o.require(t.sc.mc.n_paths >= 1000000, "fewer than 1e6 paths");
        for (const auto* r : mc) {
            const double ref = cl_exp_ruin(lambda, a, 1, r->x);
            o.require(std::abs(r->mc - ref) <= 3 * r->mc_se, "mc at x=" + num(r->x) + " off by " +
                                                                   num(std::abs(r->mc - ref) / r->mc_se) + " se");
            o.require(r->bias_proxy < 0.02, "bias proxy " + num(r->bias_proxy) + " at x=" + num(r->x));
        }
        o.require(t.secs < 60, "took " + num(t.secs) + " s");
        o.info("sup error " + num(sup) + ", " + num(t.secs) + " s");
        return o;
    });

    report(2, "Pareto alpha=1, rho=0.5 asymptotic ratio", [&] {
        Outcome o;
        const auto& t = runs.at("cramer_lundberg_pareto");
        const auto& M = t.sc.model;
        const IntegratedTail FI(M.claims.laws()[0]);
        const double rho = M.lambda * FI.source_mean() / M.small.drift[0];
        o.require(std::abs(rho - 0.5) < 1e-12, "rho is " + num(rho));
        // Claims with tail z^-2 above 1 have mean 2 and integrated tail 1/(2x).
        std::vector<double> dev;
        std::string ratios;
        for (double x : {25.0, 50.0, 100.0, 200.0}) {
            const ReportRow* hit = nullptr;
            for (const auto* r : rows(t.rep, "ruin_asymptotic"))
                if (r->x == x) hit = r;
            if (!hit) {
                o.require(false, "no ladder rung at " + num(x));
                continue;
            }
            const double pred = rho / (1 - rho) / (2 * x);
            const double ratio = hit->solver / pred;
            ratios += (ratios.empty() ? "" : ",") + num(ratio);
            o.require(ratio >= 0.7 && ratio <= 1.3, "ratio " + num(ratio) + " at x=" + num(x));
            dev.push_back(std::abs(ratio - 1));
        }
        if (dev.size() == 4)
            o.require(dev[2] <= dev[1] && dev[3] <= dev[2], "|ratio-1| not nonincreasing over the last rungs");
        o.require(t.secs < 120, "took " + num(t.secs) + " s");
        o.info("ratios " + ratios + ", " + num(t.secs) + " s");
        return o;
    });

    report(3, "kernel mass", [&] {
        Outcome o;
        const auto& sc = runs.at("kernel_decay_probe").sc;
        const auto& P = sc.probe;
        o.require(P.pairs.size() == 6 && P.families.size() == 3, "probe is not 6 pairs x 3 families");
        double worst = 0;
        for (const auto& F : P.families)
            for (auto [lam, mu] : P.pairs) {
                const auto k = build_kernel(lam, F, sc.model.small, KillingSpec::exp_kill(mu), P.mass_grid, sc.quad);
                const double err = std::abs(k.measure.mass() - lam / (lam + mu));
                worst = std::max(worst, err);
                o.require(err < 1e-6, F.describe() + " lambda=" + num(lam) + " mu=" + num(mu) + " error " + num(err));
            }
        o.info("worst error " + num(worst));
        return o;
    });

    report(4, "convolution powers and Kesten bound", [&] {
        Outcome o;
        const auto& t = runs.at("kernel_decay_probe");
        const auto& P = t.sc.probe;
        const double xs = *std::max_element(P.probes.begin(), P.probes.end());
        std::string got;
        int seen = 0;
        for (const auto* r : rows(t.rep, "convolution")) {
            if (r->x != xs) continue;
            const int n = std::stoi(r->point.substr(2));
            ++seen;
            got += (got.empty() ? "" : ",") + num(r->value);
            o.require(std::abs(r->value - n) < 0.15 * n, "n=" + std::to_string(n) + " ratio " + num(r->value));
        }
        o.require(seen == 3, "expected n = 1, 2, 3 at x*");
        const auto k = rows(t.rep, "kesten");
        o.require(P.n_max == 5 && std::abs(P.kesten_eps - 0.2) < 1e-12, "Kesten check not at n<=5, eps=0.2");
        o.require(k.size() == 1 && k[0]->pass(), "Kesten bound violated");
        o.info("ratios at x*=" + num(xs) + ": " + got);
        return o;
    });

    report(5, "Neumann series tail constant", [&] {
        Outcome o;
        const auto& t = runs.at("kernel_decay_probe");
        const auto& P = t.sc.probe;
        const double xs = *std::max_element(P.probes.begin(), P.probes.end());
        std::string got;
        std::size_t i = 0;
        for (const auto* r : rows(t.rep, "neumann")) {
            if (r->x != xs) continue;
            if (i >= P.rhos.size()) break;
            const double rho = P.rhos[i++];
            const double ref = rho / (1 - rho);
            got += (got.empty() ? "" : ",") + num(r->value / ref);
            o.require(std::abs(r->value / ref - 1) <= 0.10, "rho=" + num(rho) + " ratio " + num(r->value / ref));
        }
        o.require(i == 3, "expected three rho values");
        o.info("tail/(rho/(1-rho)) " + got);
        return o;
    });

    report(6, "regime examples", [&] {
        Outcome o;
        const auto& q = runs.at("expkill_indicator_quadrant");
        const auto qp = rows(q.rep, "potential");
        const double target = q.sc.model.lambda / q.sc.model.kill.mu;
        if (qp.empty()) {
            o.require(false, "no quadrant ladder");
        } else {
            const auto* last = qp.back();
            o.require(std::abs(last->solver / target - 1) < 0.05,
                      "quadrant u at " + num(last->x) + " is " + num(last->solver) + ", target " + num(target));
            o.info("quadrant u(" + num(last->x) + ") " + num(last->solver) + " vs " + num(target));
        }
        const auto bp = rows(runs.at("expkill_indicator_ball").rep, "potential");
        bool dec = bp.size() >= 2;
        for (std::size_t i = 1; i < bp.size(); ++i) dec = dec && bp[i]->value < bp[i - 1]->value;
        o.require(dec, "ball u/F not strictly decreasing");
        const auto cr = rows(runs.at("consumption_utility").rep, "regime");
        o.require(cr.size() == 1 && cr[0]->point == "zero",
                  "consumption_utility classified " + (cr.empty() ? std::string("nothing") : cr[0]->point));
        o.info("ball decreasing over " + std::to_string(bp.size()) + " rungs, consumption zero");
        return o;
    });

    report(7, "comonotone quadrant ruin, direct vs compensation", [&] {
        Outcome o;
        std::vector<const Timed*> cfgs = {&runs.at("quadrant_ruin_2d")};
        std::vector<Timed> extra;
        extra.push_back(run_timed(quadrant_variant("quadrant_variant_a", {2.5, 2.0}, {0.3, 0.7}, 7001,
                                                   "[[1, 2], [4, 4], [8, 3]]")));
        extra.push_back(run_timed(quadrant_variant("quadrant_variant_b", {1.6, 1.5}, {0.6, 0.4}, 7002,
                                                   "[[0.5, 0.5], [3, 1], [6, 6]]")));
        for (const auto& e : extra) cfgs.push_back(&e);
        double total = 0, worst = 0;
        for (const auto* t : cfgs) {
            total += t->secs;
            o.require(t->sc.mc.n_paths >= 100000, t->sc.id + " uses fewer than 1e5 paths");
            o.require(t->sc.model.claims.structure() == ClaimModel::Structure::ComonotoneSplit,
                      t->sc.id + " is not comonotone");
            for (const auto* r : rows(t->rep, "quadrant_ruin")) {
                const double z = std::abs(r->mc - r->mc_alt) / combined(r->mc_se, r->mc_alt_se);
                worst = std::max(worst, z);
                o.require(z <= 3, t->sc.id + " at " + r->point + ": " + num(z) + " sigma");
            }
        }
        o.require(total < 120, "took " + num(total) + " s");
        o.info("worst " + num(worst) + " sigma, " + num(total) + " s for 3 configs");
        return o;
    });

    report(8, "duality", [&] {
        Outcome o;
        int seen = 0;
        for (const auto* r : rows(runs.at("cramer_lundberg_exp").rep, "ruin")) {
            if (r->x != 0 && r->x != 1 && r->x != 2) continue;
            ++seen;
            const double z = std::abs(r->mc - r->mc_alt) / combined(r->mc_se, r->mc_alt_se);
            o.require(z <= 3, "x=" + num(r->x) + ": " + num(z) + " sigma");
        }
        o.require(seen == 3, "expected x = 0, 1, 2");
        o.info("simulation and dual agree at x = 0, 1, 2");
        return o;
    });

    report(9, "fixed point vs Pollaczek-Khinchine sum", [&] {
        Outcome o;
        int checked = 0;
        std::string without;
        for (const auto& [id, t] : runs) {
            const auto fp = rows(t.rep, "fp_vs_pk");
            if (fp.empty()) without += (without.empty() ? "" : ",") + id;
            for (const auto* r : fp) {
                ++checked;
                const double bound = 2 * t.sc.solver_tol;
                o.require(r->value <= bound, id + " " + r->point + ": " + num(r->value) + " > " + num(bound));
            }
        }
        o.require(without.empty(), "builtins without a solver comparison: " + without);
        o.info(std::to_string(checked) + " solver pairs");
        return o;
    });

    report(10, "determinism across thread counts", [&] {
        Outcome o;
        std::string diff;
        for (const auto& b : list_scenarios()) {
            Overrides ov;
            if (builtin_config(b.id)->contains("mc")) ov.n_paths = 2000;
            const std::string one = run_timed(*builtin_config(b.id), ov, 1).rep.csv();
            const std::string two = run_timed(*builtin_config(b.id), ov, 2).rep.csv();
            const std::string three = run_timed(*builtin_config(b.id), ov, 3).rep.csv();
            if (one != two || one != three) diff += (diff.empty() ? "" : ",") + b.id;
        }
        const std::string full = run_timed(*builtin_config("cramer_lundberg_exp"), {}, 4).rep.csv();
        o.require(full == runs.at("cramer_lundberg_exp").rep.csv(), "cramer_lundberg_exp full run differs at 4 threads");
        o.require(diff.empty(), "CSV differs across thread counts: " + diff);
        o.info("all builtins byte-identical at 1, 2 and 3 threads");
        return o;
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
