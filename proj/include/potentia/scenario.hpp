#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "asymptotics.hpp"
#include "core.hpp"
#include "heavytail.hpp"
#include "kernels.hpp"
#include "payoff.hpp"
#include "potentials.hpp"
#include "renewal.hpp"
#include "simulator.hpp"

namespace potentia {

using Json = nlohmann::json;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Strict config reading
// ---------------------------------------------------------------------------

namespace config {

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

/// View of one JSON object. Every key that is read is remembered; `finish`
/// rejects the rest. Defaults are written back so that the object ends up
/// holding the fully resolved configuration.
class Node {
public:
    Node(Json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (j_->is_null()) *j_ = Json::object();
        if (!j_->is_object()) throw ConfigError(where() + ": expected an object");
    }

    const std::string& path() const { return path_; }
    std::string key_path(const std::string& k) const { return join(path_, k); }
    bool has(const std::string& k) const { return j_->contains(k); }

    double num(const std::string& k, std::optional<double> def = std::nullopt) {
        const Json& v = fetch(k, def ? Json(*def) : Json());
        if (!v.is_number()) throw ConfigError(key_path(k) + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(key_path(k) + ": expected a finite number");
        return d;
    }
    double positive(const std::string& k, std::optional<double> def = std::nullopt) {
        const double d = num(k, def);
        if (!(d > 0)) throw ConfigError(key_path(k) + ": must be > 0");
        return d;
    }
    std::uint64_t count(const std::string& k, std::optional<std::uint64_t> def = std::nullopt) {
        Json& v = const_cast<Json&>(fetch(k, def ? Json(*def) : Json()));
        // 1e6 is accepted as an integer; it is stored back as one.
        if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() && v.get<double>() >= 0 &&
            v.get<double>() < 9e15)
            v = static_cast<std::uint64_t>(v.get<double>());
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ConfigError(key_path(k) + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }
    bool flag(const std::string& k, bool def) {
        const Json& v = fetch(k, Json(def));
        if (!v.is_boolean()) throw ConfigError(key_path(k) + ": expected true or false");
        return v.get<bool>();
    }
    std::string str(const std::string& k, std::optional<std::string> def = std::nullopt,
                    const std::vector<std::string>& allowed = {}) {
        const Json& v = fetch(k, def ? Json(*def) : Json());
        if (!v.is_string()) throw ConfigError(key_path(k) + ": expected a string");
        std::string s = v.get<std::string>();
        if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
            std::string msg = key_path(k) + ": unknown value '" + s + "' (expected one of";
            for (const auto& a : allowed) msg += " " + a;
            throw ConfigError(msg + ")");
        }
        return s;
    }
    Vec vec(const std::string& k, std::optional<Vec> def = std::nullopt) {
        const Json& v = fetch(k, def ? Json(*def) : Json());
        if (!v.is_array()) throw ConfigError(key_path(k) + ": expected an array of numbers");
        Vec out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(key_path(k) + "[" + std::to_string(i) + "]: expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }
    Node child(const std::string& k) {
        seen_.insert(k);
        return Node((*j_)[k], key_path(k));
    }
    /// Elements of an array of objects.
    std::vector<Node> children(const std::string& k) {
        seen_.insert(k);
        Json& a = (*j_)[k];
        if (!a.is_array()) throw ConfigError(key_path(k) + ": expected an array of objects");
        std::vector<Node> out;
        for (std::size_t i = 0; i < a.size(); ++i) out.emplace_back(a[i], key_path(k) + "[" + std::to_string(i) + "]");
        return out;
    }
    Json& raw(const std::string& k) {
        seen_.insert(k);
        return (*j_)[k];
    }
    void erase(const std::string& k) {
        seen_.insert(k);
        j_->erase(k);
    }

    void finish() const {
        for (auto it = j_->begin(); it != j_->end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + key_path(it.key()) + "'");
    }

private:
    const Json& fetch(const std::string& k, const Json& def) {
        seen_.insert(k);
        if (!j_->contains(k)) {
            if (def.is_null()) throw ConfigError("missing key '" + key_path(k) + "'");
            (*j_)[k] = def;
        }
        return (*j_)[k];
    }
    std::string where() const { return path_.empty() ? "config" : path_; }

    Json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Runs a library constructor, turning its precondition failures into
// config errors that name the section.
template <class F>
auto guarded(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline TailModel read_law(Node n) {
    const std::string fam = n.str("family", std::nullopt, {"pareto", "exponential", "weibull", "lognormal", "empirical"});
    TailModel m = TailModel::exponential(1);
    if (fam == "pareto") {
        const double c = n.num("coeff", 1.0), a = n.num("index"), fl = n.num("floor", 1.0);
        m = guarded(n.path(), [&] { return TailModel::pareto(c, a, fl); });
    } else if (fam == "exponential") {
        const double r = n.num("rate"), fl = n.num("floor", 0.0);
        m = guarded(n.path(), [&] { return TailModel::exponential(r, fl); });
    } else if (fam == "weibull") {
        const double k = n.num("shape"), s = n.num("scale", 1.0), fl = n.num("floor", 0.0);
        m = guarded(n.path(), [&] { return TailModel::weibull(k, s, fl); });
    } else if (fam == "lognormal") {
        const double mu = n.num("mu", 0.0), s = n.num("sigma"), fl = n.num("floor", 0.0);
        m = guarded(n.path(), [&] { return TailModel::lognormal(mu, s, fl); });
    } else {
        Vec s = n.vec("samples");
        const double fl = n.num("floor", 0.0);
        m = guarded(n.path(), [&] { return TailModel::empirical(s, fl); });
    }
    n.finish();
    return m;
}

inline ClaimModel read_claims(Node n) {
    const std::string st = n.str("structure", "univariate", {"univariate", "product", "comonotone"});
    std::vector<TailModel> laws;
    for (auto& c : n.children("laws")) laws.push_back(read_law(c));
    if (laws.empty()) throw ConfigError(n.key_path("laws") + ": at least one law required");
    ClaimModel m = ClaimModel::univariate(laws[0]);
    if (st == "univariate") {
        if (laws.size() != 1) throw ConfigError(n.key_path("laws") + ": univariate claims take exactly one law");
    } else if (st == "product") {
        if (laws.size() < 2) throw ConfigError(n.key_path("laws") + ": product claims need >= 2 laws");
        m = ClaimModel::independent_product(laws);
    } else {
        if (laws.size() != 1) throw ConfigError(n.key_path("laws") + ": comonotone claims take exactly one driver law");
        Vec p = n.vec("proportions");
        m = guarded(n.key_path("proportions"), [&] { return ClaimModel::comonotone_split(laws[0], p); });
    }
    n.finish();
    return m;
}

inline SmallComponent read_small(Node n) {
    const std::string k =
        n.str("kind", "drift_only", {"drift_only", "drift_brownian", "drift_small_jumps", "ornstein_uhlenbeck"});
    Vec a = n.vec("drift");
    if (a.empty()) throw ConfigError(n.key_path("drift") + ": empty");
    SmallComponent s = SmallComponent::drift_only(a);
    if (k == "drift_brownian") s = SmallComponent::drift_brownian(a, n.positive("sigma"));
    if (k == "drift_small_jumps") s = SmallComponent::drift_small_jumps(a, n.num("jump_rate"), n.positive("jump_width"));
    if (k == "ornstein_uhlenbeck")
        s = SmallComponent::ornstein_uhlenbeck(a, n.num("ou_rate"), n.num("jump_rate"), n.positive("jump_width"));
    n.finish();
    return s;
}

inline KillingSpec read_kill(Node n) {
    const std::string k = n.str("kind", std::nullopt, {"exp_kill", "first_passage", "quadrant_exit"});
    KillingSpec s = KillingSpec::first_passage();
    if (k == "exp_kill") s = KillingSpec::exp_kill(n.positive("mu"));
    if (k == "quadrant_exit") s = KillingSpec::quadrant_exit();
    n.finish();
    return s;
}

inline PayoffFn read_payoff(Node n, const ClaimModel& claims) {
    const std::string k = n.str("kind", "constant",
                                {"constant", "claim_tail", "indicator_ball", "indicator_quadrant", "power_utility"});
    PayoffFn p;
    if (k == "constant") p = PayoffFn::constant(n.num("scale", 1.0));
    if (k == "claim_tail") p = PayoffFn::claim_tail(claims, n.num("scale", 1.0));
    if (k == "indicator_ball") {
        const double r = n.positive("radius"), s = n.num("scale", 1.0);
        Vec c = n.vec("center", Vec(claims.dimension(), 0.0));
        if (c.size() != claims.dimension()) throw ConfigError(n.key_path("center") + ": dimension mismatch");
        p = PayoffFn::indicator_ball(r, c, s);
    }
    if (k == "indicator_quadrant") {
        const double r = n.num("radius"), s = n.num("scale", 1.0);
        p = PayoffFn::indicator_quadrant(r, s);
    }
    if (k == "power_utility") {
        const double a = n.num("alpha"), w = n.num("withdrawal", 1.0);
        Vec pr = n.vec("proportions", Vec(claims.dimension(), 1.0 / static_cast<double>(claims.dimension())));
        if (pr.size() != claims.dimension()) throw ConfigError(n.key_path("proportions") + ": dimension mismatch");
        p = guarded(n.path(), [&] { return PayoffFn::power_utility(a, pr, w); });
    }
    n.finish();
    return p;
}

}  // namespace config

// ---------------------------------------------------------------------------
// Scenario description
// ---------------------------------------------------------------------------

struct Tolerances {
    double mc_sigmas = 3;
    double bias_proxy = 0.02;
    double fp_pk_factor = 2;
    double solver_exact_abs = 1e-3;
    double mc_solver_abs = 1e-3;   // solver discretization allowance in MC comparisons
    double mc_solver_rel = 0.01;
    double ratio_lo = 0.7, ratio_hi = 1.3;
    double limit_rel = 0.05;
    double path_rel = 0.15;
    double mass_abs = 1e-6;
    double convolution_rel = 0.15;
    double neumann_rel = 0.10;
};

struct PathSpec {
    std::string name;
    Vec coef{1, 1}, power{1, 1};
    std::string expect;

    Vec at(double t) const { return {coef[0] * std::pow(t, power[0]), coef[1] * std::pow(t, power[1])}; }
};

struct ProbeSpec {
    std::vector<std::pair<double, double>> pairs;  // (lambda, mu)
    std::vector<TailModel> families;
    Vec rhos{0.3, 0.5, 0.7};
    Vec probes{100, 200, 400};
    int n_max = 5;
    double kesten_eps = 0.2;
    double conv_rho = 0.5;
    Grid mass_grid, conv_grid, neumann_grid;
};

struct Scenario {
    std::string id, kind, description;
    RiskProcessSpec model;
    double step = 0.05, lower = 0, upper = 100;
    BoundaryRule boundary{};
    Vec report_x;
    QuadratureParams quad{};
    double solver_tol = 1e-10;
    McOptions mc{};
    std::vector<Vec> mc_x;
    Vec ladder;
    Vec direction;
    RegimeThresholds thresholds{};
    std::string expect_regime;
    bool expect_decreasing = false, expect_limit = false;
    std::vector<PathSpec> paths;
    std::optional<double> reinsurance_beta;
    ProbeSpec probe;
    Tolerances tol{};
    std::string output = "potentia_out";
    Json resolved;

    std::size_t dimension() const { return model.dimension(); }
    double mu() const { return model.kill.mu; }
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> n_paths;
    std::optional<std::string> output;
};

inline const std::vector<std::string>& scenario_kinds() {
    static const std::vector<std::string> k = {"ruin_1d", "expkill_potential", "quadrant_ruin", "path_asymptotics",
                                               "kernel_probe"};
    return k;
}

namespace config {

inline Vec read_ladder(Node n) {
    if (n.has("x")) {
        Vec x = n.vec("x");
        n.finish();
        return x;
    }
    const double x0 = n.positive("x0"), f = n.num("factor", 2.0);
    const auto r = n.count("rungs", 6);
    n.finish();
    if (!(f > 1)) throw ConfigError(n.key_path("factor") + ": must be > 1");
    return geometric_ladder(x0, f, r);
}

inline Boundary read_boundary(Node& n, const std::string& k, const std::string& def) {
    return n.str(k, def, {"zero", "hold"}) == "hold" ? Boundary::Hold : Boundary::Zero;
}

inline std::vector<Vec> read_points(Node& n, const std::string& k, std::size_t d) {
    Json& a = n.raw(k);
    if (a.is_null()) a = Json::array();
    if (!a.is_array()) throw ConfigError(n.key_path(k) + ": expected an array");
    std::vector<Vec> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string p = n.key_path(k) + "[" + std::to_string(i) + "]";
        if (a[i].is_number() && d == 1) {
            out.push_back({a[i].get<double>()});
            continue;
        }
        if (!a[i].is_array() || a[i].size() != d) throw ConfigError(p + ": expected a point of dimension " + std::to_string(d));
        Vec v;
        for (const auto& e : a[i]) {
            if (!e.is_number()) throw ConfigError(p + ": expected numbers");
            v.push_back(e.get<double>());
        }
        out.push_back(v);
    }
    return out;
}

inline Grid read_grid(Node n, double step, double lo, double hi) {
    const double s = n.positive("step", step), a = n.num("lower", lo), b = n.num("upper", hi);
    n.finish();
    return guarded(n.path(), [&] { return Grid::uniform(s, a, b); });
}

}  // namespace config

/// Parses and validates a scenario. Throws ConfigError naming the offending key.
inline Scenario parse_scenario(Json j, const Overrides& ov = {}) {
    using config::Node;
    if (!j.is_object()) throw ConfigError("config: expected a JSON object at the top level");
    if (ov.seed) j["mc"]["seed"] = *ov.seed;
    if (ov.n_paths) j["mc"]["n_paths"] = *ov.n_paths;
    if (ov.output) j["output"] = *ov.output;

    Scenario s;
    Node root(j, "");
    s.id = root.str("id");
    if (s.id.empty() || s.id.find_first_of("/\\ ,") != std::string::npos)
        throw ConfigError("id: must be non-empty without spaces, commas or slashes");
    s.kind = root.str("kind", std::nullopt, scenario_kinds());
    s.description = root.str("description", "");
    s.output = root.str("output", "potentia_out");

    {
        Node m = root.child("model");
        s.model.lambda = m.positive("lambda", 1.0);
        s.model.delta = m.positive("delta", 1.0);
        s.model.claims = config::read_claims(m.child("claims"));
        s.model.small = config::read_small(m.child("small"));
        s.model.kill = config::read_kill(m.child("kill"));
        if (m.has("payoff") || s.kind == "expkill_potential")
            s.model.payoff = config::read_payoff(m.child("payoff"), s.model.claims);
        m.finish();
        const std::size_t d = s.dimension();
        if (s.model.small.dimension() != d)
            throw ConfigError("model.small.drift: dimension " + std::to_string(s.model.small.dimension()) +
                              " does not match the claims dimension " + std::to_string(d));
        s.model.x = Vec(d, 0.0);
        config::guarded("model.small", [&] {
            s.model.small.validate(s.model.delta);
            return 0;
        });
    }
    const std::size_t d = s.dimension();
    const auto kk = s.model.kill.kind;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    if (s.kind == "ruin_1d") {
        need(d == 1, "model.claims: ruin_1d needs one-dimensional claims");
        need(kk == KillingSpec::Kind::FirstPassageRuin, "model.kill.kind: ruin_1d needs first_passage");
    } else if (s.kind == "quadrant_ruin") {
        need(d >= 2, "model.claims: quadrant_ruin needs at least two dimensions");
        need(kk == KillingSpec::Kind::QuadrantExit, "model.kill.kind: quadrant_ruin needs quadrant_exit");
        need(s.model.small.kind == SmallComponent::Kind::DriftOnly, "model.small.kind: quadrant_ruin needs drift_only");
    } else if (s.kind == "path_asymptotics") {
        need(d == 2, "model.claims: path_asymptotics needs two dimensions");
        need(s.model.claims.structure() != ClaimModel::Structure::Univariate, "model.claims.structure: product or comonotone required");
        need(kk == KillingSpec::Kind::ExpKill, "model.kill.kind: path_asymptotics needs exp_kill");
    } else {
        need(kk == KillingSpec::Kind::ExpKill, "model.kill.kind: " + s.kind + " needs exp_kill");
        if (s.kind == "kernel_probe") need(d == 1, "model.claims: kernel_probe needs one-dimensional claims");
    }

    const bool has_grid = s.kind != "kernel_probe";
    if (has_grid) {
        Node g = root.child("grid");
        s.step = g.positive("step", 0.05);
        const double lo_def = (s.kind == "ruin_1d" || s.kind == "quadrant_ruin") ? 0.0 : -20.0;
        s.lower = g.num("lower", lo_def);
        s.upper = g.num("upper", 100.0);
        if (s.kind == "ruin_1d" || s.kind == "quadrant_ruin")
            need(s.lower == 0, g.key_path("lower") + ": ruin grids start at 0");
        need(s.upper > s.lower + 2 * s.step, g.key_path("upper") + ": must exceed lower by at least two steps");
        if (s.kind == "expkill_potential" || s.kind == "path_asymptotics") {
            s.boundary.lower = config::read_boundary(g, "lower_boundary", "zero");
            s.boundary.upper = config::read_boundary(g, "upper_boundary", "hold");
        }
        if (s.kind == "path_asymptotics") s.report_x = g.vec("report_x", Vec{});
        g.finish();
    }
    {
        Node q = root.child("quadrature");
        s.quad.t_max_factor = q.positive("t_max_factor", 40.0);
        s.quad.panels = static_cast<int>(q.count("panels", 4096));
        need(s.quad.panels >= 2, "quadrature.panels: must be >= 2");
        q.finish();
        Node sv = root.child("solver");
        s.solver_tol = sv.positive("tol", 1e-10);
        sv.finish();
    }
    if (s.kind != "path_asymptotics" && s.kind != "kernel_probe") {
        Node m = root.child("mc");
        s.mc.n_paths = m.count("n_paths", 100000);
        s.mc.seed = m.count("seed", 1);
        s.mc.horizon = m.num("horizon", 0.0);
        s.mc.step = m.positive("step", 0.05);
        need(s.mc.horizon >= 0, "mc.horizon: must be >= 0 (0 selects it automatically)");
        s.mc_x = config::read_points(m, "x", d);
        m.finish();
        need(s.mc.n_paths == 0 || s.mc.n_paths >= 100, "mc.n_paths: use 0 to disable or at least 100");
    }
    if (s.kind == "ruin_1d" || s.kind == "expkill_potential" || s.kind == "path_asymptotics") {
        if (root.has("ladder") || s.kind != "ruin_1d") s.ladder = config::read_ladder(root.child("ladder"));
    }
    if (s.kind == "expkill_potential") {
        s.direction = root.vec("direction", Vec(d, 1.0));
        need(s.direction.size() == d, "direction: dimension mismatch");
        for (double v : s.direction) need(v > 0, "direction: components must be > 0");
        Node e = root.child("expect");
        s.expect_regime = e.str("regime", "", {"", "zero", "finite", "infinite"});
        s.expect_decreasing = e.flag("decreasing", false);
        s.expect_limit = e.flag("limit", false);
        e.finish();
    }
    if (s.kind == "expkill_potential" || s.kind == "path_asymptotics") {
        Node t = root.child("thresholds");
        s.thresholds.infinite_above = t.positive("infinite_above", 1e3);
        s.thresholds.zero_below = t.positive("zero_below", 1e-3);
        s.thresholds.stable_tol = t.positive("stable_tol", 0.05);
        t.finish();
    }
    if (s.kind == "path_asymptotics") {
        for (auto& p : root.children("paths")) {
            PathSpec ps;
            ps.name = p.str("name");
            ps.coef = p.vec("coef", Vec{1, 1});
            ps.power = p.vec("power", Vec{1, 1});
            ps.expect = p.str("expect", "");
            p.finish();
            need(ps.coef.size() == 2 && ps.power.size() == 2, p.path() + ": coef and power need two entries");
            need(ps.coef[0] > 0 && ps.coef[1] > 0 && ps.power[0] > 0 && ps.power[1] > 0,
                 p.path() + ": coef and power must be > 0");
            s.paths.push_back(ps);
        }
        need(!s.paths.empty(), "paths: at least one path required");
    }
    if (s.kind == "quadrant_ruin" && root.has("reinsurance")) {
        Node r = root.child("reinsurance");
        s.reinsurance_beta = r.num("beta");
        r.finish();
        const auto& cm = s.model.claims;
        need(d == 2 && cm.structure() == ClaimModel::Structure::ComonotoneSplit &&
                 std::abs(cm.proportions()[0] - *s.reinsurance_beta) < 1e-12,
             "reinsurance.beta: needs comonotone claims with proportions (beta, 1 - beta)");
    }
    if (s.kind == "kernel_probe") {
        Node p = root.child("probe");
        Json& pairs = p.raw("pairs");
        if (!pairs.is_array() || pairs.empty()) throw ConfigError("probe.pairs: expected a non-empty array of [lambda, mu]");
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& e = pairs[i];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number() || !(e[0].get<double>() > 0) ||
                !(e[1].get<double>() > 0))
                throw ConfigError("probe.pairs[" + std::to_string(i) + "]: expected [lambda > 0, mu > 0]");
            s.probe.pairs.emplace_back(e[0].get<double>(), e[1].get<double>());
        }
        for (auto& c : p.children("families")) s.probe.families.push_back(config::read_law(c));
        need(!s.probe.families.empty(), "probe.families: at least one law required");
        s.probe.rhos = p.vec("rhos", s.probe.rhos);
        for (double r : s.probe.rhos) need(r > 0 && r < 1, "probe.rhos: values must be in (0,1)");
        s.probe.probes = p.vec("probes", s.probe.probes);
        need(!s.probe.probes.empty(), "probe.probes: at least one probe required");
        s.probe.n_max = static_cast<int>(p.count("n_max", 5));
        need(s.probe.n_max >= 3, "probe.n_max: must be >= 3");
        s.probe.kesten_eps = p.positive("kesten_eps", 0.2);
        s.probe.conv_rho = p.num("conv_rho", 0.5);
        need(s.probe.conv_rho > 0 && s.probe.conv_rho < 1, "probe.conv_rho: must be in (0,1)");
        s.probe.mass_grid = config::read_grid(p.child("mass_grid"), 0.25, -40, 60);
        s.probe.conv_grid = config::read_grid(p.child("conv_grid"), 0.25, -60, 2000);
        s.probe.neumann_grid = config::read_grid(p.child("neumann_grid"), 0.5, -40, 600);
        p.finish();
        const double pmax = *std::max_element(s.probe.probes.begin(), s.probe.probes.end());
        need(pmax < s.probe.conv_grid.x_max() && pmax < s.probe.neumann_grid.x_max(),
             "probe.probes: largest probe must lie inside conv_grid and neumann_grid");
        need(std::get_if<family::Pareto>(&s.model.claims.laws()[0].family()) != nullptr,
             "model.claims.laws[0]: kernel_probe convolution checks need a pareto law");
    }
    {
        Node t = root.child("tolerances");
        auto& T = s.tol;
        T.mc_sigmas = t.positive("mc_sigmas", T.mc_sigmas);
        T.bias_proxy = t.positive("bias_proxy", T.bias_proxy);
        T.fp_pk_factor = t.positive("fp_pk_factor", T.fp_pk_factor);
        T.solver_exact_abs = t.positive("solver_exact_abs", T.solver_exact_abs);
        T.mc_solver_abs = t.positive("mc_solver_abs", T.mc_solver_abs);
        T.mc_solver_rel = t.positive("mc_solver_rel", T.mc_solver_rel);
        T.ratio_lo = t.positive("ratio_lo", T.ratio_lo);
        T.ratio_hi = t.positive("ratio_hi", T.ratio_hi);
        T.limit_rel = t.positive("limit_rel", T.limit_rel);
        T.path_rel = t.positive("path_rel", T.path_rel);
        T.mass_abs = t.positive("mass_abs", T.mass_abs);
        T.convolution_rel = t.positive("convolution_rel", T.convolution_rel);
        T.neumann_rel = t.positive("neumann_rel", T.neumann_rel);
        t.finish();
        need(T.ratio_lo < 1 && T.ratio_hi > 1, "tolerances: ratio_lo < 1 < ratio_hi required");
    }
    root.finish();

    // Points handed to grid-based solvers must lie on the grid.
    auto inside = [&](double x, const std::string& what) {
        need(x >= s.lower && x <= s.upper, what + ": " + detail::fmt_short(x) + " lies outside the grid [" +
                                               detail::fmt_short(s.lower) + ", " + detail::fmt_short(s.upper) + "]");
    };
    if (s.kind == "ruin_1d" || (s.kind == "expkill_potential" && d == 1)) {
        for (double x : s.ladder) inside(x, "ladder");
        for (const auto& x : s.mc_x) inside(x[0], "mc.x");
    }
    if (s.kind == "quadrant_ruin" || s.kind == "expkill_potential")
        for (const auto& x : s.mc_x)
            for (double v : x) inside(v, "mc.x");
    for (double x : s.report_x) inside(x, "grid.report_x");
    // Where the report goes does not change it.
    j.erase("output");
    s.resolved = std::move(j);
    return s;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Comparison report
// ---------------------------------------------------------------------------

struct ReportRow {
    std::string label;
    double x = kNaN;
    std::string point;
    double prediction = kNaN, solver = kNaN, solver_pk = kNaN, mc = kNaN, mc_se = kNaN, mc_alt = kNaN,
           mc_alt_se = kNaN, exact = kNaN, ratio_solver = kNaN, ratio_mc = kNaN, bias_proxy = kNaN, value = kNaN,
           limit = kNaN;
    std::vector<std::string> reasons;

    bool pass() const { return reasons.empty(); }
    void fail(const std::string& code) {
        if (std::find(reasons.begin(), reasons.end(), code) == reasons.end()) reasons.push_back(code);
    }
};

inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> c = {"label",  "x",          "point",        "prediction", "solver",
                                               "solver_pk", "mc",      "mc_se",        "mc_alt",     "mc_alt_se",
                                               "exact",  "ratio_solver", "ratio_mc",   "bias_proxy", "value",
                                               "limit",  "pass",       "reason"};
    return c;
}

/// Failure codes that mean the numbers themselves cannot be trusted.
inline bool is_validity_reason(const std::string& r) { return r == "lost_mass" || r == "bias_proxy"; }

struct Report {
    std::string id;
    std::string config;  // resolved config, compact JSON
    std::vector<ReportRow> rows;
    std::vector<std::string> notes;

    ReportRow& add(ReportRow r) {
        rows.push_back(std::move(r));
        return rows.back();
    }

    /// 0 pass, 1 tolerance failure, 3 numerical-validity failure.
    int status() const {
        bool tol = false, validity = false;
        for (const auto& r : rows)
            for (const auto& c : r.reasons) (is_validity_reason(c) ? validity : tol) = true;
        return validity ? 3 : (tol ? 1 : 0);
    }
    std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.pass(); }));
    }

    void write_csv(std::ostream& os) const {
        os << "# potentia-csv v1\n# config: " << config << '\n';
        for (const auto& n : notes) os << "# note: " << n << '\n';
        const auto& cols = report_columns();
        for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
        os << '\n';
        using detail::fmt;
        for (const auto& r : rows) {
            std::string reason;
            for (const auto& c : r.reasons) reason += (reason.empty() ? "" : "|") + c;
            os << r.label << ',' << fmt(r.x) << ',' << r.point << ',' << fmt(r.prediction) << ',' << fmt(r.solver)
               << ',' << fmt(r.solver_pk) << ',' << fmt(r.mc) << ',' << fmt(r.mc_se) << ',' << fmt(r.mc_alt) << ','
               << fmt(r.mc_alt_se) << ',' << fmt(r.exact) << ',' << fmt(r.ratio_solver) << ',' << fmt(r.ratio_mc)
               << ',' << fmt(r.bias_proxy) << ',' << fmt(r.value) << ',' << fmt(r.limit) << ','
               << (r.pass() ? 1 : 0) << ',' << reason << '\n';
        }
    }
    std::string csv() const {
        std::ostringstream os;
        write_csv(os);
        return os.str();
    }
};

// ---------------------------------------------------------------------------
// Scenario runners
// ---------------------------------------------------------------------------

namespace detail {

inline std::string point_str(const Vec& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ";" : "") + fmt_short(x[i], 10);
    return s;
}

/// Law of the i-th claim coordinate as a one-dimensional model.
inline TailModel marginal_law(const ClaimModel& c, std::size_t i) {
    switch (c.structure()) {
        case ClaimModel::Structure::Univariate: return c.laws()[0];
        case ClaimModel::Structure::IndependentProduct: return c.laws().at(i);
        case ClaimModel::Structure::ComonotoneSplit: break;
    }
    const TailModel& H = c.laws()[0];
    const double p = c.proportions().at(i), fl = p * H.floor();
    return std::visit(
        [&](const auto& f) -> TailModel {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, family::Pareto>)
                return TailModel::pareto(f.coeff * std::pow(p, 1 + f.index), f.index, fl);
            else if constexpr (std::is_same_v<T, family::Exponential>)
                return TailModel::exponential(f.rate / p, fl);
            else if constexpr (std::is_same_v<T, family::Weibull>)
                return TailModel::weibull(f.shape, f.scale * p, fl);
            else if constexpr (std::is_same_v<T, family::Lognormal>)
                return TailModel::lognormal(f.mu + std::log(p), f.sigma, fl);
            else {
                std::vector<double> s = f.sorted;
                for (double& v : s) v *= p;
                return TailModel::empirical(std::move(s), fl);
            }
        },
        H.family());
}

struct SolvedPair {
    RenewalSolution fp, pk;
};

// Both solvers on one problem, with the agreement and validity row.
inline SolvedPair solve_both(const RenewalProblem& p, const Scenario& s, Report& rep, const std::string& what) {
    SolvedPair r{solve_fixed_point(p, s.solver_tol), solve_pk_series(p, -1, s.solver_tol)};
    ReportRow row;
    row.label = "fp_vs_pk";
    row.point = what;
    double diff = 0;
    for (std::size_t i = 0; i < r.fp.u.size(); ++i) diff = std::max(diff, std::abs(r.fp.u[i] - r.pk.u[i]));
    row.value = diff;
    row.limit = s.tol.fp_pk_factor * s.solver_tol;
    row.bias_proxy = std::max(r.fp.indeterminate_mass, r.pk.indeterminate_mass);
    if (!(diff <= row.limit)) row.fail("fp_vs_pk");
    if (!r.fp.valid || !r.pk.valid || p.kernel.lost > 1e-6 * p.kernel.mass()) row.fail("lost_mass");
    rep.add(row);
    return r;
}

inline RiskProcessSpec marginal_spec(const Scenario& s, std::size_t i) {
    RiskProcessSpec m = s.model;
    m.claims = ClaimModel::univariate(marginal_law(s.model.claims, i));
    m.small.drift = {s.model.small.drift.at(i)};
    m.x = {0.0};
    return m;
}

inline bool solver_supported(const SmallComponent& sm) {
    return sm.kind == SmallComponent::Kind::DriftOnly || sm.kind == SmallComponent::Kind::DriftBrownian;
}

inline void check_bias(ReportRow& r, const EstimateCI& e, const Scenario& s) {
    r.bias_proxy = e.bias_proxy;
    if (e.bias_proxy > s.tol.bias_proxy) r.fail("bias_proxy");
}

inline McOptions mc_options(const Scenario& s, unsigned threads) {
    McOptions o = s.mc;
    o.threads = threads;
    return o;
}

// ruin_1d ------------------------------------------------------------------

inline void run_ruin_1d(const Scenario& s, Report& rep, unsigned threads) {
    const auto& F = s.model.claims.laws()[0];
    const double lambda = s.model.lambda, a = s.model.small.drift[0];
    s.model.validate();
    const IntegratedTail FI(F);
    const double rho = lambda * FI.source_mean() / a;
    const bool drift_only = s.model.small.kind == SmallComponent::Kind::DriftOnly;

    std::optional<SolvedPair> sol;
    if (drift_only) {
        sol = solve_both(ruin_problem(FI, rho, s.step, s.upper), s, rep, "ruin");
    } else {
        rep.notes.push_back("renewal solver skipped: the ladder-height form needs a drift-only small component");
    }

    // Exponential claims without a floor have a closed form.
    std::function<double(double)> exact;
    if (const auto* e = std::get_if<family::Exponential>(&F.family()); e && F.floor() == 0 && drift_only) {
        const double beta = e->rate;
        exact = [=](double x) { return lambda / (a * beta) * std::exp(-(beta - lambda / a) * x); };
    }
    if (sol && exact) {
        ReportRow r;
        r.label = "solver_vs_exact";
        r.point = "grid";
        double err = 0;
        for (std::size_t i = 0; i < sol->fp.u.size(); ++i)
            err = std::max(err, std::abs(sol->fp.u[i] - exact(sol->fp.grid.at(i))));
        r.value = err;
        r.limit = s.tol.solver_exact_abs;
        if (!(err < r.limit)) r.fail("solver_vs_exact");
        rep.add(r);
    }

    const AsymptoticPrediction pred = predict_ruin(rho, FI);
    if (!pred.quantitative) rep.notes.push_back(pred.note);

    if (s.mc.n_paths > 0 && !s.mc_x.empty()) {
        Vec xs;
        for (const auto& p : s.mc_x) xs.push_back(p[0]);
        const McOptions o = mc_options(s, threads);
        const auto mc = estimate_ruin_1d(s.model, xs, o);
        std::vector<EstimateCI> dual;
        if (drift_only) dual = estimate_ruin_dual(lambda, a, F, xs, o);
        for (std::size_t k = 0; k < xs.size(); ++k) {
            ReportRow r;
            r.label = "ruin";
            r.x = xs[k];
            r.point = point_str({xs[k]});
            r.mc = mc[k].estimate;
            r.mc_se = mc[k].std_error;
            check_bias(r, mc[k], s);
            if (sol) {
                r.solver = sol->fp.at(xs[k]);
                r.solver_pk = sol->pk.at(xs[k]);
            }
            if (pred.quantitative) {
                r.prediction = pred(xs[k]);
                r.ratio_mc = r.mc / r.prediction;
            }
            if (exact) {
                r.exact = exact(xs[k]);
                if (!mc[k].within(r.exact, s.tol.mc_sigmas)) r.fail("mc_vs_exact");
            } else if (sol) {
                if (!mc[k].within(r.solver, s.tol.mc_sigmas, s.tol.mc_solver_abs + s.tol.mc_solver_rel * r.solver))
                    r.fail("mc_vs_solver");
            }
            if (!dual.empty()) {
                r.mc_alt = dual[k].estimate;
                r.mc_alt_se = dual[k].std_error;
                if (std::abs(r.mc - r.mc_alt) > s.tol.mc_sigmas * combined_sigma(mc[k], dual[k])) r.fail("dual_vs_mc");
            }
            rep.add(r);
        }
    }

    if (!s.ladder.empty() && sol) {
        std::vector<std::size_t> idx;
        Vec ratios;
        for (double x : s.ladder) {
            ReportRow r;
            r.label = "ruin_asymptotic";
            r.x = x;
            r.point = point_str({x});
            r.solver = sol->fp.at(x);
            r.solver_pk = sol->pk.at(x);
            r.value = FI.tail(x);
            if (pred.quantitative) {
                r.prediction = pred(x);
                r.ratio_solver = r.solver / r.prediction;
                r.limit = 1.0;
                if (!(r.ratio_solver >= s.tol.ratio_lo && r.ratio_solver <= s.tol.ratio_hi)) r.fail("ratio_gate");
                ratios.push_back(r.ratio_solver);
            }
            idx.push_back(rep.rows.size());
            rep.add(r);
        }
        // |ratio - 1| nonincreasing over the last three rungs.
        const std::size_t n = ratios.size();
        for (std::size_t i = n >= 3 ? n - 2 : 1; i < n; ++i)
            if (std::abs(ratios[i] - 1) > std::abs(ratios[i - 1] - 1)) rep.rows[idx[i]].fail("ratio_gate");
    }
}

// expkill_potential ---------------------------------------------------------

inline const char* regime_code(Regime::Kind k) {
    switch (k) {
        case Regime::Kind::Zero: return "zero";
        case Regime::Kind::Finite: return "finite";
        case Regime::Kind::Infinite: return "infinite";
        case Regime::Kind::Inconclusive: return "inconclusive";
    }
    return "";
}

inline void run_expkill(const Scenario& s, Report& rep, unsigned threads) {
    const std::size_t d = s.dimension();
    const auto& M = s.model;
    const double lambda = M.lambda, mu = s.mu(), rho = lambda / (lambda + mu);
    M.validate();
    auto along = [&](double t) {
        Vec x(d);
        for (std::size_t i = 0; i < d; ++i) x[i] = t * s.direction[i];
        return x;
    };
    auto tail_fn = [&](double t) { return M.claims.joint_tail(along(t)); };
    auto payoff_fn = [&](double t) {
        const Vec x = along(t);
        return M.payoff(std::span<const double>(x));
    };

    const Regime regime = classify_regime(M.payoff, M.claims, s.direction, s.ladder, s.thresholds);
    {
        ReportRow r;
        r.label = "regime";
        r.point = regime_code(regime.kind);
        r.value = regime.kind == Regime::Kind::Finite ? regime.B : kNaN;
        if (!s.expect_regime.empty() && s.expect_regime != regime_code(regime.kind)) r.fail("regime");
        rep.add(r);
        for (std::size_t i = 0; i < regime.ladder.size(); ++i) {
            ReportRow l;
            l.label = "regime_ladder";
            l.x = regime.ladder[i];
            l.point = point_str(along(regime.ladder[i]));
            l.value = regime.ratios[i];
            rep.add(l);
        }
        rep.notes.push_back("regime evidence: " + regime.evidence);
    }
    std::optional<AsymptoticPrediction> pred;
    if (regime.kind != Regime::Kind::Inconclusive) {
        pred = predict_potential(regime, rho, lambda, tail_fn, payoff_fn);
        if (!pred->quantitative) rep.notes.push_back(pred->note);
    }
    const bool quantitative = pred && pred->quantitative;

    std::optional<SolvedPair> sol;
    if (d == 1 && solver_supported(M.small)) {
        sol = solve_both(expkill_potential_problem(lambda, M.claims.laws()[0], M.small, mu, M.payoff, s.step, s.lower,
                                                   s.upper, s.boundary, s.quad),
                         s, rep, "potential");
    } else if (d == 1) {
        rep.notes.push_back("renewal solver skipped: kernel quadrature supports drift_only and drift_brownian");
    }

    if (sol) {
        std::vector<std::size_t> idx;
        for (double t : s.ladder) {
            const double x = t * s.direction[0];
            ReportRow r;
            r.label = "potential";
            r.x = x;
            r.point = point_str({x});
            r.solver = sol->fp.at(x);
            r.solver_pk = sol->pk.at(x);
            r.value = r.solver / M.claims.joint_tail(Vec{x});
            if (quantitative) {
                r.prediction = (*pred)(t);
                r.ratio_solver = r.solver / r.prediction;
                r.limit = 1.0;
            }
            idx.push_back(rep.rows.size());
            rep.add(r);
        }
        if (s.expect_decreasing)
            for (std::size_t i = 1; i < idx.size(); ++i)
                if (!(rep.rows[idx[i]].value < rep.rows[idx[i - 1]].value)) rep.rows[idx[i]].fail("not_decreasing");
        if (s.expect_limit && !idx.empty()) {
            auto& last = rep.rows[idx.back()];
            if (!quantitative) last.fail("limit");
            else if (!(std::abs(last.ratio_solver - 1) <= s.tol.limit_rel)) last.fail("limit");
        }
    }

    // Lower bound from one coordinate of a separable-from-below payoff.
    std::vector<SolvedPair> marginal;
    if (d > 1 && M.payoff.kind == PayoffFn::Kind::PowerUtility && solver_supported(M.small)) {
        for (std::size_t i = 0; i < d; ++i) {
            const RiskProcessSpec mi = marginal_spec(s, i);
            const PayoffFn li = PayoffFn::power_utility(M.payoff.alpha, {M.payoff.proportions[i]}, M.payoff.withdrawal);
            marginal.push_back(solve_both(expkill_potential_problem(lambda, mi.claims.laws()[0], mi.small, mu, li, s.step,
                                                                    s.lower, s.upper, s.boundary, s.quad),
                                          s, rep, "marginal_potential_" + std::to_string(i)));
        }
    }

    if (s.mc.n_paths > 0 && !s.mc_x.empty()) {
        const auto mc = estimate_potential_expkill(M, s.mc_x, mc_options(s, threads));
        for (std::size_t k = 0; k < s.mc_x.size(); ++k) {
            const Vec& x = s.mc_x[k];
            ReportRow r;
            r.label = "potential_mc";
            r.x = x[0];
            r.point = point_str(x);
            r.mc = mc[k].estimate;
            r.mc_se = mc[k].std_error;
            if (sol) {
                r.solver = sol->fp.at(x[0]);
                r.solver_pk = sol->pk.at(x[0]);
                if (!mc[k].within(r.solver, s.tol.mc_sigmas, s.tol.mc_solver_abs + s.tol.mc_solver_rel * r.solver))
                    r.fail("mc_vs_solver");
            }
            if (!marginal.empty()) {
                double lb = 0;
                for (std::size_t i = 0; i < d; ++i) lb = std::max(lb, marginal[i].fp.at(x[i]));
                r.solver = lb;
                r.limit = lb;
                if (r.mc + s.tol.mc_sigmas * r.mc_se + s.tol.mc_solver_abs < lb) r.fail("marginal_bound");
            }
            bool on_ray = true;
            for (std::size_t i = 1; i < d; ++i)
                on_ray = on_ray && std::abs(x[i] * s.direction[0] - x[0] * s.direction[i]) < 1e-12 * (1 + std::abs(x[0]));
            if (quantitative && on_ray && x[0] > 0) {
                r.prediction = (*pred)(x[0] / s.direction[0]);
                r.ratio_mc = r.mc / r.prediction;
            }
            rep.add(r);
        }
    }
}

// quadrant_ruin --------------------------------------------------------------

inline void run_quadrant(const Scenario& s, Report& rep, unsigned threads) {
    const std::size_t d = s.dimension();
    const auto& M = s.model;
    M.validate();
    std::vector<SolvedPair> marginal;
    for (std::size_t i = 0; i < d; ++i) {
        const TailModel Fi = marginal_law(M.claims, i);
        const IntegratedTail FI(Fi);
        const double rho = M.lambda * FI.source_mean() / M.small.drift[i];
        marginal.push_back(solve_both(ruin_problem(FI, rho, s.step, s.upper), s, rep, "marginal_ruin_" + std::to_string(i)));
    }
    std::optional<Vec> pred;
    if (s.reinsurance_beta) {
        Vec v;
        for (const auto& x : s.mc_x) {
            try {
                const auto r = predict_prop_reinsurance(M.claims.laws()[0], M.small.drift[0], M.small.drift[1], M.lambda,
                                                        *s.reinsurance_beta, x);
                v.push_back(r.value);
                if (&x == &s.mc_x.front()) {
                    rep.notes.push_back("strong subexponential ratio " + fmt_short(r.strong_subexp_ratio) +
                                        (r.strong_subexp_ok ? " (ok)" : " (outside 20%)"));
                    rep.notes.push_back("reinsurance drifts c1=" + fmt_short(r.c1) + " c2=" + fmt_short(r.c2));
                }
            } catch (const std::invalid_argument& e) {
                v.push_back(kNaN);
                rep.notes.push_back("no reinsurance prediction at " + point_str(x) + ": " + e.what());
            }
        }
        pred = v;
    }
    if (s.mc.n_paths == 0 || s.mc_x.empty()) return;
    const auto q = estimate_quadrant_ruin(M, s.mc_x, mc_options(s, threads));
    rep.notes.push_back("mc horizon " + fmt_short(q.horizon));
    for (std::size_t k = 0; k < s.mc_x.size(); ++k) {
        const Vec& x = s.mc_x[k];
        ReportRow r;
        r.label = "quadrant_ruin";
        r.x = x[0];
        r.point = point_str(x);
        r.mc = q.direct[k].estimate;
        r.mc_se = q.direct[k].std_error;
        r.mc_alt = q.compensation[k].estimate;
        r.mc_alt_se = q.compensation[k].std_error;
        check_bias(r, q.direct[k], s);
        if (std::abs(r.mc - r.mc_alt) > s.tol.mc_sigmas * combined_sigma(q.direct[k], q.compensation[k]))
            r.fail("direct_vs_compensation");
        double lb = 0, lb_pk = 0;
        for (std::size_t i = 0; i < d; ++i) {
            lb = std::max(lb, marginal[i].fp.at(x[i]));
            lb_pk = std::max(lb_pk, marginal[i].pk.at(x[i]));
        }
        r.solver = lb;
        r.solver_pk = lb_pk;
        r.limit = lb;
        if (r.mc + s.tol.mc_sigmas * r.mc_se + s.tol.mc_solver_abs < lb) r.fail("marginal_bound");
        if (pred) {
            r.prediction = (*pred)[k];
            r.ratio_mc = r.mc / r.prediction;
        }
        rep.add(r);
    }
}

// path_asymptotics ------------------------------------------------------------

inline void run_paths(const Scenario& s, Report& rep) {
    const auto& M = s.model;
    const bool product = M.claims.structure() == ClaimModel::Structure::IndependentProduct;
    for (const auto& ps : s.paths) {
        auto path = [ps](double t) { return ps.at(t); };
        PathPrediction p = product ? predict_2d_product(M.claims.laws()[0], M.claims.laws()[1], path, s.ladder, s.thresholds)
                                   : predict_comonotone(M.claims.laws()[0], M.claims.proportions()[0], path, s.ladder.back());
        ReportRow c;
        c.label = "path_case";
        c.point = ps.name + ":" + p.tag;
        c.value = p.case_id;
        if (!ps.expect.empty() && ps.expect != p.tag) c.fail("regime");
        if (p.case_id == 0) c.fail("regime");
        rep.add(c);
        if (p.case_id == 0) continue;
        for (std::size_t i = 0; i < s.ladder.size(); ++i) {
            const double t = s.ladder[i];
            const Vec x = ps.at(t);
            ReportRow r;
            r.label = "path:" + ps.name;
            r.x = t;
            r.point = point_str(x);
            r.exact = M.claims.joint_tail(x);
            r.prediction = p.value(t);
            r.value = r.exact / r.prediction;
            r.limit = 1.0;
            if (i + 1 == s.ladder.size() && !(std::abs(r.value - 1) <= s.tol.path_rel)) r.fail("path_prediction");
            rep.add(r);
        }
    }
    // One-dimensional potentials of lambda times each marginal claim tail.
    const double lambda = M.lambda, mu = s.mu(), rho = lambda / (lambda + mu);
    if (!solver_supported(M.small)) {
        rep.notes.push_back("marginal solver skipped: unsupported small component");
        return;
    }
    for (std::size_t i = 0; i < 2; ++i) {
        const RiskProcessSpec mi = marginal_spec(s, i);
        const TailModel& Fi = mi.claims.laws()[0];
        const PayoffFn li = PayoffFn::claim_tail(mi.claims, lambda);
        const auto sol = solve_both(
            expkill_potential_problem(lambda, Fi, mi.small, mu, li, s.step, s.lower, s.upper, s.boundary, s.quad), s, rep,
            "marginal_potential_" + std::to_string(i));
        Regime fin;
        fin.kind = Regime::Kind::Finite;
        fin.B = lambda;
        const auto pred = predict_potential(fin, rho, lambda, [Fi](double x) { return Fi.tail(x); },
                                            [li](double x) { return li(x); });
        for (double x : s.report_x) {
            ReportRow r;
            r.label = "marginal_potential_" + std::to_string(i);
            r.x = x;
            r.point = point_str({x});
            r.solver = sol.fp.at(x);
            r.solver_pk = sol.pk.at(x);
            r.prediction = pred(x);
            r.ratio_solver = r.solver / r.prediction;
            rep.add(r);
        }
    }
}

// kernel_probe ----------------------------------------------------------------

inline void run_probe(const Scenario& s, Report& rep) {
    const auto& M = s.model;
    const auto& P = s.probe;
    for (const auto& F : P.families)
        for (auto [lam, mu] : P.pairs) {
            const auto k = build_kernel(lam, F, M.small, KillingSpec::exp_kill(mu), P.mass_grid, s.quad);
            ReportRow r;
            r.label = "mass";
            r.x = mu;
            r.point = F.describe() + ";lambda=" + fmt_short(lam) + ";mu=" + fmt_short(mu);
            r.value = k.measure.mass();
            r.limit = lam / (lam + mu);
            if (!(std::abs(r.value - r.limit) < s.tol.mass_abs)) r.fail("mass");
            if (k.measure.lost > s.tol.mass_abs) r.fail("lost_mass");
            rep.add(r);
        }

    // Exponential decay of the small component at the claim epoch.
    if (M.small.kind == SmallComponent::Kind::DriftBrownian || M.small.kind == SmallComponent::Kind::DriftOnly) {
        const double mu = M.lambda * (1 - P.conv_rho) / P.conv_rho;
        const KillingSpec kill = KillingSpec::exp_kill(mu);
        const double a = M.small.drift[0], c = M.lambda + mu;
        Vec w, q;
        const double sgn = a >= 0 ? 1.0 : -1.0;
        for (int i = 0; i <= 400; ++i) {
            w.push_back(sgn * 0.05 * i);
            q.push_back(q_function(M.lambda, M.small, kill, w.back()));
        }
        ReportRow r;
        r.label = "decay";
        r.point = M.small.name();
        r.value = decay_rate_fit(w, q, 2, 18).theta;
        if (M.small.kind == SmallComponent::Kind::DriftBrownian) {
            const double s2 = M.small.sigma * M.small.sigma, rr = std::sqrt(a * a + 2 * c * s2);
            r.limit = (rr - std::abs(a)) / s2;
        } else {
            r.limit = c / std::abs(a);
        }
        rep.add(r);
    } else {
        rep.notes.push_back("decay fit skipped: closed-form q needs drift_only or drift_brownian");
    }

    const TailModel& F = M.claims.laws()[0];
    const double pmax = *std::max_element(P.probes.begin(), P.probes.end());
    {
        const double mu = M.lambda * (1 - P.conv_rho) / P.conv_rho;
        const auto k = build_kernel(M.lambda, F, M.small, KillingSpec::exp_kill(mu), P.conv_grid, s.quad);
        const GridMeasure G = k.normalized();
        GridMeasure power = GridMeasure::delta(G.grid);
        for (int n = 1; n <= 3; ++n) {
            power = convolve(power, G);
            for (double x : P.probes) {
                ReportRow r;
                r.label = "convolution";
                r.x = x;
                r.point = "n=" + std::to_string(n);
                r.value = power.tail(x) / F.tail(x);
                r.limit = n;
                if (x == pmax && !(std::abs(r.value - n) < s.tol.convolution_rel * n)) r.fail("convolution");
                rep.add(r);
            }
        }
        const auto kr = kesten_check(G, F, P.n_max, P.kesten_eps, P.probes);
        ReportRow r;
        r.label = "kesten";
        r.x = pmax;
        r.point = kr.note;
        r.value = kr.C_max;
        if (kr.violation) r.fail("kesten");
        rep.add(r);
    }
    for (double rho : P.rhos) {
        const double mu = M.lambda * (1 - rho) / rho;
        const auto k = build_kernel(M.lambda, F, M.small, KillingSpec::exp_kill(mu), P.conv_grid, s.quad);
        const auto nr = neumann_sum(k.measure, neumann_terms_for(k.measure.mass(), 1e-10));
        // Same constant through the renewal equation u = Ḡ + u * G: u(x) is the
        // tail of sum_{k >= 1} G^{*k}, i.e. tail(N)(x) / (1 - rho) for x > 0.
        RenewalProblem p;
        p.grid = P.neumann_grid;
        const double span = p.grid.x_max() - p.grid.x_min();
        p.kernel = build_kernel(M.lambda, F, M.small, KillingSpec::exp_kill(mu),
                                Grid::uniform(p.grid.step, -span, span), s.quad)
                       .measure;
        p.h.resize(p.grid.size());
        for (std::size_t i = 0; i < p.h.size(); ++i) p.h[i] = p.kernel.tail(p.grid.at(i));
        p.boundary = {Boundary::Hold, Boundary::Hold};
        const auto sol = solve_both(p, s, rep, "neumann_rho=" + fmt_short(rho));
        const double m = nr.rho;
        for (double x : P.probes) {
            ReportRow r;
            r.label = "neumann";
            r.x = x;
            r.point = "rho=" + fmt_short(rho);
            r.value = nr.measure.tail(x) / F.tail(x);
            r.solver = (1 - m) * sol.fp.at(x) / F.tail(x);
            r.solver_pk = (1 - m) * sol.pk.at(x) / F.tail(x);
            r.limit = rho / (1 - rho);
            r.prediction = r.limit;
            r.ratio_solver = r.solver / r.limit;
            if (x == pmax && !(std::abs(r.value / r.limit - 1) <= s.tol.neumann_rel)) r.fail("neumann");
            rep.add(r);
        }
    }
}

}  // namespace detail

struct RunOptions {
    unsigned threads = 0;
};

/// Runs every computation path the scenario declares and collects the
/// comparison rows. Preconditions violated by the model surface as
/// std::invalid_argument; solver breakdowns as NumericalError.
inline Report run_scenario(const Scenario& s, const RunOptions& opt = {}) {
    Report rep;
    rep.id = s.id;
    rep.config = s.resolved.dump();
    if (s.kind == "ruin_1d") detail::run_ruin_1d(s, rep, opt.threads);
    else if (s.kind == "expkill_potential") detail::run_expkill(s, rep, opt.threads);
    else if (s.kind == "quadrant_ruin") detail::run_quadrant(s, rep, opt.threads);
    else if (s.kind == "path_asymptotics") detail::run_paths(s, rep);
    else detail::run_probe(s, rep);
    return rep;
}

// ---------------------------------------------------------------------------
// Builtin catalog
// ---------------------------------------------------------------------------

namespace detail {

inline Json pareto_law(double coeff, double index, double floor = 1.0) {
    return {{"family", "pareto"}, {"coeff", coeff}, {"index", index}, {"floor", floor}};
}

inline std::vector<Json> builtin_configs() {
    std::vector<Json> v;
    v.push_back(Json::parse(R"({
      "id": "cramer_lundberg_exp", "kind": "ruin_1d",
      "description": "Classical ruin with Exp(1) claims, lambda = 1, a = 2: solver, simulation and dual against the closed form",
      "model": {"lambda": 1, "small": {"kind": "drift_only", "drift": [2]},
                "claims": {"structure": "univariate", "laws": [{"family": "exponential", "rate": 1}]},
                "kill": {"kind": "first_passage"}},
      "grid": {"step": 0.01, "upper": 40},
      "mc": {"n_paths": 1000000, "seed": 20240611, "x": [0, 1, 2, 4]}
    })"));
    v.push_back(Json::parse(R"({
      "id": "cramer_lundberg_pareto", "kind": "ruin_1d",
      "description": "Classical ruin with Pareto tail z^-2 claims, rho = 0.5: ratio to rho/(1-rho) times the integrated tail",
      "model": {"lambda": 1, "small": {"kind": "drift_only", "drift": [4]},
                "claims": {"structure": "univariate", "laws": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1}]},
                "kill": {"kind": "first_passage"}},
      "grid": {"step": 0.05, "upper": 200},
      "mc": {"n_paths": 100000, "seed": 20240612, "x": [0, 5, 20]},
      "ladder": {"x": [25, 50, 100, 200]}
    })"));
    v.push_back(Json::parse(R"({
      "id": "expkill_indicator_ball", "kind": "expkill_potential",
      "description": "Occupation of the unit ball under exponential killing: u / tail decreases along the ladder",
      "model": {"lambda": 1, "small": {"kind": "drift_only", "drift": [1]},
                "claims": {"structure": "univariate", "laws": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1}]},
                "kill": {"kind": "exp_kill", "mu": 1},
                "payoff": {"kind": "indicator_ball", "radius": 1, "scale": 1}},
      "grid": {"step": 0.1, "lower": -20, "upper": 200},
      "ladder": {"x0": 5, "factor": 2, "rungs": 6},
      "mc": {"n_paths": 100000, "seed": 20240613, "x": [0, 5, 20]},
      "expect": {"regime": "zero", "decreasing": true}
    })"));
    v.push_back(Json::parse(R"({
      "id": "expkill_indicator_quadrant", "kind": "expkill_potential",
      "description": "Payoff lambda * 1{x >= 1} under exponential killing at rate 0.5: u tends to lambda / mu",
      "model": {"lambda": 1, "small": {"kind": "drift_only", "drift": [1]},
                "claims": {"structure": "univariate", "laws": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1}]},
                "kill": {"kind": "exp_kill", "mu": 0.5},
                "payoff": {"kind": "indicator_quadrant", "radius": 1, "scale": 1}},
      "grid": {"step": 0.25, "lower": -40, "upper": 200},
      "ladder": {"x0": 5, "factor": 2, "rungs": 6},
      "mc": {"n_paths": 100000, "seed": 20240614, "x": [0, 5, 40]},
      "expect": {"regime": "infinite", "limit": true}
    })"));
    v.push_back(Json::parse(R"({
      "id": "twod_product", "kind": "path_asymptotics",
      "description": "Independent Pareto marginals: which coordinate dominates the exit tail along three paths",
      "model": {"lambda": 1, "small": {"kind": "drift_only", "drift": [1, 1]},
                "claims": {"structure": "product", "laws": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1},
                                                            {"family": "pareto", "coeff": 0.5, "index": 1, "floor": 1}]},
                "kill": {"kind": "exp_kill", "mu": 1}},
      "grid": {"step": 0.25, "lower": -20, "upper": 200, "report_x": [10, 20, 40, 80, 160]},
      "ladder": {"x0": 4, "factor": 2, "rungs": 8},
      "paths": [{"name": "t_tsq", "coef": [1, 1], "power": [1, 2], "expect": "product_first"},
                {"name": "tsq_t", "coef": [1, 1], "power": [2, 1], "expect": "product_second"},
                {"name": "diag", "coef": [1, 1], "power": [1, 1], "expect": "product_both"}]
    })"));
    v.push_back(Json::parse(R"({
      "id": "twod_comonotone", "kind": "path_asymptotics",
      "description": "Comonotone split (0.3, 0.7) of one Pareto claim along three rays",
      "model": {"lambda": 1, "small": {"kind": "drift_only", "drift": [1, 1]},
                "claims": {"structure": "comonotone", "laws": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1}],
                           "proportions": [0.3, 0.7]},
                "kill": {"kind": "exp_kill", "mu": 1}},
      "grid": {"step": 0.25, "lower": -20, "upper": 200, "report_x": [10, 20, 40, 80, 160]},
      "ladder": {"x0": 4, "factor": 2, "rungs": 8},
      "paths": [{"name": "diag", "coef": [1, 1], "power": [1, 1], "expect": "comonotone_second"},
                {"name": "steep", "coef": [1, 3], "power": [1, 1], "expect": "comonotone_first"},
                {"name": "balanced", "coef": [3, 7], "power": [1, 1], "expect": "comonotone_boundary"}]
    })"));
    v.push_back(Json::parse(R"({
      "id": "quadrant_ruin_2d", "kind": "quadrant_ruin",
      "description": "Two-dimensional ruin with comonotone Pareto claims: direct estimate against the compensation integral",
      "model": {"lambda": 1, "small": {"kind": "drift_only", "drift": [2, 1.8]},
                "claims": {"structure": "comonotone", "laws": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1}],
                           "proportions": [0.5, 0.5]},
                "kill": {"kind": "quadrant_exit"}},
      "grid": {"step": 0.05, "upper": 20},
      "mc": {"n_paths": 100000, "seed": 20240615, "x": [[1, 1], [5, 2], [10, 10]]}
    })"));
    v.push_back(Json::parse(R"({
      "id": "prop_reinsurance", "kind": "quadrant_ruin",
      "description": "Proportional reinsurance (beta = 0.4) of Pareto claims: joint ruin against the asymptotic integral",
      "model": {"lambda": 1, "small": {"kind": "drift_only", "drift": [3, 2.5]},
                "claims": {"structure": "comonotone", "laws": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1}],
                           "proportions": [0.4, 0.6]},
                "kill": {"kind": "quadrant_exit"}},
      "grid": {"step": 0.05, "upper": 40},
      "mc": {"n_paths": 25000, "seed": 20240616, "x": [[5, 10], [10, 20], [20, 40]]},
      "reinsurance": {"beta": 0.4}
    })"));
    v.push_back(Json::parse(R"({
      "id": "consumption_utility", "kind": "expkill_potential",
      "description": "Power utility of consumption for a two-asset portfolio with Brownian noise: zero regime",
      "model": {"lambda": 1, "small": {"kind": "drift_brownian", "drift": [0, 0], "sigma": 1},
                "claims": {"structure": "product", "laws": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1},
                                                            {"family": "pareto", "coeff": 1, "index": 1, "floor": 1}]},
                "kill": {"kind": "exp_kill", "mu": 1},
                "payoff": {"kind": "power_utility", "alpha": 0.5, "proportions": [0.5, 0.5], "withdrawal": 1}},
      "grid": {"step": 0.1, "lower": -30, "upper": 60},
      "ladder": {"x0": 5, "factor": 2, "rungs": 6},
      "mc": {"n_paths": 20000, "seed": 20240617, "x": [[0, 0], [2, 2], [5, 5]]},
      "expect": {"regime": "zero"}
    })"));
    v.push_back(Json::parse(R"({
      "id": "kernel_decay_probe", "kind": "kernel_probe",
      "description": "Kernel mass, decay rate, convolution-power tails, Kesten bound and Neumann tail constant",
      "model": {"lambda": 1, "small": {"kind": "drift_only", "drift": [1]},
                "claims": {"structure": "univariate", "laws": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1}]},
                "kill": {"kind": "exp_kill", "mu": 1}},
      "probe": {"pairs": [[1, 1], [0.5, 2], [2, 0.5], [1, 0.1], [3, 1], [0.2, 0.2]],
                "families": [{"family": "pareto", "coeff": 1, "index": 1, "floor": 1},
                             {"family": "weibull", "shape": 0.5, "scale": 1, "floor": 1},
                             {"family": "lognormal", "mu": 0, "sigma": 1, "floor": 1}],
                "rhos": [0.3, 0.5, 0.7], "probes": [100, 200, 400]}
    })"));
    return v;
}

}  // namespace detail

struct BuiltinInfo {
    std::string id, kind, description;
};

inline std::vector<BuiltinInfo> list_scenarios() {
    std::vector<BuiltinInfo> out;
    for (const auto& j : detail::builtin_configs()) out.push_back({j["id"], j["kind"], j["description"]});
    return out;
}

inline std::optional<Json> builtin_config(const std::string& id) {
    for (auto& j : detail::builtin_configs())
        if (j["id"] == id) return j;
    return std::nullopt;
}

}  // namespace potentia
