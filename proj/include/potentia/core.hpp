#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace potentia {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Raised when a numerical procedure cannot deliver a result within its
// declared accuracy (non-convergence, underflow, lost mass).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised for malformed or inconsistent scenario configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Shortest round-trip representation; used for every number written to disk
// so that outputs are byte-stable for identical inputs.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_short(double v, int digits = 6) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// Composite Simpson on [a,b] with an even number of panels.
template <class F>
double simpson(F&& f, double a, double b, int panels) {
    if (panels < 2) panels = 2;
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// Simpson on [a,b] split at an interior breakpoint, panels shared in
// proportion to the sub-interval lengths.
template <class F>
double simpson_split(F&& f, double a, double b, double brk, int panels) {
    if (!(brk > a && brk < b)) return simpson(f, a, b, panels);
    int left = static_cast<int>(std::lround(panels * (brk - a) / (b - a)));
    left = std::max(left, 2);
    int right = std::max(panels - left, 2);
    return simpson(f, a, brk, left) + simpson(f, brk, b, right);
}

inline double log_sum_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace detail
}  // namespace potentia
