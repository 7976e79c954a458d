#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "regime/error.hpp"

namespace regime::stats {

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double f = 1.0;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    f = d;
    for (int m = 1; m <= 10000; ++m) {
        const double dm = m;
        double num = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        f *= c * d;

        num = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::exp(log_front) * f / a;
}

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
inline double student_t_two_sided(double t, double dof) {
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

struct Correlation {
    double r;
    double p_value;
};

/// Pearson r with the two-sided t-test p-value on n - 2 degrees of freedom.
inline Correlation pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw data_error("LengthMismatch", "correlation inputs differ in length");
    if (x.size() < 3) throw data_error("TooFewPoints", "correlation needs at least 3 pairs");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    // Spread at rounding level counts as constant.
    auto flat = [](std::span<const double> v, double m, double ss) {
        double scale = std::abs(m);
        for (double e : v) scale = std::max(scale, std::abs(e));
        const double eps = 64.0 * std::numeric_limits<double>::epsilon() * scale;
        return !(ss > static_cast<double>(v.size()) * eps * eps);
    };
    if (flat(x, mx, sxx) || flat(y, my, syy)) throw data_error("ZeroVariance", "correlation input has zero variance");
    double r = sxy / std::sqrt(sxx * syy);
    r = std::clamp(r, -1.0, 1.0);
    const double dof = static_cast<double>(x.size()) - 2.0;
    if (std::abs(r) >= 1.0) return {r, 0.0};
    const double t = r * std::sqrt(dof / (1.0 - r * r));
    return {r, student_t_two_sided(t, dof)};
}

}  // namespace regime::stats
