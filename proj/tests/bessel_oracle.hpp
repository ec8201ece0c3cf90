#pragma once

// Brute-force reference for K_{i nu}(x) = int_0^inf exp(-x cosh t) cos(nu t) dt:
// Gauss-Legendre panels on the real axis in MPFR arithmetic. The integrand
// oscillates and cancels down to ~exp(-pi nu / 2), so the working precision
// grows with nu. Independent of the library kernel by method and by arithmetic.

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <vector>

namespace oracle {

using mp = boost::multiprecision::mpfr_float;

struct Rule {
    std::vector<mp> x, w;
};

inline Rule legendre(int n)
{
    Rule r;
    const mp pi = acos(mp(-1));
    for (int i = 0; i < n; ++i) {
        mp x = cos(pi * (i + mp(0.75)) / (n + mp(0.5)));
        mp dp;
        for (int it = 0; it < 200; ++it) {
            mp p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                mp p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            mp dx = p1 / dp;
            x -= dx;
            if (abs(dx) < pow(mp(10), -static_cast<int>(mp::default_precision()) + 5)) break;
        }
        r.x.push_back(x);
        r.w.push_back(2 / ((1 - x * x) * dp * dp));
    }
    return r;
}

/// K_{i nu}(x) as a double, accurate far beyond double precision.
inline double besselk_imag(double nu, double x)
{
    const unsigned digits = 30 + static_cast<unsigned>(1.5 * nu / std::log(10.0) * 1.1) + 10;
    mp::default_precision(digits);
    // The cancellation target exp(-pi nu / 2) also bounds the allowed rule error: above
    // nu = 60 the panels shrink to one radian of the cosine and the rule grows to 48 points.
    const bool large = nu > 60.0;
    const int order = large ? 48 : 32;
    static thread_local unsigned cached_digits = 0;
    static thread_local int cached_order = 0;
    static thread_local Rule rule;
    if (cached_digits != digits || cached_order != order) {
        rule = legendre(order);
        cached_digits = digits;
        cached_order = order;
    }
    // Truncate where exp(-x cosh t) < exp(-700) * x.
    const double t_max = std::acosh((700.0 + std::fabs(std::log(x))) / x + 1.0);
    const mp X = x, NU = nu;
    mp sum = 0;
    double a = 0;
    while (a < t_max) {
        // Panel spans at most 6 rad of the cosine and narrows where the exponential is steep.
        double h = std::min(0.25, (large ? 1.0 : 6.0) / std::max(nu, 1.0));
        h = std::min(h, 4.0 / (x * std::sinh(a) + 1.0));
        const double b = std::min(a + h, t_max);
        const mp mid = (mp(a) + mp(b)) / 2, half = (mp(b) - mp(a)) / 2;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            const mp t = mid + half * rule.x[i];
            sum += rule.w[i] * half * exp(-X * cosh(t)) * cos(NU * t);
        }
        a = b;
    }
    return static_cast<double>(sum);
}

} // namespace oracle
