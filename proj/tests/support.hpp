#pragma once

// Shared oracles for the cat map base.

#include <cmath>
#include <cstdlib>
#include <vector>

#include "phskew/linalg.hpp"

namespace testsupport {

using phskew::IMat;
using phskew::Vec;

inline IMat cat_entries()
{
    IMat m(2, 2);
    m << 2, 1, 1, 1;
    return m;
}

inline Vec v2(double a, double b)
{
    Vec v(2);
    v << a, b;
    return v;
}

inline const double kLambda = (3 + std::sqrt(5.0)) / 2;
inline const double kGolden = (1 + std::sqrt(5.0)) / 2;
inline Vec unit_u() { return v2(kGolden, 1).normalized(); }
inline Vec unit_s() { return v2(1, -kGolden).normalized(); }

// Point fixed by A^p: (A^p - I)^{-1} k reduced mod 1, kept as integers over den.
struct RationalPoint {
    long long x = 0, y = 0, den = 1;

    Vec real() const { return v2(double(x) / den, double(y) / den); }

    RationalPoint mapped(const IMat& a) const
    {
        auto mod = [this](long long v) { return ((v % den) + den) % den; };
        return RationalPoint{mod(a(0, 0) * x + a(0, 1) * y), mod(a(1, 0) * x + a(1, 1) * y), den};
    }

    bool operator==(const RationalPoint& o) const { return x == o.x && y == o.y && den == o.den; }
};

inline RationalPoint periodic_point(const IMat& a, int p, long long k0, long long k1)
{
    IMat m = IMat::Identity(2, 2);
    for (int i = 0; i < p; ++i) m = a * m;
    m -= IMat::Identity(2, 2);
    long long det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    long long nx = m(1, 1) * k0 - m(0, 1) * k1, ny = -m(1, 0) * k0 + m(0, 0) * k1;
    if (det < 0) det = -det, nx = -nx, ny = -ny;
    return RationalPoint{((nx % det) + det) % det, ((ny % det) + det) % det, det};
}

inline int minimal_period(const IMat& a, const RationalPoint& q, int cap)
{
    RationalPoint w = q;
    for (int n = 1; n <= cap; ++n) {
        w = w.mapped(a);
        if (w == q) return n;
    }
    return 0;
}

// Closest approach of the other orbit points to q.
inline double orbit_gap(const IMat& a, const RationalPoint& q, int period)
{
    double best = 1e300;
    RationalPoint w = q;
    for (int n = 1; n < period; ++n) {
        w = w.mapped(a);
        Vec d = w.real() - q.real();
        for (int i = 0; i < 2; ++i) d(i) -= std::round(d(i));
        best = std::min(best, d.norm());
    }
    return best;
}

// Point of exact minimal period p with a well separated orbit.
inline RationalPoint separated_periodic_point(const IMat& a, int p)
{
    RationalPoint best;
    double gap = -1;
    for (long long k0 = 0; k0 <= 4; ++k0)
        for (long long k1 = 0; k1 <= 4; ++k1) {
            if (k0 == 0 && k1 == 0) continue;
            const RationalPoint q = periodic_point(a, p, k0, k1);
            if (minimal_period(a, q, p) != p) continue;
            const double g = orbit_gap(a, q, p);
            if (g > gap) gap = g, best = q;
        }
    return best;
}

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxy / sxx;
}

inline double r_squared(const std::vector<double>& x, const std::vector<double>& y)
{
    const double b = fit_slope(x, y);
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double ss_res = 0, ss_tot = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (my + b * (x[i] - mx));
        ss_res += e * e;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    return 1 - ss_res / ss_tot;
}

} // namespace testsupport
