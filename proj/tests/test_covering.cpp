#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "phskew/accessibility.hpp"
#include "phskew/covering.hpp"
#include "phskew/error.hpp"

using namespace phskew;

namespace {

Vec v2(double a, double b)
{
    Vec v(2);
    v << a, b;
    return v;
}

// K0 by exact rational arithmetic for theta = p / q
int rational_K0(int c, int p, int q)
{
    // c / (c - (c-1) q / p) = c p / (c p - (c-1) q)
    const int num = c * p, den = c * p - (c - 1) * q;
    return (num + den - 1) / den + 1;
}

ParamMap identity_hook(int c)
{
    return ParamMap{FiberManifold{ManifoldKind::Euclidean, c}, [](const Vec& s) { return s; }};
}

ParamMap constant_hook(int c)
{
    return ParamMap{FiberManifold{ManifoldKind::Torus, c}, [c](const Vec&) { return Vec::Constant(c, 0.3); }};
}

} // namespace

TEST_CASE("covering constants")
{
    CHECK(covering_K0(2, 0.75) == 4);
    CHECK(covering_K1(2, 0.75) == 9);
    for (int c = 1; c <= 5; ++c) {
        for (int q = 2; q <= 12; ++q) {
            for (int p = 1; p <= q; ++p) {
                if (c * p - (c - 1) * q <= 0) {
                    CHECK_THROWS_AS(covering_K0(c, double(p) / q), Error);
                    continue;
                }
                CHECK(covering_K0(c, double(p) / q) == rational_K0(c, p, q));
                CHECK(covering_K1(c, double(p) / q) == c * rational_K0(c, p, q) + 1);
            }
        }
        CHECK(covering_K0(c, 1.0) == c + 1);
    }
    CHECK_THROWS_AS(covering_K0(2, 1.5), Error);
    CHECK_THROWS_AS(covering_K0(0, 1.0), Error);
}

TEST_CASE("one dimensional covering by intervals")
{
    const double theta = 0.8;
    const Covering cov = build_covering(1, 0.4, theta);
    CHECK(cov.eps == doctest::Approx(0.4));
    for (const Box& b : cov.boxes) CHECK(b.hi(0) - b.lo(0) < 0.4);
    std::vector<double> ends;
    for (const Box& b : cov.boxes) ends.push_back(b.lo(0)), ends.push_back(b.hi(0));
    std::sort(ends.begin(), ends.end());
    CHECK(std::adjacent_find(ends.begin(), ends.end()) == ends.end());
    // every probe lies strictly inside more than K1 intervals
    int worst = 1 << 30;
    for (int i = 0; i <= 4000; ++i) {
        const double x = i / 4000.0;
        int n = 0;
        for (const Box& b : cov.boxes) n += (x > b.lo(0) && x < b.hi(0));
        worst = std::min(worst, n);
    }
    CHECK(worst >= cov.K1 + 1);
    CHECK(validate_covering(cov, 2001).valid());
}

TEST_CASE("two dimensional covering validates on a probe grid")
{
    const Covering cov = build_covering(2, default_light_eps(2), 0.75);
    CHECK(cov.K0 == 4);
    CHECK(cov.K1 == 9);
    const CoveringCheck chk = validate_covering(cov, 100);
    CHECK(chk.probes == 10000);
    CHECK(chk.corners_in_range);
    CHECK(chk.diameters_ok);
    CHECK(chk.multiplicity_ok);
    CHECK(chk.corners_distinct);
    CHECK(chk.separation_ok);
    CHECK(chk.min_multiplicity >= 10);
}

TEST_CASE("oversized lightness scale is clamped")
{
    const Covering cov = build_covering(2, 5.0, 1.0);
    CHECK(cov.eps <= default_light_eps(2));
    for (const Box& b : cov.boxes) CHECK(b.diameter() < cov.eps);
    CHECK(validate_covering(cov, 40).valid());
    CHECK_THROWS_AS(build_covering(2, 0.0, 1.0), Error);
}

TEST_CASE("box boundary disjointness")
{
    const Box outer{v2(0, 0), v2(1, 1)}, inner{v2(0.2, 0.2), v2(0.8, 0.8)}, touching{v2(0, 0.2), v2(0.5, 0.5)};
    const Box far{v2(2, 2), v2(3, 3)}, crossing{v2(0.5, -0.5), v2(1.5, 0.5)};
    CHECK(boundaries_disjoint(outer, inner));
    CHECK(boundaries_disjoint(inner, outer));
    CHECK_FALSE(boundaries_disjoint(outer, touching));
    CHECK(boundaries_disjoint(outer, far));
    CHECK_FALSE(boundaries_disjoint(outer, crossing));
}

TEST_CASE("stable value check on synthetic hooks")
{
    const Covering one = build_covering(1, 0.4, 1.0);
    const StableValueResult inj = stable_value_check(identity_hook(1), one, 0.5, 0.0);
    CHECK(inj.verdict == Verdict::Pass);

    const Covering two = build_covering(2, default_light_eps(2), 0.75);
    const StableValueResult inj2 = stable_value_check(identity_hook(2), two, 5e-4, 0.0);
    CHECK(inj2.verdict == Verdict::Pass);
    for (const AxisMargin& m : inj2.axes) CHECK(m.collision_radius >= 2 * inj2.delta);

    const StableValueResult flat = stable_value_check(constant_hook(2), two, 0.25, 0.0);
    CHECK(flat.verdict == Verdict::Fail);
    CHECK(static_cast<int>(flat.witness_values.size()) == two.K0);
    CHECK(flat.witness_axis == 1);
}

TEST_CASE("stable value check fails on a decoupled skew product")
{
    IMat a(2, 2);
    a << 2, 1, 1, 1;
    const SkewProduct f(ToralAutomorphism(a), linear_map(FiberManifold{ManifoldKind::Torus, 2}, a.cast<double>()),
                        true);
    const LoopFamily fam = build_loop_family(f, v2(0.3, 0.4), 0.1);
    const Covering cov = build_covering(2, default_light_eps(2), 0.75);
    const StableValueResult r = stable_value_check(skew_param_map(f, fam, v2(0.5, 0.5), 1e-10), cov, 0.25, 1e-10);
    CHECK(r.verdict == Verdict::Fail);
    CHECK_FALSE(r.witness_values.empty());
}

TEST_CASE("stable value check argument validation")
{
    const Covering cov = build_covering(1, 0.4, 1.0);
    CHECK_THROWS_AS(stable_value_check(identity_hook(1), cov, 0.0, 0.0), Error);
    CHECK_THROWS_AS(stable_value_check(identity_hook(1), cov, 0.1, -1.0), Error);
}
