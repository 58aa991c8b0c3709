#include <doctest.h>

#include <cmath>
#include <random>

#include "phskew/error.hpp"
#include "phskew/skew.hpp"

using namespace phskew;

namespace {

IMat cat_entries()
{
    IMat m(2, 2);
    m << 2, 1, 1, 1;
    return m;
}

const ToralAutomorphism cat{cat_entries()};
const FiberManifold torus2{ManifoldKind::Torus, 2};

Vec v2(double a, double b)
{
    Vec v(2);
    v << a, b;
    return v;
}

Mat cat_real() { return cat_entries().cast<double>(); }

SkewProduct cat_cat() { return SkewProduct(cat, linear_map(torus2, cat_real()), true); }

// volume preserving, base dependent fiber
SkewProduct mixed()
{
    Bump bump{v2(0.4, 0.6), 0.2};
    std::vector<Primitive> p;
    p.push_back(make_translation(v2(0.1, 0.2), {TrigTerm{v2(0.05, -0.03), v2(1, 2), 0.1}}));
    p.push_back(make_shear(0, 1, 0.3, true, bump));
    p.push_back(make_flow({FieldTerm{Field{FieldKind::Cell, 0, 1, 1}, 0.2, bump, false}}, 64));
    return SkewProduct(cat, FiberMap(torus2, p), true);
}

Vec random_point(std::mt19937_64& rng, int d)
{
    std::uniform_real_distribution<double> u(0, 1);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = u(rng);
    return v;
}

// R(Q) for a rational center num / den: exact center orbit in integers, then a lattice search for
// translates of the ball within reach of the image ellipse (semi-axes r lambda^n along e_u, r lambda^-n along e_s).
long long lattice_return_time(long long n1, long long n2, long long den, double r, long long n_max)
{
    const double lam = (3 + std::sqrt(5.0)) / 2, phi = (1 + std::sqrt(5.0)) / 2;
    const Vec eu = v2(phi, 1).normalized(), es = v2(1, -phi).normalized();
    long long x = n1, y = n2;
    for (long long n = 1; n <= n_max; ++n) {
        const long long nx = ((2 * x + y) % den + den) % den, ny = ((x + y) % den + den) % den;
        x = nx;
        y = ny;
        const Vec w0 = v2(double(n1 - x) / den, double(n2 - y) / den);
        const double a = r * std::pow(lam, double(n)), b = r * std::pow(lam, -double(n));
        const long long K = static_cast<long long>(std::ceil(a + r + 2));
        for (long long k1 = -K; k1 <= K; ++k1) {
            // |s| <= r + b pins k2 to a short interval
            const double s0 = w0.dot(es) + k1 * es(0);
            const double lo = (-(r + b) - s0) / es(1), hi = ((r + b) - s0) / es(1);
            for (long long k2 = static_cast<long long>(std::floor(std::min(lo, hi)));
                 k2 <= static_cast<long long>(std::ceil(std::max(lo, hi))); ++k2) {
                const Vec w = w0 + v2(double(k1), double(k2));
                const double u = std::fabs(w.dot(eu)), s = std::fabs(w.dot(es));
                const double du = std::max(0.0, u - a);
                if (std::sqrt(du * du + s * s) <= r + b) return n;
            }
        }
    }
    return n_max + 1;
}

} // namespace

TEST_CASE("evaluate examples")
{
    const SkewProduct f = cat_cat();
    const Point o = f.evaluate(Point{v2(0, 0), v2(0, 0)});
    CHECK(o.y.norm() < 1e-15);
    CHECK(o.z.norm() < 1e-15);
    const Point p = f.evaluate(Point{v2(0.5, 0.5), v2(0, 0)});
    CHECK(torus_delta(p.y, v2(0.5, 0.0)).norm() < 1e-15);
    CHECK(torus_delta(p.z, v2(0, 0)).norm() < 1e-15);
}

TEST_CASE("evaluate inverse round trip")
{
    std::mt19937_64 rng(1);
    for (const SkewProduct& f : {cat_cat(), mixed()}) {
        for (int i = 0; i < 200; ++i) {
            const Point p{random_point(rng, 2), random_point(rng, 2)};
            const Point q = f.evaluate_inverse(f.evaluate(p));
            CHECK(torus_delta(p.y, q.y).norm() < 1e-10);
            CHECK(f.manifold().distance(p.z, q.z) < 1e-10);
        }
    }
}

TEST_CASE("iterates compose")
{
    std::mt19937_64 rng(2);
    const SkewProduct f = mixed();
    for (int i = 0; i < 50; ++i) {
        const Point p{random_point(rng, 2), random_point(rng, 2)};
        Point a = p;
        for (int k = 0; k < 10; ++k) a = f.evaluate(a);
        Point b = p;
        for (int k = 0; k < 4; ++k) b = f.evaluate(b);
        Point c = b;
        for (int k = 0; k < 6; ++k) c = f.evaluate(c);
        CHECK(torus_delta(a.y, c.y).norm() < 1e-9);
        CHECK(f.manifold().distance(a.z, c.z) < 1e-9);
        Point back = a;
        for (int k = 0; k < 10; ++k) back = f.evaluate_inverse(back);
        CHECK(torus_delta(back.y, p.y).norm() < 1e-9);
        CHECK(f.manifold().distance(back.z, p.z) < 1e-9);
    }
}

TEST_CASE("derivative cocycle examples")
{
    const SkewProduct f = cat_cat();
    const Point p{v2(0.3, 0.7), v2(0.1, 0.9)};
    Mat an = Mat::Identity(2, 2);
    for (int n = 1; n <= 6; ++n) {
        an = cat_real() * an;
        CHECK((f.derivative_cocycle(p, n) - an).norm() < 1e-9 * an.norm());
    }
    CHECK((f.derivative_cocycle(p, -3) - (cat_real().inverse() * cat_real().inverse() * cat_real().inverse())).norm() <
          1e-9 * 34);

    const SkewProduct t(cat, FiberMap(torus2, {make_translation(v2(0.3, 0.1), {TrigTerm{v2(0.2, 0.1), v2(1, 0), 0}})}));
    CHECK((t.derivative_cocycle(p, 7) - Mat::Identity(2, 2)).norm() < 1e-12);

    const double s = 0.35;
    Mat shear(2, 2);
    shear << 1, 0, s, 1;
    const SkewProduct sh(cat, linear_map(FiberManifold{ManifoldKind::Euclidean, 2}, shear));
    for (int n = 1; n <= 5; ++n) {
        Mat expect(2, 2);
        expect << 1, 0, n * s, 1;
        CHECK((sh.derivative_cocycle(p, n) - expect).norm() < 1e-12);
    }
}

TEST_CASE("volume preservation of the cocycle")
{
    std::mt19937_64 rng(4);
    const SkewProduct f = mixed();
    for (int i = 0; i < 1000; ++i) {
        const Point p{random_point(rng, 2), random_point(rng, 2)};
        CHECK(std::fabs(std::fabs(f.derivative_cocycle(p, 1).determinant()) - 1) < 1e-8);
    }
}

TEST_CASE("declared volume preservation is validated")
{
    Mat stretch(2, 2);
    stretch << 2, 0, 0, 1;
    CHECK_THROWS_AS(SkewProduct(cat, FiberMap(FiberManifold{ManifoldKind::Euclidean, 2}, {make_linear(stretch)}), true),
                    Error);
}

TEST_CASE("base splitting")
{
    const auto [es, eu] = base_splitting(cat);
    const double phi = (1 + std::sqrt(5.0)) / 2;
    CHECK(principal_angle(eu, span(v2(phi, 1))) < 1e-9);
    CHECK(principal_angle(es, span(v2(1, -phi))) < 1e-9);
    CHECK(principal_angle(pushforward(cat_real(), eu), eu) < 1e-9);
    CHECK(principal_angle(pushforward(cat_real(), es), es) < 1e-9);

    const ToralAutomorphism two = ToralAutomorphism::direct_sum(cat, cat);
    const auto [s2, u2] = base_splitting(two);
    CHECK(u2.dim() == 2);
    Mat raw = Mat::Zero(4, 2);
    raw(0, 0) = phi;
    raw(1, 0) = 1;
    raw(2, 1) = phi;
    raw(3, 1) = 1;
    CHECK(principal_angle(u2, orthonormalize(raw)) < 1e-9);
    // all principal angles vanish: projectors agree
    const GrassmannPoint ref = orthonormalize(raw);
    CHECK((u2.frame * u2.frame.transpose() - ref.frame * ref.frame.transpose()).norm() < 1e-9);

    try {
        base_splitting(ToralAutomorphism(IMat::Identity(2, 2)));
        FAIL("expected NotAnosov");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotAnosov);
    }
}

TEST_CASE("bracket examples")
{
    const Vec x = v2(0.5, 0.5);
    CHECK(torus_delta(bracket(cat, x, x, x), x).norm() < 1e-14);
    const auto [es, eu] = base_splitting(cat);
    const Vec e_u = eu.frame.col(0), e_s = es.frame.col(0);
    const Vec y = x + 0.03 * e_u;
    CHECK(torus_delta(bracket(cat, x, y, x), y).norm() < 1e-12);
    const Vec b = bracket(cat, x, x + 0.01 * e_u, x + 0.01 * e_s);
    CHECK(torus_delta(b, x + 0.01 * e_u + 0.01 * e_s).norm() < 1e-10);
    CHECK_THROWS_AS(bracket(cat, x, v2(0.8, 0.5), x), Error);
}

TEST_CASE("bracket lies on the stable leaf of y")
{
    std::mt19937_64 rng(9);
    const auto g = make_base_geometry(cat);
    const double rate = g->chi_bar_s;
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (int i = 0; i < 200; ++i) {
        const Vec x = random_point(rng, 2);
        const Vec y = x + u(rng) * g->e_u;
        const Vec z = x + u(rng) * g->e_s;
        const Vec b = bracket(cat, x, y, z);
        Vec d = torus_delta(y, b);
        const double d0 = d.norm();
        if (d0 < 1e-12) continue;
        for (int n = 1; n <= 8; ++n) {
            d = cat_real() * d;
            CHECK(d.norm() <= std::exp(-rate * n + 1e-9 * n) * d0 * (1 + 1e-9));
        }
    }
}

TEST_CASE("recurrence time")
{
    CHECK(recurrence_time(cat, v2(0, 0), 1e-3).n == 1);
    CHECK_THROWS_AS(recurrence_time(cat, v2(0.3, 0.3), 0.3), Error);
    try {
        recurrence_time(cat, v2(0.3, 0.3), 0.3);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::RadiusTooLarge);
    }
    const Vec c = v2(0.3183, 0.5772);
    const RecurrenceResult r = recurrence_time(cat, c, 1e-4, 100);
    CHECK_FALSE(r.exceeded);
    CHECK(r.n >= 5);
    CHECK(r.n == lattice_return_time(3183, 5772, 10000, 1e-4, 100));
    // rational points are periodic
    const Vec q = v2(0.4, 0.2);
    CHECK(recurrence_time(cat, q, 1e-3, 50).n == lattice_return_time(2, 1, 5, 1e-3, 50));
    CHECK(recurrence_time(cat, q, 1e-3, 50).n <= 10);
}

TEST_CASE("min return distance")
{
    CHECK(min_return_distance(cat, v2(0, 0), 10) < 1e-15);
    CHECK(min_return_distance(cat, v2(0.3183, 0.5772), 10000) > 1e-9);
}

TEST_CASE("loop family")
{
    const SkewProduct f = cat_cat();
    const Vec y = v2(0.31, 0.62);
    const LoopFamily fam = build_loop_family(f, y, 1e-3);
    CHECK(torus_delta(fam.psi(0), fam.y).norm() < 1e-15);
    for (double s : {0.0, 1e-4, 3e-4})
        for (double t : {0.0, 2e-4, 5e-4})
            CHECK(std::fabs(torus_delta(fam.psi(s), fam.psi(t)).norm() - std::fabs(s - t)) < 1e-12);
    CHECK(fam.C1 <= 3.0);
    for (int i = 0; i <= 20; ++i) {
        const double t = fam.sigma / fam.C0 * i / 20.0;
        const SuLoop l = fam.loop(t);
        for (const Vec& p : {l.y1(), l.y2(), l.y3()}) CHECK(torus_delta(y, p).norm() <= fam.C1 * fam.sigma + 1e-12);
        CHECK(torus_delta(l.y, wrap_unit(l.y3() + l.d4)).norm() < 1e-12);
    }
    const SuLoop l0 = fam.loop(0);
    CHECK(torus_delta(l0.y1(), y).norm() < 1e-15);
    CHECK(torus_delta(l0.y2(), fam.z()).norm() < 1e-12);
    try {
        build_loop_family(f, y, 0.5);
        FAIL("expected SigmaTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SigmaTooLarge);
    }
}

TEST_CASE("su loops check their legs")
{
    const SkewProduct f = cat_cat();
    const auto g = make_base_geometry(cat);
    const Vec y = v2(0.2, 0.3);
    const Vec y1 = y + 0.01 * g->e_u, y2 = y1 + 0.02 * g->e_s, y3 = y2 - 0.01 * g->e_u;
    const SuLoop l = make_su_loop(f, y, y1, y2, y3);
    CHECK(torus_delta(l.y2(), y2).norm() < 1e-12);
    try {
        make_su_loop(f, y, y + v2(0.01, 0.0), y2, y3);
        FAIL("expected NotOnUnstableLeaf");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotOnUnstableLeaf);
    }
    try {
        make_su_loop(f, y, y1, y1 + v2(0.0, 0.01), y3);
        FAIL("expected NotOnStableLeaf");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotOnStableLeaf);
    }
}

TEST_CASE("fixed point torus arithmetic matches integer maps")
{
    std::mt19937_64 rng(6);
    for (int i = 0; i < 100; ++i) {
        const Vec y = random_point(rng, 2);
        FixedTorusPoint p = FixedTorusPoint::from_real(y);
        for (int k = 0; k < 5; ++k) p = p.mapped(cat.entries());
        for (int k = 0; k < 5; ++k) p = p.mapped(cat.inverse_entries());
        CHECK(torus_delta(p.to_real(), y).norm() < 1e-15);
    }
}
