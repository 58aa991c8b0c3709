#include <doctest.h>

#include <cmath>
#include <random>

#include "phskew/error.hpp"
#include "phskew/spectral.hpp"

using namespace phskew;

namespace {

IMat imat(std::initializer_list<std::initializer_list<long long>> rows)
{
    IMat m(rows.size(), rows.begin()->size());
    int i = 0;
    for (auto r : rows) {
        int j = 0;
        for (long long v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

// log of the larger root of x^2 - tr x + det
double quadratic_top(double tr, double det) { return std::log((tr + std::sqrt(tr * tr - 4 * det)) / 2); }

const ToralAutomorphism cat{imat({{2, 1}, {1, 1}})};

HyperbolicRates rates(double s, double u, double c_lo, double c_hi)
{
    HyperbolicRates r;
    r.chi_bar_s = r.chi_hat_s = s;
    r.chi_bar_u = r.chi_hat_u = u;
    r.chi_bar_c = c_lo;
    r.chi_hat_c = c_hi;
    return r;
}

// random unimodular matrix as a product of elementary moves
IMat random_unimodular(int d, std::mt19937_64& rng)
{
    IMat m = IMat::Identity(d, d);
    std::uniform_int_distribution<int> pick(0, d - 1), sgn(0, 1);
    for (int step = 0; step < 3 * d; ++step) {
        const int i = pick(rng), j = pick(rng);
        if (i == j) continue;
        const long long s = sgn(rng) ? 1 : -1;
        m.row(i) += s * m.row(j);
    }
    return m;
}

} // namespace

TEST_CASE("cat map summary")
{
    const double top = quadratic_top(3, 1);
    const SpectralSummary s = spectral_summary(cat);
    REQUIRE(s.log_moduli.size() == 2);
    CHECK(std::fabs(s.log_moduli[0] + top) < 1e-10);
    CHECK(std::fabs(s.log_moduli[1] - top) < 1e-10);
    REQUIRE(s.b.has_value());
    CHECK(*s.b == 1);
    CHECK(std::fabs(s.chi_bar - top) < 1e-10);
    CHECK(std::fabs(s.chi_hat - top) < 1e-10);
    CHECK(std::fabs(top - 0.96242) < 1e-5);
}

TEST_CASE("unit modulus matrices have no b")
{
    for (const IMat& m : {IMat(IMat::Identity(2, 2)), imat({{0, -1}, {1, 0}}), imat({{1, 1}, {0, 1}})}) {
        const SpectralSummary s = spectral_summary(ToralAutomorphism(m));
        CHECK_FALSE(s.b.has_value());
        for (double v : s.log_moduli) CHECK(std::fabs(v) < 1e-10);
        CHECK_FALSE(check_anosov(ToralAutomorphism(m)));
    }
    CHECK(check_anosov(cat));
}

TEST_CASE("non unimodular matrices are rejected")
{
    CHECK_THROWS_AS(ToralAutomorphism(imat({{2, 0}, {0, 1}})), Error);
    try {
        ToralAutomorphism(imat({{2, 0}, {0, 1}}));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonUnimodular);
    }
}

TEST_CASE("matrix file round trip")
{
    const ToralAutomorphism a(imat({{3, 2, 1}, {-1, 0, 2}, {1, 1, 1}}).cast<long long>());
    const std::string text = format_matrix(a);
    CHECK(text == "3\n3 2 1\n-1 0 2\n1 1 1\n");
    CHECK(parse_matrix(text).entries() == a.entries());
    CHECK_THROWS_AS(parse_matrix(""), Error);
    CHECK_THROWS_AS(parse_matrix("2\n1 2\n"), Error);
}

TEST_CASE("pinching examples")
{
    const double chi = quadratic_top(3, 1);
    const HyperbolicRates r = rates(3 * chi, 3 * chi, -chi, chi);
    CHECK(check_pinching(r, 0.5));
    CHECK_FALSE(check_pinching(r, 1.0));
    CHECK(check_pinching(r, 1e-9));
}

TEST_CASE("center bunching examples")
{
    CHECK(check_center_bunching(rates(4.81, 4.81, -0.962, 0.962), 1));
    CHECK_FALSE(check_center_bunching(rates(1.0, 1.0, -0.962, 0.962), 1));
    for (int l = 1; l <= 6; ++l) CHECK(check_center_bunching(rates(0.3, 0.7, 0, 0), l));
}

TEST_CASE("ds pinching examples")
{
    HyperbolicRates r = rates(0.962, 0.962, -1, 1);
    r.ds = {{-0.4, 0.4}, {-0.4, 0.4}};
    CHECK(check_ds_pinching(r, 0.5));
    CHECK_FALSE(check_ds_pinching(r, 0.9));
    CHECK(check_ds_pinching(r, 1e-6));
    r.ds.clear();
    try {
        check_ds_pinching(r, 0.5);
        FAIL("expected MissingSplitting");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MissingSplitting);
    }
}

TEST_CASE("skew classes")
{
    SkewRates r;
    r.chi_bar_s = r.chi_bar_u = 6;
    r.chi_bar_c = -1;
    r.chi_hat_c = 1;
    r.ds = {{-0.5, 0.5}};
    r.fiber_dim = 2;
    CHECK(classify_skew_product(r, 1).in_U2);
    r.chi_bar_s = r.chi_bar_u = 3;
    CHECK_FALSE(classify_skew_product(r, 1).in_U2);

    SkewRates iso;
    iso.chi_bar_s = iso.chi_bar_u = 1;
    iso.fiber_dim = 2;
    iso.ds = {{0, 0}, {0, 0}};
    CHECK_FALSE(classify_skew_product(iso, 1).in_U1);

    SkewRates bad = r;
    bad.ds = {{0.5, -0.5}};
    CHECK_THROWS_AS(classify_skew_product(bad, 1), Error);
}

TEST_CASE("classification margin flips at the closed form threshold")
{
    // spt2_3 changes sign where chi_bar_s = tail = 4 for the symmetric fiber
    auto in_u2 = [](double base) {
        SkewRates r;
        r.chi_bar_s = r.chi_bar_u = base;
        r.chi_bar_c = -1;
        r.chi_hat_c = 1;
        r.ds = {{-0.5, 0.5}};
        r.fiber_dim = 2;
        return classify_skew_product(r, 1).in_U2;
    };
    double lo = 3, hi = 6;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (in_u2(mid) ? hi : lo) = mid;
    }
    CHECK(std::fabs(hi - 4.0) < 1e-9);
}

TEST_CASE("example conditions flip at k = 5")
{
    CHECK_FALSE(check_example_conditions(cat, cat, 4));
    CHECK(check_example_conditions(cat, cat, 5));
    const ExampleReport rep = example_conditions_report(cat, cat, 5);
    const double chi = quadratic_top(3, 1);
    CHECK(std::fabs(rep.conditions.rows[0].lhs - 4 * chi) < 1e-9);
    CHECK(std::fabs(rep.conditions.rows[0].rhs - 5 * chi) < 1e-9);
    const ExampleReport four = example_conditions_report(cat, cat, 4);
    CHECK(std::fabs(four.conditions.rows[0].margin) < 1e-9);
    try {
        check_example_conditions(ToralAutomorphism(IMat::Identity(2, 2)), cat, 5);
        FAIL("expected CentralAllUnit");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::CentralAllUnit);
    }
}

TEST_CASE("example conditions are monotone in k")
{
    bool seen = false;
    for (int k = 1; k <= 12; ++k) {
        const bool h = check_example_conditions(cat, cat, k);
        if (seen) CHECK(h);
        seen = seen || h;
    }
    CHECK(seen);
}

TEST_CASE("xi examples")
{
    CHECK(xi(rates(0.5, 0.6, -0.1, 0.1)) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(xi(rates(0.7, 0.7, 0, 0)) == doctest::Approx(0.7).epsilon(1e-12));
    const double chi = quadratic_top(3, 1);
    const HyperbolicRates r = rates_from_summaries(spectral_summary(cat.power(5)), spectral_summary(cat));
    CHECK(std::fabs(xi(r) - 4 * chi) < 1e-9);
    CHECK(std::fabs(xi(r) - 3.850) < 1e-3);
}

TEST_CASE("log moduli sum to zero for unimodular matrices")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + trial % 5;
        const SpectralSummary s = spectral_summary(ToralAutomorphism(random_unimodular(d, rng)));
        double sum = 0;
        for (double v : s.log_moduli) sum += v;
        CHECK(std::fabs(sum) < 1e-9);
        CHECK(std::is_sorted(s.log_moduli.begin(), s.log_moduli.end()));
        if (s.b) CHECK(s.log_moduli[*s.b - 1] < 0);
    }
}

TEST_CASE("chi bar is the first expanding modulus for symmetric spectra")
{
    // conjugated direct sums of 2x2 blocks: moduli come in pairs r, 1/r
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int blocks = 1 + trial % 3;
        IMat a = IMat::Zero(2 * blocks, 2 * blocks);
        for (int k = 0; k < blocks; ++k) {
            const IMat blk = (trial + k) % 4 == 3 ? imat({{0, -1}, {1, 0}}) : random_unimodular(2, rng);
            a.block(2 * k, 2 * k, 2, 2) = blk;
        }
        const ToralAutomorphism u(random_unimodular(2 * blocks, rng));
        const IMat conj = u.entries() * a * u.inverse_entries();
        const SpectralSummary s = spectral_summary(ToralAutomorphism(conj));
        if (!s.b) continue;
        CHECK(s.log_moduli[*s.b - 1] < 0);
        CHECK(s.chi_bar > kUnitModulusTol);
        CHECK(s.chi_bar <= s.chi_hat);
    }
}

TEST_CASE("chi bar follows the index formula for asymmetric spectra")
{
    // two contracting moduli and one expanding: the index lands on a contracting modulus
    const ToralAutomorphism a(imat({{0, 0, 1}, {1, 0, -1}, {0, 1, 3}}));
    const SpectralSummary s = spectral_summary(a);
    REQUIRE(s.b.has_value());
    const int n = 3;
    CHECK(s.chi_bar == s.log_moduli[n - *s.b]);
    CHECK(s.chi_hat == s.log_moduli[n - 1]);
    CHECK(s.chi_bar < 0);
}

TEST_CASE("pinching is monotone in theta")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 3.0), c(-1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        double lo = c(rng), hi = c(rng);
        if (lo > hi) std::swap(lo, hi);
        const HyperbolicRates r = rates(u(rng), u(rng), lo, hi);
        bool prev = true;
        for (int i = 1; i <= 100; ++i) {
            const bool h = check_pinching(r, i / 100.0);
            if (h) CHECK(prev);
            prev = h;
        }
    }
}
