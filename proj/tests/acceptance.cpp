// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "phskew/accessibility.hpp"
#include "phskew/covering.hpp"
#include "phskew/deformation.hpp"
#include "phskew/description.hpp"
#include "phskew/error.hpp"
#include "phskew/holonomy.hpp"
#include "phskew/ifs.hpp"
#include "phskew/spectral.hpp"
#include "support.hpp"

using namespace phskew;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

const std::string kCli = PHSKEW_CLI_PATH;
const std::string kData = PHSKEW_DATA_DIR;

const ToralAutomorphism cat{cat_entries()};
const FiberManifold torus1{ManifoldKind::Torus, 1};
const FiberManifold torus2{ManifoldKind::Torus, 2};
const FiberManifold plane{ManifoldKind::Euclidean, 2};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

Vec v1(double a) { return Vec::Constant(1, a); }

// isometric or unipotent fibers: center rates vanish, hyperbolic rates come from the base
double base_xi(const ToralAutomorphism& base)
{
    const SpectralSummary s = spectral_summary(base);
    HyperbolicRates r;
    r.chi_bar_s = r.chi_hat_s = -s.log_moduli.front();
    r.chi_bar_u = r.chi_hat_u = s.log_moduli.back();
    return xi(r);
}

Vec random_point(std::mt19937_64& rng, int d)
{
    std::uniform_real_distribution<double> u(0, 1);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = u(rng);
    return v;
}

double gap(const Vec& a, const Vec& b) { return torus_delta(a, b).norm(); }

Mat diag2(double a, double b)
{
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Mat rot(double t)
{
    Mat m(2, 2);
    m << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    return m;
}

IFSSpec linear_ifs(const FiberManifold& man, const std::vector<Mat>& ms, std::uint64_t seed = 1)
{
    IFSSpec s;
    s.manifold = man;
    s.seed = seed;
    for (const Mat& m : ms) s.maps.push_back(linear_map(man, m));
    return s;
}

int shell(const std::string& args);
std::string slurp(const fs::path& p);

// ---- spectral

Outcome spectral_suite()
{
    const double top = std::log((3 + std::sqrt(5.0)) / 2);
    const SpectralSummary s = spectral_summary(cat);
    bool ok = s.log_moduli.size() == 2 && std::fabs(s.log_moduli[0] + 0.96242) < 1e-5 &&
              std::fabs(s.log_moduli[1] - 0.96242) < 1e-5 && std::fabs(s.log_moduli[1] - top) < 1e-12 &&
              s.b.has_value() && *s.b == 1;
    int flip = 0;
    for (int k = 1; k <= 12; ++k) {
        const bool holds = check_example_conditions(cat, cat, k);
        if (holds && flip == 0) flip = k;
        if (flip != 0 && !holds) ok = false;  // must stay true once it flips
    }
    ok = ok && flip == 5;
    return {ok, "log moduli " + num(s.log_moduli[0]) + "," + num(s.log_moduli[1]) + ", b=" +
                    std::to_string(s.b.value_or(-1)) + ", example conditions first hold at k=" + std::to_string(flip)};
}

// ---- holonomy exactness

struct Wave {
    Vec amp, freq;
    double phase;
};

Vec tau(const Vec& y)
{
    static const std::vector<Wave> waves{{v1(0.1), v2(1, 0), 0.0}, {v1(0.05), v2(0, 1), 0.3}};
    Vec v = v1(0.05);
    for (const Wave& w : waves) v += w.amp * std::sin(2 * M_PI * (w.freq.dot(y) + w.phase));
    return v;
}

FiberMap tau_fiber()
{
    return FiberMap(torus1, {make_translation(v1(0.05), {TrigTerm{v1(0.1), v2(1, 0), 0.0},
                                                          TrigTerm{v1(0.05), v2(0, 1), 0.3}})});
}

Vec step(const Vec& y, bool forward)
{
    const long double a = y(0), b = y(1);
    long double x0 = forward ? 2 * a + b : a - b, x1 = forward ? a + b : -a + 2 * b;
    x0 -= std::floor(x0);
    x1 -= std::floor(x1);
    return v2(double(x0), double(x1));
}

// fiber translation accumulated along a leg, summed over the orbit
Vec leg_series(const Vec& from, const Vec& delta, bool unstable)
{
    Vec sum = Vec::Zero(1), w = from;
    double scale = 1;
    for (int k = 0; k < 80; ++k) {
        if (unstable) {
            w = step(w, false);
            scale /= kLambda;
            sum += tau(w + scale * delta) - tau(w);
        } else {
            sum += tau(w) - tau(w + scale * delta);
            w = step(w, true);
            scale /= kLambda;
        }
    }
    return sum;
}

Outcome holonomy_exactness()
{
    const SkewProduct dec(cat, linear_map(torus2, cat_entries().cast<double>()), true);
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> t(-0.1, 0.1);
    double worst_id = 0;
    for (int i = 0; i < 1000; ++i) {
        const Vec y = random_point(rng, 2), z = random_point(rng, 2);
        switch (i % 3) {
        case 0: worst_id = std::max(worst_id, gap(unstable_holonomy(dec, y, wrap_unit(y + t(rng) * unit_u()), z, 1e-10).z, z)); break;
        case 1: worst_id = std::max(worst_id, gap(stable_holonomy(dec, y, wrap_unit(y + t(rng) * unit_s()), z, 1e-10).z, z)); break;
        default: {
            const LoopFamily fam = build_loop_family(dec, y, 0.1);
            worst_id = std::max(worst_id, gap(loop_holonomy(dec, fam.loop(t(rng)), z, 1e-10).z, z));
        }
        }
    }

    const SkewProduct tr(cat, tau_fiber(), true);
    std::uniform_real_distribution<double> s(-0.15, 0.15);
    double worst_series = 0;
    for (int i = 0; i < 200; ++i) {
        const Vec y = random_point(rng, 2), z = random_point(rng, 1);
        const Vec du = s(rng) * unit_u(), ds = s(rng) * unit_s();
        worst_series = std::max(worst_series, gap(unstable_holonomy(tr, y, wrap_unit(y + du), z, 1e-12).z,
                                                  wrap_unit(z + leg_series(y, du, true))));
        worst_series = std::max(worst_series, gap(stable_holonomy(tr, y, wrap_unit(y + ds), z, 1e-12).z,
                                                  wrap_unit(z + leg_series(y, ds, false))));
    }
    return {worst_id <= 1e-10 && worst_series <= 1e-8,
            "decoupled max deviation " + num(worst_id) + " over 1000 samples, translation vs series " +
                num(worst_series)};
}

// ---- holonomy decay over the fifth power of the cat map

Outcome holonomy_decay()
{
    const ToralAutomorphism base = cat.power(5);
    const SkewProduct f(base, FiberMap(torus2, {make_shear(0, 1, 0.3, true, Bump{v2(0.5, 0.5), 0.45})}), true);
    const double rate = base_xi(base);

    std::mt19937_64 rng(103);
    std::vector<Leg> legs;
    std::vector<Vec> zs;
    for (int i = 0; i < 400; ++i) {
        legs.push_back(Leg{random_point(rng, 2), 0.3 * unit_u(), true});
        zs.push_back(random_point(rng, 2));
    }
    std::vector<double> depth, logerr;
    for (int d = 1; d <= 12; ++d) {
        double mean = 0;
        for (size_t i = 0; i < legs.size(); ++i)
            mean += gap(leg_holonomy_at_depth(f, legs[i], zs[i], d), leg_holonomy_at_depth(f, legs[i], zs[i], d + 5));
        mean /= legs.size();
        if (mean < 1e-15) break;  // rounding floor sits near 1e-17
        depth.push_back(d);
        logerr.push_back(std::log(mean));
    }
    if (depth.size() < 3) return {false, "fewer than three depths above the rounding floor"};
    const double fitted = -fit_slope(depth, logerr), r2 = r_squared(depth, logerr);
    return {fitted >= rate - 0.1 && r2 > 0.98, "fitted rate " + num(fitted) + " vs xi " + num(rate) + ", R^2 " +
                                                   num(r2) + " over " + std::to_string(depth.size()) + " depths"};
}

// ---- deformation residual against the return time

Outcome deformation_estimate()
{
    const SkewProduct f(cat, FiberMap(torus1, {make_translation(v1(0.1))}), true);
    const double rate = base_xi(cat);
    std::vector<double> ret, logres;
    std::string pts;
    for (int p = 4; p <= 7; ++p) {
        const RationalPoint q = separated_periodic_point(cat_entries(), p);
        const double g = orbit_gap(cat_entries(), q, p);
        const double C0 = build_loop_family(f, q.real(), 0.01).C0;
        const double r = 0.2 * g * std::pow(kLambda, -(p - 1));
        const double sigma = 6.0 * C0 * r;
        const Vec y1 = wrap_unit(q.real() + 0.4 * r * unit_u());
        const double t = build_loop_family(f, y1, sigma).phi(1, 1.0, 1);
        const LoopFamily fam = build_loop_family(f, wrap_unit(y1 - t * unit_u()), sigma);
        const SuLoop loop = fam.loop(t);
        const InfinitesimalDeformation v = build_deformation(f.manifold(), {loop}, sigma, 1, fam.C0);
        const long long R = recurrence_time(cat, loop.y1(), r).n;
        const LinearApproxReport rep = verify_linear_approx(f, v, loop, v1(0.3));
        if (rep.residual <= 0) return {false, "zero residual at period " + std::to_string(p)};
        ret.push_back(double(R));
        logres.push_back(std::log(rep.residual));
        pts += (pts.empty() ? "" : ",") + std::to_string(R);
    }
    const double slope = fit_slope(ret, logres);
    return {slope <= -(rate - 0.1),
            "slope " + num(slope) + " vs -(xi-0.1) = " + num(-(rate - 0.1)) + " over return times " + pts};
}

// ---- uniformity expectations

using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

Mat gaussian(int d, std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = n(rng);
    return m;
}

Mat moderate_matrix(int d, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1, 1);
    Vec s(d);
    for (int i = 0; i < d; ++i) s(i) = std::exp(u(rng));
    Eigen::HouseholderQR<Mat> a(gaussian(d, rng)), b(gaussian(d, rng));
    return Mat(a.householderQ() * Mat::Identity(d, d)) * s.asDiagonal() * Mat(b.householderQ() * Mat::Identity(d, d));
}

// codimension one: C = log(|det A| / vol(A E)); D = log of the smallest singular value of A on E
std::pair<double, double> enumerate(const std::vector<Mat>& ms, const Mat& frame, int n)
{
    const int k = static_cast<int>(ms.size()), d = static_cast<int>(frame.rows());
    long long total = 1;
    for (int i = 0; i < n; ++i) total *= k;
    long double sc = 0, sd = 0;
    for (long long w = 0; w < total; ++w) {
        LMat a = LMat::Identity(d, d);
        long long rem = w;
        for (int i = 0; i < n; ++i, rem /= k) a = ms[rem % k].cast<long double>() * a;
        const long double det = std::fabs(a.determinant());
        const LMat img = a * frame.cast<long double>();
        if (frame.cols() == 1) {
            sc += std::log(det / img.norm());
            sd += std::log(img.norm());
        } else {
            const LVec c0 = img.col(0), c1 = img.col(1);
            LVec x(3);
            x << c0(1) * c1(2) - c0(2) * c1(1), c0(2) * c1(0) - c0(0) * c1(2), c0(0) * c1(1) - c0(1) * c1(0);
            sc += std::log(det / x.norm());
            const LMat g = img.transpose() * img;
            const long double tr = g.trace(), gd = g.determinant();
            sd += 0.5L * std::log(tr / 2 - std::sqrt(tr * tr / 4 - gd));
        }
    }
    return {double(sc / total), double(sd / total)};
}

Outcome uniformity_oracle()
{
    std::mt19937_64 rng(107);
    double worst = 0, worst_z = -1e300;
    for (int d : {2, 3}) {
        const FiberManifold man{ManifoldKind::Euclidean, d};
        for (int k = 1; k <= 3; ++k) {
            std::vector<Mat> ms;
            for (int i = 0; i < k; ++i) ms.push_back(moderate_matrix(d, rng));
            const IFSSpec spec = linear_ifs(man, ms, 5);
            const GrassmannPoint e = orthonormalize(gaussian(d, rng).leftCols(d - 1));
            for (int n = 1; n <= 6; ++n) {
                const auto want = enumerate(ms, e.frame, n);
                const auto got = estimate_CD(spec, Vec::Zero(d), e, n, 10, ExpectationMode::Exhaustive);
                if (!got.first.exhaustive) return {false, "enumeration did not run exhaustively"};
                worst = std::max({worst, std::fabs(got.first.mean - want.first), std::fabs(got.second.mean - want.second)});
            }
            const auto want = enumerate(ms, e.frame, 6);
            const auto mc = estimate_CD(spec, Vec::Zero(d), e, 6, 10000, ExpectationMode::MonteCarlo);
            // a single map has zero spread; then only rounding separates the two
            worst_z = std::max({worst_z, (std::fabs(mc.first.mean - want.first) - 1e-12) / mc.first.stderr_,
                                (std::fabs(mc.second.mean - want.second) - 1e-12) / mc.second.stderr_});
        }
    }
    return {worst <= 1e-12 && worst_z <= 4,
            "enumeration max error " + num(worst) + ", Monte Carlo max deviation in standard errors " + num(worst_z) + " at 1e4 samples"};
}

// ---- Lyapunov

Outcome lyapunov_check()
{
    const double top = std::log((3 + std::sqrt(5.0)) / 2);
    const IFSSpec catifs = read_ifs_description(kData + "/cat_ifs.yaml").spec;
    const std::vector<double> l = lyapunov_spectrum(catifs, v2(0.1, 0.2), 100000, 0);
    const double err = std::max(std::fabs(l[0] + top), std::fabs(l[1] - top));

    // volume preserving families: sum of exponents vanishes
    double worst_sum = std::fabs(l[0] + l[1]);
    IFSSpec torus_pair;
    torus_pair.manifold = torus2;
    torus_pair.seed = 3;
    torus_pair.maps.push_back(linear_map(torus2, cat_entries().cast<double>()));
    torus_pair.maps.push_back(linear_map(torus2, (Mat(2, 2) << 1, 1, 0, 1).finished()));
    const std::vector<double> tp = lyapunov_spectrum(torus_pair, v2(0.1, 0.2), 100000, 0);
    worst_sum = std::max(worst_sum, std::fabs(tp[0] + tp[1]));
    const IFSSpec sphere = read_ifs_description(kData + "/sphere_ifs.yaml").spec;
    Vec north(3);
    north << 0, 0, 1;
    const std::vector<double> sp = lyapunov_spectrum(sphere, north, 100000, 0);
    double ssum = 0;
    for (double x : sp) ssum += x;
    worst_sum = std::max(worst_sum, std::fabs(ssum));
    return {err <= 1e-3 && worst_sum <= 1e-3,
            "cat exponents " + num(l[0]) + "," + num(l[1]) + " (error " + num(err) + "), max |sum| " + num(worst_sum)};
}

// ---- uniformity refusals and the conjugated family

Outcome uniformity_refusals()
{
    const UniformityCertificate hyp = certify_uniformity(linear_ifs(plane, {diag2(1.0 / 3, 3)}), 1, 2, UniformityGrid{2, 12}, 100);
    const double axis_angle = principal_angle(hyp.witness_E, span(v2(1, 0)));
    const bool hyp_ok = !hyp.valid && hyp.worst_C > 0 && axis_angle < 1e-2;

    const UniformityCertificate rots = certify_uniformity(linear_ifs(plane, {rot(0.4), rot(1.3)}), 1, 3, UniformityGrid{2, 12}, 100);
    const bool rot_ok = !rots.valid && std::fabs(rots.worst_C) < 1e-12;

    std::vector<double> kappa;
    UniformityCertificate last;
    for (int K : {2, 4, 8}) {
        const IFSSpec s = build_conjugated_family(linear_map(plane, diag2(0.5, 2)), {linear_map(plane, rot(1.0))}, K, 7);
        last = certify_uniformity(s, 1, 4, UniformityGrid{1, 24}, 1000);
        kappa.push_back(last.kappa1);
    }
    bool sweep_ok = kappa[0] < kappa[1] && kappa[1] < kappa[2] && last.valid && last.kappa2 < last.kappa1;

    // the same K = 8 family from its description file, end to end through the CLI
    const fs::path out = fs::temp_directory_path() / ("phskew_acceptance_k8_" + std::to_string(::getpid()));
    const int status = shell("certify --ifs " + kData + "/conjugated_k8.yaml --b 1 --n0 4 --grid_points 1 "
                             "--grid_subspaces 24 --samples 1000 --output " + out.string());
    const std::string rep = slurp(out / "report.tsv");
    const auto at = rep.find("\nkappa1\t");
    const double cli_kappa = at == std::string::npos ? 0 : std::stod(rep.substr(at + 8));
    fs::remove_all(out);
    sweep_ok = sweep_ok && status == 0 && std::fabs(cli_kappa - kappa[2]) < 1e-12;
    return {hyp_ok && rot_ok && sweep_ok,
            std::string("hyperbolic ") + (hyp_ok ? "refused" : "NOT refused") + " (witness angle to e1 " +
                num(axis_angle) + ", C " + num(hyp.worst_C) + "), rotations " + (rot_ok ? "refused" : "NOT refused") +
                " (C " + num(rots.worst_C) + "), kappa1 over K=2,4,8: " + num(kappa[0]) + "," + num(kappa[1]) + "," +
                num(kappa[2]) + ", kappa2 at K=8 " + num(last.kappa2) + ", CLI exit " + std::to_string(status) +
                " kappa1 " + num(cli_kappa)};
}

// ---- accessibility

Outcome accessibility_check()
{
    const Covering cov = build_covering(2, default_light_eps(2), 0.75);
    const CoveringCheck chk = validate_covering(cov, 100);
    const bool cov_ok = cov.K0 == 4 && cov.K1 == 9 && chk.probes == 10000 && chk.valid();

    const SkewProduct dec(cat, linear_map(torus2, cat_entries().cast<double>()), true);
    const LoopFamily fam = build_loop_family(dec, v2(0.3, 0.4), 0.1);
    const StableValueResult flat =
        stable_value_check(skew_param_map(dec, fam, v2(0.5, 0.5), 1e-10), cov, 0.25, 1e-10);

    const ParamMap injective{FiberManifold{ManifoldKind::Euclidean, 2}, [](const Vec& s) { return s; }};
    const StableValueResult inj = stable_value_check(injective, cov, 5e-4, 0.0);
    const bool ok = cov_ok && flat.verdict == Verdict::Fail && inj.verdict == Verdict::Pass;
    return {ok, "K0=" + std::to_string(cov.K0) + " K1=" + std::to_string(cov.K1) + ", probes " +
                    std::to_string(chk.probes) + " min multiplicity " + std::to_string(chk.min_multiplicity) +
                    (chk.valid() ? " valid" : " INVALID") + ", decoupled " +
                    (flat.verdict == Verdict::Fail ? "fails" : "does not fail") + ", injective hook " +
                    (inj.verdict == Verdict::Pass ? "passes" : "does not pass")};
}

// ---- transitivity diagnostics

Outcome transitivity()
{
    IFSSpec shift;
    shift.manifold = torus1;
    shift.maps.push_back(FiberMap(torus1, {make_translation(v1((std::sqrt(5.0) - 1) / 2))}));
    long long reached = 0;
    double cov1 = 0;
    for (long long n = 1000; n <= 10000000; n *= 10) {
        cov1 = orbit_density(shift, Vec::Zero(1), n, 1e-3).coverage;
        if (cov1 >= 0.99) {
            reached = n;
            break;
        }
    }
    const IFSSpec sphere = read_ifs_description(kData + "/sphere_ifs.yaml").spec;
    Vec north(3);
    north << 0, 0, 1;
    const DensityReport s = orbit_density(sphere, north, 1000000, 0.05);
    return {reached > 0 && s.coverage >= 0.95,
            "translation coverage " + num(cov1) + (reached ? " at n=" + std::to_string(reached) : " (not reached)") +
                ", sphere coverage " + num(s.coverage) + " of " + std::to_string(s.cells) + " cells at n=1e6"};
}

// ---- CLI determinism

int shell(const std::string& args)
{
    const int st = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const fs::path root = fs::temp_directory_path() / ("phskew_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::string sk = kData + "/translation_fiber.yaml";
    const std::vector<std::string> runs = {
        "certify-matrix --config " + kData + "/run_certify_matrix.yaml",
        "classify-skew --matrix " + kData + "/cat.mat --fiber_matrix " + kData + "/shear.mat",
        "holonomy --skew " + sk + " --kind loop --y 0.3,0.4 --z 0.2",
        "holonomy --skew " + kData + "/decoupled.yaml --kind stable --y 0.3,0.4 --y2 0.3,0.4 --z 0.7",
        "accessibility --skew " + sk + " --y 0.3,0.4 --x0 0.2 --grid_step 0.05",
        "deform-verify --skew " + sk + " --y 0.3,0.4 --x0 0.2",
        "certify --ifs " + kData + "/sphere_ifs.yaml --b 1 --n0 3 --samples 5000 --seed 5",
        "certify --ifs " + kData + "/cat_ifs.yaml --b 1 --n0 2",
        "certify --ifs " + kData + "/conjugated_k8.yaml --b 1 --n0 4 --moment_n 2,4,6 --samples 500",
        "lyapunov --ifs " + kData + "/sphere_ifs.yaml --x0 0,0,1 --n 100000 --seed 9",
        "density --ifs " + kData + "/sphere_ifs.yaml --x0 0,0,1 --n 100000 --eps 0.05",
    };
    int same = 0, i = 0;
    std::string bad;
    for (const std::string& args : runs) {
        const fs::path a = root / ("w1_" + std::to_string(i)), b = root / ("w8_" + std::to_string(i));
        const int sa = shell(args + " --workers 1 --output " + a.string());
        const int sb = shell(args + " --workers 8 --output " + b.string());
        const std::string ra = slurp(a / "report.tsv");
        if (sa == sb && sa != 1 && !ra.empty() && ra == slurp(b / "report.tsv")) ++same;
        else bad += " [" + args.substr(0, args.find(' ')) + "]";
        ++i;
    }
    fs::remove_all(root);
    return {same == static_cast<int>(runs.size()),
            std::to_string(same) + "/" + std::to_string(runs.size()) + " runs byte-identical across 1 and 8 workers" + bad};
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        std::string name;
        double budget;  // seconds, 0 when unbounded
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> all = {
        {1, "spectral suite", 1, spectral_suite},
        {2, "holonomy exactness", 30, holonomy_exactness},
        {3, "holonomy decay", 120, holonomy_decay},
        {4, "deformation estimate", 300, deformation_estimate},
        {5, "uniformity oracle equality", 0, uniformity_oracle},
        {6, "lyapunov", 60, lyapunov_check},
        {7, "uniformity refusals", 0, uniformity_refusals},
        {8, "accessibility criterion", 120, accessibility_check},
        {9, "transitivity diagnostics", 0, transitivity},
        {10, "determinism", 0, determinism},
    };
    int failed = 0;
    for (const Criterion& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget > 0 && secs > c.budget) {
            o.pass = false;
            o.detail += "; over the " + num(c.budget) + " s budget";
        }
        failed += !o.pass;
        std::printf("criterion %2d %-28s %s  (%.2f s)  %s\n", c.id, c.name.c_str(), o.pass ? "PASS" : "FAIL", secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
