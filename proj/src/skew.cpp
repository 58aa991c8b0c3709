#include "phskew/skew.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "phskew/error.hpp"
#include "phskew/rng.hpp"

namespace phskew {

// ---------------------------------------------------------------- fixed point torus

FixedTorusPoint FixedTorusPoint::from_real(const Vec& y)
{
    FixedTorusPoint p;
    p.c.resize(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double x = y(i) - std::floor(y(i));
        if (x >= 1.0) x = 0.0;
        p.c[i] = static_cast<std::uint64_t>(std::ldexp(x, 64) >= 0x1.0p64 ? 0.0 : std::ldexp(x, 64));
    }
    return p;
}

Vec FixedTorusPoint::to_real() const
{
    Vec y(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        double x = std::ldexp(static_cast<double>(c[i]), -64);
        if (x >= 1.0) x = 0.0;
        y(i) = x;
    }
    return y;
}

FixedTorusPoint FixedTorusPoint::mapped(const IMat& m) const
{
    FixedTorusPoint out;
    out.c.assign(c.size(), 0);
    for (std::size_t i = 0; i < c.size(); ++i) {
        std::uint64_t acc = 0;
        for (std::size_t j = 0; j < c.size(); ++j)
            acc += static_cast<std::uint64_t>(m(i, j)) * c[j];
        out.c[i] = acc;
    }
    return out;
}

// ---------------------------------------------------------------- base geometry

namespace {

Mat invariant_subspace(const Mat& a, const Mat& seed, int dim)
{
    const int m = static_cast<int>(a.rows());
    Mat q = seed;
    if (q.cols() != dim) {
        StreamRng rng(0x5eedULL, static_cast<std::uint64_t>(dim));
        q = Mat(m, dim);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < dim; ++j) q(i, j) = rng.uniform() - 0.5;
    }
    for (int it = 0; it < 20000; ++it) {
        Eigen::HouseholderQR<Mat> qr(a * q);
        Mat next = qr.householderQ() * Mat::Identity(m, dim);
        const Mat proj_resid = next - q * (q.transpose() * next);
        q = next;
        if (proj_resid.norm() < 1e-15 && it > 4) break;
    }
    return q;
}

Mat eigen_guess(const Mat& a, bool stable, int dim)
{
    Eigen::EigenSolver<Mat> es(a);
    const int m = static_cast<int>(a.rows());
    Mat s(m, 2 * m);
    int cols = 0;
    for (int i = 0; i < m; ++i) {
        const double lm = std::log(std::abs(es.eigenvalues()[i]));
        if ((stable && lm < -kUnitModulusTol) || (!stable && lm > kUnitModulusTol)) {
            s.col(cols++) = es.eigenvectors().col(i).real();
            s.col(cols++) = es.eigenvectors().col(i).imag();
        }
    }
    if (cols == 0) return Mat(m, 0);
    Eigen::JacobiSVD<Mat> svd(s.leftCols(cols), Eigen::ComputeThinU);
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-8 * svd.singularValues()(0)) ++rank;
    if (rank != dim) return Mat(m, 0);
    return svd.matrixU().leftCols(dim);
}

void canonical_sign(Vec& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12) {
            if (v(i) < 0) v = -v;
            return;
        }
    }
}

} // namespace

void BaseGeometry::split(const Vec& d, Vec& stable, Vec& unstable) const
{
    const Vec coef = splitter * d;
    const int s = static_cast<int>(stable_basis.cols());
    stable = stable_basis * coef.head(s);
    unstable = unstable_basis * coef.tail(unstable_basis.cols());
}

std::shared_ptr<const BaseGeometry> make_base_geometry(const ToralAutomorphism& f)
{
    if (!check_anosov(f)) throw Error(Errc::NotAnosov, "base has a unit-modulus eigenvalue");
    const SpectralSummary sum = spectral_summary(f);
    const int m = f.dim();
    const int s = sum.b.value_or(0);
    const int u = m - s;
    if (s == 0 || u == 0) throw Error(Errc::NotAnosov, "base needs both stable and unstable directions");
    const Mat a = f.real();
    const Mat ainv = f.real_inverse();

    auto g = std::make_shared<BaseGeometry>();
    g->unstable_basis = invariant_subspace(a, eigen_guess(a, false, u), u);
    g->stable_basis = invariant_subspace(ainv, eigen_guess(a, true, s), s);
    for (int j = 0; j < u; ++j) {
        Vec v = g->unstable_basis.col(j);
        canonical_sign(v);
        g->unstable_basis.col(j) = v;
    }
    for (int j = 0; j < s; ++j) {
        Vec v = g->stable_basis.col(j);
        canonical_sign(v);
        g->stable_basis.col(j) = v;
    }
    g->unstable_action = g->unstable_basis.transpose() * a * g->unstable_basis;
    g->unstable_inverse_action = g->unstable_action.inverse();
    g->stable_action = g->stable_basis.transpose() * a * g->stable_basis;
    Mat both(m, m);
    both << g->stable_basis, g->unstable_basis;
    g->splitter = both.inverse();
    g->e_s = g->stable_basis.col(0);
    g->e_u = g->unstable_basis.col(0);
    g->chi_bar_s = -sum.log_moduli[s - 1];
    g->chi_hat_s = -sum.log_moduli.front();
    g->chi_bar_u = sum.log_moduli[s];
    g->chi_hat_u = sum.log_moduli.back();
    return g;
}

std::pair<GrassmannPoint, GrassmannPoint> base_splitting(const ToralAutomorphism& f)
{
    const auto g = make_base_geometry(f);
    return {GrassmannPoint{g->stable_basis}, GrassmannPoint{g->unstable_basis}};
}

// ---------------------------------------------------------------- skew product

namespace {

double sample_base_lipschitz(const ToralAutomorphism& base, const FiberMap& fiber)
{
    if (!fiber.depends_on_base()) return 0.0;
    const FiberManifold& man = fiber.manifold();
    const int m = base.dim();
    StreamRng rng(0x11b5ULL, 0);
    const double h = 1e-6;
    double best = 0.0;
    for (int s = 0; s < 48; ++s) {
        Vec y(m);
        for (int i = 0; i < m; ++i) y(i) = rng.uniform();
        Vec z(man.ambient());
        for (int i = 0; i < z.size(); ++i) z(i) = man.kind == ManifoldKind::Torus ? rng.uniform() : rng.uniform() - 0.5;
        z = man.normalize(z);
        Mat jy(man.ambient(), m);
        for (int i = 0; i < m; ++i) {
            Vec yp = y, ym = y;
            yp(i) += h;
            ym(i) -= h;
            const Vec fyp = wrap_unit(base.real() * yp), fym = wrap_unit(base.real() * ym);
            const Vec gp = fiber.apply(BaseCtx{&yp, &fyp}, z);
            const Vec gm = fiber.apply(BaseCtx{&ym, &fym}, z);
            jy.col(i) = man.displacement(gm, gp) / (2 * h);
        }
        Eigen::JacobiSVD<Mat> svd(jy);
        best = std::max(best, svd.singularValues()(0));
    }
    return 2.0 * best;
}

} // namespace

SkewProduct::SkewProduct(ToralAutomorphism base, FiberMap fiber, bool volume_preserving)
    : base_(std::move(base)), fiber_(std::move(fiber)), volume_preserving_(volume_preserving)
{
    if (volume_preserving_ && !fiber_.volume_preserving())
        throw Error(Errc::InvalidArgument, "declared volume preserving but a primitive is not");
    if (check_anosov(base_)) geometry_ = make_base_geometry(base_);
    base_lipschitz_ = sample_base_lipschitz(base_, fiber_);
}

const BaseGeometry& SkewProduct::geometry() const
{
    if (!geometry_) throw Error(Errc::NotAnosov, "base is not Anosov");
    return *geometry_;
}

Vec SkewProduct::base_map(const Vec& y) const
{
    return FixedTorusPoint::from_real(y).mapped(base_.entries()).to_real();
}

Vec SkewProduct::base_inverse(const Vec& y) const
{
    return FixedTorusPoint::from_real(y).mapped(base_.inverse_entries()).to_real();
}

Vec SkewProduct::fiber_map(const Vec& y, const Vec& z) const
{
    const Vec fy = base_map(y);
    return fiber_.apply(BaseCtx{&y, &fy}, z);
}

Vec SkewProduct::fiber_inverse(const Vec& y, const Vec& z) const
{
    const Vec fy = base_map(y);
    return fiber_.apply_inverse(BaseCtx{&y, &fy}, z);
}

Point SkewProduct::evaluate(const Point& p) const
{
    const Vec fy = base_map(p.y);
    return Point{fy, fiber_.apply(BaseCtx{&p.y, &fy}, p.z)};
}

Point SkewProduct::evaluate_inverse(const Point& p) const
{
    const Vec py = base_inverse(p.y);
    return Point{py, fiber_.apply_inverse(BaseCtx{&py, &p.y}, p.z)};
}

Mat SkewProduct::derivative_cocycle(const Point& p, int n) const
{
    const int c = fiber_dim();
    Mat total = Mat::Identity(c, c);
    Point q = p;
    Mat step;
    if (n >= 0) {
        for (int k = 0; k < n; ++k) {
            const Vec fy = base_map(q.y);
            q.z = fiber_.apply_with_jacobian(BaseCtx{&q.y, &fy}, q.z, step);
            q.y = fy;
            total = step * total;
        }
    } else {
        for (int k = 0; k < -n; ++k) {
            const Point prev = evaluate_inverse(q);
            const Vec fy = q.y;
            fiber_.apply_with_jacobian(BaseCtx{&prev.y, &fy}, prev.z, step);
            total = step.inverse() * total;
            q = prev;
        }
    }
    return total;
}

SkewProduct SkewProduct::with_fiber(FiberMap fiber) const
{
    SkewProduct out = *this;
    out.fiber_ = std::move(fiber);
    out.base_lipschitz_ = sample_base_lipschitz(out.base_, out.fiber_);
    if (out.volume_preserving_ && !out.fiber_.volume_preserving()) out.volume_preserving_ = false;
    return out;
}

// ---------------------------------------------------------------- leaves

Vec bracket(const ToralAutomorphism& f, const Vec& x, const Vec& y, const Vec& z)
{
    const Vec dy = torus_delta(x, y), dz = torus_delta(x, z);
    if (dy.cwiseAbs().maxCoeff() > kChartRadius || dz.cwiseAbs().maxCoeff() > kChartRadius)
        throw Error(Errc::OutOfLocalChart, "bracket points too far apart");
    const auto g = make_base_geometry(f);
    Vec s, u;
    g->split(dy - dz, s, u);
    return wrap_unit(x + dz + u);
}

namespace {

// min over |u| <= r of |M u - w| given the SVD of M, by the secular equation.
double ball_image_distance(const Eigen::JacobiSVD<Mat>& svd, const Vec& w, double r)
{
    const Vec wp = svd.matrixU().transpose() * w;
    const Vec& sv = svd.singularValues();
    double free_norm2 = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) free_norm2 += (wp(i) / sv(i)) * (wp(i) / sv(i));
    if (free_norm2 <= r * r) return 0.0;
    auto unorm = [&](double lam) {
        double s = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            const double ui = sv(i) * wp(i) / (sv(i) * sv(i) + lam);
            s += ui * ui;
        }
        return std::sqrt(s);
    };
    double lo = 0, hi = 1;
    while (unorm(hi) > r) hi *= 2;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (unorm(mid) > r ? lo : hi) = mid;
    }
    double d2 = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        const double ui = sv(i) * wp(i) / (sv(i) * sv(i) + hi);
        d2 += (sv(i) * ui - wp(i)) * (sv(i) * ui - wp(i));
    }
    return std::sqrt(d2);
}

// Enumerates integer shifts k with w0 + k inside the outer box of the image ellipsoid.
// Returns false when the candidate count exceeds the cap.
bool meets_shifted(const Eigen::JacobiSVD<Mat>& svd, const Vec& w0, double r, long long cap, bool& met)
{
    const int m = static_cast<int>(w0.size());
    const Mat& U = svd.matrixU();
    const Vec& sv = svd.singularValues();
    Vec halfw(m);
    for (int i = 0; i < m; ++i) halfw(i) = sv(i) * r + r;
    Vec bound(m);
    for (int j = 0; j < m; ++j) {
        double b = 0;
        for (int i = 0; i < m; ++i) b += std::abs(U(j, i)) * halfw(i);
        bound(j) = b;
    }
    long double count = 1;
    for (int j = 0; j + 1 < m; ++j) count *= 2 * bound(j) + 2;
    if (count > cap) return false;

    std::vector<long long> lo(m), hi(m);
    for (int j = 0; j < m; ++j) {
        lo[j] = static_cast<long long>(std::floor(-bound(j) - w0(j)));
        hi[j] = static_cast<long long>(std::ceil(bound(j) - w0(j)));
    }
    std::vector<long long> k(m);
    met = false;
    // odometer over the first m-1 coordinates; last coordinate solved as an interval
    std::vector<long long> cur(lo.begin(), lo.end());
    while (true) {
        Vec w = w0;
        for (int j = 0; j + 1 < m; ++j) w(j) += static_cast<double>(cur[j]);
        double tlo = -1e300, thi = 1e300;
        bool empty = false;
        for (int i = 0; i < m; ++i) {
            double base = 0;
            for (int j = 0; j + 1 < m; ++j) base += U(j, i) * w(j);
            base += U(m - 1, i) * w0(m - 1);
            const double coef = U(m - 1, i);
            if (std::abs(coef) < 1e-300) {
                if (std::abs(base) > halfw(i)) empty = true;
                continue;
            }
            double a = (-halfw(i) - base) / coef, b = (halfw(i) - base) / coef;
            if (a > b) std::swap(a, b);
            tlo = std::max(tlo, a);
            thi = std::min(thi, b);
        }
        if (!empty && tlo <= thi) {
            for (long long t = static_cast<long long>(std::ceil(tlo)); t <= static_cast<long long>(std::floor(thi)); ++t) {
                Vec wk = w;
                wk(m - 1) = w0(m - 1) + static_cast<double>(t);
                if (ball_image_distance(svd, wk, r) < r + 1e-12) {
                    met = true;
                    return true;
                }
            }
        }
        int j = 0;
        for (; j + 1 < m; ++j) {
            if (++cur[j] <= hi[j]) break;
            cur[j] = lo[j];
        }
        if (j + 1 >= m) break;
    }
    return true;
}

} // namespace

RecurrenceResult recurrence_time(const ToralAutomorphism& f, const Vec& center, double radius, long long n_max)
{
    if (!(radius > 0) || radius >= kChartRadius) throw Error(Errc::RadiusTooLarge, "radius must be in (0, 0.25)");
    const FixedTorusPoint c0 = FixedTorusPoint::from_real(center);
    FixedTorusPoint cn = c0;
    const Vec cr = c0.to_real();
    Mat power = Mat::Identity(f.dim(), f.dim());
    const Mat a = f.real();
    for (long long n = 1; n <= n_max; ++n) {
        cn = cn.mapped(f.entries());
        power = a * power;
        Eigen::JacobiSVD<Mat> svd(power, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vec w0 = torus_delta(cn.to_real(), cr);
        bool met = false;
        if (!meets_shifted(svd, w0, radius, 20000000LL, met) || met) return RecurrenceResult{n, false};
        if (!power.allFinite()) return RecurrenceResult{n, false};
    }
    return RecurrenceResult{n_max, true};
}

double min_return_distance(const ToralAutomorphism& f, const Vec& y, long long horizon)
{
    const FixedTorusPoint p0 = FixedTorusPoint::from_real(y);
    const Vec y0 = p0.to_real();
    FixedTorusPoint p = p0;
    double best = 1e300;
    for (long long n = 1; n <= horizon; ++n) {
        p = p.mapped(f.entries());
        best = std::min(best, torus_delta(y0, p.to_real()).norm());
    }
    return best;
}

Vec Leg::to() const { return wrap_unit(from + delta); }

Vec SuLoop::y1() const { return wrap_unit(y + d1); }
Vec SuLoop::y2() const { return wrap_unit(y + d1 + d2); }
Vec SuLoop::y3() const { return wrap_unit(y + d1 + d2 + d3); }

std::array<Leg, 4> SuLoop::legs() const
{
    return {Leg{y, d1, true}, Leg{y1(), d2, false}, Leg{y2(), d3, true}, Leg{y3(), d4, false}};
}

SuLoop make_su_loop(const SkewProduct& f, const Vec& y, const Vec& y1, const Vec& y2, const Vec& y3)
{
    const BaseGeometry& g = f.geometry();
    SuLoop l;
    l.y = y;
    const Vec pts[5] = {y, y1, y2, y3, y};
    Vec* ds[4] = {&l.d1, &l.d2, &l.d3, &l.d4};
    for (int i = 0; i < 4; ++i) {
        const Vec d = torus_delta(pts[i], pts[i + 1]);
        if (d.cwiseAbs().maxCoeff() > kChartRadius) throw Error(Errc::OutOfLocalChart, "loop leg too long");
        Vec s, u;
        g.split(d, s, u);
        const bool unstable = (i % 2 == 0);
        const Vec& wrong = unstable ? s : u;
        if (wrong.norm() > 1e-9)
            throw Error(unstable ? Errc::NotOnUnstableLeaf : Errc::NotOnStableLeaf,
                        "loop leg " + std::to_string(i + 1) + " leaves its leaf by " + std::to_string(wrong.norm()));
        *ds[i] = unstable ? u : s;
    }
    // close the loop exactly: the last stable leg undoes the others
    Vec s, u;
    g.split(-(l.d1 + l.d2 + l.d3), s, u);
    l.d4 = s;
    return l;
}

// ---------------------------------------------------------------- loop family

Vec LoopFamily::psi(double t) const { return wrap_unit(y + t * e_u); }

Vec LoopFamily::z() const { return wrap_unit(y + 0.75 * sigma * e_s); }

SuLoop LoopFamily::loop(double t) const
{
    SuLoop l;
    l.y = y;
    l.d1 = t * e_u;
    l.d2 = 0.75 * sigma * e_s;
    l.d3 = -t * e_u;
    l.d4 = -0.75 * sigma * e_s;
    return l;
}

double LoopFamily::phi(int i, double s, int c) const
{
    return sigma / (C0 * 6.0 * c) * (6.0 * i - 2.0 + s);
}

namespace {

double segment_distance(const Vec& p, const Vec& a, const Vec& dir, double len)
{
    const double t = std::clamp((p - a).dot(dir), 0.0, len);
    return (p - a - t * dir).norm();
}

} // namespace

LoopFamily build_loop_family(const SkewProduct& f, const Vec& y, double sigma)
{
    if (!(sigma > 0) || sigma > 0.2) throw Error(Errc::SigmaTooLarge, "sigma must lie in (0, 0.2]");
    const BaseGeometry& g = f.geometry();
    LoopFamily fam;
    fam.y = wrap_unit(y);
    fam.sigma = sigma;
    fam.e_u = g.e_u;
    fam.e_s = g.e_s;
    const double sin_angle = std::sqrt(std::max(0.0, 1.0 - std::pow(g.e_u.dot(g.e_s), 2)));
    fam.C0 = std::max(1.0, 1.5 / sin_angle);
    const double len = sigma / fam.C0;

    double sep = 1e300, reach = 0;
    const Vec origin = Vec::Zero(y.size());
    const int samples = 100;
    for (int k = 0; k < samples; ++k) {
        const double t = len * k / (samples - 1);
        const Vec corner = t * g.e_u + 0.75 * sigma * g.e_s;  // [psi(t), z] - y
        sep = std::min(sep, segment_distance(corner, origin, g.e_u, len));
        reach = std::max({reach, corner.norm(), t, 0.75 * sigma});
        // property (2) holds with equality for a straight leaf; check it numerically anyway
        const double t2 = len * (k + 0.5) / samples;
        if (std::abs((t2 * g.e_u - t * g.e_u).norm() - std::abs(t2 - t)) > 1e-12)
            throw Error(Errc::ConstructionFailed, "leaf parametrization is not isometric");
    }
    if (!(sep > len)) throw Error(Errc::ConstructionFailed, "loop family separation property fails");
    if (reach > kChartRadius) throw Error(Errc::SigmaTooLarge, "loop leaves the local chart");
    fam.min_separation = sep;
    fam.C1 = reach / sigma;
    fam.samples_checked = samples;
    return fam;
}

} // namespace phskew
