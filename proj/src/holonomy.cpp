#include "phskew/holonomy.hpp"

#include <cmath>

#include "phskew/error.hpp"

namespace phskew {

namespace {

// Base points of the two orbits used by a leg holonomy. For unstable legs the
// orbits run backwards; second[k] = first[k] + (exact image of the leg displacement).
class LegOrbit {
public:
    LegOrbit(const SkewProduct& f, const Leg& leg) : f_(f), leg_(leg), geo_(f.geometry())
    {
        const Vec coef = geo_.splitter * leg.delta;
        const int s = static_cast<int>(geo_.stable_basis.cols());
        coef_ = leg.unstable ? Vec(coef.tail(geo_.unstable_basis.cols())) : Vec(coef.head(s));
        cursor_ = FixedTorusPoint::from_real(leg.from);
        push();
    }

    void extend(int n)
    {
        while (static_cast<int>(first_.size()) <= n) {
            cursor_ = cursor_.mapped(leg_.unstable ? f_.base().inverse_entries() : f_.base().entries());
            coef_ = leg_.unstable ? Vec(geo_.unstable_inverse_action * coef_) : Vec(geo_.stable_action * coef_);
            push();
        }
    }

    const Vec& first(int k) const { return first_[k]; }
    const Vec& second(int k) const { return second_[k]; }
    double gap(int k) const { return gaps_[k]; }

private:
    void push()
    {
        const Vec w = cursor_.to_real();
        const Vec d = leg_.unstable ? Vec(geo_.unstable_basis * coef_) : Vec(geo_.stable_basis * coef_);
        first_.push_back(w);
        second_.push_back(wrap_unit(w + d));
        gaps_.push_back(d.norm());
    }

    const SkewProduct& f_;
    Leg leg_;
    const BaseGeometry& geo_;
    Vec coef_;
    FixedTorusPoint cursor_;
    std::vector<Vec> first_, second_;
    std::vector<double> gaps_;
};

Vec truncated(const SkewProduct& f, const LegOrbit& orb, bool unstable, const Vec& z0, int n)
{
    const FiberMap& g = f.fiber();
    Vec z = z0;
    if (unstable) {
        for (int k = 1; k <= n; ++k) z = g.apply_inverse(BaseCtx{&orb.first(k), &orb.first(k - 1)}, z);
        for (int k = n; k >= 1; --k) z = g.apply(BaseCtx{&orb.second(k), &orb.second(k - 1)}, z);
    } else {
        for (int k = 0; k < n; ++k) z = g.apply(BaseCtx{&orb.first(k), &orb.first(k + 1)}, z);
        for (int k = n - 1; k >= 0; --k) z = g.apply_inverse(BaseCtx{&orb.second(k), &orb.second(k + 1)}, z);
    }
    return z;
}

Leg leg_between(const SkewProduct& f, const Vec& y1, const Vec& y2, bool unstable)
{
    const BaseGeometry& geo = f.geometry();
    const Vec d = torus_delta(y1, y2);
    if (d.cwiseAbs().maxCoeff() > kChartRadius) throw Error(Errc::OutOfLocalChart, "leaf points too far apart");
    Vec s, u;
    geo.split(d, s, u);
    const Vec& off = unstable ? s : u;
    if (off.norm() > 1e-9)
        throw Error(unstable ? Errc::NotOnUnstableLeaf : Errc::NotOnStableLeaf,
                    "off-leaf component " + std::to_string(off.norm()));
    return Leg{wrap_unit(y1), unstable ? u : s, unstable};
}

} // namespace

Vec leg_holonomy_at_depth(const SkewProduct& f, const Leg& leg, const Vec& z, int depth)
{
    LegOrbit orb(f, leg);
    orb.extend(depth);
    return truncated(f, orb, leg.unstable, z, depth);
}

HolonomyResult leg_holonomy(const SkewProduct& f, const Leg& leg, const Vec& z, double tol, int depth_cap)
{
    if (!(tol > 0)) throw Error(Errc::InvalidArgument, "tolerance must be positive");
    const FiberManifold& man = f.manifold();
    LegOrbit orb(f, leg);
    const double lip = f.fiber_base_lipschitz();
    int n = 1;
    if (lip > 0) {
        while (n < depth_cap) {
            orb.extend(n);
            if (lip * orb.gap(n) < tol) break;
            ++n;
        }
    }
    for (; n <= depth_cap; n += 5) {
        orb.extend(n + 5);
        const Vec a = truncated(f, orb, leg.unstable, z, n);
        const Vec b = truncated(f, orb, leg.unstable, z, n + 5);
        const double err = man.distance(a, b);
        if (err < tol) return HolonomyResult{b, n, err};
    }
    throw Error(Errc::NoConvergence, "holonomy did not converge within depth " + std::to_string(depth_cap));
}

HolonomyResult unstable_holonomy(const SkewProduct& f, const Vec& y1, const Vec& y2, const Vec& z, double tol,
                                 int depth_cap)
{
    return leg_holonomy(f, leg_between(f, y1, y2, true), z, tol, depth_cap);
}

HolonomyResult stable_holonomy(const SkewProduct& f, const Vec& y1, const Vec& y2, const Vec& z, double tol,
                               int depth_cap)
{
    return leg_holonomy(f, leg_between(f, y1, y2, false), z, tol, depth_cap);
}

HolonomyResult loop_holonomy(const SkewProduct& f, const SuLoop& loop, const Vec& z, double tol, int depth_cap)
{
    HolonomyResult out{z, 0, 0.0};
    for (const Leg& leg : loop.legs()) {
        const HolonomyResult r = leg_holonomy(f, leg, out.z, tol / 4, depth_cap);
        out.z = r.z;
        out.depth = std::max(out.depth, r.depth);
        out.error += r.error;
    }
    return out;
}

HolonomyResult phi_map(const SkewProduct& f, const LoopFamily& fam, const Vec& x0, const Vec& s, double tol,
                       int depth_cap)
{
    const int c = static_cast<int>(s.size());
    HolonomyResult out{x0, 0, 0.0};
    for (int i = 1; i <= c; ++i) {
        const HolonomyResult r = loop_holonomy(f, fam.loop(fam.phi(i, s(i - 1), c)), out.z, tol / c, depth_cap);
        out.z = r.z;
        out.depth = std::max(out.depth, r.depth);
        out.error += r.error;
    }
    return out;
}

Mat holonomy_jacobian(const FiberManifold& man, const FiberFunction& map, const Vec& z, double h)
{
    const Mat tz = man.tangent_basis(z);
    const Mat timg = man.tangent_basis(map(z));
    Mat jac(man.dim, man.dim);
    for (int j = 0; j < man.dim; ++j) {
        const Vec zp = man.offset(z, h * tz.col(j));
        const Vec zm = man.offset(z, -h * tz.col(j));
        jac.col(j) = timg.transpose() * man.displacement(map(zm), map(zp)) / (2 * h);
    }
    return jac;
}

Mat holonomy_jacobian(const SkewProduct& f, HolonomyKind kind, const Vec& y1, const Vec& y2, const SuLoop* loop,
                      const Vec& z, double tol, double h)
{
    FiberFunction map;
    switch (kind) {
    case HolonomyKind::Unstable:
        map = [&](const Vec& p) { return unstable_holonomy(f, y1, y2, p, tol).z; };
        break;
    case HolonomyKind::Stable:
        map = [&](const Vec& p) { return stable_holonomy(f, y1, y2, p, tol).z; };
        break;
    case HolonomyKind::Loop:
        if (!loop) throw Error(Errc::InvalidArgument, "loop holonomy needs a loop");
        map = [&](const Vec& p) { return loop_holonomy(f, *loop, p, tol).z; };
        break;
    }
    return holonomy_jacobian(f.manifold(), map, z, h);
}

} // namespace phskew
