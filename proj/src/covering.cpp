#include "phskew/covering.hpp"

#include <algorithm>
#include <cmath>

#include "phskew/error.hpp"

namespace phskew {

bool Box::contains_interior(const Vec& x) const
{
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x(i) > lo(i) && x(i) < hi(i))) return false;
    return true;
}

double Box::diameter() const { return (hi - lo).norm(); }

bool boundaries_disjoint(const Box& a, const Box& b)
{
    const Eigen::Index c = a.lo.size();
    bool a_in_b = true, b_in_a = true, apart = false;
    for (Eigen::Index i = 0; i < c; ++i) {
        a_in_b = a_in_b && a.lo(i) > b.lo(i) && a.hi(i) < b.hi(i);
        b_in_a = b_in_a && b.lo(i) > a.lo(i) && b.hi(i) < a.hi(i);
        apart = apart || a.hi(i) < b.lo(i) || b.hi(i) < a.lo(i);
    }
    if (c == 1) {
        // intervals: boundaries are endpoint pairs
        return a.lo(0) != b.lo(0) && a.lo(0) != b.hi(0) && a.hi(0) != b.lo(0) && a.hi(0) != b.hi(0);
    }
    return a_in_b || b_in_a || apart;
}

int covering_K0(int c, double theta)
{
    if (c < 1) throw Error(Errc::InvalidArgument, "fiber dimension must be positive");
    if (!(theta > 0) || theta > 1) throw Error(Errc::InvalidArgument, "theta must lie in (0, 1]");
    const double denom = c - (c - 1) / theta;
    if (!(denom > 0)) throw Error(Errc::InvalidArgument, "theta too small for this dimension");
    return static_cast<int>(std::ceil(c / denom - 1e-9)) + 1;
}

int covering_K1(int c, double theta) { return c * covering_K0(c, theta) + 1; }

double default_light_eps(int c) { return 0.45 / std::sqrt(static_cast<double>(c)); }

namespace {

std::vector<double> distinct_sorted(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v;
}

double min_gap(const std::vector<double>& sorted)
{
    double g = 1e300;
    for (std::size_t i = 1; i < sorted.size(); ++i) g = std::min(g, sorted[i] - sorted[i - 1]);
    return g;
}

} // namespace

Covering build_covering(int c, double eps_light, double theta)
{
    if (!(eps_light > 0)) throw Error(Errc::InvalidArgument, "lightness scale must be positive");
    Covering cov;
    cov.c = c;
    cov.theta = theta;
    cov.K0 = covering_K0(c, theta);
    cov.K1 = covering_K1(c, theta);
    cov.eps = std::min(eps_light, default_light_eps(c));
    const int sizes = cov.K1 + 1;
    const double root_c = std::sqrt(static_cast<double>(c));

    // half-sides P/2 + P(2g+1)/(4 sizes): corner residues mod P are evenly spaced
    const double top = 0.5 + (2.0 * sizes - 1) / (4.0 * sizes);
    cov.pitch = 0.99 * cov.eps / (2 * top * root_c);
    const double P = cov.pitch;
    for (int g = 0; g < sizes; ++g) cov.half_sides.push_back(P * (0.5 + (2.0 * g + 1) / (4.0 * sizes)));

    const double golden = 0.6180339887498949;
    for (int cand = 0; cand < 10000; ++cand) {
        Vec offset(c);
        for (int i = 0; i < c; ++i) {
            const double a = std::fmod(golden * (i + 1) + std::sqrt(2.0) * cand, 1.0);
            offset(i) = a * P;
        }
        // lattice range whose cubes reach [0,1]
        const long long kmin = static_cast<long long>(std::floor((0.0 - P) / P)) - 1;
        const long long kmax = static_cast<long long>(std::ceil((1.0 + P) / P)) + 1;
        std::vector<Box> boxes;
        std::vector<long long> idx(c, kmin);
        while (true) {
            Vec center(c);
            for (int i = 0; i < c; ++i) center(i) = offset(i) + P * static_cast<double>(idx[i]);
            bool useful = true;
            for (int i = 0; i < c; ++i)
                if (center(i) + cov.half_sides.back() <= 0.0 || center(i) - cov.half_sides.back() >= 1.0) useful = false;
            if (useful)
                for (double a : cov.half_sides)
                    boxes.push_back(Box{center.array() - a, center.array() + a});
            int j = 0;
            for (; j < c; ++j) {
                if (++idx[j] <= kmax) break;
                idx[j] = kmin;
            }
            if (j == c) break;
        }
        std::vector<std::vector<double>> bnd(c);
        bool ok = true;
        double gap = 1e300;
        for (int i = 0; i < c && ok; ++i) {
            std::vector<double> vals;
            for (const Box& b : boxes) {
                vals.push_back(b.lo(i));
                vals.push_back(b.hi(i));
            }
            vals = distinct_sorted(std::move(vals));
            // boxes in one lattice column share their values on this axis
            std::vector<double> uniq;
            for (double v : vals)
                if (uniq.empty() || v - uniq.back() > 1e-12) uniq.push_back(v);
            const double g = min_gap(uniq);
            if (!(g > 1e-9)) ok = false;
            gap = std::min(gap, g);
            if (uniq.front() < -1.0 || uniq.back() > 2.0) ok = false;
            bnd[i] = std::move(uniq);
        }
        if (!ok) continue;
        cov.boxes = std::move(boxes);
        cov.boundary = std::move(bnd);
        cov.min_side = 2 * cov.half_sides.front();
        cov.min_corner_gap = gap;
        cov.C_min = 10.0 / std::min(cov.min_side, gap);
        return cov;
    }
    throw Error(Errc::ConstructionFailed, "no admissible grid offset among 10^4 candidates");
}

CoveringCheck validate_covering(const Covering& cov, int per_axis)
{
    CoveringCheck out;
    const int c = cov.c;
    out.corners_in_range = true;
    out.diameters_ok = true;
    for (const Box& b : cov.boxes) {
        if (b.lo.minCoeff() < -1.0 || b.hi.maxCoeff() > 2.0) out.corners_in_range = false;
        if (!(b.diameter() < cov.eps)) out.diameters_ok = false;
    }
    out.corners_distinct = true;
    out.separation_ok = true;
    const double need = 10.0 / cov.C_min;
    for (int i = 0; i < c; ++i) {
        const auto& v = cov.boundary[i];
        for (std::size_t k = 1; k < v.size(); ++k) {
            if (!(v[k] > v[k - 1])) out.corners_distinct = false;
            if (v[k] - v[k - 1] < need * (1 - 1e-9)) out.separation_ok = false;
        }
    }

    out.multiplicity_ok = true;
    out.min_multiplicity = 1 << 30;
    std::vector<long long> idx(c, 0);
    std::vector<const Box*> inside;
    std::vector<const Box*> chosen;
    while (true) {
        Vec x(c);
        for (int i = 0; i < c; ++i) x(i) = per_axis == 1 ? 0.5 : static_cast<double>(idx[i]) / (per_axis - 1);
        inside.clear();
        for (const Box& b : cov.boxes)
            if (b.contains_interior(x)) inside.push_back(&b);
        std::sort(inside.begin(), inside.end(),
                  [](const Box* a, const Box* b) { return a->diameter() > b->diameter(); });
        int best = 0;
        for (std::size_t s = 0; s < inside.size() && best < cov.K1 + 1; ++s) {
            chosen.assign(1, inside[s]);
            for (std::size_t t = 0; t < inside.size(); ++t) {
                if (t == s) continue;
                bool ok = true;
                for (const Box* q : chosen)
                    if (!boundaries_disjoint(*q, *inside[t])) {
                        ok = false;
                        break;
                    }
                if (ok) chosen.push_back(inside[t]);
            }
            best = std::max(best, static_cast<int>(chosen.size()));
        }
        out.min_multiplicity = std::min(out.min_multiplicity, best);
        if (best < cov.K1 + 1) out.multiplicity_ok = false;
        ++out.probes;
        int j = 0;
        for (; j < c; ++j) {
            if (++idx[j] < per_axis) break;
            idx[j] = 0;
        }
        if (j == c) break;
    }
    return out;
}

} // namespace phskew
