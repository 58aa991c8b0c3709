#include "phskew/accessibility.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "phskew/error.hpp"
#include "phskew/holonomy.hpp"
#include "phskew/parallel.hpp"

namespace phskew {

ParamMap skew_param_map(const SkewProduct& f, const LoopFamily& fam, const Vec& x0, double tol)
{
    return ParamMap{f.manifold(), [&f, fam, x0, tol](const Vec& s) { return phi_map(f, fam, x0, s, tol).z; }};
}

std::string verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

struct CellKey {
    std::vector<long long> k;
    bool operator==(const CellKey& o) const { return k == o.k; }
};

struct CellHash {
    std::size_t operator()(const CellKey& c) const
    {
        std::size_t h = 1469598103934665603ULL;
        for (long long v : c.k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
        return h;
    }
};

class CellIndex {
public:
    CellIndex(const FiberManifold& man, double cell) : cell_(cell)
    {
        if (man.kind == ManifoldKind::Torus) per_axis_ = std::max<long long>(1, static_cast<long long>(1.0 / cell));
    }

    CellKey key(const Vec& p) const
    {
        CellKey k;
        k.k.resize(p.size());
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (per_axis_ > 0)
                k.k[i] = std::min(per_axis_ - 1, static_cast<long long>(std::floor(p(i) * per_axis_)));
            else
                k.k[i] = static_cast<long long>(std::floor(p(i) / cell_));
        }
        return k;
    }

    std::vector<CellKey> neighbours(const CellKey& c) const
    {
        std::vector<CellKey> out;
        const std::size_t d = c.k.size();
        std::vector<int> off(d, -1);
        while (true) {
            CellKey n = c;
            for (std::size_t i = 0; i < d; ++i) {
                n.k[i] += off[i];
                if (per_axis_ > 0) n.k[i] = ((n.k[i] % per_axis_) + per_axis_) % per_axis_;
            }
            if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
            std::size_t j = 0;
            for (; j < d; ++j) {
                if (++off[j] <= 1) break;
                off[j] = -1;
            }
            if (j == d) break;
        }
        return out;
    }

private:
    double cell_;
    long long per_axis_ = 0;
};

} // namespace

StableValueResult stable_value_check(const ParamMap& phi, const Covering& cov, double grid_step, double tol,
                                     int workers)
{
    if (!(grid_step > 0) || grid_step > 1) throw Error(Errc::InvalidArgument, "grid_step must lie in (0, 1]");
    if (!(tol >= 0)) throw Error(Errc::InvalidArgument, "tolerance must be non-negative");
    const int c = cov.c;
    const int m = static_cast<int>(std::ceil(3.0 / grid_step - 1e-9));
    long long per_slice = 1;
    for (int i = 1; i < c; ++i) per_slice *= (m + 1);

    StableValueResult res;
    res.theta = cov.theta;

    // sample every slice of every axis
    std::vector<std::vector<std::vector<Vec>>> images(c);
    for (int axis = 0; axis < c; ++axis) {
        const auto& vals = cov.boundary[axis];
        images[axis] = parallel_map<std::vector<Vec>>(vals.size(), workers, [&](std::size_t v) {
            std::vector<Vec> out;
            out.reserve(per_slice);
            std::vector<int> idx(std::max(c - 1, 1), 0);
            for (long long n = 0; n < per_slice; ++n) {
                Vec s(c);
                int q = 0;
                for (int i = 0; i < c; ++i)
                    s(i) = (i == axis) ? vals[v] : std::min(2.0, -1.0 + grid_step * idx[q++]);
                out.push_back(phi.eval(s));
                for (int j = 0; j < c - 1; ++j) {
                    if (++idx[j] <= m) break;
                    idx[j] = 0;
                }
            }
            return out;
        });
        res.evaluations += static_cast<long long>(vals.size()) * per_slice;
    }

    // Hoelder constant along each sampled direction of the slices
    const FiberManifold& man = phi.target;
    double lambda = 0;
    for (int axis = 0; axis < c; ++axis) {
        for (const auto& slice : images[axis]) {
            long long stride = 1;
            for (int j = 0; j < c - 1; ++j) {
                for (long long n = 0; n < per_slice; ++n) {
                    if ((n / stride) % (m + 1) == m) continue;
                    const double d = man.distance(slice[n], slice[n + stride]);
                    const double step = std::min(grid_step, 2.0 - (-1.0 + grid_step * ((n / stride) % (m + 1))));
                    if (step > 0) lambda = std::max(lambda, d / std::pow(step, cov.theta));
                }
                stride *= (m + 1);
            }
        }
    }
    res.holder_constant = lambda;
    res.delta = lambda * std::pow(grid_step, cov.theta) + tol;
    const double delta = res.delta;
    const int need = cov.K0 - 1;

    res.verdict = Verdict::Pass;
    double best_overall = 1e300;
    for (int axis = 0; axis < c; ++axis) {
        AxisMargin margin;
        margin.axis = axis + 1;
        margin.collision_radius = 1e300;
        const auto& vals = cov.boundary[axis];
        CellIndex index(man, std::max(2 * delta, 1e-9));
        std::unordered_map<CellKey, std::vector<std::pair<int, int>>, CellHash> cells;
        for (int v = 0; v < static_cast<int>(vals.size()); ++v)
            for (int n = 0; n < static_cast<int>(images[axis][v].size()); ++n)
                cells[index.key(images[axis][v][n])].push_back({v, n});

        bool failed = false;
        std::vector<double> nearest(vals.size());
        std::vector<int> touched;
        for (int v = 0; v < static_cast<int>(vals.size()) && !failed; ++v) {
            for (int n = 0; n < static_cast<int>(images[axis][v].size()) && !failed; ++n) {
                const Vec& p = images[axis][v][n];
                touched.clear();
                int close = 0;
                for (const CellKey& nb : index.neighbours(index.key(p))) {
                    const auto it = cells.find(nb);
                    if (it == cells.end()) continue;
                    for (const auto& [w, k] : it->second) {
                        if (w == v) continue;
                        const double d = man.distance(p, images[axis][w][k]);
                        if (d > 2 * delta) continue;
                        if (std::find(touched.begin(), touched.end(), w) == touched.end()) {
                            touched.push_back(w);
                            nearest[w] = d;
                            if (d <= delta) ++close;
                        } else if (d < nearest[w]) {
                            if (nearest[w] > delta && d <= delta) ++close;
                            nearest[w] = d;
                        }
                        if (close >= need) break;
                    }
                    if (close >= need) break;
                }
                if (static_cast<int>(touched.size()) < need) continue;
                std::sort(touched.begin(), touched.end(), [&](int a, int b) { return nearest[a] < nearest[b]; });
                const double radius = need > 0 ? nearest[touched[need - 1]] : 0.0;
                if (radius < margin.collision_radius) {
                    margin.collision_radius = radius;
                    margin.values.assign(1, vals[v]);
                    for (int q = 0; q < need; ++q) margin.values.push_back(vals[touched[q]]);
                    if (radius < best_overall) {
                        best_overall = radius;
                        res.witness_axis = axis + 1;
                        res.witness_values = margin.values;
                        res.witness_point = p;
                    }
                }
                if (radius <= delta) failed = true;
            }
        }
        if (failed)
            margin.verdict = Verdict::Fail;
        else if (margin.collision_radius < 2 * delta)
            margin.verdict = Verdict::Inconclusive;
        res.axes.push_back(margin);
        if (margin.verdict == Verdict::Fail) {
            res.verdict = Verdict::Fail;
            break;
        }
        if (margin.verdict == Verdict::Inconclusive) res.verdict = Verdict::Inconclusive;
    }
    return res;
}

} // namespace phskew
