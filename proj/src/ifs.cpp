#include "phskew/ifs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "phskew/error.hpp"
#include "phskew/parallel.hpp"
#include "phskew/rng.hpp"
#include "phskew/stats.hpp"

namespace phskew {

void IFSSpec::validate() const
{
    if (maps.empty()) throw Error(Errc::InvalidArgument, "IFS needs at least one map");
    for (const FiberMap& m : maps) {
        if (m.manifold().kind != manifold.kind || m.manifold().dim != manifold.dim)
            throw Error(Errc::DimMismatch, "IFS maps act on different manifolds");
        if (m.depends_on_base()) throw Error(Errc::InvalidArgument, "IFS maps cannot depend on a base point");
    }
}

std::vector<int> sample_word(const IFSSpec& spec, int n, std::uint64_t stream_id)
{
    StreamRng rng(spec.seed, stream_id);
    std::vector<int> w(std::max(n, 0));
    const auto k = static_cast<std::uint64_t>(spec.size());
    for (int& s : w) s = static_cast<int>(rng.below(k));
    return w;
}

WordLogs word_logs(const IFSSpec& spec, const std::vector<int>& word, const Vec& x, const GrassmannPoint& e)
{
    const int d = spec.manifold.dim;
    if (e.ambient_dim() != d) throw Error(Errc::DimMismatch, "subspace lives in the wrong dimension");
    const int l = e.dim();
    const BaseCtx none{};
    Vec p = x;
    GrassmannPoint cur = e;
    Mat comp = Mat::Identity(d - l, d - l);
    Mat rinv = Mat::Identity(l, l);
    double comp_log = 0, rinv_log = 0;
    Mat jac;
    for (int s : word) {
        p = spec.maps[s].apply_with_jacobian(none, p, jac);
        const GrassmannPoint next = pushforward(jac, cur);
        if (d - l > 0) {
            comp = compressed_complement(jac, cur, next) * comp;
            const double nrm = comp.norm();
            comp /= nrm;
            comp_log += std::log(nrm);
        }
        if (l > 0) {
            rinv = rinv * restricted_map(jac, cur, next).inverse();
            const double nrm = rinv.norm();
            rinv /= nrm;
            rinv_log += std::log(nrm);
        }
        cur = next;
    }
    WordLogs out;
    if (d - l > 0) {
        Eigen::JacobiSVD<Mat> svd(comp);
        out.C = comp_log + std::log(svd.singularValues()(0));
    }
    if (l > 0) {
        Eigen::JacobiSVD<Mat> svd(rinv);
        out.D = -(rinv_log + std::log(svd.singularValues()(0)));
    }
    return out;
}

namespace {

bool use_exhaustive(int k, int n, ExpectationMode mode)
{
    if (mode == ExpectationMode::Exhaustive) return true;
    if (mode == ExpectationMode::MonteCarlo) return false;
    long double total = 1;
    for (int i = 0; i < n; ++i) {
        total *= k;
        if (total > kExhaustiveLimit) return false;
    }
    return true;
}

std::vector<int> word_from_index(long long idx, int k, int n)
{
    std::vector<int> w(n);
    for (int i = 0; i < n; ++i) {
        w[i] = static_cast<int>(idx % k);
        idx /= k;
    }
    return w;
}

Expectation summarize(const std::vector<double>& v, bool exhaustive)
{
    Expectation e;
    const MeanStderr ms = mean_stderr(v);
    e.mean = ms.mean;
    e.stderr_ = exhaustive ? 0.0 : ms.stderr_;
    e.count = ms.count;
    e.exhaustive = exhaustive;
    return e;
}

} // namespace

std::pair<Expectation, Expectation> estimate_CD(const IFSSpec& spec, const Vec& x, const GrassmannPoint& e, int n,
                                                long long samples, ExpectationMode mode, int workers)
{
    spec.validate();
    if (e.ambient_dim() != spec.manifold.dim) throw Error(Errc::DimMismatch, "subspace lives in the wrong dimension");
    const int k = spec.size();
    const bool exhaustive = use_exhaustive(k, n, mode);
    long long count = samples;
    if (exhaustive) {
        count = 1;
        for (int i = 0; i < n; ++i) count *= k;
    }
    if (count <= 0) throw Error(Errc::InvalidArgument, "sample count must be positive");
    const auto logs = parallel_map<WordLogs>(static_cast<std::size_t>(count), workers, [&](std::size_t i) {
        const std::vector<int> w =
            exhaustive ? word_from_index(static_cast<long long>(i), k, n) : sample_word(spec, n, i);
        return word_logs(spec, w, x, e);
    });
    std::vector<double> cs, ds;
    cs.reserve(logs.size());
    ds.reserve(logs.size());
    for (const WordLogs& w : logs) {
        cs.push_back(w.C);
        ds.push_back(w.D);
    }
    return {summarize(cs, exhaustive), summarize(ds, exhaustive)};
}

Expectation estimate_C(const IFSSpec& spec, const Vec& x, const GrassmannPoint& e, int n, long long samples,
                       ExpectationMode mode, int workers)
{
    return estimate_CD(spec, x, e, n, samples, mode, workers).first;
}

Expectation estimate_D(const IFSSpec& spec, const Vec& x, const GrassmannPoint& e, int n, long long samples,
                       ExpectationMode mode, int workers)
{
    return estimate_CD(spec, x, e, n, samples, mode, workers).second;
}

std::vector<Vec> manifold_grid(const FiberManifold& man, int points)
{
    std::vector<Vec> out;
    if (points < 1) throw Error(Errc::InvalidArgument, "grid needs at least one point");
    if (man.kind == ManifoldKind::Sphere) {
        const int total = points * points;
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < total; ++i) {
            Vec p = Vec::Zero(man.ambient());
            const double z = 1.0 - (2.0 * i + 1.0) / total;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            p(0) = r * std::cos(golden * i);
            if (man.ambient() > 1) p(1) = r * std::sin(golden * i);
            p(man.ambient() - 1) = z;
            out.push_back(man.normalize(p));
        }
        return out;
    }
    const int d = man.dim;
    std::vector<int> idx(d, 0);
    while (true) {
        Vec p(d);
        for (int i = 0; i < d; ++i) {
            const double u = (idx[i] + 0.5) / points;
            p(i) = man.kind == ManifoldKind::Torus ? u : 2 * u - 1;
        }
        out.push_back(p);
        int j = 0;
        for (; j < d; ++j) {
            if (++idx[j] < points) break;
            idx[j] = 0;
        }
        if (j == d) break;
    }
    return out;
}

std::vector<GrassmannPoint> grassmann_grid(int ambient, int dim, int count)
{
    std::vector<GrassmannPoint> out;
    if (dim <= 0 || dim >= ambient) throw Error(Errc::InvalidArgument, "subspace dimension must lie in (0, d)");
    if (count < 1) throw Error(Errc::InvalidArgument, "need at least one subspace");
    if (ambient == 2) {
        for (int j = 0; j < count; ++j) {
            const double a = kPi * j / count;
            Vec v(2);
            v << std::cos(a), std::sin(a);
            out.push_back(span(v));
        }
        return out;
    }
    // coordinate subspaces first, then fixed pseudo-random frames
    std::vector<int> pick(dim);
    for (int i = 0; i < dim; ++i) pick[i] = i;
    while (static_cast<int>(out.size()) < count) {
        Mat f = Mat::Zero(ambient, dim);
        for (int i = 0; i < dim; ++i) f(pick[i], i) = 1.0;
        out.push_back(GrassmannPoint{f});
        int i = dim - 1;
        while (i >= 0 && pick[i] == ambient - dim + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < dim; ++j) pick[j] = pick[j - 1] + 1;
    }
    StreamRng rng(0x6a55ULL, static_cast<std::uint64_t>(ambient * 131 + dim));
    while (static_cast<int>(out.size()) < count) {
        Mat f(ambient, dim);
        for (int i = 0; i < ambient; ++i)
            for (int j = 0; j < dim; ++j) {
                // Box-Muller: std::normal_distribution differs between standard libraries
                const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
                f(i, j) = std::sqrt(-2 * std::log(u1)) * std::cos(kTwoPi * u2);
            }
        out.push_back(orthonormalize(f));
    }
    return out;
}

namespace {

GrassmannPoint nudge(const GrassmannPoint& e, int row, int col, double t)
{
    const Mat comp = e.complement();
    Mat f = e.frame;
    f.col(col) += t * comp.col(row);
    return orthonormalize(f);
}

struct Probe {
    Expectation C, D;
};

// Pattern search over E with x fixed; sign = +1 maximises C, -1 minimises D.
GrassmannPoint refine(const IFSSpec& spec, const Vec& x, GrassmannPoint e, Probe& best, int n0, long long samples,
                      bool on_C, double start, int workers)
{
    const int d = e.ambient_dim(), l = e.dim();
    auto score = [&](const Probe& p) { return on_C ? p.C.mean : -p.D.mean; };
    for (double t = start; t > 1e-3; t *= 0.5) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (int r = 0; r < d - l; ++r)
                for (int c = 0; c < l; ++c)
                    for (double sgn : {1.0, -1.0}) {
                        const GrassmannPoint cand = nudge(e, r, c, sgn * t);
                        const auto cd = estimate_CD(spec, x, cand, n0, samples, ExpectationMode::Auto, workers);
                        const Probe p{cd.first, cd.second};
                        if (score(p) > score(best) + 1e-12) {
                            best = p;
                            e = cand;
                            improved = true;
                        }
                    }
        }
    }
    return e;
}

} // namespace

UniformityCertificate certify_uniformity(const IFSSpec& spec, int b, int n0, const UniformityGrid& grid,
                                         long long samples, int workers)
{
    spec.validate();
    const int d = spec.manifold.dim;
    if (b < 1 || b >= d) throw Error(Errc::InvalidArgument, "b must lie in [1, d-1]");
    if (n0 < 1) throw Error(Errc::InvalidArgument, "n0 must be positive");
    UniformityCertificate cert;
    cert.n0 = n0;
    cert.b = b;
    cert.grid = grid;
    cert.samples = samples;
    cert.exhaustive = use_exhaustive(spec.size(), n0, ExpectationMode::Auto);

    const std::vector<Vec> xs = manifold_grid(spec.manifold, grid.points);
    const std::vector<GrassmannPoint> es = grassmann_grid(d, d - b, grid.subspaces);
    Probe worstC, worstD;
    std::size_t iC = 0, jC = 0, iD = 0, jD = 0;
    bool first = true;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < es.size(); ++j) {
            const auto cd = estimate_CD(spec, xs[i], es[j], n0, samples, ExpectationMode::Auto, workers);
            if (first || cd.first.mean > worstC.C.mean) {
                worstC = Probe{cd.first, cd.second};
                iC = i;
                jC = j;
            }
            if (first || cd.second.mean < worstD.D.mean) {
                worstD = Probe{cd.first, cd.second};
                iD = i;
                jD = j;
            }
            first = false;
        }
    const double start = 0.5 * kPi / grid.subspaces;
    const GrassmannPoint eC = refine(spec, xs[iC], es[jC], worstC, n0, samples, true, start, workers);
    const GrassmannPoint eD = refine(spec, xs[iD], es[jD], worstD, n0, samples, false, start, workers);

    cert.worst_C = worstC.C.mean;
    cert.worst_C_stderr = worstC.C.stderr_;
    cert.worst_D = worstD.D.mean;
    cert.worst_D_stderr = worstD.D.stderr_;
    cert.witness_x = xs[iC];
    cert.witness_E = eC;
    cert.worst_D_x = xs[iD];
    cert.worst_D_E = eD;
    cert.kappa1 = -(cert.worst_C + 3 * cert.worst_C_stderr) / n0;
    cert.kappa2 = -(cert.worst_D - 3 * cert.worst_D_stderr) / n0;
    if (!(cert.kappa1 > 0)) {
        cert.reason = "C is not uniformly negative at the witness";
    } else if (!(cert.kappa2 < cert.kappa1)) {
        cert.reason = "kappa2 >= kappa1";
        cert.witness_x = cert.worst_D_x;
        cert.witness_E = cert.worst_D_E;
    } else {
        cert.valid = true;
    }
    return cert;
}

std::vector<double> lyapunov_spectrum(const IFSSpec& spec, const Vec& x, long long n, std::uint64_t stream_id)
{
    spec.validate();
    if (n < 1) throw Error(Errc::InvalidArgument, "need at least one step");
    const int d = spec.manifold.dim;
    StreamRng rng(spec.seed, stream_id);
    const auto k = static_cast<std::uint64_t>(spec.size());
    Mat q = Mat::Identity(d, d);
    std::vector<double> sums(d, 0.0);
    Vec p = x;
    Mat jac;
    const BaseCtx none{};
    for (long long t = 0; t < n; ++t) {
        const int s = static_cast<int>(rng.below(k));
        p = spec.maps[s].apply_with_jacobian(none, p, jac);
        Eigen::HouseholderQR<Mat> qr(jac * q);
        const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
        q = qr.householderQ() * Mat::Identity(d, d);
        for (int i = 0; i < d; ++i) sums[i] += std::log(std::abs(r(i, i)));
    }
    for (double& v : sums) v /= static_cast<double>(n);
    std::sort(sums.begin(), sums.end());
    return sums;
}

MomentReport moment_decay_check(const IFSSpec& spec, const UniformityCertificate& cert, double sigma_exp,
                                const std::vector<int>& n_list, long long samples, int workers)
{
    MomentReport rep;
    rep.n_list = n_list;
    if (!cert.valid) {
        rep.refused = true;
        rep.reason = "no uniformity certificate: " + cert.reason;
        return rep;
    }
    std::vector<double> xs;
    for (int n : n_list) {
        const bool exhaustive = use_exhaustive(spec.size(), n, ExpectationMode::Auto);
        long long count = samples;
        if (exhaustive) {
            count = 1;
            for (int i = 0; i < n; ++i) count *= spec.size();
        }
        const auto vals = parallel_map<double>(static_cast<std::size_t>(count), workers, [&](std::size_t i) {
            const std::vector<int> w =
                exhaustive ? word_from_index(static_cast<long long>(i), spec.size(), n) : sample_word(spec, n, i);
            return sigma_exp * word_logs(spec, w, cert.witness_x, cert.witness_E).C;
        });
        const double top = *std::max_element(vals.begin(), vals.end());
        double acc = 0;
        for (double v : vals) acc += std::exp(v - top);
        rep.log_moment.push_back(top + std::log(acc / static_cast<double>(vals.size())));
        xs.push_back(static_cast<double>(n));
    }
    const LineFit fit = fit_line(xs, rep.log_moment);
    rep.slope = fit.slope;
    rep.bound = -sigma_exp * cert.kappa1 + 0.05;
    rep.pass = rep.slope <= rep.bound;
    return rep;
}

IFSSpec build_conjugated_family(const FiberMap& g, const std::vector<FiberMap>& hs, int K, std::uint64_t seed)
{
    if (K < 0) throw Error(Errc::InvalidArgument, "K must be non-negative");
    IFSSpec spec;
    spec.manifold = g.manifold();
    spec.seed = seed;
    const FiberMap ginv = g.inverse();
    for (const FiberMap& h : hs) spec.maps.push_back(h);
    for (const FiberMap& h : hs) {
        FiberMap m = identity_map(g.manifold());
        for (int i = 0; i < K; ++i) m = m.then(ginv);
        m = m.then(h);
        for (int i = 0; i < K; ++i) m = m.then(g);
        spec.maps.push_back(m);
    }
    return spec;
}

NontransversalityReport measure_nontransversality(const IFSSpec& spec, const SubspaceField& p, int l,
                                                  const UniformityGrid& grid, double tol_angle)
{
    spec.validate();
    const int d = spec.manifold.dim;
    NontransversalityReport rep;
    rep.tol_angle = tol_angle;
    rep.eta = -1;
    const BaseCtx none{};
    for (const Vec& x : manifold_grid(spec.manifold, grid.points))
        for (const GrassmannPoint& e : grassmann_grid(d, d - l, grid.subspaces)) {
            int bad = 0;
            for (const FiberMap& f : spec.maps) {
                Mat jac;
                const Vec fx = f.apply_with_jacobian(none, x, jac);
                const GrassmannPoint img = pushforward(jac, e);
                if (!(principal_angle(img, p(fx)) > tol_angle)) ++bad;
            }
            const double frac = static_cast<double>(bad) / spec.size();
            if (frac > rep.eta) {
                rep.eta = frac;
                rep.worst_x = x;
                rep.worst_E = e;
            }
        }
    return rep;
}

namespace {

long long sphere_cell(const Vec& p, int nz, int nphi)
{
    const double z = std::clamp(p(2), -1.0, 1.0);
    const int iz = std::min(nz - 1, static_cast<int>((z + 1.0) / 2.0 * nz));
    double phi = std::atan2(p(1), p(0));
    if (phi < 0) phi += kTwoPi;
    const int ip = std::min(nphi - 1, static_cast<int>(phi / kTwoPi * nphi));
    return static_cast<long long>(iz) * nphi + ip;
}

} // namespace

DensityReport orbit_density(const IFSSpec& spec, const Vec& x0, long long n, double eps, std::uint64_t stream_id)
{
    spec.validate();
    if (!(eps > 0)) throw Error(Errc::InvalidArgument, "eps must be positive");
    const FiberManifold& man = spec.manifold;
    DensityReport rep;
    std::vector<long long> per_axis;
    int nz = 0, nphi = 0;
    long double cells = 1;
    if (man.kind == ManifoldKind::Torus) {
        const auto m = static_cast<long long>(std::ceil(1.0 / eps - 1e-9));
        per_axis.assign(man.dim, m);
        for (int i = 0; i < man.dim; ++i) cells *= m;
    } else if (man.kind == ManifoldKind::Sphere && man.dim == 2) {
        nz = static_cast<int>(std::ceil(2.0 / eps - 1e-9));
        nphi = static_cast<int>(std::ceil(kTwoPi / eps - 1e-9));
        cells = static_cast<long double>(nz) * nphi;
    } else {
        throw Error(Errc::InvalidArgument, "orbit density needs a torus or the 2-sphere");
    }
    if (cells >= 1e8) throw Error(Errc::GridTooFine, "cell grid too fine");
    rep.cells = static_cast<long long>(cells);

    auto cell_of = [&](const Vec& p) -> long long {
        if (man.kind == ManifoldKind::Sphere) return sphere_cell(p, nz, nphi);
        long long id = 0;
        for (int i = man.dim - 1; i >= 0; --i) {
            const long long m = per_axis[i];
            id = id * m + std::min(m - 1, static_cast<long long>(p(i) * m));
        }
        return id;
    };

    std::vector<long long> first(rep.cells, -1);
    StreamRng rng(spec.seed, stream_id);
    const auto k = static_cast<std::uint64_t>(spec.size());
    const BaseCtx none{};
    Vec p = man.normalize(x0);
    for (long long t = 0; t <= n; ++t) {
        long long& f = first[cell_of(p)];
        if (f < 0) {
            f = t;
            ++rep.visited;
            const int bin = static_cast<int>(std::floor(std::log2(static_cast<double>(t) + 1.0)));
            if (static_cast<int>(rep.first_hit_histogram.size()) <= bin) rep.first_hit_histogram.resize(bin + 1, 0);
            ++rep.first_hit_histogram[bin];
        }
        if (t == n) break;
        p = spec.maps[rng.below(k)].apply(none, p);
    }
    rep.coverage = static_cast<double>(rep.visited) / static_cast<double>(rep.cells);

    if (rep.visited == rep.cells) return rep;
    if (man.kind == ManifoldKind::Torus) {
        // multi-source Chebyshev distance transform on the periodic cell grid
        std::vector<int> dist(rep.cells, -1);
        std::deque<long long> queue;
        for (long long c = 0; c < rep.cells; ++c)
            if (first[c] >= 0) {
                dist[c] = 0;
                queue.push_back(c);
            }
        int far = 0;
        const int d = man.dim;
        std::vector<long long> coord(d);
        while (!queue.empty()) {
            const long long c = queue.front();
            queue.pop_front();
            long long rem = c;
            for (int i = 0; i < d; ++i) {
                coord[i] = rem % per_axis[i];
                rem /= per_axis[i];
            }
            std::vector<int> off(d, -1);
            while (true) {
                long long id = 0;
                for (int i = d - 1; i >= 0; --i) {
                    const long long m = per_axis[i];
                    id = id * m + ((coord[i] + off[i]) % m + m) % m;
                }
                if (dist[id] < 0) {
                    dist[id] = dist[c] + 1;
                    far = std::max(far, dist[id]);
                    queue.push_back(id);
                }
                int j = 0;
                for (; j < d; ++j) {
                    if (++off[j] <= 1) break;
                    off[j] = -1;
                }
                if (j == d) break;
            }
        }
        rep.empty_ball_radius = (far - 0.5) / static_cast<double>(per_axis[0]);
    } else {
        int run = 0, best = 0;
        for (int iz = 0; iz < nz; ++iz) {
            bool empty = true;
            for (int ip = 0; ip < nphi && empty; ++ip) empty = first[static_cast<long long>(iz) * nphi + ip] < 0;
            run = empty ? run + 1 : 0;
            best = std::max(best, run);
        }
        rep.empty_ball_radius = best / static_cast<double>(nz);
    }
    return rep;
}

} // namespace phskew
