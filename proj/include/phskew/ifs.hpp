#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phskew/fiber.hpp"
#include "phskew/grassmann.hpp"

namespace phskew {

struct IFSSpec {
    FiberManifold manifold;
    std::vector<FiberMap> maps;
    std::uint64_t seed = 0;

    int size() const { return static_cast<int>(maps.size()); }
    void validate() const;
};

/// Symbols in [0, k), drawn from the stream (seed, stream_id).
std::vector<int> sample_word(const IFSSpec& spec, int n, std::uint64_t stream_id);

enum class ExpectationMode { Auto, Exhaustive, MonteCarlo };

struct Expectation {
    double mean = 0, stderr_ = 0;
    long long count = 0;
    bool exhaustive = false;
};

/// log sup over unit v in E^perp of |P_{(Df^n E)^perp} Df^n v| and log inf over unit u in E of |Df^n u|.
struct WordLogs {
    double C = 0, D = 0;
};
WordLogs word_logs(const IFSSpec& spec, const std::vector<int>& word, const Vec& x, const GrassmannPoint& e);

inline constexpr long long kExhaustiveLimit = 4096;

Expectation estimate_C(const IFSSpec& spec, const Vec& x, const GrassmannPoint& e, int n, long long samples,
                       ExpectationMode mode = ExpectationMode::Auto, int workers = 1);
Expectation estimate_D(const IFSSpec& spec, const Vec& x, const GrassmannPoint& e, int n, long long samples,
                       ExpectationMode mode = ExpectationMode::Auto, int workers = 1);
/// Both expectations from the same words.
std::pair<Expectation, Expectation> estimate_CD(const IFSSpec& spec, const Vec& x, const GrassmannPoint& e, int n,
                                                long long samples, ExpectationMode mode = ExpectationMode::Auto,
                                                int workers = 1);

struct UniformityGrid {
    int points = 4;     // per axis on tori, squared count on spheres
    int subspaces = 24; // Grassmannian samples
};

struct UniformityCertificate {
    bool valid = false;
    std::string reason;      // empty when valid
    int n0 = 0, b = 0;
    double kappa1 = 0, kappa2 = 0;
    double worst_C = 0, worst_C_stderr = 0;  // maximised expectation of C (not divided by n0)
    double worst_D = 0, worst_D_stderr = 0;  // minimised expectation of D
    Vec witness_x;           // point of the worst C (or of the violation)
    GrassmannPoint witness_E;
    Vec worst_D_x;
    GrassmannPoint worst_D_E;
    UniformityGrid grid;
    long long samples = 0;
    bool exhaustive = false;
    std::string confidence = "3-sigma";
};

UniformityCertificate certify_uniformity(const IFSSpec& spec, int b, int n0, const UniformityGrid& grid,
                                         long long samples, int workers = 1);

/// Grid points used by the certificate (exposed for tests).
std::vector<Vec> manifold_grid(const FiberManifold& man, int points);
std::vector<GrassmannPoint> grassmann_grid(int ambient, int dim, int count);

std::vector<double> lyapunov_spectrum(const IFSSpec& spec, const Vec& x, long long n, std::uint64_t stream_id);

struct MomentReport {
    bool refused = false;
    std::string reason;
    std::vector<int> n_list;
    std::vector<double> log_moment;
    double slope = 0, bound = 0;
    bool pass = false;
};

/// E[ sup |P ...|^sigma ] at each n, fitted against n; passes iff slope <= -sigma * kappa1 + 0.05.
MomentReport moment_decay_check(const IFSSpec& spec, const UniformityCertificate& cert, double sigma_exp,
                                const std::vector<int>& n_list, long long samples, int workers = 1);

/// Maps h_i followed by g^K h_i g^{-K}, as composition lists.
IFSSpec build_conjugated_family(const FiberMap& g, const std::vector<FiberMap>& hs, int K, std::uint64_t seed = 0);

using SubspaceField = std::function<GrassmannPoint(const Vec&)>;

struct NontransversalityReport {
    double eta = 0;
    Vec worst_x;
    GrassmannPoint worst_E;
    double tol_angle = 1e-3;
};

/// Largest fraction of maps with Df_i E not transverse to P(f_i x) over the grid, E of dimension d - l.
NontransversalityReport measure_nontransversality(const IFSSpec& spec, const SubspaceField& p, int l,
                                                  const UniformityGrid& grid, double tol_angle = 1e-3);

struct DensityReport {
    long long cells = 0;
    long long visited = 0;
    double coverage = 0;
    std::vector<long long> first_hit_histogram;  // bin j counts first hits at times in [2^j, 2^{j+1})
    double empty_ball_radius = 0;                // lower bound on the largest unvisited ball
};

DensityReport orbit_density(const IFSSpec& spec, const Vec& x0, long long n, double eps,
                            std::uint64_t stream_id = 0);

} // namespace phskew
