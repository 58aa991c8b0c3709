#pragma once

#include <vector>

#include "phskew/holonomy.hpp"

namespace phskew {

struct DeformTerm {
    Bump bump;
    Field field;
    int index = 0;  // parameter slot
};

/// V(B, y, z) = sum over terms of B[index] * rho(y) * W(z).
struct InfinitesimalDeformation {
    FiberManifold manifold;
    int params = 0;
    std::vector<DeformTerm> terms;
    double support_radius = 0;
    double lipschitz = 0;  // bound on Lip of each term
    double adapted_C = 0;  // lipschitz * support_radius

    Vec value(const Vec& b, const Vec& y, const Vec& z) const;
    bool in_support(const Vec& y) const;
};

/// Divergence-free fields: constant and cell fields on tori, rotations on spheres.
std::vector<Field> field_dictionary(const FiberManifold& man, int size);

/// One bump of radius sigma / (C0 * 6c) at the end of the first leg of each loop, carrying
/// `dictionary_size` fields each. Bumps must be pairwise disjoint and avoid the other three
/// corners of every loop.
InfinitesimalDeformation build_deformation(const FiberManifold& man, const std::vector<SuLoop>& loops,
                                           double sigma, int dictionary_size, double C0 = 1.0);

/// Deformation with explicitly placed bumps (used for a priori checks).
InfinitesimalDeformation make_deformation(const FiberManifold& man, std::vector<DeformTerm> terms, int params);

/// Fiber maps followed by the time-one flow of V(b, .), bump evaluated at the image base point.
SkewProduct perturbed_skew(const SkewProduct& f, const InfinitesimalDeformation& v, const Vec& b);

struct LinearApproxReport {
    Mat finite_difference;  // c x params, tangent frame at the end fiber
    Mat predicted;
    double residual = 0;    // Frobenius norm of the difference
    std::vector<int> depths;
};

/// Parameter derivative of the perturbed loop holonomy at b = 0 against the vector
/// V(e_j, H^u_leg1(x)) pushed through the remaining three legs.
LinearApproxReport verify_linear_approx(const SkewProduct& f, const InfinitesimalDeformation& v, const SuLoop& loop,
                                        const Vec& x, double h = 1e-4, double tol = 1e-13);

struct AprioriReport {
    double distance = 0, half_distance = 0;
    double bound = 0, half_bound = 0;  // sup parameter-derivative norms
    double ratio = 0;                  // bound / half_bound
    bool linear_scaling = false;       // ratio within [0.25, 4]
};

/// Parameter derivative of the perturbed unstable holonomy y1 -> y2 over fiber samples,
/// compared with the one for the halved leaf distance.
AprioriReport verify_apriori(const SkewProduct& f, const InfinitesimalDeformation& v, const Vec& y1, const Vec& y2,
                             const std::vector<Vec>& samples, double h = 1e-4, double tol = 1e-13);

/// sup over samples and parameter directions of the b-derivative of H^u_{y1, y2}.
double parameter_derivative_bound(const SkewProduct& f, const InfinitesimalDeformation& v, const Vec& y1,
                                  const Vec& y2, const std::vector<Vec>& samples, double h = 1e-4,
                                  double tol = 1e-13);

} // namespace phskew
