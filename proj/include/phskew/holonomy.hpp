#pragma once

#include <functional>

#include "phskew/skew.hpp"

namespace phskew {

struct HolonomyResult {
    Vec z;
    int depth = 0;          // compared depths are depth and depth + 5
    double error = 0.0;     // fiber distance between those two truncations
};

inline constexpr int kDefaultDepthCap = 400;

/// Holonomy along one leg truncated at a fixed depth (no convergence control).
Vec leg_holonomy_at_depth(const SkewProduct& f, const Leg& leg, const Vec& z, int depth);

/// Adaptive holonomy along one leg.
HolonomyResult leg_holonomy(const SkewProduct& f, const Leg& leg, const Vec& z, double tol,
                            int depth_cap = kDefaultDepthCap);

/// y2 must lie on the local unstable leaf of y1 (stable leaf for the stable variant).
HolonomyResult unstable_holonomy(const SkewProduct& f, const Vec& y1, const Vec& y2, const Vec& z, double tol,
                                 int depth_cap = kDefaultDepthCap);
HolonomyResult stable_holonomy(const SkewProduct& f, const Vec& y1, const Vec& y2, const Vec& z, double tol,
                               int depth_cap = kDefaultDepthCap);

/// Four legs composed, each with tolerance tol / 4. The reported error is the sum of leg errors.
HolonomyResult loop_holonomy(const SkewProduct& f, const SuLoop& loop, const Vec& z, double tol,
                             int depth_cap = kDefaultDepthCap);

/// Composition of the c loop holonomies H_{gamma(phi(c, s_c))} ... H_{gamma(phi(1, s_1))} applied to x0.
HolonomyResult phi_map(const SkewProduct& f, const LoopFamily& fam, const Vec& x0, const Vec& s, double tol,
                       int depth_cap = kDefaultDepthCap);

using FiberFunction = std::function<Vec(const Vec&)>;

/// Central difference Jacobian of a fiber map in tangent frames (c x c).
Mat holonomy_jacobian(const FiberManifold& man, const FiberFunction& map, const Vec& z, double h = 1e-5);

enum class HolonomyKind { Unstable, Stable, Loop };

/// Jacobian of the unstable/stable holonomy between y1 and y2, or of a loop holonomy.
Mat holonomy_jacobian(const SkewProduct& f, HolonomyKind kind, const Vec& y1, const Vec& y2, const SuLoop* loop,
                      const Vec& z, double tol, double h = 1e-5);

} // namespace phskew
