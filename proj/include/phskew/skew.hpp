#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "phskew/fiber.hpp"
#include "phskew/grassmann.hpp"
#include "phskew/spectral.hpp"

namespace phskew {

/// Exact torus arithmetic: coordinates as 64-bit fixed point numbers, so integer
/// matrices act without rounding and orbits can be run in both directions.
struct FixedTorusPoint {
    std::vector<std::uint64_t> c;

    static FixedTorusPoint from_real(const Vec& y);
    Vec to_real() const;
    FixedTorusPoint mapped(const IMat& m) const;
};

/// Leaf geometry of a linear Anosov base.
struct BaseGeometry {
    Mat stable_basis;    // orthonormal m x s, spans E^s
    Mat unstable_basis;  // orthonormal m x u, spans E^u
    Mat stable_action;   // s x s, A restricted to E^s in its basis
    Mat unstable_action; // u x u
    Mat unstable_inverse_action;
    Mat splitter;        // [stable | unstable]^{-1}
    Vec e_s, e_u;        // unit leading stable / unstable directions
    double chi_bar_s = 0, chi_hat_s = 0, chi_bar_u = 0, chi_hat_u = 0;

    /// Splits a displacement into stable and unstable components.
    void split(const Vec& d, Vec& stable, Vec& unstable) const;
};

std::shared_ptr<const BaseGeometry> make_base_geometry(const ToralAutomorphism& f);

struct Point {
    Vec y, z;
};

class SkewProduct {
public:
    SkewProduct(ToralAutomorphism base, FiberMap fiber, bool volume_preserving = false);

    const ToralAutomorphism& base() const { return base_; }
    const FiberMap& fiber() const { return fiber_; }
    const FiberManifold& manifold() const { return fiber_.manifold(); }
    int base_dim() const { return base_.dim(); }
    int fiber_dim() const { return manifold().dim; }
    bool volume_preserving() const { return volume_preserving_; }
    /// Throws NotAnosov if the base has a unit-modulus eigenvalue.
    const BaseGeometry& geometry() const;
    bool has_geometry() const { return static_cast<bool>(geometry_); }

    Vec base_map(const Vec& y) const;
    Vec base_inverse(const Vec& y) const;
    /// g(y, z)
    Vec fiber_map(const Vec& y, const Vec& z) const;
    /// g(y, .)^{-1}(z)
    Vec fiber_inverse(const Vec& y, const Vec& z) const;
    Point evaluate(const Point& p) const;
    Point evaluate_inverse(const Point& p) const;
    /// Fiber derivative along n steps of the orbit (n < 0 walks backwards).
    Mat derivative_cocycle(const Point& p, int n) const;
    /// Sampled bound on the base-direction Lipschitz constant of g.
    double fiber_base_lipschitz() const { return base_lipschitz_; }

    SkewProduct with_fiber(FiberMap fiber) const;

private:
    ToralAutomorphism base_;
    FiberMap fiber_;
    bool volume_preserving_;
    std::shared_ptr<const BaseGeometry> geometry_;
    double base_lipschitz_ = 0.0;
};

std::pair<GrassmannPoint, GrassmannPoint> base_splitting(const ToralAutomorphism& f);

/// Chart cap for local leaf computations.
inline constexpr double kChartRadius = 0.25;

Vec bracket(const ToralAutomorphism& f, const Vec& x, const Vec& y, const Vec& z);

struct RecurrenceResult {
    long long n = 0;
    bool exceeded = false;
};

RecurrenceResult recurrence_time(const ToralAutomorphism& f, const Vec& center, double radius,
                                 long long n_max = 1000000);

/// Smallest distance from y of its first `horizon` iterates.
double min_return_distance(const ToralAutomorphism& f, const Vec& y, long long horizon = 10000);

/// One leg of a loop: from a base point along an exact leaf displacement.
struct Leg {
    Vec from;
    Vec delta;  // lies in E^u for unstable legs, E^s for stable ones
    bool unstable = true;
    Vec to() const;
};

/// 4-legged su-loop y -> y1 (u) -> y2 (s) -> y3 (u) -> y (s).
struct SuLoop {
    Vec y;
    Vec d1, d2, d3, d4;

    Vec y1() const;
    Vec y2() const;
    Vec y3() const;
    std::array<Leg, 4> legs() const;
};

/// Builds a loop from four base points, checking each leg against the splitting.
SuLoop make_su_loop(const SkewProduct& f, const Vec& y, const Vec& y1, const Vec& y2, const Vec& y3);

struct LoopFamily {
    Vec y;
    double sigma = 0;
    Vec e_u, e_s;
    double C0 = 1, C1 = 1;
    double min_separation = 0;  // realized d([psi(t), z], Im psi) over sampled t
    int samples_checked = 0;

    Vec psi(double t) const;
    Vec z() const;
    SuLoop loop(double t) const;
    /// Loop parameter for cube coordinate s on axis i (1-based) with c factors.
    double phi(int i, double s, int c) const;
};

LoopFamily build_loop_family(const SkewProduct& f, const Vec& y, double sigma);

} // namespace phskew
