#pragma once

// Fiber manifolds and the primitive building blocks of fiber diffeomorphisms.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "phskew/linalg.hpp"

namespace phskew {

enum class ManifoldKind { Torus, Sphere, Euclidean };

struct FiberManifold {
    ManifoldKind kind = ManifoldKind::Torus;
    int dim = 1;  // intrinsic dimension c

    int ambient() const { return kind == ManifoldKind::Sphere ? dim + 1 : dim; }
    /// Reduces torus coordinates mod 1 or rescales onto the unit sphere.
    Vec normalize(Vec p) const;
    /// to - from, using the nearest representative on the torus.
    Vec displacement(const Vec& from, const Vec& to) const;
    double distance(const Vec& a, const Vec& b) const;
    /// Orthonormal ambient frame of the tangent space at p (ambient x dim).
    Mat tangent_basis(const Vec& p) const;
    /// Moves p by a tangent vector (ambient coordinates) and renormalizes.
    Vec offset(const Vec& p, const Vec& v) const;
    bool valid_point(const Vec& p, double tol = 1e-12) const;
};

std::string manifold_name(const FiberManifold& m);

/// Nearest-representative difference to - from on the torus, components in [-1/2, 1/2).
Vec torus_delta(const Vec& from, const Vec& to);
Vec wrap_unit(Vec v);

/// Quintic smoothstep 6t^5 - 15t^4 + 10t^3 clamped to [0,1].
double smoothstep5(double t);
double smoothstep5_derivative(double t);

/// Radial C^2 bump on the base torus: 1 at the center, 0 outside the radius.
struct Bump {
    Vec center;
    double radius = 0.1;

    double value(const Vec& y) const;
    Vec gradient(const Vec& y) const;
    double lipschitz() const;
};

/// Point of the base the fiber map is attached to (y) and its image f(y).
struct BaseCtx {
    const Vec* y = nullptr;
    const Vec* fy = nullptr;
};

enum class FieldKind { Constant, SinShear, Cell, Rotation };

/// Divergence-free fiber vector fields.
/// Constant: e_j. SinShear: sin(2 pi m z_j) e_k. Cell: stream function sin sin / (2 pi m).
/// Rotation (sphere): p_j e_k - p_k e_j.
struct Field {
    FieldKind kind = FieldKind::Constant;
    int j = 0, k = 1, m = 1;

    Vec value(const Vec& z) const;
    Mat jacobian(const Vec& z) const;
    double sup_norm() const;
    double lipschitz() const;
};

struct FieldTerm {
    Field field;
    double coeff = 1.0;
    std::optional<Bump> bump;
    bool bump_at_image = false;  // evaluate the bump at f(y) instead of y
};

/// Term amplitude * sin(2 pi (freq . y + phase)) of a base-dependent translation.
struct TrigTerm {
    Vec amplitude;
    Vec freq;
    double phase = 0.0;
};

struct LinearPrim {
    Mat m, m_inv;
};

struct TranslationPrim {
    Vec offset;
    std::vector<TrigTerm> terms;
};

struct ShearPrim {
    int from = 0, to = 1;
    double amplitude = 0.0;
    bool sine = true;  // profile sin(2 pi z)/(2 pi); otherwise linear z
    std::optional<Bump> bump;
};

struct FlowPrim {
    std::vector<FieldTerm> terms;
    int steps = 64;
};

/// Sphere S^2 map p -> rotation about `axis` by angle amplitude * <axis, p>.
struct TwistPrim {
    Vec axis;
    double amplitude = 0.0;
};

using PrimitiveBody = std::variant<LinearPrim, TranslationPrim, ShearPrim, FlowPrim, TwistPrim>;

struct Primitive {
    PrimitiveBody body;
    bool inverted = false;
};

Primitive make_linear(const Mat& m);
Primitive make_translation(const Vec& offset, std::vector<TrigTerm> terms = {});
Primitive make_shear(int from, int to, double amplitude, bool sine, std::optional<Bump> bump = {});
Primitive make_flow(std::vector<FieldTerm> terms, int steps = 64);
Primitive make_twist(const Vec& axis, double amplitude);
Primitive make_rotation2(double angle);  // planar rotation, for Euclidean fibers

/// Fiber diffeomorphism as a composition list; prims[0] acts first.
class FiberMap {
public:
    FiberMap() = default;
    FiberMap(FiberManifold m, std::vector<Primitive> prims);

    const FiberManifold& manifold() const { return manifold_; }
    const std::vector<Primitive>& primitives() const { return prims_; }

    Vec apply(const BaseCtx& ctx, const Vec& z) const;
    Vec apply_inverse(const BaseCtx& ctx, const Vec& z) const;
    /// Ambient Jacobian of the composition at z.
    Mat jacobian(const BaseCtx& ctx, const Vec& z) const;
    /// Jacobian in orthonormal tangent frames at z and at the image (dim x dim).
    Mat tangent_jacobian(const BaseCtx& ctx, const Vec& z) const;
    /// Image point and tangent Jacobian in one pass.
    Vec apply_with_jacobian(const BaseCtx& ctx, const Vec& z, Mat& tangent_jac) const;

    FiberMap inverse() const;
    FiberMap then(const FiberMap& next) const;  // next o this
    bool volume_preserving() const;
    bool depends_on_base() const;

private:
    FiberManifold manifold_;
    std::vector<Primitive> prims_;
};

FiberMap identity_map(const FiberManifold& m);
FiberMap linear_map(const FiberManifold& m, const Mat& a);

// Single-primitive evaluation (exposed for testing).
Vec primitive_apply(const FiberManifold& man, const Primitive& p, const BaseCtx& ctx, const Vec& z);
Mat primitive_jacobian(const FiberManifold& man, const Primitive& p, const BaseCtx& ctx, const Vec& z);
bool primitive_volume_preserving(const FiberManifold& man, const Primitive& p);

/// Step-doubling RK4 error estimate of a torus flow primitive at z (zero for exact flows).
double flow_error_estimate(const FiberManifold& man, const FlowPrim& f, const BaseCtx& ctx, const Vec& z);

} // namespace phskew
