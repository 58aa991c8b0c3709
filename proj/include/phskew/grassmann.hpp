#pragma once

#include "phskew/linalg.hpp"

namespace phskew {

/// An l-dimensional subspace of R^d, stored as an orthonormal d x l frame.
struct GrassmannPoint {
    Mat frame;

    int ambient_dim() const { return static_cast<int>(frame.rows()); }
    int dim() const { return static_cast<int>(frame.cols()); }
    /// Orthonormal frame of the orthogonal complement (d x (d-l)).
    Mat complement() const;
};

/// Linear map E -> E^perp written in the frames of E and its complement ((d-l) x l).
struct TangentMap {
    Mat phi;
    double norm() const;
};

GrassmannPoint orthonormalize(const Mat& raw);
GrassmannPoint span(const Vec& v);
double principal_angle(const GrassmannPoint& e, const GrassmannPoint& f);
Vec project_complement(const GrassmannPoint& e, const Vec& v);
GrassmannPoint pushforward(const Mat& df, const GrassmannPoint& e);

/// log of the top singular value of the complement map compressed onto (Df E)^perp.
double step_C(const Mat& df, const GrassmannPoint& e);
/// log of the smallest singular value of Df restricted to E.
double step_D(const Mat& df, const GrassmannPoint& e);

/// Action of Df on tangent vectors of the Grassmannian, in the frames of Df E.
TangentMap lift_tangent_action(const Mat& df, const GrassmannPoint& e, const TangentMap& phi);

/// ||(v, phi)||* = ||v|| + ||phi||.
double finsler_norm(const Vec& v, const TangentMap& phi);

/// Compressed complement map (Df E)^perp <- E^perp in the complement frames.
Mat compressed_complement(const Mat& df, const GrassmannPoint& e, const GrassmannPoint& image);
/// Df restricted to E in the frames of E and Df E.
Mat restricted_map(const Mat& df, const GrassmannPoint& e, const GrassmannPoint& image);

} // namespace phskew
