#pragma once

#include <vector>

#include "phskew/linalg.hpp"

namespace phskew {

struct Box {
    Vec lo, hi;

    bool contains_interior(const Vec& x) const;
    double diameter() const;
};

/// Boundaries of two closed boxes are disjoint (one sits strictly inside the other,
/// or they do not meet at all).
bool boundaries_disjoint(const Box& a, const Box& b);

int covering_K0(int c, double theta);
int covering_K1(int c, double theta);

/// Lightness scale used when none is configured.
double default_light_eps(int c);

/// Covering of [0,1]^c by concentric families of cubes: one lattice of centers,
/// K1 + 1 nested sizes around each center.
struct Covering {
    int c = 1;
    double theta = 1.0;
    double eps = 0.0;   // effective diameter bound
    int K0 = 0, K1 = 0;
    double pitch = 0.0;
    std::vector<double> half_sides;
    std::vector<Box> boxes;
    std::vector<std::vector<double>> boundary;  // per axis: sorted distinct corner values
    double min_side = 0.0;
    double min_corner_gap = 0.0;
    double C_min = 0.0;  // 10 / min(min_side, min_corner_gap)
};

Covering build_covering(int c, double eps_light, double theta);

struct CoveringCheck {
    bool corners_in_range = false;
    bool diameters_ok = false;
    bool multiplicity_ok = false;  // every probe in >= K1 + 1 boxes with disjoint boundaries
    bool corners_distinct = false;
    bool separation_ok = false;
    int min_multiplicity = 0;
    long long probes = 0;

    bool valid() const
    {
        return corners_in_range && diameters_ok && multiplicity_ok && corners_distinct && separation_ok;
    }
};

/// Checks the covering properties on a probe grid with `per_axis` points per axis.
CoveringCheck validate_covering(const Covering& cov, int per_axis);

} // namespace phskew
