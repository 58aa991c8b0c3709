#pragma once

#include <functional>
#include <string>
#include <vector>

#include "phskew/covering.hpp"
#include "phskew/fiber.hpp"
#include "phskew/skew.hpp"

namespace phskew {

/// A map from the parameter cube [-1,2]^c into a fiber, with the fiber's metric.
struct ParamMap {
    FiberManifold target;
    std::function<Vec(const Vec&)> eval;
};

/// phi_F built from a skew product and a loop family.
ParamMap skew_param_map(const SkewProduct& f, const LoopFamily& fam, const Vec& x0, double tol);

enum class Verdict { Pass, Fail, Inconclusive };
std::string verdict_name(Verdict v);

struct AxisMargin {
    int axis = 0;                  // 1-based
    double collision_radius = 0;   // smallest radius around a sample meeting K0 - 1 other slices
    std::vector<double> values;    // slice values realizing it
    Verdict verdict = Verdict::Pass;
};

struct StableValueResult {
    Verdict verdict = Verdict::Pass;
    double delta = 0;          // collision resolution
    double holder_constant = 0;
    double theta = 1;
    long long evaluations = 0;
    std::vector<AxisMargin> axes;
    // witness of a collision (fail) or of the closest call (inconclusive)
    int witness_axis = 0;
    std::vector<double> witness_values;
    Vec witness_point;
};

/// Slice test: for each axis i, every K0 distinct corner values r in the covering's
/// boundary set give slices {s_i = r} whose sampled images must stay 2 delta apart.
/// delta = Lambda * grid_step^theta + tol, with Lambda the Hoelder constant measured
/// on neighbouring samples.
StableValueResult stable_value_check(const ParamMap& phi, const Covering& cov, double grid_step, double tol,
                                     int workers = 1);

} // namespace phskew
