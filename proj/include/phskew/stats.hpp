#pragma once

#include <vector>

namespace phskew {

struct LineFit {
    double slope = 0, intercept = 0, r2 = 0;
    int points = 0;
};

/// Ordinary least squares y = intercept + slope * x. Throws DegenerateFit below two distinct x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct MeanStderr {
    double mean = 0, stderr_ = 0;
    long long count = 0;
};

/// Sequential (order-fixed) mean and standard error of the mean.
MeanStderr mean_stderr(const std::vector<double>& v);

} // namespace phskew
