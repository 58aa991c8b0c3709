#include "phskew/stats.hpp"

#include <cmath>

#include "phskew/error.hpp"

namespace phskew {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) throw Error(Errc::DimMismatch, "fit: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw Error(Errc::DegenerateFit, "fit needs at least two points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0) throw Error(Errc::DegenerateFit, "fit needs two distinct abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    f.points = static_cast<int>(n);
    return f;
}

MeanStderr mean_stderr(const std::vector<double>& v)
{
    MeanStderr m;
    m.count = static_cast<long long>(v.size());
    if (v.empty()) return m;
    double s = 0;
    for (double x : v) s += x;
    m.mean = s / v.size();
    if (v.size() < 2) return m;
    double ss = 0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.stderr_ = std::sqrt(ss / (v.size() - 1) / v.size());
    return m;
}

} // namespace phskew
