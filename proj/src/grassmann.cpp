#include "phskew/grassmann.hpp"

#include <algorithm>
#include <cmath>

#include "phskew/error.hpp"

namespace phskew {

namespace {

void require_invertible(const Mat& df)
{
    if (df.rows() != df.cols()) throw Error(Errc::DimMismatch, "derivative must be square");
    Eigen::JacobiSVD<Mat> svd(df);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(s.size() - 1) <= 1e-14 * std::max(1.0, s(0)))
        throw Error(Errc::Singular, "derivative is singular");
}

double smallest_singular(const Mat& m)
{
    if (m.size() == 0) return 1.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

double largest_singular(const Mat& m)
{
    if (m.size() == 0) return 1.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

} // namespace

Mat GrassmannPoint::complement() const
{
    const int d = ambient_dim();
    const int l = dim();
    if (l == 0) return Mat::Identity(d, d);
    Eigen::HouseholderQR<Mat> qr(frame);
    Mat q = qr.householderQ() * Mat::Identity(d, d);
    return q.rightCols(d - l);
}

double TangentMap::norm() const { return largest_singular(phi); }

GrassmannPoint orthonormalize(const Mat& raw)
{
    const Eigen::Index l = raw.cols();
    if (l == 0) return GrassmannPoint{Mat(raw.rows(), 0)};
    Eigen::ColPivHouseholderQR<Mat> rank_qr(raw);
    rank_qr.setThreshold(1e-12);
    if (rank_qr.rank() < l) throw Error(Errc::RankDeficient, "columns are linearly dependent");
    Eigen::HouseholderQR<Mat> qr(raw);
    Mat q = qr.householderQ() * Mat::Identity(raw.rows(), l);
    // fix signs so the frame is a deterministic function of the raw columns
    Mat r = qr.matrixQR().topRows(l).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < l; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return GrassmannPoint{q};
}

GrassmannPoint span(const Vec& v)
{
    Mat m(v.size(), 1);
    m.col(0) = v;
    return orthonormalize(m);
}

double principal_angle(const GrassmannPoint& e, const GrassmannPoint& f)
{
    if (e.ambient_dim() != f.ambient_dim()) throw Error(Errc::DimMismatch, "ambient dimensions differ");
    if (e.dim() == 0 || f.dim() == 0) return kPi / 2;
    Eigen::JacobiSVD<Mat> svd(e.frame.transpose() * f.frame, Eigen::ComputeThinU);
    const double s = std::clamp(svd.singularValues()(0), 0.0, 1.0);
    // acos is ill conditioned near 1; use the sine of the residual instead
    if (s > 0.9) {
        const Vec u = svd.matrixU().col(0);
        const Vec w = e.frame * u;
        const Vec res = w - f.frame * (f.frame.transpose() * w);
        return std::asin(std::min(1.0, res.norm()));
    }
    return std::acos(s);
}

Vec project_complement(const GrassmannPoint& e, const Vec& v)
{
    if (v.size() != e.ambient_dim()) throw Error(Errc::DimMismatch, "vector dimension differs");
    return v - e.frame * (e.frame.transpose() * v);
}

GrassmannPoint pushforward(const Mat& df, const GrassmannPoint& e)
{
    if (df.cols() != e.ambient_dim()) throw Error(Errc::DimMismatch, "derivative and subspace differ");
    require_invertible(df);
    return orthonormalize(df * e.frame);
}

Mat compressed_complement(const Mat& df, const GrassmannPoint& e, const GrassmannPoint& image)
{
    return image.complement().transpose() * df * e.complement();
}

Mat restricted_map(const Mat& df, const GrassmannPoint& e, const GrassmannPoint& image)
{
    return image.frame.transpose() * df * e.frame;
}

double step_C(const Mat& df, const GrassmannPoint& e)
{
    const GrassmannPoint img = pushforward(df, e);
    return std::log(largest_singular(compressed_complement(df, e, img)));
}

double step_D(const Mat& df, const GrassmannPoint& e)
{
    if (df.cols() != e.ambient_dim()) throw Error(Errc::DimMismatch, "derivative and subspace differ");
    require_invertible(df);
    return std::log(smallest_singular(df * e.frame));
}

TangentMap lift_tangent_action(const Mat& df, const GrassmannPoint& e, const TangentMap& phi)
{
    const int d = e.ambient_dim();
    const int l = e.dim();
    if (phi.phi.rows() != d - l || phi.phi.cols() != l) throw Error(Errc::DimMismatch, "tangent map shape");
    const GrassmannPoint img = pushforward(df, e);
    const Mat inv = df.inverse();
    // u in Df E (image frame coordinates) -> Df^{-1} u in E -> phi -> Df -> project
    const Mat back = e.frame.transpose() * inv * img.frame;
    const Mat psi = img.complement().transpose() * df * e.complement() * phi.phi * back;
    return TangentMap{psi};
}

double finsler_norm(const Vec& v, const TangentMap& phi) { return v.norm() + phi.norm(); }

} // namespace phskew
