#include "phskew/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "phskew/error.hpp"

namespace phskew {

namespace {

IMat integer_inverse(const IMat& a, int det)
{
    const Mat inv = a.cast<double>().inverse();
    IMat out(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out(i, j) = std::llround(inv(i, j));
    if (a * out != IMat::Identity(a.rows(), a.cols()))
        throw Error(Errc::NonUnimodular, "integer inverse failed (det " + std::to_string(det) + ")");
    return out;
}

} // namespace

ToralAutomorphism::ToralAutomorphism(IMat entries) : entries_(std::move(entries))
{
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
        throw Error(Errc::NonUnimodular, "matrix must be square and non-empty");
    if (entries_.rows() > 64)
        throw Error(Errc::InvalidArgument, "dimension above 64");
    const double d = entries_.cast<double>().determinant();
    const long long dr = std::llround(d);
    if (std::abs(d - static_cast<double>(dr)) > 1e-6 || (dr != 1 && dr != -1))
        throw Error(Errc::NonUnimodular, "determinant " + std::to_string(d));
    det_ = static_cast<int>(dr);
    inverse_ = integer_inverse(entries_, det_);
}

ToralAutomorphism ToralAutomorphism::power(int k) const
{
    const IMat& m = k >= 0 ? entries_ : inverse_;
    IMat out = IMat::Identity(dim(), dim());
    for (int i = 0; i < std::abs(k); ++i) out = out * m;
    return ToralAutomorphism(out);
}

ToralAutomorphism ToralAutomorphism::direct_sum(const ToralAutomorphism& a, const ToralAutomorphism& b)
{
    IMat m = IMat::Zero(a.dim() + b.dim(), a.dim() + b.dim());
    m.topLeftCorner(a.dim(), a.dim()) = a.entries();
    m.bottomRightCorner(b.dim(), b.dim()) = b.entries();
    return ToralAutomorphism(m);
}

ToralAutomorphism parse_matrix(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    };
    if (!next_line()) throw Error(Errc::ParseError, "line 1, column 1: empty matrix file");
    std::size_t pos = 0;
    long long d = 0;
    try {
        d = std::stoll(line, &pos);
    } catch (const std::exception&) {
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ", column 1: expected dimension");
    }
    if (pos != line.size() || d <= 0 || d > 64)
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ", column 1: bad dimension '" + line + "'");
    IMat m(d, d);
    for (long long i = 0; i < d; ++i) {
        if (!next_line())
            throw Error(Errc::ParseError, "line " + std::to_string(lineno + 1) + ", column 1: missing matrix row");
        std::size_t col = 0;
        for (long long j = 0; j < d; ++j) {
            if (j > 0) {
                if (col >= line.size() || line[col] != ' ')
                    throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ", column " +
                                                      std::to_string(col + 1) + ": expected single space");
                ++col;
            }
            std::size_t used = 0;
            try {
                m(i, j) = std::stoll(line.substr(col), &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || line[col] == ' ' || line[col] == '+')
                throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ", column " +
                                                  std::to_string(col + 1) + ": expected integer");
            col += used;
        }
        if (col != line.size())
            throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ", column " + std::to_string(col + 1) +
                                              ": trailing characters");
    }
    if (next_line())
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ", column 1: unexpected extra row");
    return ToralAutomorphism(m);
}

ToralAutomorphism read_matrix_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw Error(Errc::Io, "cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_matrix(ss.str());
}

std::string format_matrix(const ToralAutomorphism& a)
{
    std::ostringstream out;
    out << a.dim() << "\n";
    for (int i = 0; i < a.dim(); ++i) {
        for (int j = 0; j < a.dim(); ++j) {
            if (j) out << ' ';
            out << a.entries()(i, j);
        }
        out << "\n";
    }
    return out.str();
}

SpectralSummary spectral_summary(const ToralAutomorphism& a)
{
    Eigen::EigenSolver<Mat> es(a.real(), false);
    SpectralSummary s;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        s.log_moduli.push_back(std::log(std::abs(es.eigenvalues()[i])));
    std::sort(s.log_moduli.begin(), s.log_moduli.end());
    const int n = static_cast<int>(s.log_moduli.size());
    int b = 0;
    for (int i = 0; i < n; ++i)
        if (s.log_moduli[i] < -kUnitModulusTol) b = i + 1;
    if (b == 0) {
        s.b.reset();
        s.chi_bar = s.chi_hat = s.log_moduli.back();
        return s;
    }
    s.b = b;
    s.chi_bar = s.log_moduli[n - b];
    s.chi_hat = s.log_moduli[n - 1];
    return s;
}

bool check_anosov(const ToralAutomorphism& a)
{
    const auto s = spectral_summary(a);
    return std::none_of(s.log_moduli.begin(), s.log_moduli.end(),
                        [](double l) { return std::abs(l) <= kUnitModulusTol; });
}

void HyperbolicRates::validate() const
{
    if (!(chi_bar_s > 0 && chi_bar_u > 0))
        throw Error(Errc::InconsistentRates, "stable and unstable rates must be positive");
    if (!(-chi_bar_s < chi_bar_c && chi_bar_c <= chi_hat_c && chi_hat_c < chi_bar_u))
        throw Error(Errc::InconsistentRates, "center rates outside (-chi_bar_s, chi_bar_u)");
    for (const auto& [lo, hi] : ds)
        if (!(lo <= hi)) throw Error(Errc::InconsistentRates, "dominated splitting pair out of order");
}

HyperbolicRates rates_from_summaries(const SpectralSummary& base, const SpectralSummary& fiber)
{
    if (!base.b) throw Error(Errc::NotAnosovBase, "base has no contracting eigenvalue");
    const auto& lm = base.log_moduli;
    const int b = *base.b;
    HyperbolicRates r;
    r.chi_bar_s = -lm[b - 1];
    r.chi_hat_s = -lm.front();
    r.chi_bar_u = base.chi_bar;
    r.chi_hat_u = base.chi_hat;
    r.chi_bar_c = fiber.log_moduli.front();
    r.chi_hat_c = fiber.log_moduli.back();
    r.chi_hat_s = std::max(r.chi_hat_s, -r.chi_bar_c);
    r.chi_hat_u = std::max(r.chi_hat_u, r.chi_hat_c);
    return r;
}

void InequalityReport::add(std::string name, double lhs, double rhs)
{
    InequalityRow row;
    row.name = std::move(name);
    row.lhs = lhs;
    row.rhs = rhs;
    row.margin = rhs - lhs;
    row.holds = row.margin > kStrictMargin;
    rows.push_back(std::move(row));
}

bool InequalityReport::all_hold() const
{
    return std::all_of(rows.begin(), rows.end(), [](const InequalityRow& r) { return r.holds; });
}

InequalityReport pinching_report(const HyperbolicRates& r, double theta)
{
    InequalityReport rep;
    rep.add("pinching_lower", -r.chi_bar_s + theta * r.chi_hat_u, r.chi_bar_c);
    rep.add("pinching_upper", r.chi_hat_c, r.chi_bar_u - theta * r.chi_hat_s);
    return rep;
}

bool check_pinching(const HyperbolicRates& r, double theta) { return pinching_report(r, theta).all_hold(); }

InequalityReport center_bunching_report(const HyperbolicRates& r, int l)
{
    InequalityReport rep;
    for (int k = 1; k <= l; ++k) {
        rep.add("bunching_s_k" + std::to_string(k), -r.chi_bar_s - r.chi_bar_c + k * r.chi_hat_c, 0.0);
        rep.add("bunching_u_k" + std::to_string(k), -r.chi_bar_u + r.chi_hat_c - k * r.chi_bar_c, 0.0);
    }
    return rep;
}

bool check_center_bunching(const HyperbolicRates& r, int l) { return center_bunching_report(r, l).all_hold(); }

InequalityReport ds_pinching_report(const HyperbolicRates& r, double theta)
{
    if (r.ds.empty()) throw Error(Errc::MissingSplitting, "no dominated splitting rates");
    const auto& first = r.ds.front();
    const auto& last = r.ds.back();
    const double gap = std::min(last.second - last.first, first.second - first.first);
    InequalityReport rep;
    rep.add("ds_pinching", std::max(r.chi_hat_u, r.chi_hat_s) * theta, gap);
    return rep;
}

bool check_ds_pinching(const HyperbolicRates& r, double theta) { return ds_pinching_report(r, theta).all_hold(); }

namespace {

void add_bunching_like(InequalityReport& rep, const std::string& prefix, const SkewRates& r)
{
    const double tail = r.chi_hat_c - r.chi_bar_c + std::max(r.chi_hat_c, 0.0) + std::max(-r.chi_bar_c, 0.0);
    rep.add(prefix + "_s", -r.chi_bar_s + tail, 0.0);
    rep.add(prefix + "_u", -r.chi_bar_u + tail, 0.0);
}

} // namespace

ClassReport classify_skew_product(const SkewRates& r, int l)
{
    if (r.fiber_dim <= 0) throw Error(Errc::InvalidArgument, "fiber dimension must be positive");
    double prev = r.chi_bar_c;
    for (const auto& [lo, hi] : r.ds) {
        if (!(prev <= lo && lo <= hi)) throw Error(Errc::InconsistentRates, "splitting rates out of order");
        prev = hi;
    }
    if (!(prev <= r.chi_hat_c)) throw Error(Errc::InconsistentRates, "splitting rates exceed center rates");

    ClassReport out;
    const double c = r.fiber_dim;
    const double lhs = std::max(-r.chi_bar_c, r.chi_hat_c) * c / (c + 1.0);

    if (r.ds.size() >= 2 && l >= 1 && 2 * l <= r.fiber_dim) {
        for (int i = 0; i < 2; ++i)
            out.u1.add("ds_gap_" + std::to_string(i + 1), r.ds[i].first, r.ds[i].second);
        const double gap = std::min(r.ds[0].second - r.ds[0].first, r.ds[1].second - r.ds[1].first);
        out.u1.add("spt1_1", lhs, gap);
        add_bunching_like(out.u1, "spt1_2", r);
        out.in_U1 = out.u1.all_hold();
    } else {
        out.notes.push_back("U1 needs two splitting pairs and 1 <= l <= c/2");
    }

    if (!r.ds.empty()) {
        const auto [lo, hi] = r.ds.front();
        out.u2.add("ds_gap_1", lo, hi);
        out.u2.add("spt2_1", lhs, hi - lo);
        out.u2.add("spt2_2", r.chi_hat_c + lo - 2.0 * hi, 0.0);
        add_bunching_like(out.u2, "spt2_3", r);
        out.in_U2 = out.u2.all_hold();
        out.ds2.add("pinching_alike", lo - 2.0 * hi + r.chi_hat_c, 0.0);
        out.fiber_in_DS2 = out.ds2.all_hold();
    } else {
        out.notes.push_back("U2 needs a splitting pair");
    }
    return out;
}

ClassReport classify_skew_product(const SpectralSummary& base, const SpectralSummary& fiber,
                                  const std::vector<std::pair<double, double>>& ds, int l)
{
    const HyperbolicRates h = rates_from_summaries(base, fiber);
    SkewRates r;
    r.chi_bar_s = h.chi_bar_s;
    r.chi_bar_u = h.chi_bar_u;
    r.chi_bar_c = h.chi_bar_c;
    r.chi_hat_c = h.chi_hat_c;
    r.ds = ds;
    r.fiber_dim = static_cast<int>(fiber.log_moduli.size());
    return classify_skew_product(r, l);
}

ExampleReport example_conditions_report(const ToralAutomorphism& a, const ToralAutomorphism& b, int k)
{
    if (k <= 0) throw Error(Errc::InvalidArgument, "k must be positive");
    if (!check_anosov(b) || b.dim() % 2 != 0) throw Error(Errc::NotAnosovBase, "base is not Anosov");
    const SpectralSummary sb = spectral_summary(b);
    if (!sb.b || *sb.b * 2 != b.dim()) throw Error(Errc::NotAnosovBase, "base splitting is not balanced");
    const SpectralSummary sa = spectral_summary(a);
    if (!sa.b) throw Error(Errc::CentralAllUnit, "central automorphism has only unit moduli");

    const double n = a.dim();
    const double bk_bar = k * sb.chi_bar;
    const double bk_hat = k * sb.chi_hat;
    ExampleReport rep;
    rep.conditions.add("affine_1", 4.0 * sa.chi_hat, bk_bar);
    rep.conditions.add("affine_2", sa.chi_hat * n / (n + 1.0), sa.chi_bar);
    rep.conditions.add("affine_3", sa.chi_hat, bk_bar - ((n - 1.0) / n) * bk_hat);
    InequalityReport reduced;
    reduced.add("reduced_conformal", std::max(n, 4.0) * sa.chi_hat, bk_hat);
    rep.reduced = reduced.rows.front();
    rep.holds = rep.conditions.all_hold();
    return rep;
}

bool check_example_conditions(const ToralAutomorphism& a, const ToralAutomorphism& b, int k)
{
    return example_conditions_report(a, b, k).holds;
}

double xi(const HyperbolicRates& r)
{
    return std::min(r.chi_bar_c + r.chi_bar_s, r.chi_bar_u - r.chi_hat_c);
}

} // namespace phskew
