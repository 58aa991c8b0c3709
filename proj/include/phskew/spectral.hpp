#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phskew/linalg.hpp"

namespace phskew {

/// Strict inequalities count as satisfied only above this slack.
inline constexpr double kStrictMargin = 1e-12;
/// |log modulus| below this is treated as a unit-modulus eigenvalue.
inline constexpr double kUnitModulusTol = 1e-10;

/// Integer matrix with determinant +-1 acting on the torus T^d.
class ToralAutomorphism {
public:
    ToralAutomorphism() = default;
    /// Throws NonUnimodular unless square with det in {+1,-1}.
    explicit ToralAutomorphism(IMat entries);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const IMat& entries() const { return entries_; }
    const IMat& inverse_entries() const { return inverse_; }
    int det() const { return det_; }
    Mat real() const { return entries_.cast<double>(); }
    Mat real_inverse() const { return inverse_.cast<double>(); }

    /// k-th power (k may be negative).
    ToralAutomorphism power(int k) const;
    /// Block diagonal sum.
    static ToralAutomorphism direct_sum(const ToralAutomorphism& a, const ToralAutomorphism& b);

private:
    IMat entries_;
    IMat inverse_;
    int det_ = 1;
};

/// Parses the plain matrix format: "d", then d rows of d integers separated by single spaces.
ToralAutomorphism parse_matrix(const std::string& text);
ToralAutomorphism read_matrix_file(const std::string& path);
std::string format_matrix(const ToralAutomorphism& a);

struct SpectralSummary {
    std::vector<double> log_moduli;  // ascending
    std::optional<int> b;            // 1-based index of the last modulus < 1
    double chi_bar = 0.0;            // log |lambda_{n-b+1}|
    double chi_hat = 0.0;            // log |lambda_n|
};

SpectralSummary spectral_summary(const ToralAutomorphism& a);
bool check_anosov(const ToralAutomorphism& a);

struct HyperbolicRates {
    double chi_bar_s = 0, chi_hat_s = 0;
    double chi_bar_u = 0, chi_hat_u = 0;
    double chi_bar_c = 0, chi_hat_c = 0;
    std::vector<std::pair<double, double>> ds;  // (chi_bar_i, chi_hat_i)
    bool empirical = false;                     // true when bounded by sampling

    /// Throws InconsistentRates on violated ordering.
    void validate() const;
};

/// Linear base with a linear fiber: stable/unstable from the base, center from the fiber.
HyperbolicRates rates_from_summaries(const SpectralSummary& base, const SpectralSummary& fiber);

/// One strict inequality lhs < rhs.
struct InequalityRow {
    std::string name;
    double lhs = 0, rhs = 0;
    double margin = 0;  // rhs - lhs
    bool holds = false;
};

struct InequalityReport {
    std::vector<InequalityRow> rows;
    void add(std::string name, double lhs, double rhs);
    bool all_hold() const;
};

InequalityReport pinching_report(const HyperbolicRates& r, double theta);
bool check_pinching(const HyperbolicRates& r, double theta);

InequalityReport center_bunching_report(const HyperbolicRates& r, int l);
bool check_center_bunching(const HyperbolicRates& r, int l);

InequalityReport ds_pinching_report(const HyperbolicRates& r, double theta);
bool check_ds_pinching(const HyperbolicRates& r, double theta);

/// Rates entering the two skew-product classes.
struct SkewRates {
    double chi_bar_s = 0, chi_bar_u = 0;
    double chi_bar_c = 0, chi_hat_c = 0;
    std::vector<std::pair<double, double>> ds;
    int fiber_dim = 0;
};

struct ClassReport {
    bool in_U1 = false, in_U2 = false, fiber_in_DS2 = false;
    InequalityReport u1, u2, ds2;
    std::vector<std::string> notes;
};

ClassReport classify_skew_product(const SkewRates& r, int l);
ClassReport classify_skew_product(const SpectralSummary& base, const SpectralSummary& fiber,
                                  const std::vector<std::pair<double, double>>& ds, int l);

struct ExampleReport {
    InequalityReport conditions;
    InequalityRow reduced;
    bool holds = false;
};

ExampleReport example_conditions_report(const ToralAutomorphism& a, const ToralAutomorphism& b, int k);
bool check_example_conditions(const ToralAutomorphism& a, const ToralAutomorphism& b, int k);

double xi(const HyperbolicRates& r);

} // namespace phskew
