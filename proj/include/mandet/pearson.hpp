#pragma once

#include <string_view>

namespace mandet {

struct MomentSet {
    double mean = 0.0;
    double variance = 0.0;
    double skewness = 0.0;
    double kurtosis = 3.0;  // non-excess
};

enum class PearsonFamily { Normal, I, II, III, IV, V, VI, VII };
std::string_view to_string(PearsonFamily family);

/// Pearson-system density p with p'/p = -(a + c y) / (b0 + b1 y + b2 y^2),
/// y = x - mean (coefficients kept multiplied through by c = 10k - 12s^2 - 18). The family fixes the closed form of log p; the
/// normalising constant is obtained by quadrature.
class PearsonFit {
public:
    PearsonFamily family() const { return family_; }
    const MomentSet& moments() const { return moments_; }
    double kappa() const { return kappa_; }
    /// Pearson criterion coefficients (units of y).
    double a() const { return a_; }
    double c() const { return c_; }
    double b0() const { return b0_; }
    double b1() const { return b1_; }
    double b2() const { return b2_; }
    /// Support [lower, upper] in x; infinite ends are +-inf.
    double lower() const { return lower_; }
    double upper() const { return upper_; }
    /// Family-specific shape exponents: m1, m2 for I/II/VI (powers of |y-r1|,
    /// |y-r2|), m for III/V/IV/VII; roots r1 <= r2 (or centre/half-width for IV/VII).
    double m1() const { return m1_; }
    double m2() const { return m2_; }
    double r1() const { return r1_; }
    double r2() const { return r2_; }

    double pdf(double x) const;
    double cdf(double x) const;
    /// int (x - mean)^k p(x) dx by quadrature; k = 0 gives the total mass.
    double central_moment(int k) const;

    friend PearsonFit pearson_fit(const MomentSet& m);

private:
    double log_shape(double y) const;  // unnormalised log density, 0 at y = 0
    double integrate(int k, double lo, double hi) const;  // bounds in y

    PearsonFamily family_ = PearsonFamily::Normal;
    MomentSet moments_;
    double kappa_ = 0.0;
    enum class Shape { Gauss, TwoRoots, ComplexRoots, DoubleRoot, Linear };
    Shape shape_ = Shape::Gauss;
    double a_ = 0.0, c_ = 1.0, b0_ = 1.0, b1_ = 0.0, b2_ = 0.0;
    double lower_ = 0.0, upper_ = 0.0;
    double m1_ = 0.0, m2_ = 0.0, r1_ = 0.0, r2_ = 0.0;
    double log_norm_ = 0.0;
    double log_root0_ = 0.0;  // two-root log shape at y = 0
};

/// Requires variance > 0 and kurtosis > skewness^2 + 1; throws InputError
/// naming the violated inequality otherwise. Normal is chosen when
/// skewness^2 < 1e-3 and |kurtosis - 3| < 1e-2.
PearsonFit pearson_fit(const MomentSet& m);

}  // namespace mandet
