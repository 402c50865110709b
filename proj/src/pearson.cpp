#include "mandet/pearson.hpp"

#include "mandet/errors.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mandet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-13;

}  // namespace

std::string_view to_string(PearsonFamily family) {
    switch (family) {
        case PearsonFamily::Normal: return "normal";
        case PearsonFamily::I: return "I";
        case PearsonFamily::II: return "II";
        case PearsonFamily::III: return "III";
        case PearsonFamily::IV: return "IV";
        case PearsonFamily::V: return "V";
        case PearsonFamily::VI: return "VI";
        case PearsonFamily::VII: return "VII";
    }
    return "?";
}

double PearsonFit::log_shape(double y) const {
    auto raw = [&](double t) {
        switch (shape_) {
            case Shape::Gauss: return -0.5 * t * t / moments_.variance;
            case Shape::Linear: return m1_ * std::log(std::abs(b0_ + b1_ * t)) + m2_ * t;
            case Shape::DoubleRoot: return m1_ * std::log(std::abs(t - r1_)) + m2_ / (t - r1_);
            case Shape::ComplexRoots: {
                const double u = (t - r1_) / r2_;
                return m1_ * std::log1p(u * u) + m2_ * std::atan(u);
            }
            case Shape::TwoRoots:
                return m1_ * std::log(std::abs(t - r1_)) + m2_ * std::log(std::abs(t - r2_));
        }
        return 0.0;
    };
    return raw(y) - raw(0.0);
}

double PearsonFit::integrate(int k, double lo, double hi) const {
    if (!(hi > lo)) return 0.0;
    const double ylo = lower_ - moments_.mean;
    const double yhi = upper_ - moments_.mean;
    auto f = [&](double y) {
        if (y <= ylo || y >= yhi) return 0.0;
        const double p = std::exp(log_shape(y) + log_norm_);
        if (!std::isfinite(p)) return 0.0;
        if (k == 0 || p == 0.0) return p;
        return std::pow(y, k) * p;
    };
    if (std::isfinite(lo) && std::isfinite(hi)) {
        boost::math::quadrature::tanh_sinh<double> q;
        if (shape_ != Shape::TwoRoots) return q.integrate(f, lo, hi, kQuadTol);
        // Near a support edge the root distance comes from the complement
        // argument; y - r1 would cancel to zero and blow up for m < 0.
        const bool at_lo = lo == ylo, at_hi = hi == yhi;
        const double width = r2_ - r1_;
        auto g = [&](double y, double yc) {
            double d1 = std::abs(y - r1_), d2 = std::abs(y - r2_);
            if (yc < 0.0 && at_lo) {
                d1 = -yc;
                d2 = width - d1;
            } else if (yc > 0.0 && at_hi) {
                d2 = yc;
                d1 = width - d2;
            }
            if (!(d1 > 0.0 && d2 > 0.0)) return 0.0;
            const double p = std::exp(m1_ * std::log(d1) + m2_ * std::log(d2) - log_root0_ + log_norm_);
            if (!std::isfinite(p)) return 0.0;
            return k == 0 ? p : std::pow(y, k) * p;
        };
        return q.integrate(g, lo, hi, kQuadTol);
    }
    if (std::isfinite(lo) || std::isfinite(hi)) {
        boost::math::quadrature::exp_sinh<double> q;
        return q.integrate(f, lo, hi, kQuadTol);
    }
    boost::math::quadrature::sinh_sinh<double> q;
    return q.integrate(f, kQuadTol);
}

double PearsonFit::pdf(double x) const {
    if (!(x > lower_ && x < upper_)) return 0.0;
    return std::exp(log_shape(x - moments_.mean) + log_norm_);
}

double PearsonFit::cdf(double x) const {
    if (x <= lower_) return 0.0;
    if (x >= upper_) return 1.0;
    const double y = x - moments_.mean;
    // Integrate over the shorter side for accuracy in the tails.
    if (y <= 0.0) return std::clamp(integrate(0, lower_ - moments_.mean, y), 0.0, 1.0);
    return std::clamp(1.0 - integrate(0, y, upper_ - moments_.mean), 0.0, 1.0);
}

double PearsonFit::central_moment(int k) const {
    return integrate(k, lower_ - moments_.mean, upper_ - moments_.mean);
}

PearsonFit pearson_fit(const MomentSet& m) {
    if (!std::isfinite(m.mean) || !std::isfinite(m.variance) || !std::isfinite(m.skewness) ||
        !std::isfinite(m.kurtosis))
        throw InputError("moments must be finite");
    if (!(m.variance > 0.0)) throw InputError("variance must be positive");
    const double beta1 = m.skewness * m.skewness;
    const double beta2 = m.kurtosis;
    if (!(beta2 > beta1 + 1.0)) throw InputError("kurtosis must exceed skewness^2 + 1");

    PearsonFit fit;
    fit.moments_ = m;
    const double sd = std::sqrt(m.variance);
    fit.a_ = sd * m.skewness * (beta2 + 3.0);
    fit.c_ = 10.0 * beta2 - 12.0 * beta1 - 18.0;
    fit.b0_ = m.variance * (4.0 * beta2 - 3.0 * beta1);
    fit.b1_ = fit.a_;
    fit.b2_ = 2.0 * beta2 - 3.0 * beta1 - 6.0;
    fit.kappa_ = beta1 * (beta2 + 3.0) * (beta2 + 3.0) / (4.0 * (4.0 * beta2 - 3.0 * beta1) * fit.b2_);
    fit.lower_ = -kInf;
    fit.upper_ = kInf;
    const double a = fit.a_, c = fit.c_, b0 = fit.b0_, b1 = fit.b1_, b2 = fit.b2_;
    const bool symmetric = std::abs(m.skewness) < 1e-12;
    using Shape = PearsonFit::Shape;

    auto anchor = [&](double root, bool right_of_root) {
        if (right_of_root)
            fit.lower_ = m.mean + root;
        else
            fit.upper_ = m.mean + root;
    };

    if (beta1 < 1e-3 && std::abs(beta2 - 3.0) < 1e-2) {
        fit.family_ = PearsonFamily::Normal;
        fit.shape_ = Shape::Gauss;
        fit.a_ = fit.b1_ = fit.b2_ = 0.0;
        fit.c_ = 1.0;
        fit.b0_ = m.variance;
        fit.kappa_ = 0.0;
        fit.log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi * m.variance);
        return fit;
    }
    if (std::abs(b2) < 1e-9) {
        // Gamma-type: Q linear in y.
        fit.family_ = PearsonFamily::III;
        fit.shape_ = Shape::Linear;
        fit.b2_ = 0.0;
        fit.r1_ = fit.r2_ = -b0 / b1;
        fit.m1_ = -(a - c * b0 / b1) / b1;
        fit.m2_ = -c / b1;
        anchor(fit.r1_, fit.r1_ < 0.0);
    } else {
        const double disc = b1 * b1 - 4.0 * b0 * b2;
        const double h = -b1 / (2.0 * b2);
        if (std::abs(fit.kappa_ - 1.0) < 1e-9) {
            fit.family_ = PearsonFamily::V;
            fit.shape_ = Shape::DoubleRoot;
            fit.r1_ = fit.r2_ = h;
            fit.m1_ = -c / b2;
            fit.m2_ = (a + c * h) / b2;
            anchor(h, h < 0.0);
        } else if (disc < 0.0) {
            fit.family_ = symmetric ? PearsonFamily::VII : PearsonFamily::IV;
            fit.shape_ = Shape::ComplexRoots;
            const double C = std::sqrt(b0 / b2 - h * h);
            fit.r1_ = h;
            fit.r2_ = C;
            fit.m1_ = -c / (2.0 * b2);
            fit.m2_ = -(a + c * h) / (b2 * C);
        } else {
            fit.shape_ = Shape::TwoRoots;
            const double sq = std::sqrt(disc);
            double r1 = (-b1 - sq) / (2.0 * b2);
            double r2 = (-b1 + sq) / (2.0 * b2);
            if (r1 > r2) std::swap(r1, r2);
            fit.r1_ = r1;
            fit.r2_ = r2;
            fit.m1_ = -(a + c * r1) / (b2 * (r1 - r2));
            fit.m2_ = -(a + c * r2) / (b2 * (r2 - r1));
            fit.log_root0_ = fit.m1_ * std::log(std::abs(r1)) + fit.m2_ * std::log(std::abs(r2));
            if (r1 < 0.0 && r2 > 0.0) {
                fit.family_ = symmetric ? PearsonFamily::II : PearsonFamily::I;
                fit.lower_ = m.mean + r1;
                fit.upper_ = m.mean + r2;
            } else {
                fit.family_ = PearsonFamily::VI;
                if (r2 < 0.0)
                    anchor(r2, true);
                else
                    anchor(r1, false);
            }
        }
    }
    fit.log_norm_ = 0.0;
    const double mass = fit.central_moment(0);
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw InputError("Pearson density could not be normalised");
    fit.log_norm_ = -std::log(mass);
    return fit;
}

}  // namespace mandet
