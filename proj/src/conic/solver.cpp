// Homogeneous self-dual interior-point method for
//   min c'x  s.t.  A x = b,  G x + s = h,  s in K
// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps. The
// public standard form (A x = b, x in K) maps onto it with G = -I on the
// cone-constrained columns and h = 0.

#include "mandet/conic.hpp"

#include "mandet/errors.hpp"

#include "ldl.hpp"

#include <Eigen/SparseQR>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

namespace mandet::conic {

namespace {

using Eigen::VectorXd;

constexpr double kStepFraction = 0.99;
constexpr double kRefinementTol = 1e-14;
constexpr double kPivotEps = 1e-13;
constexpr double kPivotDelta = 7e-8;

// ---------------------------------------------------------------------------
// Cone algebra. Cone rows are ordered: all nonnegative rows first, then the
// second-order blocks in sequence.

struct Cones {
    int nonneg = 0;
    std::vector<int> soc_dims;
    std::vector<int> soc_start;  // row offsets of each SOC block
    int rows = 0;

    int degree() const { return nonneg + static_cast<int>(soc_dims.size()); }
};

struct SocScaling {
    double eta = 1.0;
    VectorXd wbar;  // hyperbolic unit vector, wbar' J wbar = 1
};

struct Scaling {
    VectorXd nonneg_w;  // sqrt(s / z)
    std::vector<SocScaling> soc;
    VectorXd lambda;  // W z = W^{-1} s
};

double soc_residual(double t, const VectorXd& tail) {
    const double tn = tail.norm();
    return (t - tn) * (t + tn);
}

// Largest violation: positive when outside the cone.
double max_violation(const Cones& k, const VectorXd& u) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k.nonneg; ++i) worst = std::max(worst, -u[i]);
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
        const int o = k.soc_start[c];
        const int d = k.soc_dims[c];
        worst = std::max(worst, u.segment(o + 1, d - 1).norm() - u[o]);
    }
    return worst;
}

// u + alpha e, the cone identity e = (1, ..., 1 | 1, 0, ..., 0 | ...).
void add_identity(const Cones& k, VectorXd& u, double alpha) {
    for (int i = 0; i < k.nonneg; ++i) u[i] += alpha;
    for (int o : k.soc_start) u[o] += alpha;
}

VectorXd jordan_product(const Cones& k, const VectorXd& u, const VectorXd& v) {
    VectorXd out(u.size());
    out.head(k.nonneg) = u.head(k.nonneg).cwiseProduct(v.head(k.nonneg));
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
        const int o = k.soc_start[c];
        const int d = k.soc_dims[c];
        out[o] = u.segment(o, d).dot(v.segment(o, d));
        out.segment(o + 1, d - 1) = u[o] * v.segment(o + 1, d - 1) + v[o] * u.segment(o + 1, d - 1);
    }
    return out;
}

// x with lambda o x = d.
VectorXd jordan_divide(const Cones& k, const VectorXd& lambda, const VectorXd& d) {
    VectorXd out(d.size());
    out.head(k.nonneg) = d.head(k.nonneg).cwiseQuotient(lambda.head(k.nonneg));
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
        const int o = k.soc_start[c];
        const int n = k.soc_dims[c] - 1;
        const double l0 = lambda[o];
        const auto l1 = lambda.segment(o + 1, n);
        const double det = soc_residual(l0, l1);
        const double x0 = (l0 * d[o] - l1.dot(d.segment(o + 1, n))) / det;
        out[o] = x0;
        out.segment(o + 1, n) = (d.segment(o + 1, n) - x0 * l1) / l0;
    }
    return out;
}

// W-bar v for a hyperbolic unit vector w: [w0 w1'; w1 I + w1 w1'/(1+w0)].
VectorXd apply_wbar(const VectorXd& w, const VectorXd& v, bool inverse) {
    const int n = static_cast<int>(w.size()) - 1;
    const double w0 = w[0];
    VectorXd w1 = w.tail(n);
    if (inverse) w1 = -w1;
    VectorXd out(v.size());
    const double w1v1 = w1.dot(v.tail(n));
    out[0] = w0 * v[0] + w1v1;
    out.tail(n) = v[0] * w1 + v.tail(n) + (w1v1 / (1.0 + w0)) * w1;
    return out;
}

VectorXd apply_w(const Cones& k, const Scaling& sc, const VectorXd& v, bool inverse) {
    VectorXd out(v.size());
    if (inverse)
        out.head(k.nonneg) = v.head(k.nonneg).cwiseQuotient(sc.nonneg_w);
    else
        out.head(k.nonneg) = v.head(k.nonneg).cwiseProduct(sc.nonneg_w);
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
        const int o = k.soc_start[c];
        const int d = k.soc_dims[c];
        const double eta = sc.soc[c].eta;
        const VectorXd wv = apply_wbar(sc.soc[c].wbar, v.segment(o, d), inverse);
        out.segment(o, d) = inverse ? (wv / eta).eval() : (eta * wv).eval();
    }
    return out;
}

VectorXd apply_w2(const Cones& k, const Scaling& sc, const VectorXd& v) {
    return apply_w(k, sc, apply_w(k, sc, v, false), false);
}

std::optional<Scaling> nt_scaling(const Cones& k, const VectorXd& s, const VectorXd& z) {
    Scaling sc;
    sc.nonneg_w.resize(k.nonneg);
    for (int i = 0; i < k.nonneg; ++i) {
        if (!(s[i] > 0.0) || !(z[i] > 0.0)) return std::nullopt;
        sc.nonneg_w[i] = std::sqrt(s[i] / z[i]);
    }
    sc.soc.resize(k.soc_dims.size());
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
        const int o = k.soc_start[c];
        const int d = k.soc_dims[c];
        const double sres = soc_residual(s[o], s.segment(o + 1, d - 1));
        const double zres = soc_residual(z[o], z.segment(o + 1, d - 1));
        if (!(sres > 0.0) || !(zres > 0.0) || !(s[o] > 0.0) || !(z[o] > 0.0)) return std::nullopt;
        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        const VectorXd sbar = s.segment(o, d) / snorm;
        VectorXd zbar = z.segment(o, d) / znorm;
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        zbar.tail(d - 1) = -zbar.tail(d - 1);  // J zbar
        sc.soc[c].wbar = (sbar + zbar) / (2.0 * gamma);
        sc.soc[c].eta = std::sqrt(snorm / znorm);
    }
    sc.lambda = apply_w(k, sc, z, false);
    return sc;
}

// Largest alpha in (0, 1] with u + alpha du in K.
double max_step(const Cones& k, const VectorXd& u, const VectorXd& du) {
    double alpha = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k.nonneg; ++i)
        if (du[i] < 0.0) alpha = std::min(alpha, -u[i] / du[i]);
    for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
        const int o = k.soc_start[c];
        const int n = k.soc_dims[c] - 1;
        const double u0 = u[o];
        const double d0 = du[o];
        const auto u1 = u.segment(o + 1, n);
        const auto d1 = du.segment(o + 1, n);
        // f(a) = qa a^2 + 2 qb a + qc >= 0 with qc > 0 inside the cone.
        const double qa = d0 * d0 - d1.squaredNorm();
        const double qb = u0 * d0 - u1.dot(d1);
        const double qc = std::max(soc_residual(u0, u1), 0.0);
        double root = std::numeric_limits<double>::infinity();
        if (std::abs(qa) < 1e-300) {
            if (qb < 0.0) root = -qc / (2.0 * qb);
        } else {
            const double disc = qb * qb - qa * qc;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                // Stable roots of qa a^2 + 2 qb a + qc.
                const double q = -(qb + std::copysign(sq, qb));
                const double r1 = q / qa;
                const double r2 = q != 0.0 ? qc / q : std::numeric_limits<double>::infinity();
                for (double r : {r1, r2})
                    if (r > 0.0) root = std::min(root, r);
            }
        }
        // The head must stay nonnegative as well.
        if (d0 < 0.0) root = std::min(root, -u0 / d0);
        alpha = std::min(alpha, root);
    }
    return alpha;
}

// ---------------------------------------------------------------------------

struct Problem {
    int n = 0;  // variables
    int p = 0;  // equality rows
    int m = 0;  // cone rows
    VectorXd c, b, h;
    SparseMatrix A, G;
    Cones cones;
};

class KktSolver {
public:
    KktSolver(const Problem& pr, double reg, int refinement)
        : pr_(pr), reg_(reg), refinement_(refinement), At_(pr.A.transpose()), Gt_(pr.G.transpose()) {}

    bool factor(const Scaling& sc) {
        scaling_ = &sc;
        const int n = pr_.n, p = pr_.p, m = pr_.m;
        const int dim = n + p + m;
        std::vector<Triplet> t;
        t.reserve(static_cast<std::size_t>(n + 2 * p + m + pr_.A.nonZeros() + pr_.G.nonZeros()) +
                  soc_entries());
        for (int i = 0; i < n; ++i) t.emplace_back(i, i, reg_);
        for (int j = 0; j < pr_.A.outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(pr_.A, j); it; ++it)
                t.emplace_back(n + it.row(), j, it.value());
        for (int r = 0; r < p; ++r) t.emplace_back(n + r, n + r, -reg_);
        for (int j = 0; j < pr_.G.outerSize(); ++j)
            for (SparseMatrix::InnerIterator it(pr_.G, j); it; ++it)
                t.emplace_back(n + p + it.row(), j, it.value());
        const Cones& k = pr_.cones;
        const int zo = n + p;
        for (int i = 0; i < k.nonneg; ++i) {
            const double w = sc.nonneg_w[i];
            t.emplace_back(zo + i, zo + i, -w * w - reg_);
        }
        for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
            const int o = k.soc_start[c];
            const int d = k.soc_dims[c];
            const double e2 = sc.soc[c].eta * sc.soc[c].eta;
            const VectorXd& w = sc.soc[c].wbar;
            for (int a = 0; a < d; ++a) {
                for (int bb = 0; bb <= a; ++bb) {
                    double v = 2.0 * w[a] * w[bb];
                    if (a == bb) v += (a == 0 ? -1.0 : 1.0);
                    v *= e2;
                    t.emplace_back(zo + o + a, zo + o + bb, a == bb ? -v - reg_ : -v);
                }
            }
        }
        K_.resize(dim, dim);
        K_.setFromTriplets(t.begin(), t.end());
        if (!analyzed_) {
            std::vector<signed char> signs(static_cast<std::size_t>(dim), -1);
            std::fill(signs.begin(), signs.begin() + n, 1);
            ldl_.analyze(K_, signs);
            analyzed_ = true;
        }
        return ldl_.factorize(K_, kPivotEps, kPivotDelta);
    }

    // Solves the unregularised system with iterative refinement.
    VectorXd solve(const VectorXd& rhs) const {
        VectorXd sol = ldl_.solve(rhs);
        const double target = kRefinementTol * (1.0 + rhs.lpNorm<Eigen::Infinity>());
        VectorXd err = rhs - multiply(sol);
        double err_norm = err.lpNorm<Eigen::Infinity>();
        for (int it = 0; it < refinement_ && err_norm > target; ++it) {
            // Stop once refinement no longer helps; it diverges when the
            // regularised factor is far from K.
            VectorXd next = sol + ldl_.solve(err);
            VectorXd next_err = rhs - multiply(next);
            const double next_norm = next_err.lpNorm<Eigen::Infinity>();
            if (!(next_norm < err_norm)) break;
            sol = std::move(next);
            err = std::move(next_err);
            err_norm = next_norm;
        }
        last_residual_ = err_norm / (1.0 + rhs.lpNorm<Eigen::Infinity>());
        return sol;
    }

private:
    std::size_t soc_entries() const {
        std::size_t total = 0;
        for (int d : pr_.cones.soc_dims) total += static_cast<std::size_t>(d * (d + 1) / 2);
        return total;
    }

    VectorXd multiply(const VectorXd& v) const {
        const int n = pr_.n, p = pr_.p, m = pr_.m;
        VectorXd out(n + p + m);
        const auto x = v.head(n);
        const auto y = v.segment(n, p);
        const auto z = v.tail(m);
        out.head(n) = At_ * y + Gt_ * z;
        out.segment(n, p) = pr_.A * x;
        out.tail(m) = pr_.G * x - apply_w2(pr_.cones, *scaling_, z);
        return out;
    }

    const Problem& pr_;
    double reg_;
    int refinement_;
    SparseMatrix At_, Gt_;
    SparseMatrix K_;
    detail::SparseLdl ldl_;
    bool analyzed_ = false;
    const Scaling* scaling_ = nullptr;

public:
    mutable double last_residual_ = 0.0;
    int regularized() const { return ldl_.regularized_pivots(); }
};

struct Iterate {
    VectorXd x, y, z, s;
    double tau = 1.0;
    double kappa = 1.0;
};

struct Direction {
    VectorXd dx, dy, dz, ds;
    double dtau = 0.0;
    double dkappa = 0.0;
};

enum class Outcome { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations, NumericalError };

struct IpmResult {
    Outcome outcome = Outcome::NumericalError;
    Iterate it;
    int iterations = 0;
};

class Ipm {
public:
    Ipm(const Problem& pr, const SolverSettings& st)
        : pr_(pr), st_(st), kkt_(pr, st.regularization, st.refinement_steps) {}

    IpmResult run() {
        IpmResult result;
        if (!initialize(result.it)) return result;
        Iterate& it = result.it;
        const double bnorm = std::max(1.0, pr_.b.norm());
        const double hnorm = std::max(1.0, pr_.h.norm());
        const double cnorm = std::max(1.0, pr_.c.norm());
        const Cones& k = pr_.cones;
        const double degree = k.degree() + 1.0;
        Iterate best = it;
        double best_merit = std::numeric_limits<double>::infinity();
        int best_iter = 0;
        // Leaves with the best iterate seen so far.
        auto give_up = [&](Outcome why, const char* reason = "") {
            if (st_.verbose) std::fprintf(stderr, "    stop: %s\n", reason);
            result.it = best;
            result.iterations = best_iter;
            result.outcome = best_merit <= st_.acceptable_tol ? Outcome::Optimal : why;
            return result;
        };

        if (st_.verbose)
            std::fprintf(stderr, "vars %d equalities %d cone rows %d (nonneg %d, soc blocks %zu)\n", pr_.n, pr_.p,
                         pr_.m, k.nonneg, k.soc_dims.size());
        for (int iter = 0; iter <= st_.max_iter; ++iter) {
            result.iterations = iter;
            const VectorXd rx = pr_.A.transpose() * it.y + pr_.G.transpose() * it.z + pr_.c * it.tau;
            const VectorXd ry = pr_.A * it.x - pr_.b * it.tau;
            const VectorXd rz = pr_.G * it.x + it.s - pr_.h * it.tau;
            const double cx = pr_.c.dot(it.x);
            const double by_hz = pr_.b.dot(it.y) + pr_.h.dot(it.z);
            const double rt = it.kappa + cx + by_hz;
            const double sz = it.s.dot(it.z);
            const double mu = (sz + it.tau * it.kappa) / degree;

            const double pres = std::max(ry.norm() / bnorm, rz.norm() / hnorm) / it.tau;
            const double dres = rx.norm() / cnorm / it.tau;
            const double pcost = cx / it.tau;
            const double dcost = -by_hz / it.tau;
            const double relgap = std::abs(pcost - dcost) / (1.0 + std::abs(pcost));

            if (st_.verbose)
                std::fprintf(stderr, "%3d pcost %+.6e dcost %+.6e pres %.2e dres %.2e gap %.2e tau %.2e kap %.2e mu %.2e\n",
                             iter, pcost, dcost, pres, dres, relgap, it.tau, it.kappa, mu);
            if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(mu))
                return give_up(Outcome::NumericalError, "non-finite residuals");
            if (pres <= st_.feas_tol && dres <= st_.feas_tol && relgap <= st_.gap_tol) {
                result.outcome = Outcome::Optimal;
                return result;
            }
            // Infeasibility certificates.
            if (by_hz < 0.0 && it.tau < it.kappa) {
                const double res = (pr_.A.transpose() * it.y + pr_.G.transpose() * it.z).norm() / cnorm;
                if (res <= st_.feas_tol * -by_hz) {
                    result.outcome = Outcome::PrimalInfeasible;
                    return result;
                }
            }
            if (cx < 0.0 && it.tau < it.kappa) {
                const double res = std::max((pr_.A * it.x).norm() / bnorm,
                                            (pr_.G * it.x + it.s).norm() / hnorm);
                if (res <= st_.feas_tol * -cx) {
                    result.outcome = Outcome::DualInfeasible;
                    return result;
                }
            }

            const double merit = std::max({pres, dres, relgap});
            if (merit < best_merit) {
                best = it;
                best_merit = merit;
                best_iter = iter;
            } else if (merit > 100.0 * best_merit && best_merit < 1e-4) {
                // Round-off has taken over; further steps only degrade.
                return give_up(Outcome::NumericalError, "residuals diverging");
            }
            if (iter == st_.max_iter) break;

            auto sc = nt_scaling(k, it.s, it.z);
            if (!sc || !kkt_.factor(*sc)) return give_up(Outcome::NumericalError, "scaling or factorization failed");

            // Direction scaled by tau: solution of K [x;y;z] = [-c; b; h].
            VectorXd rhs1(pr_.n + pr_.p + pr_.m);
            rhs1 << -pr_.c, pr_.b, pr_.h;
            const VectorXd sol1 = kkt_.solve(rhs1);

            // Predictor.
            const VectorXd ds_aff = jordan_product(k, sc->lambda, sc->lambda);
            const Direction aff =
                direction(*sc, sol1, rx, ry, rz, rt, ds_aff, it.kappa * it.tau, it);
            const double alpha_aff = step_length(*sc, aff, it);
            const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

            // Corrector.
            VectorXd ds_cmb = ds_aff + jordan_product(k, apply_w(k, *sc, aff.ds, true),
                                                      apply_w(k, *sc, aff.dz, false));
            add_identity(k, ds_cmb, -sigma * mu);
            const double dk_cmb = it.kappa * it.tau + aff.dkappa * aff.dtau - sigma * mu;
            const double f = 1.0 - sigma;
            const Direction cmb = direction(*sc, sol1, f * rx, f * ry, f * rz, f * rt, ds_cmb,
                                            dk_cmb, it);
            const double alpha = std::min(1.0, kStepFraction * step_length(*sc, cmb, it));
            if (st_.verbose) std::fprintf(stderr, "    alpha_aff %.3e sigma %.3e alpha %.3e kkt_res %.1e dynreg %d\n", alpha_aff, sigma, alpha, kkt_.last_residual_, kkt_.regularized());
            if (!(alpha > 0.0) || !std::isfinite(alpha)) return give_up(Outcome::NumericalError, "no step");

            it.x += alpha * cmb.dx;
            it.y += alpha * cmb.dy;
            it.z += alpha * cmb.dz;
            it.s += alpha * cmb.ds;
            it.tau += alpha * cmb.dtau;
            it.kappa += alpha * cmb.dkappa;
            if (!(it.tau > 0.0) || !(it.kappa > 0.0)) return give_up(Outcome::NumericalError, "tau or kappa left the cone");
        }
        return give_up(Outcome::MaxIterations, "iteration limit");
    }

private:
    bool initialize(Iterate& it) {
        const Cones& k = pr_.cones;
        Scaling identity;
        identity.nonneg_w = VectorXd::Ones(k.nonneg);
        identity.soc.resize(k.soc_dims.size());
        for (std::size_t c = 0; c < k.soc_dims.size(); ++c) {
            identity.soc[c].eta = 1.0;
            identity.soc[c].wbar = VectorXd::Zero(k.soc_dims[c]);
            identity.soc[c].wbar[0] = 1.0;
        }
        if (!kkt_.factor(identity)) return false;
        const int n = pr_.n, p = pr_.p, m = pr_.m;

        VectorXd rhs(n + p + m);
        rhs << VectorXd::Zero(n), pr_.b, pr_.h;
        VectorXd sol = kkt_.solve(rhs);
        it.x = sol.head(n);
        it.s = -sol.tail(m);
        shift_into_cone(it.s);

        rhs << -pr_.c, VectorXd::Zero(p), VectorXd::Zero(m);
        sol = kkt_.solve(rhs);
        it.y = sol.segment(n, p);
        it.z = sol.tail(m);
        shift_into_cone(it.z);
        it.tau = 1.0;
        it.kappa = 1.0;
        return it.x.allFinite() && it.y.allFinite();
    }

    void shift_into_cone(VectorXd& u) const {
        if (u.size() == 0) return;
        const double viol = max_violation(pr_.cones, u);
        if (viol >= 0.0) add_identity(pr_.cones, u, 1.0 + viol);
    }

    Direction direction(const Scaling& sc, const VectorXd& sol1, const VectorXd& dx_rhs,
                        const VectorXd& dy_rhs, const VectorXd& dz_rhs, double dtau_rhs,
                        const VectorXd& ds_rhs, double dkappa_rhs, const Iterate& it) {
        const Cones& k = pr_.cones;
        const int n = pr_.n, p = pr_.p, m = pr_.m;
        const VectorXd lds = jordan_divide(k, sc.lambda, ds_rhs);
        VectorXd rhs2(n + p + m);
        rhs2 << -dx_rhs, -dy_rhs, -dz_rhs + apply_w(k, sc, lds, false);
        const VectorXd sol2 = kkt_.solve(rhs2);

        const auto x1 = sol1.head(n), y1 = sol1.segment(n, p), z1 = sol1.tail(m);
        const auto x2 = sol2.head(n), y2 = sol2.segment(n, p), z2 = sol2.tail(m);
        const double num = -dtau_rhs + dkappa_rhs / it.tau -
                           (pr_.c.dot(x2) + pr_.b.dot(y2) + pr_.h.dot(z2));
        const double den = pr_.c.dot(x1) + pr_.b.dot(y1) + pr_.h.dot(z1) - it.kappa / it.tau;

        Direction d;
        d.dtau = num / den;
        d.dx = x2 + d.dtau * x1;
        d.dy = y2 + d.dtau * y1;
        d.dz = z2 + d.dtau * z1;
        d.ds = -apply_w(k, sc, lds + apply_w(k, sc, d.dz, false), false);
        d.dkappa = (-dkappa_rhs - it.kappa * d.dtau) / it.tau;
        return d;
    }

    double step_length(const Scaling& sc, const Direction& d, const Iterate& it) const {
        const Cones& k = pr_.cones;
        // In the scaled space both s and z map onto lambda.
        const VectorXd dss = apply_w(k, sc, d.ds, true);
        const VectorXd dzs = apply_w(k, sc, d.dz, false);
        double alpha = std::min(max_step(k, sc.lambda, dss), max_step(k, sc.lambda, dzs));
        if (d.dtau < 0.0) alpha = std::min(alpha, -it.tau / d.dtau);
        if (d.dkappa < 0.0) alpha = std::min(alpha, -it.kappa / d.dkappa);
        return std::min(alpha, 1.0);
    }

    const Problem& pr_;
    const SolverSettings& st_;
    KktSolver kkt_;
};

// ---------------------------------------------------------------------------
// Presolve: drops zero and dependent rows of A and scales rows to unit
// infinity norm. Returns false (with a certificate) when an inconsistency is
// detected directly.

struct Presolved {
    SparseMatrix A;
    VectorXd b;
    std::vector<int> kept_rows;  // original index of each kept row
    VectorXd row_scale;
    int fixed_variables = 0;
    std::optional<VectorXd> infeasibility;  // Farkas vector over original rows
};

Presolved presolve(const ConicProgram& prog, const SolverSettings& st) {
    Presolved out;
    const int m = prog.num_rows();
    const SparseMatrix At = prog.A.transpose();  // column r of At is row r of A
    std::vector<double> row_max(m, 0.0);
    std::vector<int> row_nnz(m, 0);
    for (int r = 0; r < m; ++r)
        for (SparseMatrix::InnerIterator it(At, r); it; ++it) {
            row_max[r] = std::max(row_max[r], std::abs(it.value()));
            if (it.value() != 0.0) ++row_nnz[r];
        }

    std::vector<int> candidates;
    for (int r = 0; r < m; ++r) {
        if (row_max[r] == 0.0) {
            if (std::abs(prog.b[r]) > st.feas_tol) {
                VectorXd cert = VectorXd::Zero(m);
                cert[r] = prog.b[r] > 0.0 ? -1.0 : 1.0;
                out.infeasibility = cert;
                return out;
            }
            continue;
        }
        if (row_nnz[r] == 1) ++out.fixed_variables;
        candidates.push_back(r);
    }

    // Rank check on the remaining rows for desk-scale programs.
    std::vector<int> kept = candidates;
    if (!candidates.empty() && static_cast<int>(candidates.size()) <= st.rank_check_max_rows) {
        std::vector<Triplet> t;
        for (int idx = 0; idx < static_cast<int>(candidates.size()); ++idx)
            for (SparseMatrix::InnerIterator it(At, candidates[idx]); it; ++it)
                t.emplace_back(it.row(), idx, it.value() / row_max[candidates[idx]]);
        SparseMatrix sub(prog.num_vars(), static_cast<int>(candidates.size()));
        sub.setFromTriplets(t.begin(), t.end());
        sub.makeCompressed();
        Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qr;
        qr.setPivotThreshold(1e-10);
        qr.compute(sub);
        if (qr.info() == Eigen::Success && qr.rank() < static_cast<int>(candidates.size())) {
            const auto& perm = qr.colsPermutation().indices();
            std::vector<int> independent;
            for (int j = 0; j < qr.rank(); ++j) independent.push_back(candidates[perm[j]]);
            std::sort(independent.begin(), independent.end());
            // Dropped rows must be consistent with the kept ones.
            SparseMatrix keptA(static_cast<int>(independent.size()), prog.num_vars());
            std::vector<Triplet> kt;
            for (int idx = 0; idx < static_cast<int>(independent.size()); ++idx)
                for (SparseMatrix::InnerIterator it(At, independent[idx]); it; ++it)
                    kt.emplace_back(idx, it.row(), it.value());
            keptA.setFromTriplets(kt.begin(), kt.end());
            const SparseMatrix keptAt = keptA.transpose();
            Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qk;
            qk.compute(keptAt);
            bool consistent = qk.info() == Eigen::Success;
            for (int r : candidates) {
                if (!consistent) break;
                if (std::binary_search(independent.begin(), independent.end(), r)) continue;
                VectorXd row = VectorXd::Zero(prog.num_vars());
                for (SparseMatrix::InnerIterator it(At, r); it; ++it) row[it.row()] = it.value();
                const VectorXd coef = qk.solve(row);
                if ((keptAt * coef - row).norm() > 1e-8 * (1.0 + row.norm())) continue;
                double rhs = 0.0;
                for (int idx = 0; idx < coef.size(); ++idx) rhs += coef[idx] * prog.b[independent[idx]];
                if (std::abs(rhs - prog.b[r]) > 1e-7 * (1.0 + std::abs(prog.b[r]))) {
                    VectorXd cert = VectorXd::Zero(m);
                    const double sign = prog.b[r] - rhs > 0.0 ? -1.0 : 1.0;
                    cert[r] = sign;
                    for (int idx = 0; idx < coef.size(); ++idx) cert[independent[idx]] = -sign * coef[idx];
                    out.infeasibility = cert / cert.norm();
                    return out;
                }
            }
            if (consistent) kept = independent;
        }
    }

    out.kept_rows = kept;
    out.row_scale.resize(static_cast<int>(kept.size()));
    std::vector<Triplet> t;
    out.b.resize(static_cast<int>(kept.size()));
    for (int idx = 0; idx < static_cast<int>(kept.size()); ++idx) {
        const int r = kept[idx];
        const double scale = 1.0 / row_max[r];
        out.row_scale[idx] = scale;
        out.b[idx] = prog.b[r] * scale;
        for (SparseMatrix::InnerIterator it(At, r); it; ++it)
            t.emplace_back(idx, it.row(), it.value() * scale);
    }
    out.A.resize(static_cast<int>(kept.size()), prog.num_vars());
    out.A.setFromTriplets(t.begin(), t.end());
    out.A.makeCompressed();
    return out;
}

}  // namespace

ConicSolution solve(const ConicProgram& program, const SolverSettings& settings) {
    program.validate();
    const int n = program.num_vars();
    const int m_orig = program.num_rows();

    ConicSolution out;
    out.x = VectorXd::Zero(n);
    out.y = VectorXd::Zero(m_orig);
    out.z = VectorXd::Zero(n);

    Presolved pre = presolve(program, settings);
    out.fixed_variables = pre.fixed_variables;
    if (pre.infeasibility) {
        out.status = SolveStatus::PrimalInfeasible;
        out.certificate = *pre.infeasibility / pre.infeasibility->norm();
        return out;
    }
    out.removed_rows = m_orig - static_cast<int>(pre.kept_rows.size());

    // Map cone-constrained columns onto cone rows: nonnegative first.
    Problem pr;
    pr.n = n;
    pr.p = static_cast<int>(pre.kept_rows.size());
    pr.A = pre.A;
    pr.b = pre.b;
    const double c_max = program.c.lpNorm<Eigen::Infinity>();
    const double c_scale = c_max > 0.0 ? 1.0 / c_max : 1.0;
    pr.c = program.c * c_scale;
    std::vector<int> cone_col;
    {
        int offset = 0;
        for (const auto& block : program.blocks) {
            if (block.kind == ConeKind::NonNeg)
                for (int j = 0; j < block.dim; ++j) cone_col.push_back(offset + j);
            offset += block.dim;
        }
        pr.cones.nonneg = static_cast<int>(cone_col.size());
        offset = 0;
        for (const auto& block : program.blocks) {
            if (block.kind == ConeKind::SecondOrder) {
                pr.cones.soc_start.push_back(static_cast<int>(cone_col.size()));
                pr.cones.soc_dims.push_back(block.dim);
                for (int j = 0; j < block.dim; ++j) cone_col.push_back(offset + j);
            }
            offset += block.dim;
        }
    }
    pr.m = static_cast<int>(cone_col.size());
    pr.cones.rows = pr.m;
    std::vector<Triplet> gt;
    for (int r = 0; r < pr.m; ++r) gt.emplace_back(r, cone_col[r], -1.0);
    pr.G.resize(pr.m, n);
    pr.G.setFromTriplets(gt.begin(), gt.end());
    pr.G.makeCompressed();
    pr.h = VectorXd::Zero(pr.m);

    Ipm ipm(pr, settings);
    const IpmResult res = ipm.run();
    out.iterations = res.iterations;
    const Iterate& it = res.it;

    auto expand_y = [&](const VectorXd& ye) {
        VectorXd y = VectorXd::Zero(m_orig);
        for (int idx = 0; idx < pr.p; ++idx) y[pre.kept_rows[idx]] = ye[idx] * pre.row_scale[idx] / c_scale;
        return y;
    };
    auto expand_z = [&](const VectorXd& ze) {
        VectorXd z = VectorXd::Zero(n);
        for (int r = 0; r < pr.m; ++r) z[cone_col[r]] = ze[r] / c_scale;
        return z;
    };

    switch (res.outcome) {
        case Outcome::Optimal:
        case Outcome::MaxIterations:
        case Outcome::NumericalError: {
            if (it.x.size() == n && it.tau > 0.0) {
                out.x = it.x / it.tau;
                // Standard-form duals: y = -y_e, z = dual slack on cone columns.
                out.y = -expand_y(it.y) / it.tau;
                out.z = expand_z(it.z) / it.tau;
                out.primal_obj = program.c.dot(out.x);
                out.dual_obj = program.b.dot(out.y);
            }
            out.status = res.outcome == Outcome::Optimal         ? SolveStatus::Optimal
                         : res.outcome == Outcome::MaxIterations ? SolveStatus::MaxIterations
                                                                 : SolveStatus::NumericalError;
            break;
        }
        case Outcome::PrimalInfeasible: {
            // y_e satisfies A'y_e in K*, b'y_e < 0 (Farkas).
            const VectorXd y = expand_y(it.y);
            out.status = SolveStatus::PrimalInfeasible;
            out.certificate = y / y.norm();
            break;
        }
        case Outcome::DualInfeasible: {
            out.status = SolveStatus::DualInfeasible;
            out.certificate = it.x / it.x.norm();
            break;
        }
    }
    return out;
}

}  // namespace mandet::conic
