#pragma once

// Dense primal-dual interior-point method for small second-order cone
// programs in the canonical form of program.hpp.
//
// Homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector step. Infeasibility is detected from the embedding's
// certificates. Sized for programs with a few hundred cone rows and up to a
// couple of hundred variables.

#include "risrsma/conic/program.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace risrsma::conic {

enum class ConicStatus { Optimal, NearOptimal, Infeasible, NumericalFailure };

inline const char* to_string(ConicStatus s) {
    switch (s) {
    case ConicStatus::Optimal: return "optimal";
    case ConicStatus::NearOptimal: return "near-optimal";
    case ConicStatus::Infeasible: return "infeasible";
    case ConicStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

struct ConicResult {
    ConicStatus status = ConicStatus::NumericalFailure;
    RVec x;
    RVec s;
    RVec z;
    double primal_objective = std::numeric_limits<double>::quiet_NaN();
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
    double primal_residual = std::numeric_limits<double>::infinity();
    double dual_residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    std::string detail;

    [[nodiscard]] bool usable() const {
        return status == ConicStatus::Optimal || status == ConicStatus::NearOptimal;
    }
};

struct IpmSettings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    double near_feastol = 1e-5; // accepted as near-optimal when stalled
    double near_reltol = 1e-5;
    int max_iter = 100;
    double step_fraction = 0.99;
    int refinement_steps = 8; // upper bound; stops once the KKT residual is at rounding level
};

/// Solver adapter contract: any conforming implementation can be plugged in.
/// Implementations must not share mutable state between calls.
class ConicSolver {
public:
    virtual ~ConicSolver() = default;
    [[nodiscard]] virtual ConicResult solve(const ConicProgram& prog) const = 0;
};

namespace detail {

/// Cone layout with helpers for Jordan algebra and Nesterov-Todd scaling.
class Cones {
public:
    Cones(Index nonneg, std::vector<Index> socs) : l_(nonneg), socs_(std::move(socs)) {
        Index off = l_;
        for (Index q : socs_) {
            offs_.push_back(off);
            off += q;
        }
        m_ = off;
    }

    [[nodiscard]] Index rows() const { return m_; }
    [[nodiscard]] double degree() const { return static_cast<double>(l_ + static_cast<Index>(socs_.size())); }

    [[nodiscard]] RVec identity() const {
        RVec e = RVec::Zero(m_);
        e.head(l_).setOnes();
        for (Index off : offs_) e(off) = 1.0;
        return e;
    }

    /// u o v
    [[nodiscard]] RVec product(const RVec& u, const RVec& v) const {
        RVec r(m_);
        r.head(l_) = u.head(l_).cwiseProduct(v.head(l_));
        for (std::size_t b = 0; b < socs_.size(); ++b) {
            const Index o = offs_[b], q = socs_[b];
            r(o) = u.segment(o, q).dot(v.segment(o, q));
            r.segment(o + 1, q - 1) = u(o) * v.segment(o + 1, q - 1) + v(o) * u.segment(o + 1, q - 1);
        }
        return r;
    }

    /// u with lambda o u = v
    [[nodiscard]] RVec divide(const RVec& lam, const RVec& v) const {
        RVec r(m_);
        r.head(l_) = v.head(l_).cwiseQuotient(lam.head(l_));
        for (std::size_t b = 0; b < socs_.size(); ++b) {
            const Index o = offs_[b], q = socs_[b];
            const double l0 = lam(o);
            const auto l1 = lam.segment(o + 1, q - 1);
            const double rho = jnorm_sq(lam.segment(o, q));
            const double u0 = (l0 * v(o) - l1.dot(v.segment(o + 1, q - 1))) / rho;
            r(o) = u0;
            r.segment(o + 1, q - 1) = (v.segment(o + 1, q - 1) - u0 * l1) / l0;
        }
        return r;
    }

    /// Largest step a with u + a du in the cone (infinity if unbounded).
    [[nodiscard]] double max_step(const RVec& u, const RVec& du) const {
        double amax = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < l_; ++i)
            if (du(i) < 0.0) amax = std::min(amax, -u(i) / du(i));
        for (std::size_t b = 0; b < socs_.size(); ++b) {
            const Index o = offs_[b], q = socs_[b];
            const double un = std::sqrt(std::max(jnorm_sq(u.segment(o, q)), 1e-300));
            const double a = u(o) / un;
            const RVec bvec = u.segment(o + 1, q - 1) / un;
            const auto d1 = du.segment(o + 1, q - 1);
            // Boost mapping u to a multiple of the identity, applied to du.
            const double bd = bvec.dot(d1);
            const double rho0 = (a * du(o) - bd) / un;
            const RVec rho1 = (d1 + bvec * (bd / (1.0 + a) - du(o))) / un;
            const double t = rho1.norm() - rho0;
            if (t > 0.0) amax = std::min(amax, 1.0 / t);
        }
        return amax;
    }

    /// Signed interiority: negative of the smallest "eigenvalue".
    [[nodiscard]] double violation(const RVec& u) const {
        double v = -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < l_; ++i) v = std::max(v, -u(i));
        for (std::size_t b = 0; b < socs_.size(); ++b) {
            const Index o = offs_[b], q = socs_[b];
            v = std::max(v, u.segment(o + 1, q - 1).norm() - u(o));
        }
        return v;
    }

    static double jnorm_sq(const Eigen::Ref<const RVec>& u) {
        const double n1 = u.tail(u.size() - 1).norm();
        return (u(0) - n1) * (u(0) + n1);
    }

    /// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
    struct Scaling {
        RVec d;                  // orthant: sqrt(s/z)
        std::vector<double> eta; // per SOC
        std::vector<RVec> w;     // per SOC normalized scaling point (a, b)
    };

    [[nodiscard]] Scaling nt_scaling(const RVec& s, const RVec& z) const {
        Scaling sc;
        sc.d = (s.head(l_).cwiseQuotient(z.head(l_))).cwiseSqrt();
        for (std::size_t b = 0; b < socs_.size(); ++b) {
            const Index o = offs_[b], q = socs_[b];
            const double sn = std::sqrt(jnorm_sq(s.segment(o, q)));
            const double zn = std::sqrt(jnorm_sq(z.segment(o, q)));
            const RVec sb = s.segment(o, q) / sn;
            const RVec zb = z.segment(o, q) / zn;
            const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
            RVec wb(q);
            wb(0) = (sb(0) + zb(0)) / (2.0 * gamma);
            wb.tail(q - 1) = (sb.tail(q - 1) - zb.tail(q - 1)) / (2.0 * gamma);
            sc.eta.push_back(std::sqrt(sn / zn));
            sc.w.push_back(std::move(wb));
        }
        return sc;
    }

    /// y = W^{p} x for p in {+1, -1}, column-wise for matrices.
    template <typename Mat>
    void apply(const Scaling& sc, int power, Mat& x) const {
        for (Index i = 0; i < l_; ++i) x.row(i) *= power > 0 ? sc.d(i) : 1.0 / sc.d(i);
        for (std::size_t b = 0; b < socs_.size(); ++b) {
            const Index o = offs_[b], q = socs_[b];
            const RVec& w = sc.w[b];
            const double a = w(0);
            const auto bv = w.tail(q - 1);
            const double sgn = power > 0 ? 1.0 : -1.0;
            const double scale = power > 0 ? sc.eta[b] : 1.0 / sc.eta[b];
            for (Index col = 0; col < x.cols(); ++col) {
                const double x0 = x(o, col);
                auto x1 = x.col(col).segment(o + 1, q - 1);
                const double bx = bv.dot(x1);
                const double y0 = a * x0 + sgn * bx;
                x1 += bv * (bx / (1.0 + a) + sgn * x0);
                x(o, col) = y0;
                x1 *= scale;
                x(o, col) *= scale;
            }
        }
    }

    [[nodiscard]] RVec apply_vec(const Scaling& sc, int power, const RVec& v) const {
        RVec r = v;
        apply(sc, power, r);
        return r;
    }

private:
    Index l_;
    std::vector<Index> socs_;
    std::vector<Index> offs_;
    Index m_ = 0;
};

} // namespace detail

class InteriorPointSolver final : public ConicSolver {
public:
    InteriorPointSolver() = default;
    explicit InteriorPointSolver(IpmSettings settings) : settings_(settings) {}

    [[nodiscard]] const IpmSettings& settings() const { return settings_; }

    [[nodiscard]] ConicResult solve(const ConicProgram& prog) const override {
        try {
            prog.validate();
            return run(prog);
        } catch (const std::exception& e) {
            ConicResult r;
            r.status = ConicStatus::NumericalFailure;
            r.detail = e.what();
            return r;
        }
    }

private:
    IpmSettings settings_;

    [[nodiscard]] ConicResult run(const ConicProgram& prog) const {
        using detail::Cones;
        const Index n = prog.num_vars;
        const Cones cones(prog.nonneg, prog.soc_dims);
        const Index m = cones.rows();
        const RMat G = RMat(prog.G);
        const RVec& h = prog.h;
        const RVec& c = prog.c;
        const RVec e = cones.identity();
        const double hnorm = std::max(1.0, h.norm());
        const double cnorm = std::max(1.0, c.norm());
        const auto& st = settings_;

        ConicResult res;
        if (m == 0) {
            res.detail = "program has no constraints";
            return res;
        }

        // Reduced KKT system [0 G^T; G -W^2] [ux; uz] = [bx; bz].
        // Solved through a QR factorization of [W^{-1} G; sqrt(reg) I] so the
        // normal equations are never formed.
        RMat wig(m, n);
        Eigen::HouseholderQR<RMat> qr;
        Cones::Scaling sc;
        auto factor = [&](const Cones::Scaling& scaling) {
            wig = G;
            cones.apply(scaling, -1, wig);
            const double col_scale = std::max(1.0, wig.colwise().norm().maxCoeff());
            RMat aug(m + n, n);
            aug.topRows(m) = wig;
            aug.bottomRows(n) = (1e-7 * col_scale) * RMat::Identity(n, n);
            qr.compute(aug);
            const RVec rdiag = qr.matrixQR().diagonal().head(n);
            if (!rdiag.allFinite()) throw NumericError("KKT factorization failed");
        };
        auto solve_kkt = [&](const RVec& bx, const RVec& bz, RVec& ux, RVec& uz) {
            auto once = [&](const RVec& rx, const RVec& rz, RVec& vx, RVec& vz) {
                const RVec wbz = cones.apply_vec(sc, -1, rz);
                const auto R = qr.matrixQR().topRows(n).template triangularView<Eigen::Upper>();
                RVec rhs = RVec::Zero(m + n);
                rhs.head(m) = wbz;
                const RVec qtc = (qr.householderQ().adjoint() * rhs).head(n);
                RVec y = R.transpose().solve(rx);
                y += qtc;
                vx = R.solve(y);
                vz = cones.apply_vec(sc, -1, RVec(wig * vx - wbz));
            };
            once(bx, bz, ux, uz);
            for (int it = 0; it < st.refinement_steps; ++it) {
                const RVec w2uz = cones.apply_vec(sc, 1, cones.apply_vec(sc, 1, uz));
                const RVec ex = bx - G.transpose() * uz;
                const RVec ez = bz - (G * ux - w2uz);
                if (ex.norm() + ez.norm() < 1e-14 * (1.0 + bx.norm() + bz.norm())) break;
                RVec dx, dz;
                once(ex, ez, dx, dz);
                ux += dx;
                uz += dz;
            }
        };

        // Initial point from two least-squares problems with W = I.
        sc = cones.nt_scaling(e, e);
        factor(sc);
        RVec x, z, s, tmpz;
        solve_kkt(RVec::Zero(n), h, x, tmpz);
        s = -tmpz;
        RVec xd;
        solve_kkt(-c, RVec::Zero(m), xd, z);
        {
            const double vs = cones.violation(s);
            if (vs >= -1e-8) s += (1.0 + std::max(vs, 0.0)) * e;
            const double vz = cones.violation(z);
            if (vz >= -1e-8) z += (1.0 + std::max(vz, 0.0)) * e;
        }
        double tau = 1.0, kappa = 1.0;

        ConicStatus status = ConicStatus::NumericalFailure;
        // Best iterate seen, returned as near-optimal if the method stalls.
        struct Snapshot {
            RVec x, s, z;
            double tau = 1.0, pcost = 0, dcost = 0, pres = 0, dres = 0, gap = 0;
            double merit = std::numeric_limits<double>::infinity();
        } best;
        int iter = 0;
        for (; iter <= st.max_iter; ++iter) {
            const RVec rx = G.transpose() * z + c * tau;
            const RVec rz = G * x + s - h * tau;
            const double cx = c.dot(x), hz = h.dot(z);
            const double rt = kappa + cx + hz;
            const double sz = s.dot(z);
            const double mu = (sz + tau * kappa) / (cones.degree() + 1.0);

            const double pcost = cx / tau;
            const double dcost = -hz / tau;
            const double pres = rz.norm() / tau / hnorm;
            const double dres = rx.norm() / tau / cnorm;
            const double gap = sz / (tau * tau);
            double relgap = std::numeric_limits<double>::infinity();
            if (pcost < 0.0) relgap = gap / -pcost;
            else if (dcost > 0.0) relgap = gap / dcost;
            const double gapm = std::min(gap, relgap);
            const double merit = std::max({pres, dres, gapm});
            if (merit < best.merit && std::isfinite(merit)) best = {x, s, z, tau, pcost, dcost, pres, dres, gapm, merit};
            res.primal_objective = pcost;
            res.dual_objective = dcost;
            res.primal_residual = pres;
            res.dual_residual = dres;

            if (pres < st.feastol && dres < st.feastol && (gap < st.abstol || relgap < st.reltol)) {
                status = ConicStatus::Optimal;
                break;
            }
            // Certificate of primal infeasibility: G^T z ~ 0, h^T z < 0, z in K.
            if (hz < 0.0) {
                const double pinf = (G.transpose() * z).norm() / -hz;
                if (pinf < st.feastol && tau < kappa) {
                    status = ConicStatus::Infeasible;
                    res.detail = "primal infeasible";
                    break;
                }
            }
            // Certificate of dual infeasibility (unbounded primal).
            if (cx < 0.0) {
                const double dinf = (G * x + s).norm() / -cx;
                if (dinf < st.feastol && tau < kappa) {
                    status = ConicStatus::NumericalFailure;
                    res.detail = "dual infeasible (unbounded)";
                    break;
                }
            }
            if (std::getenv("RISRSMA_IPM_TRACE"))
                std::fprintf(stderr, "it %2d pcost % .6e dcost % .6e pres %.2e dres %.2e gap %.2e tau %.2e kap %.2e\n", iter,
                             pcost, dcost, pres, dres, gap, tau, kappa);
            if (iter == st.max_iter) break;

            sc = cones.nt_scaling(s, z);
            const RVec lam = cones.apply_vec(sc, 1, z);
            try {
                factor(sc);
            } catch (const NumericError& err) {
                res.detail = err.what();
                break;
            }

            RVec x1, z1;
            solve_kkt(-c, h, x1, z1);
            const double denom = c.dot(x1) + h.dot(z1) - kappa / tau;

            struct Dir {
                RVec dx, dz, ds;
                double dtau = 0, dkap = 0;
            };
            auto direction = [&](double rfac, const RVec& dsrhs, double dkrhs) {
                Dir d;
                const RVec t = cones.apply_vec(sc, 1, cones.divide(lam, dsrhs));
                RVec x2, z2;
                solve_kkt(-rfac * rx, -rfac * rz - t, x2, z2);
                const double dt = -rfac * rt;
                d.dtau = (dt - dkrhs / tau - c.dot(x2) - h.dot(z2)) / denom;
                d.dx = x2 + d.dtau * x1;
                d.dz = z2 + d.dtau * z1;
                d.ds = t - cones.apply_vec(sc, 1, cones.apply_vec(sc, 1, d.dz));
                d.dkap = (dkrhs - kappa * d.dtau) / tau;
                return d;
            };
            auto step_to_boundary = [&](const Dir& d) {
                double a = std::min(cones.max_step(s, d.ds), cones.max_step(z, d.dz));
                if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
                if (d.dkap < 0.0) a = std::min(a, -kappa / d.dkap);
                return a;
            };

            // Predictor.
            const RVec lamsq = cones.product(lam, lam);
            const Dir aff = direction(1.0, -lamsq, -tau * kappa);
            const double aaff = std::min(1.0, step_to_boundary(aff));
            const double sigma = std::pow(1.0 - aaff, 3);

            // Corrector.
            const RVec ds_s = cones.apply_vec(sc, -1, aff.ds);
            const RVec dz_s = cones.apply_vec(sc, 1, aff.dz);
            const RVec dsrhs = -lamsq - cones.product(ds_s, dz_s) + sigma * mu * e;
            const double dkrhs = -tau * kappa - aff.dtau * aff.dkap + sigma * mu;
            const Dir cmb = direction(1.0 - sigma, dsrhs, dkrhs);
            const double alpha = std::min(1.0, st.step_fraction * step_to_boundary(cmb));
            if (!(alpha > 1e-12) || !cmb.dx.allFinite()) {
                res.detail = "step length collapsed";
                break;
            }
            x += alpha * cmb.dx;
            z += alpha * cmb.dz;
            s += alpha * cmb.ds;
            tau += alpha * cmb.dtau;
            kappa += alpha * cmb.dkap;
        }
        res.iterations = iter;
        if (status == ConicStatus::NumericalFailure && res.detail != "dual infeasible (unbounded)") {
            if (best.pres < st.near_feastol && best.dres < st.near_feastol && best.gap < st.near_reltol) {
                status = ConicStatus::NearOptimal;
                x = best.x;
                s = best.s;
                z = best.z;
                tau = best.tau;
                res.primal_objective = best.pcost;
                res.dual_objective = best.dcost;
                res.primal_residual = best.pres;
                res.dual_residual = best.dres;
            } else if (res.detail.empty())
                res.detail = "iteration limit";
        }
        res.status = status;
        if (status == ConicStatus::Infeasible) {
            res.x = x;
            res.z = z;
            res.s = s;
        } else {
            res.x = x / tau;
            res.s = s / tau;
            res.z = z / tau;
        }
        return res;
    }
};

} // namespace risrsma::conic
