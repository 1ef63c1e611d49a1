#pragma once

// Second-order cone forms of the beamforming and RIS half-steps.
//
// Variables are displacements from the anchor (the current iterate), so every
// surrogate is written as
//
//   r~(delta) = r(anchor) + sum_s 2 Re<grad_s, dX_s> - sum_{s in Q} ||L^H dX_s||^2,
//
// with B = L L^H and dX_s linear in the real variables. This keeps the cone
// data well scaled even when channel gains are tiny compared to the noise
// inverse. Complex quantities are split into interleaved (re, im) pairs.

#include "risrsma/conic/ipm.hpp"
#include "risrsma/conic/program.hpp"
#include "risrsma/surrogates.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace risrsma {

using conic::Affine;

/// Lower bound on the per-user rate inside the delay epigraph.
inline constexpr double kMinRate = 1e-9;
/// Below this rate at the anchor the driver switches to a max-min-rate step.
inline constexpr double kRestoreRate = 1e-3;

enum class SubproblemKind { Beamformer, Ris };

/// Weighted: the latency/EE objective. MaxMinRate: maximize min_k r_k, used
/// when the anchor does not support positive rates.
enum class SubproblemMode { Weighted, MaxMinRate };

/// dX_{k,s} = sum_v x_v D_{k,s,v}, indexed [k][s].
using ReceivedJacobian = std::vector<std::vector<std::vector<std::pair<Index, CMat>>>>;

struct SubproblemLayout {
    Index delta = -1, delta_size = 0;
    Index z = -1, t = -1, d = -1, u = -1, e = -1, pi = -1, qp = -1, qc = -1, rho = -1;
};

struct Subproblem {
    conic::ConicProgram program;
    SubproblemKind kind = SubproblemKind::Beamformer;
    SubproblemMode mode = SubproblemMode::Weighted;
    SubproblemLayout layout;
    DesignPoint anchor;
    bool common_active = false; // common beam is a variable (beamformer step)
    bool shares_active = false; // z is a variable
    bool cap_surrogate = false; // common cap uses the surrogate (else sum z <= 0)
    // Surrogate expressions including their epigraph variable, for audits.
    std::vector<Affine> private_rate;
    std::vector<Affine> common_rate;
    std::vector<std::vector<Affine>> private_quad; // rows whose squared norm is bounded by qp_k
    std::vector<std::vector<Affine>> common_quad;
};

enum class SubproblemStatus { Optimal, NearOptimal, Infeasible, NumericalFailure };

inline const char* to_string(SubproblemStatus s) {
    switch (s) {
    case SubproblemStatus::Optimal: return "optimal";
    case SubproblemStatus::NearOptimal: return "near-optimal";
    case SubproblemStatus::Infeasible: return "infeasible";
    case SubproblemStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

struct SubproblemSolution {
    SubproblemStatus status = SubproblemStatus::NumericalFailure;
    DesignPoint design; // decoded, before repair
    RVec x; // raw conic solution
    RVec t, u;
    double e = 0.0, d = 0.0;
    double objective = 0.0;
    int iterations = 0;
    std::string detail;

    [[nodiscard]] bool usable() const {
        return status == SubproblemStatus::Optimal || status == SubproblemStatus::NearOptimal;
    }
};

namespace detail {

inline Index beam_vars(const ScenarioConfig& cfg) { return static_cast<Index>(2 * cfg.N_BS * cfg.N()); }

/// Jacobian of the received matrices w.r.t. beam displacements. Block b of
/// the displacement vector (b = 0 common when present, then private j) has
/// entries 2 (i + N_BS c) + {0 re, 1 im}.
inline ReceivedJacobian beam_jacobian(const ScenarioConfig& cfg, const std::vector<CMat>& h, Index offset,
                                      bool common_active) {
    const auto nb = static_cast<Index>(cfg.N_BS);
    const auto n = static_cast<Index>(cfg.N());
    const auto nu = static_cast<Index>(cfg.N_u);
    const Index bv = beam_vars(cfg);
    const cplx I(0.0, 1.0);
    ReceivedJacobian jac(cfg.K, std::vector<std::vector<std::pair<Index, CMat>>>(cfg.K + 1));
    for (std::size_t k = 0; k < cfg.K; ++k) {
        for (std::size_t s = 0; s <= cfg.K; ++s) {
            if (s == 0 && !common_active) continue;
            const Index block = common_active ? static_cast<Index>(s) : static_cast<Index>(s) - 1;
            const Index base = offset + block * bv;
            for (Index c = 0; c < n; ++c)
                for (Index i = 0; i < nb; ++i) {
                    CMat d = CMat::Zero(nu, n);
                    d.col(c) = h[k].col(i);
                    const Index v = base + 2 * (i + nb * c);
                    jac[k][s].emplace_back(v, d);
                    jac[k][s].emplace_back(v + 1, I * d);
                }
        }
    }
    return jac;
}

/// Jacobian of the received matrices w.r.t. RIS displacements; entries
/// 2m + {0 re, 1 im}.
inline ReceivedJacobian ris_jacobian(const ScenarioConfig& cfg, const ChannelDrop& drop, const BeamformerSet& beams,
                                     Index offset) {
    const auto m = static_cast<Index>(drop.ris_elements());
    const cplx I(0.0, 1.0);
    ReceivedJacobian jac(cfg.K, std::vector<std::vector<std::pair<Index, CMat>>>(cfg.K + 1));
    for (std::size_t s = 0; s <= cfg.K; ++s) {
        const CMat& u = s == 0 ? beams.U_common : beams.U_private[s - 1];
        if (u.squaredNorm() == 0.0) continue;
        const CMat gu = drop.G * u; // M x N
        for (std::size_t k = 0; k < cfg.K; ++k)
            for (Index e = 0; e < m; ++e) {
                const CMat d = drop.G_list[k].col(e) * gu.row(e);
                jac[k][s].emplace_back(offset + 2 * e, d);
                jac[k][s].emplace_back(offset + 2 * e + 1, I * d);
            }
    }
    return jac;
}

/// Linear part (with the anchor value as constant) and the quadratic rows of
/// one surrogate in displacement form.
inline void bound_in_displacement(const RateBound& rb, const std::vector<CMat>& xbar, double rbar,
                                  const std::vector<std::vector<std::pair<Index, CMat>>>& jac_k, Affine& lin,
                                  std::vector<Affine>& quad) {
    lin = Affine(rbar);
    Eigen::SelfAdjointEigenSolver<CMat> es(linalg::hermitian_part(rb.B));
    const RVec ev = es.eigenvalues().cwiseMax(0.0);
    const double evmax = std::max(ev.maxCoeff(), 0.0);
    std::vector<CVec> lh_rows;
    for (Index i = 0; i < ev.size(); ++i)
        if (ev(i) > 1e-14 * evmax && evmax > 0.0)
            lh_rows.push_back(std::sqrt(ev(i)) * es.eigenvectors().col(i).conjugate());
    for (std::size_t s = 0; s < jac_k.size(); ++s) {
        if (jac_k[s].empty()) continue;
        const CMat grad = rb.gradient(xbar, s);
        for (const auto& [v, d] : jac_k[s]) lin.add(v, 2.0 * linalg::re_inner(grad, d));
        if (!rb.in_quadratic[s]) continue;
        const Index ncol = jac_k[s].front().second.cols();
        for (const auto& lr : lh_rows) {
            for (Index c = 0; c < ncol; ++c) {
                Affine re, im;
                for (const auto& [v, d] : jac_k[s]) {
                    const cplx val = lr.transpose() * d.col(c);
                    re.add(v, val.real());
                    im.add(v, val.imag());
                }
                quad.push_back(std::move(re));
                quad.push_back(std::move(im));
            }
        }
    }
}

/// Affine expressions for the entries of anchor + displacement of one beam.
inline std::vector<Affine> beam_entries(const CMat& ubar, Index base, double scale = 1.0) {
    std::vector<Affine> out;
    const Index nb = ubar.rows();
    for (Index c = 0; c < ubar.cols(); ++c)
        for (Index i = 0; i < nb; ++i) {
            const Index v = base + 2 * (i + nb * c);
            out.push_back(Affine::var(v, scale) + scale * ubar(i, c).real());
            out.push_back(Affine::var(v + 1, scale) + scale * ubar(i, c).imag());
        }
    return out;
}

inline std::vector<Affine> constant_entries(const CMat& u, double scale = 1.0) {
    std::vector<Affine> out;
    for (Index c = 0; c < u.cols(); ++c)
        for (Index i = 0; i < u.rows(); ++i) {
            out.emplace_back(scale * u(i, c).real());
            out.emplace_back(scale * u(i, c).imag());
        }
    return out;
}

struct AnchorRates {
    RVec r_p, r_c;
};

inline AnchorRates anchor_rates(const SurrogateCoefficients& co, const std::vector<std::vector<CMat>>& xbar,
                                const ScenarioConfig& cfg) {
    AnchorRates ar;
    const auto K = static_cast<Index>(cfg.K);
    ar.r_p.resize(K);
    ar.r_c.resize(K);
    const double qc = inverse_q(cfg.eps_c), qp = inverse_q(cfg.eps_p);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        ar.r_p(static_cast<Index>(k)) = risrsma::detail::private_rate_from_received(xbar[k], k, cfg.sigma2, qp, cfg.n_p);
        ar.r_c(static_cast<Index>(k)) = risrsma::detail::common_rate_from_received(xbar[k], cfg.sigma2, qc, cfg.n_c);
    }
    return ar;
}

/// Shared part of both half-steps: shares, surrogate epigraphs, caps, delay
/// epigraph and the objective. EE constraints are added by the caller since
/// they differ between the steps.
inline void add_rate_structure(const ScenarioConfig& cfg, const SurrogateCoefficients& co, const ReceivedJacobian& jac,
                               const AnchorRates& ar, const DesignPoint& anchor, conic::ProgramBuilder& b,
                               Subproblem& sp) {
    const auto K = static_cast<Index>(cfg.K);
    auto& L = sp.layout;
    if (sp.shares_active) L.z = b.add_block("z", K);
    L.qp = b.add_block("qp", K);
    if (sp.shares_active && sp.cap_surrogate) L.qc = b.add_block("qc", K);

    std::vector<std::vector<CMat>> xbar;
    for (std::size_t k = 0; k < cfg.K; ++k) xbar.push_back(received_matrices(co.H_bar[k], anchor.beams));

    sp.private_rate.resize(cfg.K);
    sp.private_quad.resize(cfg.K);
    if (L.qc >= 0) {
        sp.common_rate.resize(cfg.K);
        sp.common_quad.resize(cfg.K);
    }
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const auto i = static_cast<Index>(k);
        Affine lin;
        bound_in_displacement(co.priv[k], xbar[k], ar.r_p(i), jac[k], lin, sp.private_quad[k]);
        sp.private_rate[k] = lin - Affine::var(L.qp + i);
        if (sp.private_quad[k].empty()) b.add_nonneg(Affine::var(L.qp + i), "qp>=0");
        else b.add_squares_le(sp.private_quad[k], Affine::var(L.qp + i), "private-quadratic");
        if (L.qc >= 0) {
            bound_in_displacement(co.common[k], xbar[k], ar.r_c(i), jac[k], lin, sp.common_quad[k]);
            sp.common_rate[k] = lin - Affine::var(L.qc + i);
            if (sp.common_quad[k].empty()) b.add_nonneg(Affine::var(L.qc + i), "qc>=0");
            else b.add_squares_le(sp.common_quad[k], Affine::var(L.qc + i), "common-quadratic");
        }
    }

    if (sp.shares_active) {
        Affine zsum;
        for (Index k = 0; k < K; ++k) {
            b.add_nonneg(Affine::var(L.z + k), "z>=0");
            zsum.add(L.z + k, 1.0);
        }
        if (sp.cap_surrogate)
            for (std::size_t k = 0; k < cfg.K; ++k) b.add_nonneg(sp.common_rate[k] - zsum, "common-cap");
        else
            b.add_nonneg(zsum * -1.0, "common-silenced");
    }
    auto total_rate = [&](std::size_t k) {
        Affine r = sp.private_rate[k];
        if (sp.shares_active) r.add(L.z + static_cast<Index>(k), 1.0);
        return r;
    };

    if (sp.mode == SubproblemMode::MaxMinRate) {
        L.rho = b.add_block("rho", 1);
        for (std::size_t k = 0; k < cfg.K; ++k) b.add_nonneg(total_rate(k) - Affine::var(L.rho), "rate>=rho");
        b.set_objective(Affine::var(L.rho, -1.0));
        return;
    }

    Affine obj;
    if (cfg.alpha > 0.0) {
        L.t = b.add_block("t", K);
        L.d = b.add_block("d", 1);
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const Index tk = L.t + static_cast<Index>(k);
            b.add_nonneg(total_rate(k) - Affine::var(tk), "rate>=t");
            b.add_nonneg(Affine::var(tk) - kMinRate, "t>=tmin");
            b.add_rotated(Affine::var(L.d), Affine::var(tk), {Affine(std::sqrt(cfg.l[k]))}, "l<=d*t");
        }
        obj.add(L.d, cfg.alpha);
    }
    if (cfg.alpha < 1.0) {
        L.e = b.add_block("e", 1);
        obj.add(L.e, -(1.0 - cfg.alpha));
    }
    b.set_objective(obj);
}

inline SubproblemStatus map_status(conic::ConicStatus s) {
    switch (s) {
    case conic::ConicStatus::Optimal: return SubproblemStatus::Optimal;
    case conic::ConicStatus::NearOptimal: return SubproblemStatus::NearOptimal;
    case conic::ConicStatus::Infeasible: return SubproblemStatus::Infeasible;
    case conic::ConicStatus::NumericalFailure: return SubproblemStatus::NumericalFailure;
    }
    return SubproblemStatus::NumericalFailure;
}

inline bool common_degenerate(const SurrogateCoefficients& co) {
    for (const auto& b : co.common)
        if (b.degenerate) return true;
    return false;
}

inline void require_private_bounds(const SurrogateCoefficients& co) {
    for (const auto& b : co.priv)
        if (b.degenerate) throw ModelError("degenerate private-rate surrogate for user " + std::to_string(b.user));
}

/// Fits the anchor shares under the anchor common rate so that the anchor
/// stays feasible. Returns false when the common rate is negative, in which
/// case the shares are pinned at zero for this step.
inline bool fit_shares_to_cap(const AnchorRates& ar, RVec& z) {
    const double cap = ar.r_c.minCoeff();
    z = z.cwiseMax(0.0);
    if (!(cap >= 0.0)) {
        z.setZero();
        return false;
    }
    if (z.sum() > cap) z *= cap / z.sum();
    return true;
}

} // namespace detail

/// Beamforming half-step with the RIS frozen at co.anchor_ris. z_anchor is the
/// current share vector; lambda the quadratic-transform weights. rsma = false
/// pins the common block and z at zero. A degenerate common surrogate
/// silences the common stream for this step.
inline Subproblem build_bf_subproblem(const ScenarioConfig& cfg, const ChannelDrop& drop,
                                      const SurrogateCoefficients& co, const RVec& z_anchor, const RVec& lambda,
                                      bool rsma, SubproblemMode mode = SubproblemMode::Weighted) {
    detail::require_private_bounds(co);
    (void)drop;
    const auto K = static_cast<Index>(cfg.K);
    Subproblem sp;
    sp.kind = SubproblemKind::Beamformer;
    sp.mode = mode;
    sp.anchor.beams = co.anchor_beams;
    sp.anchor.ris = co.anchor_ris;
    sp.anchor.z = z_anchor.size() == K ? z_anchor : RVec::Zero(K);
    sp.common_active = rsma && !detail::common_degenerate(co);
    if (!sp.common_active) {
        sp.anchor.beams.U_common.setZero();
        sp.anchor.z.setZero();
    }
    sp.shares_active = sp.common_active;

    std::vector<std::vector<CMat>> xbar;
    for (std::size_t k = 0; k < cfg.K; ++k) xbar.push_back(received_matrices(co.H_bar[k], sp.anchor.beams));
    const auto ar = detail::anchor_rates(co, xbar, cfg);
    sp.cap_surrogate = sp.shares_active && detail::fit_shares_to_cap(ar, sp.anchor.z);

    conic::ProgramBuilder b;
    const Index bv = detail::beam_vars(cfg);
    const Index blocks = K + (sp.common_active ? 1 : 0);
    sp.layout.delta = b.add_block("delta", blocks * bv);
    sp.layout.delta_size = blocks * bv;
    const auto jac = detail::beam_jacobian(cfg, co.H_bar, sp.layout.delta, sp.common_active);
    detail::add_rate_structure(cfg, co, jac, ar, sp.anchor, b, sp);

    auto private_base = [&](std::size_t k) {
        return sp.layout.delta + (static_cast<Index>(k) + (sp.common_active ? 1 : 0)) * bv;
    };

    // Power budget.
    std::vector<Affine> all;
    if (sp.common_active) {
        const auto ec = detail::beam_entries(sp.anchor.beams.U_common, sp.layout.delta);
        all.insert(all.end(), ec.begin(), ec.end());
    }
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const auto ek = detail::beam_entries(sp.anchor.beams.U_private[k], private_base(k));
        all.insert(all.end(), ek.begin(), ek.end());
    }
    b.add_soc(Affine(std::sqrt(cfg.P)), all, "power");

    if (mode == SubproblemMode::Weighted && cfg.alpha < 1.0) {
        auto& L = sp.layout;
        L.u = b.add_block("u", K);
        L.pi = b.add_block("pi", K);
        const double wc = 1.0 / std::sqrt(static_cast<double>(cfg.K));
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const auto i = static_cast<Index>(k);
            Affine rate = sp.private_rate[k];
            if (sp.shares_active) rate.add(L.z + i, 1.0);
            b.add_nonneg(Affine::var(L.u + i), "u>=0");
            b.add_rotated(rate, Affine(1.0), {Affine::var(L.u + i)}, "u^2<=rate");
            std::vector<Affine> w = detail::beam_entries(sp.anchor.beams.U_private[k], private_base(k));
            if (sp.common_active) {
                const auto ec = detail::beam_entries(sp.anchor.beams.U_common, sp.layout.delta, wc);
                w.insert(w.end(), ec.begin(), ec.end());
            }
            b.add_squares_le(w, Affine::var(L.pi + i), "transmit-power");
            const double lam = lambda(i);
            // 2 lam u - lam^2 (P_s + eta pi) >= e
            Affine ee = Affine::var(L.u + i, 2.0 * lam) + Affine::var(L.pi + i, -lam * lam * cfg.eta) +
                        (-lam * lam * cfg.P_s);
            b.add_nonneg(ee - Affine::var(L.e), "quadratic-transform");
        }
    }
    sp.program = b.build();
    return sp;
}

/// RIS half-step with the beams frozen at co.anchor_beams.
inline Subproblem build_ris_subproblem(const ScenarioConfig& cfg, const ChannelDrop& drop,
                                       const SurrogateCoefficients& co, const RVec& z_anchor, bool rsma,
                                       SubproblemMode mode = SubproblemMode::Weighted) {
    detail::require_private_bounds(co);
    const auto K = static_cast<Index>(cfg.K);
    const auto m = static_cast<Index>(drop.ris_elements());
    Subproblem sp;
    sp.kind = SubproblemKind::Ris;
    sp.mode = mode;
    sp.anchor.beams = co.anchor_beams;
    sp.anchor.ris = co.anchor_ris;
    sp.anchor.z = z_anchor.size() == K ? z_anchor : RVec::Zero(K);
    const bool silenced = !rsma || detail::common_degenerate(co);
    if (silenced) sp.anchor.z.setZero();
    sp.common_active = false;
    sp.shares_active = !silenced;

    std::vector<std::vector<CMat>> xbar;
    for (std::size_t k = 0; k < cfg.K; ++k) xbar.push_back(received_matrices(co.H_bar[k], sp.anchor.beams));
    const auto ar = detail::anchor_rates(co, xbar, cfg);
    sp.cap_surrogate = sp.shares_active && detail::fit_shares_to_cap(ar, sp.anchor.z);

    conic::ProgramBuilder b;
    sp.layout.delta = b.add_block("delta", 2 * m);
    sp.layout.delta_size = 2 * m;
    const auto jac = detail::ris_jacobian(cfg, drop, sp.anchor.beams, sp.layout.delta);
    detail::add_rate_structure(cfg, co, jac, ar, sp.anchor, b, sp);

    for (Index e = 0; e < m; ++e) {
        const cplx psi = sp.anchor.ris.psi(e);
        b.add_soc(Affine(1.0),
                  {Affine::var(sp.layout.delta + 2 * e) + psi.real(), Affine::var(sp.layout.delta + 2 * e + 1) + psi.imag()},
                  "|psi|<=1");
    }
    if (mode == SubproblemMode::Weighted && cfg.alpha < 1.0) {
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const auto i = static_cast<Index>(k);
            Affine rate = sp.private_rate[k];
            if (sp.shares_active) rate.add(sp.layout.z + i, 1.0);
            const double pk = power_consumption(cfg, sp.anchor.beams, k);
            b.add_nonneg(rate - Affine::var(sp.layout.e, pk), "rate>=e*p");
        }
    }
    sp.program = b.build();
    return sp;
}

/// Decodes the conic solution into a design (unrepaired) and auxiliaries.
inline SubproblemSolution decode_solution(const ScenarioConfig& cfg, const Subproblem& sp,
                                          const conic::ConicResult& res) {
    SubproblemSolution sol;
    sol.status = detail::map_status(res.status);
    sol.iterations = res.iterations;
    sol.detail = res.detail;
    sol.design = sp.anchor;
    if (!res.usable()) return sol;
    sol.objective = res.primal_objective;
    sol.x = res.x;
    const RVec& x = res.x;
    const auto& L = sp.layout;
    auto cvar = [&](Index v) { return cplx(x(v), x(v + 1)); };
    if (sp.kind == SubproblemKind::Beamformer) {
        const auto nb = static_cast<Index>(cfg.N_BS);
        const Index bv = detail::beam_vars(cfg);
        auto apply = [&](CMat& u, Index base) {
            for (Index c = 0; c < u.cols(); ++c)
                for (Index i = 0; i < nb; ++i) u(i, c) += cvar(base + 2 * (i + nb * c));
        };
        Index block = 0;
        if (sp.common_active) apply(sol.design.beams.U_common, L.delta + bv * block++);
        for (auto& u : sol.design.beams.U_private) apply(u, L.delta + bv * block++);
    } else {
        for (Index e = 0; e < sol.design.ris.psi.size(); ++e) sol.design.ris.psi(e) += cvar(L.delta + 2 * e);
    }
    const auto K = static_cast<Index>(cfg.K);
    if (L.z >= 0) sol.design.z = x.segment(L.z, K);
    else sol.design.z = RVec::Zero(K);
    if (L.t >= 0) sol.t = x.segment(L.t, K);
    if (L.u >= 0) sol.u = x.segment(L.u, K);
    if (L.d >= 0) sol.d = x(L.d);
    if (L.e >= 0) sol.e = x(L.e);
    return sol;
}

inline SubproblemSolution solve_subproblem(const ScenarioConfig& cfg, const Subproblem& sp,
                                           const conic::ConicSolver& solver) {
    return decode_solution(cfg, sp, solver.solve(sp.program));
}

/// Objective of the subproblem evaluated at the anchor (displacement zero,
/// z at the anchor shares, auxiliaries at their tightest values).
inline double anchor_surrogate_objective(const ScenarioConfig& cfg, const Subproblem& sp, const RVec& lambda) {
    const auto K = static_cast<Index>(cfg.K);
    RVec x = RVec::Zero(sp.program.num_vars);
    if (sp.layout.z >= 0) x.segment(sp.layout.z, K) = sp.anchor.z;
    RVec rate(K);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const auto i = static_cast<Index>(k);
        rate(i) = sp.private_rate[k].eval(x) + (sp.layout.z >= 0 ? sp.anchor.z(i) : 0.0);
    }
    if (sp.mode == SubproblemMode::MaxMinRate) return -rate.minCoeff();
    double obj = 0.0;
    if (cfg.alpha > 0.0) {
        double dmax = 0.0;
        for (Index k = 0; k < K; ++k) dmax = std::max(dmax, cfg.l[static_cast<std::size_t>(k)] / rate(k));
        obj += cfg.alpha * dmax;
    }
    if (cfg.alpha < 1.0) {
        double emin = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const auto i = static_cast<Index>(k);
            const double p = power_consumption(cfg, sp.anchor.beams, k);
            if (sp.kind == SubproblemKind::Beamformer) {
                const double lam = lambda(i);
                emin = std::min(emin, 2.0 * lam * std::sqrt(std::max(rate(i), 0.0)) - lam * lam * p);
            } else {
                emin = std::min(emin, rate(i) / p);
            }
        }
        obj -= (1.0 - cfg.alpha) * emin;
    }
    return obj;
}

/// Projects a decoded design back onto the feasible set: |psi| <= 1, total
/// power <= P, z >= 0 and sum z <= min_k r_ck under the true common rates.
inline DesignPoint repair_design(const ScenarioConfig& cfg, const ChannelDrop& drop, DesignPoint dp) {
    for (Index e = 0; e < dp.ris.psi.size(); ++e) {
        const double a = std::abs(dp.ris.psi(e));
        if (a > 1.0) dp.ris.psi(e) /= a;
    }
    const double pw = dp.beams.total_power();
    if (pw > cfg.P) dp.beams *= std::sqrt(cfg.P / pw);
    dp.z = dp.z.cwiseMax(0.0);
    if (dp.z.sum() > 0.0) {
        double cap = std::numeric_limits<double>::infinity();
        const double qc = inverse_q(cfg.eps_c);
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const auto x = received_matrices(effective_channel(drop, dp.ris, k), dp.beams);
            cap = std::min(cap, detail::common_rate_from_received(x, cfg.sigma2, qc, cfg.n_c));
        }
        if (cap <= 0.0) dp.z.setZero();
        else if (dp.z.sum() > cap) dp.z *= cap / dp.z.sum();
    }
    return dp;
}

/// Optimal common-rate shares for fixed private rates, powers and cap under
/// the weighted objective, evaluated with true rates. Returns nullopt when
/// the small program fails (e.g. some user cannot reach a positive rate).
inline std::optional<RVec> optimize_shares(const ScenarioConfig& cfg, const RVec& r_p, const RVec& p, double cap,
                                           const conic::ConicSolver& solver) {
    const auto K = static_cast<Index>(cfg.K);
    if (!(cap > 0.0)) return std::nullopt;
    conic::ProgramBuilder b;
    const Index z = b.add_block("z", K);
    Affine zsum, obj;
    for (Index k = 0; k < K; ++k) {
        b.add_nonneg(Affine::var(z + k), "z>=0");
        zsum.add(z + k, 1.0);
    }
    b.add_nonneg(Affine(cap) - zsum, "cap");
    if (cfg.alpha > 0.0) {
        const Index t = b.add_block("t", K);
        const Index d = b.add_block("d", 1);
        for (Index k = 0; k < K; ++k) {
            b.add_nonneg(Affine::var(z + k) + r_p(k) - Affine::var(t + k), "rate>=t");
            b.add_nonneg(Affine::var(t + k) - kMinRate, "t>=tmin");
            b.add_rotated(Affine::var(d), Affine::var(t + k), {Affine(std::sqrt(cfg.l[static_cast<std::size_t>(k)]))},
                          "l<=d*t");
        }
        obj.add(d, cfg.alpha);
    }
    if (cfg.alpha < 1.0) {
        const Index e = b.add_block("e", 1);
        for (Index k = 0; k < K; ++k) b.add_nonneg(Affine::var(z + k) + r_p(k) - Affine::var(e, p(k)), "rate>=e*p");
        obj.add(e, -(1.0 - cfg.alpha));
    }
    b.set_objective(obj);
    const auto res = solver.solve(b.build());
    if (!res.usable()) return std::nullopt;
    RVec out = res.x.segment(z, K).cwiseMax(0.0);
    if (out.sum() > cap) out *= cap / out.sum();
    return out;
}

} // namespace risrsma
