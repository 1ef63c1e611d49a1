#pragma once

// Alternating beamformer / RIS optimization with surrogate refresh.

#include "risrsma/subproblems.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <optional>
#include <random>
#include <string>

namespace risrsma {

enum class AccessMode { RSMA, SDMA };
enum class RisMode { Optimized, RandomPhase, Absent };

struct VariantSpec {
    AccessMode access = AccessMode::RSMA;
    RisMode ris = RisMode::Optimized;

    [[nodiscard]] bool rsma() const { return access == AccessMode::RSMA; }

    /// Canonical names: RIS-RSMA, RIS-SDMA, NoRIS-RSMA, NoRIS-SDMA,
    /// RandRIS-RSMA, RandRIS-SDMA.
    [[nodiscard]] std::string name() const {
        const char* r = ris == RisMode::Optimized ? "RIS" : ris == RisMode::RandomPhase ? "RandRIS" : "NoRIS";
        return std::string(r) + (rsma() ? "-RSMA" : "-SDMA");
    }

    static VariantSpec parse(const std::string& s) {
        const auto dash = s.find('-');
        if (dash == std::string::npos) throw ModelError("unknown variant '" + s + "'");
        const std::string r = s.substr(0, dash), a = s.substr(dash + 1);
        VariantSpec v;
        if (r == "RIS") v.ris = RisMode::Optimized;
        else if (r == "RandRIS") v.ris = RisMode::RandomPhase;
        else if (r == "NoRIS") v.ris = RisMode::Absent;
        else throw ModelError("unknown variant '" + s + "'");
        if (a == "RSMA") v.access = AccessMode::RSMA;
        else if (a == "SDMA") v.access = AccessMode::SDMA;
        else throw ModelError("unknown variant '" + s + "'");
        return v;
    }

    friend bool operator==(const VariantSpec&, const VariantSpec&) = default;
};

enum class Verdict { Converged, MaxIterations, Degenerate, Infeasible };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Converged: return "converged";
    case Verdict::MaxIterations: return "max-iterations";
    case Verdict::Degenerate: return "degenerate";
    case Verdict::Infeasible: return "infeasible";
    }
    return "unknown";
}

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;     // true objective of the accepted iterate
    double raw_objective = 0.0; // true objective of the last half-step candidate
    double surrogate_objective = std::numeric_limits<double>::quiet_NaN();
    SubproblemStatus bf_status = SubproblemStatus::NumericalFailure;
    std::optional<SubproblemStatus> ris_status; // empty when the RIS step is skipped
    bool bf_accepted = false;
    bool ris_accepted = false;
    bool restoration = false;
    double wall_ms = 0.0;
};

struct SolveTrace {
    std::vector<IterationRecord> iterations;
    double initial_objective = 0.0;
    DesignPoint final_design;
    MetricsReport final_metrics;
    Verdict verdict = Verdict::MaxIterations;
    int starts = 1;         // number of AO runs (default start plus warm starts)
    int winning_start = 0;  // 0 is the default initialization
    std::string note;

    [[nodiscard]] double final_objective() const { return final_metrics.objective; }
    [[nodiscard]] int iteration_count() const { return static_cast<int>(iterations.size()); }
    [[nodiscard]] bool converged() const { return verdict == Verdict::Converged; }
};

struct AoOptions {
    double delta = 1e-4;
    int max_iter = 100;
    int window = 3;
    int extrapolation = 6; // doublings tried along an improving half-step (0 disables)
    std::uint64_t seed = 0;
    const conic::ConicSolver* solver = nullptr; // defaults to the built-in interior-point solver
};

/// Scenario and channel as seen by a variant: the absent-RIS variant works
/// on the direct links only.
inline ScenarioConfig variant_config(ScenarioConfig cfg, const VariantSpec& v) {
    if (v.ris == RisMode::Absent) cfg.M = 0;
    return cfg;
}

inline ChannelDrop variant_drop(const ChannelDrop& drop, const VariantSpec& v) {
    if (v.ris != RisMode::Absent) return drop;
    ChannelDrop d = drop;
    d.G = CMat::Zero(0, drop.G.cols());
    for (auto& g : d.G_list) g = CMat::Zero(g.rows(), 0);
    return d;
}

inline RisPhase random_unit_phases(std::size_t m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    RisPhase r = RisPhase::zeros(m);
    for (Index e = 0; e < r.psi.size(); ++e) r.psi(e) = std::polar(1.0, ang(rng));
    return r;
}

/// Default starting point: top right singular vectors per user, common beam
/// on the dominant eigenvectors of sum_k H_k^H H_k (columns weighted by the
/// singular values so that full-rank beams are not isotropic), equal shares of 0.9 P,
/// random unit-modulus RIS phases (none when absent) and z = 0.
inline DesignPoint initialize(const ScenarioConfig& cfg, const ChannelDrop& drop, const VariantSpec& variant,
                              std::mt19937_64& rng) {
    const ScenarioConfig vc = variant_config(cfg, variant);
    const ChannelDrop vd = variant_drop(drop, variant);
    DesignPoint dp;
    dp.beams = BeamformerSet::zeros(vc);
    dp.ris = variant.ris == RisMode::Absent ? RisPhase::zeros(0) : random_unit_phases(vd.ris_elements(), rng);
    dp.z = RVec::Zero(static_cast<Index>(vc.K));
    const auto n = static_cast<Index>(vc.N());
    const double blocks = static_cast<double>(vc.K) + (variant.rsma() ? 1.0 : 0.0);
    const double share = 0.9 * vc.P / blocks;
    const auto h = effective_channels(vd, dp.ris);
    auto normalized = [&](CMat u) {
        const double nrm = u.norm();
        if (nrm > 0.0) u *= std::sqrt(share) / nrm;
        return u;
    };
    for (std::size_t k = 0; k < vc.K; ++k) {
        Eigen::JacobiSVD<CMat> svd(h[k], Eigen::ComputeFullV);
        RVec sv = RVec::Zero(n);
        sv.head(std::min(n, svd.singularValues().size())) = svd.singularValues().head(std::min(n, svd.singularValues().size()));
        if (!(sv.maxCoeff() > 0.0)) sv.setOnes();
        dp.beams.U_private[k] = normalized(svd.matrixV().leftCols(n) * sv.asDiagonal());
    }
    if (variant.rsma()) {
        CMat acc = CMat::Zero(static_cast<Index>(vc.N_BS), static_cast<Index>(vc.N_BS));
        for (const auto& hk : h) acc += hk.adjoint() * hk;
        Eigen::SelfAdjointEigenSolver<CMat> es(linalg::hermitian_part(acc));
        const RVec ev = es.eigenvalues().reverse().head(n).cwiseMax(0.0).cwiseSqrt();
        dp.beams.U_common = normalized(es.eigenvectors().rowwise().reverse().leftCols(n) *
                                       (ev.maxCoeff() > 0.0 ? RVec(ev) : RVec(RVec::Ones(n))).asDiagonal());
    }
    return dp;
}

/// lambda_k = sqrt(max(r_k, 0)) / p_k.
inline RVec lambda_update(const ScenarioConfig& cfg, const ChannelDrop& drop, const DesignPoint& dp) {
    const auto rep = metrics_report(cfg, drop, dp);
    RVec lam(rep.r_total.size());
    for (Index k = 0; k < lam.size(); ++k) lam(k) = std::sqrt(std::max(rep.r_total(k), 0.0)) / rep.p(k);
    return lam;
}

/// Maps a design produced by another variant onto this variant's decision
/// space: SDMA drops the common beam and shares, the absent RIS drops psi,
/// random phases are replaced by the variant's fixed draw and missing RIS
/// elements are padded with zeros.
inline DesignPoint adapt_design(const ScenarioConfig& cfg, const VariantSpec& variant, DesignPoint dp,
                                const RisPhase& fixed_ris) {
    const ScenarioConfig vc = variant_config(cfg, variant);
    if (!variant.rsma()) {
        dp.beams.U_common.setZero();
        dp.z.setZero();
    }
    if (variant.ris == RisMode::Absent) dp.ris = RisPhase::zeros(0);
    else if (variant.ris == RisMode::RandomPhase) dp.ris = fixed_ris;
    else if (dp.ris.size() != vc.M) {
        RisPhase r = RisPhase::zeros(vc.M);
        const auto keep = static_cast<Index>(std::min(dp.ris.size(), vc.M));
        r.psi.head(keep) = dp.ris.psi.head(keep);
        dp.ris = r;
    }
    if (dp.z.size() != static_cast<Index>(vc.K)) dp.z = RVec::Zero(static_cast<Index>(vc.K));
    return dp;
}

namespace detail {

inline double min_total_rate(const MetricsReport& rep) { return rep.r_total.minCoeff(); }

class AoRun {
public:
    AoRun(const ScenarioConfig& cfg, const ChannelDrop& drop, const VariantSpec& variant, const AoOptions& opt,
          const conic::ConicSolver& solver, std::mt19937_64& rng)
        : cfg_(cfg), drop_(drop), variant_(variant), opt_(opt), solver_(solver), rng_(rng) {}

    SolveTrace run(DesignPoint start) {
        SolveTrace tr;
        DesignPoint cur = repair_design(cfg_, drop_, std::move(start));
        auto rep = metrics_report(cfg_, drop_, cur);
        polish_shares(cur, rep);
        tr.initial_objective = rep.objective;
        std::vector<double> hist{rep.objective};
        const bool ris_step = variant_.ris == RisMode::Optimized && drop_.ris_elements() > 0;
        tr.verdict = Verdict::MaxIterations;

        for (int it = 1; it <= opt_.max_iter; ++it) {
            const auto t0 = std::chrono::steady_clock::now();
            IterationRecord rec;
            rec.iteration = it;

            // Beamformer half-step.
            auto co = build_coefficients(cfg_, drop_, cur.beams, cur.ris);
            DesignPoint anchor = cur;
            if (!reanchor_private(co, anchor)) {
                tr.verdict = Verdict::Degenerate;
                tr.note = "private-rate surrogate degenerate after re-anchoring";
                break;
            }
            const auto arep = metrics_report(cfg_, drop_, anchor);
            const SubproblemMode mode =
                min_total_rate(arep) < kRestoreRate ? SubproblemMode::MaxMinRate : SubproblemMode::Weighted;
            rec.restoration = mode == SubproblemMode::MaxMinRate;
            const RVec lam = lambda_update(cfg_, drop_, anchor);
            const auto bf = build_bf_subproblem(cfg_, drop_, co, anchor.z, lam, variant_.rsma(), mode);
            const auto bsol = solve_subproblem(cfg_, bf, solver_);
            rec.bf_status = bsol.status;
            rec.surrogate_objective = bsol.objective;
            rec.raw_objective = rep.objective;
            if (bsol.usable()) rec.bf_accepted = try_accept(bsol.design, cur, rep, rec);

            // RIS half-step.
            if (ris_step) {
                auto cr = build_coefficients(cfg_, drop_, cur.beams, cur.ris);
                bool ok = true;
                for (const auto& b : cr.priv) ok = ok && !b.degenerate;
                if (ok) {
                    const SubproblemMode rmode =
                        min_total_rate(rep) < kRestoreRate ? SubproblemMode::MaxMinRate : SubproblemMode::Weighted;
                    const auto rp = build_ris_subproblem(cfg_, drop_, cr, cur.z, variant_.rsma(), rmode);
                    const auto rsol = solve_subproblem(cfg_, rp, solver_);
                    rec.ris_status = rsol.status;
                    if (rsol.usable()) rec.ris_accepted = try_accept(rsol.design, cur, rep, rec);
                } else {
                    rec.ris_status = SubproblemStatus::NumericalFailure;
                }
            }

            rec.objective = rep.objective;
            rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            tr.iterations.push_back(rec);
            hist.push_back(rep.objective);

            const auto w = static_cast<std::size_t>(opt_.window);
            if (hist.size() > w) {
                // Euclidean norm of the last w objective changes.
                double change = 0.0;
                for (std::size_t i = hist.size() - w; i < hist.size(); ++i)
                    change += (hist[i - 1] - hist[i]) * (hist[i - 1] - hist[i]);
                change = std::sqrt(change);
                const double f = hist.back();
                if (std::isfinite(f) && std::isfinite(change) && change <= opt_.delta * std::max(std::abs(f), 1e-300)) {
                    tr.verdict = Verdict::Converged;
                    break;
                }
            }
        }
        tr.final_design = cur;
        tr.final_metrics = rep;
        if (cfg_.alpha > 0.0 && rep.has_infinite_delay()) tr.verdict = Verdict::Infeasible;
        return tr;
    }

private:
    const ScenarioConfig& cfg_;
    const ChannelDrop& drop_;
    const VariantSpec& variant_;
    const AoOptions& opt_;
    const conic::ConicSolver& solver_;
    std::mt19937_64& rng_;

    /// Re-anchors private streams whose surrogate is degenerate at a small
    /// random perturbation (one attempt).
    bool reanchor_private(SurrogateCoefficients& co, DesignPoint& anchor) {
        bool any = false;
        std::normal_distribution<double> nd(0.0, 1.0);
        const double scale = 1e-3 * std::sqrt(cfg_.P / static_cast<double>(cfg_.K));
        for (const auto& b : co.priv) {
            if (!b.degenerate) continue;
            any = true;
            CMat& u = anchor.beams.U_private[b.user];
            for (Index i = 0; i < u.size(); ++i) u(i) += scale * cplx(nd(rng_), nd(rng_)) / std::numbers::sqrt2;
        }
        if (!any) return true;
        const double pw = anchor.beams.total_power();
        if (pw > cfg_.P) anchor.beams *= std::sqrt(cfg_.P / pw);
        co = build_coefficients(cfg_, drop_, anchor.beams, anchor.ris);
        for (const auto& b : co.priv)
            if (b.degenerate) return false;
        return true;
    }

    void polish_shares(DesignPoint& dp, MetricsReport& rep) const {
        if (!variant_.rsma()) return;
        const double cap = rep.r_c_per_user.minCoeff();
        const auto z = optimize_shares(cfg_, rep.r_p, rep.p, cap, solver_);
        if (!z) return;
        DesignPoint trial = dp;
        trial.z = *z;
        auto trep = rep;
        finish_report(cfg_, trial.z, trep);
        if (trep.objective <= rep.objective) {
            dp = std::move(trial);
            rep = std::move(trep);
        }
    }

    /// Repairs a half-step candidate, re-optimizes the shares under the true
    /// rates and accepts it when the true objective does not increase.
    /// Safeguarded line search past an improving candidate: keeps doubling
    /// the step from `from` while the true objective keeps falling.
    void extrapolate(const DesignPoint& from, DesignPoint& cand, MetricsReport& crep) const {
        const DesignPoint step = cand;
        double tau = 1.0;
        for (int i = 0; i < opt_.extrapolation; ++i) {
            tau *= 2.0;
            DesignPoint trial = step;
            trial.beams.U_common = from.beams.U_common + tau * (step.beams.U_common - from.beams.U_common);
            for (std::size_t k = 0; k < trial.beams.U_private.size(); ++k)
                trial.beams.U_private[k] = from.beams.U_private[k] + tau * (step.beams.U_private[k] - from.beams.U_private[k]);
            if (trial.ris.size() == from.ris.size()) trial.ris.psi = from.ris.psi + tau * (step.ris.psi - from.ris.psi);
            if (trial.z.size() == from.z.size()) trial.z = from.z + tau * (step.z - from.z);
            trial = repair_design(cfg_, drop_, std::move(trial));
            auto trep = metrics_report(cfg_, drop_, trial);
            if (!(trep.objective < crep.objective)) break;
            cand = std::move(trial);
            crep = std::move(trep);
        }
    }

    bool try_accept(const DesignPoint& raw, DesignPoint& cur, MetricsReport& rep, IterationRecord& rec) const {
        DesignPoint cand = repair_design(cfg_, drop_, raw);
        auto crep = metrics_report(cfg_, drop_, cand);
        if (crep.objective < rep.objective) extrapolate(cur, cand, crep);
        polish_shares(cand, crep);
        rec.raw_objective = crep.objective;
        const bool better = crep.objective < rep.objective ||
                            (crep.objective == rep.objective && min_total_rate(crep) > min_total_rate(rep));
        if (!better) return false;
        cur = std::move(cand);
        rep = std::move(crep);
        return true;
    }
};

} // namespace detail

/// Re-runs the alternating optimization from every candidate whose true
/// objective beats the incumbent and keeps the best result.
inline SolveTrace ao_improve(const ScenarioConfig& cfg, const ChannelDrop& drop, const VariantSpec& variant,
                             const AoOptions& options, SolveTrace incumbent, const std::vector<DesignPoint>& candidates,
                             const RisPhase& fixed_ris) {
    const ScenarioConfig vc = variant_config(cfg, variant);
    const ChannelDrop vd = variant_drop(drop, variant);
    const conic::InteriorPointSolver fallback;
    const conic::ConicSolver& solver = options.solver ? *options.solver : fallback;
    std::mt19937_64 rng(options.seed ^ 0x5bd1e995ULL);
    detail::AoRun runner(vc, vd, variant, options, solver, rng);
    int starts = incumbent.starts;
    for (const auto& c : candidates) {
        const DesignPoint cand = repair_design(vc, vd, adapt_design(cfg, variant, c, fixed_ris));
        if (!(true_objective(vc, vd, cand) < incumbent.final_objective())) continue;
        SolveTrace t = runner.run(cand);
        if (t.final_objective() < incumbent.final_objective()) {
            t.winning_start = starts;
            incumbent = std::move(t);
        }
        ++starts;
    }
    incumbent.starts = starts;
    return incumbent;
}

/// Runs the alternating optimization from the default initialization and,
/// for every candidate design that beats that result, again from the
/// candidate. Returns the best run under the true objective.
inline SolveTrace ao_solve(const ScenarioConfig& cfg, const ChannelDrop& drop, const VariantSpec& variant,
                           const AoOptions& options = {}, const std::vector<DesignPoint>& candidates = {}) {
    cfg.validate();
    drop.validate(cfg);
    const ScenarioConfig vc = variant_config(cfg, variant);
    const ChannelDrop vd = variant_drop(drop, variant);
    const conic::InteriorPointSolver fallback;
    const conic::ConicSolver& solver = options.solver ? *options.solver : fallback;
    std::mt19937_64 rng(options.seed);

    const DesignPoint init = initialize(cfg, drop, variant, rng);
    detail::AoRun runner(vc, vd, variant, options, solver, rng);
    SolveTrace best = runner.run(init);
    best.starts = 1;
    if (candidates.empty()) return best;
    return ao_improve(cfg, drop, variant, options, std::move(best), candidates, init.ris);
}

} // namespace risrsma
