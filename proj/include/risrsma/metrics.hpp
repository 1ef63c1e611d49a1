#pragma once

// Finite-blocklength rates, power, energy efficiency, delay and the weighted
// latency/EE objective.

#include "risrsma/linalg.hpp"
#include "risrsma/model.hpp"
#include "risrsma/qfunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace risrsma {

inline constexpr double kInfiniteDelay = std::numeric_limits<double>::infinity();

/// Normal-approximation rate of a stream with signal covariance S received
/// over interference-plus-noise W:
///   ln|I + W^{-1} S| - qinv * sqrt(2 Tr(S (W + S)^{-1}) / n).
/// May be negative.
inline double fbl_rate(const CMat& w, const CMat& s, double qinv, double n) {
    const CMat d = w + s;
    const double logdet = linalg::logdet_ratio(w, s);
    Eigen::LLT<CMat> llt(linalg::hermitian_part(d));
    if (llt.info() != Eigen::Success) throw NumericError("fbl_rate: singular covariance");
    const double tr = std::max(0.0, llt.solve(s).trace().real());
    return logdet - qinv * std::sqrt(2.0 * tr / n);
}

/// Received matrices H_k U for one user: slot 0 is the common stream, slot
/// 1 + j the private stream of user j.
inline std::vector<CMat> received_matrices(const CMat& h, const BeamformerSet& beams) {
    std::vector<CMat> x;
    x.reserve(beams.U_private.size() + 1);
    x.push_back(h * beams.U_common);
    for (const auto& u : beams.U_private) x.push_back(h * u);
    return x;
}

namespace detail {

inline CMat noise(std::size_t nu, double sigma2) {
    const auto n = static_cast<Eigen::Index>(nu);
    return sigma2 * CMat::Identity(n, n);
}

inline double common_rate_from_received(const std::vector<CMat>& x, double sigma2, double qinv, double n) {
    CMat w = noise(static_cast<std::size_t>(x[0].rows()), sigma2);
    for (std::size_t j = 1; j < x.size(); ++j) w.noalias() += x[j] * x[j].adjoint();
    return fbl_rate(w, x[0] * x[0].adjoint(), qinv, n);
}

inline double private_rate_from_received(const std::vector<CMat>& x, std::size_t k, double sigma2, double qinv,
                                         double n) {
    CMat w = noise(static_cast<std::size_t>(x[0].rows()), sigma2);
    for (std::size_t j = 1; j < x.size(); ++j)
        if (j != k + 1) w.noalias() += x[j] * x[j].adjoint();
    return fbl_rate(w, x[k + 1] * x[k + 1].adjoint(), qinv, n);
}

} // namespace detail

/// Rate of the common stream at user k (nats per channel use).
inline double common_rate_fbl(const ScenarioConfig& cfg, const ChannelDrop& drop, const RisPhase& ris,
                              const BeamformerSet& beams, std::size_t k) {
    const auto x = received_matrices(effective_channel(drop, ris, k), beams);
    return detail::common_rate_from_received(x, cfg.sigma2, inverse_q(cfg.eps_c), cfg.n_c);
}

/// Rate of the private stream of user k after the common stream is cancelled.
inline double private_rate_fbl(const ScenarioConfig& cfg, const ChannelDrop& drop, const RisPhase& ris,
                               const BeamformerSet& beams, std::size_t k) {
    const auto x = received_matrices(effective_channel(drop, ris, k), beams);
    return detail::private_rate_from_received(x, k, cfg.sigma2, inverse_q(cfg.eps_p), cfg.n_p);
}

/// Equal split of a total error target between the common and private
/// stream.
inline std::pair<double, double> reliability_split(double eps_total) {
    if (!(eps_total > 0.0 && eps_total < 0.5)) throw DomainError("reliability_split: eps_total must lie in (0,0.5)");
    return {0.5 * eps_total, 0.5 * eps_total};
}

/// Exact end-to-end error of common-then-private decoding.
inline double combined_error(double eps_c, double eps_p) { return eps_c + (1.0 - eps_c) * eps_p; }

/// p_k = P_s + eta Tr(U_k U_k^H) + (eta/K) Tr(U U^H).
inline double power_consumption(const ScenarioConfig& cfg, const BeamformerSet& beams, std::size_t k) {
    return cfg.P_s + cfg.eta * beams.U_private.at(k).squaredNorm() +
           cfg.eta / static_cast<double>(cfg.K) * beams.U_common.squaredNorm();
}

struct MetricsReport {
    RVec r_c_per_user;
    RVec r_p;
    RVec r_total;
    RVec p;
    RVec ee;
    RVec delay;
    double objective = 0.0;

    [[nodiscard]] double max_delay() const { return delay.maxCoeff(); }
    [[nodiscard]] double min_ee() const { return ee.minCoeff(); }
    [[nodiscard]] bool has_infinite_delay() const { return !std::isfinite(max_delay()); }
};

/// alpha * max_k d_k - (1 - alpha) * min_k e_k. An infinite delay makes the
/// objective infinite unless alpha == 0.
inline double weighted_objective(double alpha, double max_delay, double min_ee) {
    if (alpha == 0.0) return -min_ee;
    return alpha * max_delay - (1.0 - alpha) * min_ee;
}

/// Fills delay, EE and the objective from rates and powers. Negative rates
/// are clamped to zero for the physical metrics.
inline void finish_report(const ScenarioConfig& cfg, const RVec& z, MetricsReport& rep) {
    const auto K = static_cast<Eigen::Index>(cfg.K);
    rep.r_total = z + rep.r_p;
    rep.ee.resize(K);
    rep.delay.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double r = std::max(0.0, rep.r_total(k));
        rep.ee(k) = r / rep.p(k);
        rep.delay(k) = r > 0.0 ? cfg.l[static_cast<std::size_t>(k)] / r : kInfiniteDelay;
    }
    rep.objective = weighted_objective(cfg.alpha, rep.delay.maxCoeff(), rep.ee.minCoeff());
}

inline MetricsReport metrics_report(const ScenarioConfig& cfg, const ChannelDrop& drop, const DesignPoint& dp) {
    check_beam_shapes(cfg, dp.beams);
    const auto K = static_cast<Eigen::Index>(cfg.K);
    if (dp.z.size() != K) throw ModelError("metrics_report: z must have K entries");
    const double qc = inverse_q(cfg.eps_c);
    const double qp = inverse_q(cfg.eps_p);
    MetricsReport rep;
    rep.r_c_per_user.resize(K);
    rep.r_p.resize(K);
    rep.p.resize(K);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const auto x = received_matrices(effective_channel(drop, dp.ris, k), dp.beams);
        const auto i = static_cast<Eigen::Index>(k);
        rep.r_c_per_user(i) = detail::common_rate_from_received(x, cfg.sigma2, qc, cfg.n_c);
        rep.r_p(i) = detail::private_rate_from_received(x, k, cfg.sigma2, qp, cfg.n_p);
        rep.p(i) = power_consumption(cfg, dp.beams, k);
    }
    finish_report(cfg, dp.z, rep);
    return rep;
}

inline double true_objective(const ScenarioConfig& cfg, const ChannelDrop& drop, const DesignPoint& dp) {
    return metrics_report(cfg, drop, dp).objective;
}

/// Per-constraint signed slacks (positive means satisfied).
struct FeasibilityReport {
    bool feasible = false;
    double power_slack = 0.0;    // P - total transmit power
    double z_nonneg_slack = 0.0; // min_k z_k
    double cap_slack = 0.0;      // min_k r_ck - sum_k z_k
    double ris_slack = 0.0;      // 1 - max_m |psi_m|
};

/// Checks the power budget, z >= 0, the common-rate cap against the true
/// common rates and the RIS magnitude bound. An all-zero z is always
/// admissible for the cap: no common payload is carried.
inline FeasibilityReport validate_design(const ScenarioConfig& cfg, const ChannelDrop& drop, const DesignPoint& dp) {
    check_beam_shapes(cfg, dp.beams);
    FeasibilityReport rep;
    rep.power_slack = cfg.P - dp.beams.total_power();
    rep.z_nonneg_slack = dp.z.size() ? dp.z.minCoeff() : 0.0;
    const double zsum = dp.z.sum();
    double min_rc = std::numeric_limits<double>::infinity();
    const double qc = inverse_q(cfg.eps_c);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const auto x = received_matrices(effective_channel(drop, dp.ris, k), dp.beams);
        min_rc = std::min(min_rc, detail::common_rate_from_received(x, cfg.sigma2, qc, cfg.n_c));
    }
    rep.cap_slack = min_rc - zsum;
    rep.ris_slack = dp.ris.size() ? 1.0 - dp.ris.psi.cwiseAbs().maxCoeff() : 1.0;
    const bool zero_z = dp.z.size() == 0 || dp.z.cwiseAbs().maxCoeff() == 0.0;
    rep.feasible = rep.power_slack >= -1e-6 * cfg.P && rep.z_nonneg_slack >= 0.0 &&
                   (zero_z || rep.cap_slack >= -1e-6) && rep.ris_slack >= -1e-9;
    return rep;
}

} // namespace risrsma
