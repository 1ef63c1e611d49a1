#pragma once

// Exhaustive grid search on tiny instances, used as a test oracle.

#include "risrsma/ao.hpp"

#include <numbers>

namespace risrsma::harness {

struct OracleResult {
    double objective = std::numeric_limits<double>::infinity();
    DesignPoint argmax;
    bool feasible = false; // some grid point has finite worst-case delay
    std::size_t evaluations = 0;
};

struct OracleGrid {
    int private_levels = 33;    // zero plus geometric levels over span_db below P
    double span_db = 40.0;
    int common_levels = 17;     // share of the power left after the private streams
    int phases = 64;
    int z_levels = 129;
};

/// Per-stream power levels: 0 and P * 10^(-span/10 * (1 - i/(L-2))), i = 0..L-2.
inline std::vector<double> power_levels(double P, const OracleGrid& grid) {
    std::vector<double> v{0.0};
    const int n = grid.private_levels - 1;
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? 1.0 : static_cast<double>(i) / (n - 1);
        v.push_back(P * std::pow(10.0, -grid.span_db / 10.0 * (1.0 - f)));
    }
    return v;
}

/// Grid search over private powers, the common share of the remaining
/// power, RIS phase and the split of the common rate. Only K <= 2, N_BS = N_u = 1 and M <= 1 are accepted;
/// a zero power budget is allowed and reports an infeasible instance.
inline OracleResult grid_oracle(const ScenarioConfig& cfg, const ChannelDrop& drop, const VariantSpec& variant,
                                const OracleGrid& grid = {}) {
    if (cfg.K > 2 || cfg.N_BS != 1 || cfg.N_u != 1 || cfg.M > 1)
        throw ModelError("grid_oracle: only K <= 2, N_BS = N_u = 1, M <= 1 instances are supported");
    if (variant.ris == RisMode::RandomPhase) throw ModelError("grid_oracle: random-phase variants are not supported");
    if (cfg.P < 0.0) throw ModelError("grid_oracle: negative power budget");
    drop.validate(cfg);

    const ScenarioConfig vc = variant_config(cfg, variant);
    const ChannelDrop vd = variant_drop(drop, variant);
    const double qc = inverse_q(vc.eps_c), qp = inverse_q(vc.eps_p);
    const std::size_t K = vc.K;
    if (grid.private_levels < 2 || grid.common_levels < 2 || grid.phases < 1 || grid.z_levels < 2)
        throw ModelError("grid_oracle: grid too coarse");
    const auto levels = power_levels(vc.P, grid);
    const std::vector<double> second = K == 2 ? levels : std::vector<double>{0.0};
    const int nc = grid.common_levels - 1;
    const int n_phase = vc.M == 0 ? 1 : grid.phases;
    const int c_max = variant.rsma() ? nc : 0;

    OracleResult best;
    DesignPoint dp;
    dp.beams = BeamformerSet::zeros(vc);
    dp.z = RVec::Zero(static_cast<Index>(K));
    dp.ris = RisPhase::zeros(vc.M);
    MetricsReport rep;
    rep.r_c_per_user.resize(static_cast<Index>(K));
    rep.r_p.resize(static_cast<Index>(K));
    rep.p.resize(static_cast<Index>(K));

    for (int ph = 0; ph < n_phase; ++ph) {
        if (vc.M == 1) dp.ris.psi(0) = std::polar(1.0, 2.0 * std::numbers::pi * ph / grid.phases);
        std::vector<CMat> H;
        for (std::size_t k = 0; k < K; ++k) H.push_back(effective_channel(vd, dp.ris, k));
        for (const double p1 : levels) {
            for (const double p2 : second) {
                const double rest = vc.P - p1 - p2;
                if (rest < -1e-12 * vc.P) break;
                for (int c = 0; c <= c_max; ++c) {
                    dp.beams.U_common(0, 0) = std::sqrt(std::max(rest, 0.0) * c / nc);
                    dp.beams.U_private[0](0, 0) = std::sqrt(p1);
                    if (K == 2) dp.beams.U_private[1](0, 0) = std::sqrt(p2);
                    double cap = std::numeric_limits<double>::infinity();
                    for (std::size_t k = 0; k < K; ++k) {
                        const auto x = received_matrices(H[k], dp.beams);
                        const auto i = static_cast<Index>(k);
                        rep.r_c_per_user(i) = risrsma::detail::common_rate_from_received(x, vc.sigma2, qc, vc.n_c);
                        rep.r_p(i) = risrsma::detail::private_rate_from_received(x, k, vc.sigma2, qp, vc.n_p);
                        rep.p(i) = power_consumption(vc, dp.beams, k);
                        cap = std::min(cap, rep.r_c_per_user(i));
                    }
                    cap = variant.rsma() ? std::max(cap, 0.0) : 0.0;
                    const int nz = (K == 2 && cap > 0.0) ? grid.z_levels - 1 : 0;
                    for (int j = 0; j <= nz; ++j) {
                        RVec z = RVec::Zero(static_cast<Index>(K));
                        if (K == 1) z(0) = cap;
                        else if (nz > 0) {
                            z(0) = cap * j / nz;
                            z(1) = cap - z(0);
                        }
                        finish_report(vc, z, rep);
                        ++best.evaluations;
                        const bool finite = std::isfinite(rep.delay.maxCoeff());
                        if (rep.objective < best.objective) {
                            best.objective = rep.objective;
                            best.argmax = dp;
                            best.argmax.z = z;
                        }
                        best.feasible = best.feasible || finite;
                    }
                }
            }
        }
    }
    return best;
}

} // namespace risrsma::harness
