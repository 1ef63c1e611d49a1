#pragma once

#include "risrsma/metrics.hpp"

#include <cmath>
#include <random>

namespace fx {

using namespace risrsma;

inline cplx cn(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale / std::sqrt(2.0));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

inline CMat random_matrix(Index r, Index c, std::mt19937_64& rng, double scale = 1.0) {
    CMat m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = cn(rng, scale);
    return m;
}

inline ScenarioConfig small_config(std::size_t K = 2, std::size_t nb = 2, std::size_t nu = 2, std::size_t M = 3) {
    ScenarioConfig c;
    c.K = K;
    c.N_BS = nb;
    c.N_u = nu;
    c.M = M;
    c.P = 4.0;
    c.sigma2 = 0.5;
    c.n_p = 256;
    c.n_c = 256;
    c.eps_p = 5e-6;
    c.eps_c = 5e-6;
    c.l.assign(K, 100.0);
    c.alpha = 0.5;
    c.eta = 2.0;
    c.P_s = 0.5;
    return c;
}

/// Unit-variance Rayleigh drop sized for cfg.
inline ChannelDrop random_drop(const ScenarioConfig& cfg, std::mt19937_64& rng) {
    const auto nb = static_cast<Index>(cfg.N_BS), nu = static_cast<Index>(cfg.N_u), m = static_cast<Index>(cfg.M);
    ChannelDrop d;
    d.G = random_matrix(m, nb, rng);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        d.F.push_back(random_matrix(nu, nb, rng));
        d.G_list.push_back(random_matrix(nu, m, rng, 0.7));
    }
    return d;
}

/// Random beams scaled to total power `power`.
inline BeamformerSet random_beams(const ScenarioConfig& cfg, std::mt19937_64& rng, double power, bool common = true) {
    BeamformerSet b = BeamformerSet::zeros(cfg);
    const auto nb = static_cast<Index>(cfg.N_BS), n = static_cast<Index>(cfg.N());
    if (common) b.U_common = random_matrix(nb, n, rng);
    for (auto& u : b.U_private) u = random_matrix(nb, n, rng);
    b *= std::sqrt(power / b.total_power());
    return b;
}

inline RisPhase random_phase(std::size_t m, std::mt19937_64& rng, bool unit = true) {
    std::uniform_real_distribution<double> ua(0.0, 2.0 * std::acos(-1.0)), ur(0.0, 1.0);
    RisPhase r = RisPhase::zeros(m);
    for (Index e = 0; e < r.psi.size(); ++e) r.psi(e) = std::polar(unit ? 1.0 : std::sqrt(ur(rng)), ua(rng));
    return r;
}

inline DesignPoint random_design(const ScenarioConfig& cfg, std::mt19937_64& rng) {
    DesignPoint dp;
    dp.beams = random_beams(cfg, rng, 0.8 * cfg.P);
    dp.ris = random_phase(cfg.M, rng);
    dp.z = RVec::Zero(static_cast<Index>(cfg.K));
    return dp;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace fx
