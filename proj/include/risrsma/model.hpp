#pragma once

#include "risrsma/types.hpp"

#include <string>

namespace risrsma {

/// H_k(psi) = G_k diag(psi) G + F_k. With no RIS elements this is F_k.
inline CMat effective_channel(const ChannelDrop& drop, const RisPhase& ris, std::size_t k) {
    if (k >= drop.users()) throw ModelError("effective_channel: user index out of range");
    const CMat& f = drop.F[k];
    const CMat& gk = drop.G_list[k];
    const auto m = drop.G.rows();
    if (gk.cols() != m || static_cast<Eigen::Index>(ris.size()) != m || drop.G.cols() != f.cols() ||
        gk.rows() != f.rows()) {
        throw ModelError("effective_channel: shape mismatch (M=" + std::to_string(m) +
                         ", psi=" + std::to_string(ris.size()) + ")");
    }
    if (m == 0) return f;
    return gk * ris.psi.asDiagonal() * drop.G + f;
}

/// Effective channels of all users.
inline std::vector<CMat> effective_channels(const ChannelDrop& drop, const RisPhase& ris) {
    std::vector<CMat> h;
    h.reserve(drop.users());
    for (std::size_t k = 0; k < drop.users(); ++k) h.push_back(effective_channel(drop, ris, k));
    return h;
}

inline void check_beam_shapes(const ScenarioConfig& cfg, const BeamformerSet& b) {
    const auto nb = static_cast<Eigen::Index>(cfg.N_BS);
    const auto n = static_cast<Eigen::Index>(cfg.N());
    auto ok = [&](const CMat& u) { return u.rows() == nb && u.cols() == n; };
    if (!ok(b.U_common) || b.U_private.size() != cfg.K) throw ModelError("beamformer shape mismatch");
    for (const auto& u : b.U_private)
        if (!ok(u)) throw ModelError("beamformer shape mismatch");
}

} // namespace risrsma
