#pragma once

// Concave quadratic minorants of the finite-blocklength rates.
//
// Every rate is written in terms of the received matrices X_s = H_k U_s
// (slot 0 common, slot 1 + j private of user j). Around an anchor X̄ the
// bound reads
//
//   r >= a + sum_s 2 Re Tr(A_s X_s^H) - Tr(B (sigma2 I + sum_{s in Q} X_s X_s^H))
//
// which is concave in X and therefore in U (X affine in U, RIS fixed) and in
// psi (X affine in psi, beams fixed). The same coefficients serve both
// alternating half-steps.

#include "risrsma/linalg.hpp"
#include "risrsma/metrics.hpp"

#include <cmath>
#include <optional>

namespace risrsma {

enum class StreamKind { Private, Common };

/// Dispersion anchors below this value make the bound undefined.
inline constexpr double kAnchorFloor = 1e-12;

struct RateBound {
    StreamKind kind = StreamKind::Private;
    std::size_t user = 0;
    double a = 0.0;                 // constant term
    std::vector<CMat> A;            // linear coefficient per slot (zero where unused)
    std::vector<bool> in_quadratic; // slots inside Tr(B ...)
    CMat B;                         // Hermitian PSD
    double g = 0.0;                 // dispersion anchor 2 Tr(D^{-1} S) at the anchor
    double sigma2 = 0.0;
    bool degenerate = false;

    // Intermediate quantities kept for inspection.
    CMat C;      // W^{-1} S
    CMat W_inv;  // (interference + noise)^{-1}
    CMat D_inv;  // (interference + noise + signal)^{-1}

    [[nodiscard]] std::size_t own_slot() const { return kind == StreamKind::Common ? 0 : user + 1; }

    /// Bound value at received matrices x (one per slot).
    [[nodiscard]] double value(const std::vector<CMat>& x) const {
        double v = a - sigma2 * B.trace().real();
        for (std::size_t s = 0; s < x.size(); ++s) {
            v += 2.0 * linalg::re_inner(A[s], x[s]);
            if (in_quadratic[s]) v -= (x[s].adjoint() * B * x[s]).trace().real();
        }
        return v;
    }

    /// Gradient coefficient at x for slot s: d value = sum_s 2 Re Tr(grad_s dX_s^H).
    [[nodiscard]] CMat gradient(const std::vector<CMat>& x, std::size_t s) const {
        CMat gr = A[s];
        if (in_quadratic[s]) gr -= B * x[s];
        return gr;
    }
};

/// Builds the minorant of one stream's rate anchored at received matrices xbar.
/// qinv is Q^{-1}(eps) of the stream and n its codeword length.
inline RateBound build_rate_bound(const std::vector<CMat>& xbar, StreamKind kind, std::size_t k, double sigma2,
                                  double qinv, double n) {
    RateBound rb;
    rb.kind = kind;
    rb.user = k;
    rb.sigma2 = sigma2;
    const std::size_t slots = xbar.size();
    const auto nu = xbar[0].rows();
    const std::size_t own = rb.own_slot();

    rb.in_quadratic.assign(slots, true);
    if (kind == StreamKind::Private) rb.in_quadratic[0] = false;

    // Streams other than the own one that are not cancelled before decoding.
    auto interferer = [&](std::size_t s) { return s != own && rb.in_quadratic[s]; };

    CMat w = sigma2 * CMat::Identity(nu, nu);
    for (std::size_t s = 0; s < slots; ++s)
        if (interferer(s)) w.noalias() += xbar[s] * xbar[s].adjoint();
    const CMat sig = xbar[own] * xbar[own].adjoint();
    const CMat d = w + sig;

    rb.W_inv = linalg::hpd_inverse(w, sigma2);
    rb.D_inv = linalg::hpd_inverse(d, sigma2);
    rb.C = rb.W_inv * sig;
    rb.g = 2.0 * (rb.D_inv * sig).trace().real();

    const double disp = qinv / std::sqrt(n);
    rb.A.assign(slots, CMat::Zero(xbar[0].rows(), xbar[0].cols()));
    rb.A[own] = rb.W_inv * xbar[own];
    rb.B = rb.W_inv - rb.D_inv;
    rb.a = linalg::logdet_ratio(w, sig) - rb.C.trace().real();

    if (disp > 0.0) {
        if (!(rb.g >= kAnchorFloor)) {
            rb.degenerate = true;
            rb.B = linalg::hermitian_part(rb.B);
            return rb;
        }
        const double sg = std::sqrt(rb.g);
        const double scale = disp / sg;
        for (std::size_t s = 0; s < slots; ++s)
            if (interferer(s)) rb.A[s] = scale * rb.D_inv * xbar[s];
        rb.B += scale * rb.D_inv * w * rb.D_inv;
        const double nu_d = static_cast<double>(nu);
        rb.a -= 0.5 * disp * (sg + (2.0 * nu_d - 4.0 * sigma2 * rb.D_inv.trace().real()) / sg);
    }
    rb.B = linalg::hermitian_part(rb.B);
    return rb;
}

/// Minorants of all users' private and common rates anchored at (beams, ris).
struct SurrogateCoefficients {
    std::vector<RateBound> priv;
    std::vector<RateBound> common;
    BeamformerSet anchor_beams;
    RisPhase anchor_ris;
    std::vector<CMat> H_bar; // effective channels at anchor_ris

    [[nodiscard]] const RateBound& bound(StreamKind kind, std::size_t k) const {
        return kind == StreamKind::Common ? common.at(k) : priv.at(k);
    }
    [[nodiscard]] bool any_degenerate() const {
        for (const auto& b : priv)
            if (b.degenerate) return true;
        for (const auto& b : common)
            if (b.degenerate) return true;
        return false;
    }
};

inline SurrogateCoefficients build_coefficients(const ScenarioConfig& cfg, const ChannelDrop& drop,
                                                const BeamformerSet& beams, const RisPhase& ris) {
    check_beam_shapes(cfg, beams);
    SurrogateCoefficients co;
    co.anchor_beams = beams;
    co.anchor_ris = ris;
    co.H_bar = effective_channels(drop, ris);
    const double qp = cfg.eps_p == 0.5 ? 0.0 : inverse_q(cfg.eps_p);
    const double qc = cfg.eps_c == 0.5 ? 0.0 : inverse_q(cfg.eps_c);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const auto x = received_matrices(co.H_bar[k], beams);
        co.priv.push_back(build_rate_bound(x, StreamKind::Private, k, cfg.sigma2, qp, cfg.n_p));
        co.common.push_back(build_rate_bound(x, StreamKind::Common, k, cfg.sigma2, qc, cfg.n_c));
    }
    return co;
}

/// Beamforming-side minorants: RIS frozen at ris_fixed, anchored at beams_prev.
inline SurrogateCoefficients lemma1_coefficients(const ScenarioConfig& cfg, const ChannelDrop& drop,
                                                 const RisPhase& ris_fixed, const BeamformerSet& beams_prev) {
    return build_coefficients(cfg, drop, beams_prev, ris_fixed);
}

/// RIS-side minorants: beams frozen at beams_fixed, anchored at ris_prev.
inline SurrogateCoefficients lemma2_coefficients(const ScenarioConfig& cfg, const ChannelDrop& drop,
                                                 const BeamformerSet& beams_fixed, const RisPhase& ris_prev) {
    return build_coefficients(cfg, drop, beams_fixed, ris_prev);
}

/// Bound value as a function of the beams, with the RIS frozen at the anchor.
inline double eval_surrogate_bf(const SurrogateCoefficients& co, const BeamformerSet& beams, StreamKind kind,
                                std::size_t k) {
    return co.bound(kind, k).value(received_matrices(co.H_bar.at(k), beams));
}

/// Bound value as a function of the RIS phases, with the beams frozen at the anchor.
inline double eval_surrogate_ris(const SurrogateCoefficients& co, const ChannelDrop& drop, const RisPhase& ris,
                                 StreamKind kind, std::size_t k) {
    return co.bound(kind, k).value(received_matrices(effective_channel(drop, ris, k), co.anchor_beams));
}

} // namespace risrsma
