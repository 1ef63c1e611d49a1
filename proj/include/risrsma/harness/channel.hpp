#pragma once

// Geometry-based channel generator. Every random quantity is drawn from its
// own substream keyed by (seed, tag, index), so a drop with more users or
// more RIS elements extends a smaller one instead of reshuffling it.

#include "risrsma/types.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace risrsma::harness {

/// Stateless 64-bit mixer.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0,
                                    std::uint64_t sub = 0) {
    return splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index) ^ sub);
}

enum StreamTag : std::uint64_t {
    kTagPosition = 0x706f73,
    kTagDirect = 0x646972,
    kTagBsRis = 0x627372,
    kTagRisUser = 0x727375,
    kTagDrop = 0x64726f70,
    kTagInit = 0x696e6974,
};

struct Point2 {
    double x = 0.0, y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double bearing(const Point2& from, const Point2& to) { return std::atan2(to.y - from.y, to.x - from.x); }

struct TopologyConfig {
    Point2 bs{0.0, 0.0};
    Point2 ris{40.0, 0.0};
    double user_r_min = 50.0; // m, from the BS
    double user_r_max = 70.0;
    double user_angle_deg = 30.0; // users at bearings in [-a, a]
    double pl_ref_db = 30.0;      // loss at 1 m
    double pl_direct = 3.5;
    double pl_ris = 2.2;
    double rician_k_db = 3.0;
    double scatter_scale = 1.0; // multiplies the random fading parts
    bool path_loss = true;      // false: unit gain on every link

    [[nodiscard]] double gain(double d, double exponent) const {
        if (!path_loss) return 1.0;
        return std::pow(10.0, -(pl_ref_db + 10.0 * exponent * std::log10(std::max(d, 1.0))) / 10.0);
    }
};

inline Point2 user_position(const TopologyConfig& topo, std::uint64_t seed, std::size_t k) {
    std::mt19937_64 rng(substream_seed(seed, kTagPosition, k));
    std::uniform_real_distribution<double> ur(topo.user_r_min, topo.user_r_max);
    std::uniform_real_distribution<double> ua(-topo.user_angle_deg, topo.user_angle_deg);
    const double r = ur(rng);
    const double a = ua(rng) * std::numbers::pi / 180.0;
    return {topo.bs.x + r * std::cos(a), topo.bs.y + r * std::sin(a)};
}

namespace detail {

/// Half-wavelength ULA response entry.
inline cplx steering(double theta, std::size_t m) {
    return std::polar(1.0, std::numbers::pi * static_cast<double>(m) * std::sin(theta));
}

inline cplx cn(std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, std::numbers::sqrt2 / 2.0);
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

} // namespace detail

/// One drop. F_k: Rayleigh with the direct-link loss. G and G_k: Rician
/// (factor rician_k_db, LOS part from ULA steering vectors) with the RIS-link
/// loss. Entry (i, m) of an RIS link depends only on (seed, k, m, i).
inline ChannelDrop generate_drop(const ScenarioConfig& cfg, const TopologyConfig& topo, std::uint64_t seed) {
    ChannelDrop d;
    d.seed = seed;
    const auto nb = static_cast<Eigen::Index>(cfg.N_BS);
    const auto nu = static_cast<Eigen::Index>(cfg.N_u);
    const auto m = static_cast<Eigen::Index>(cfg.M);
    const double kappa = std::pow(10.0, topo.rician_k_db / 10.0);
    const double w_los = std::sqrt(kappa / (kappa + 1.0));
    const double w_nlos = std::sqrt(1.0 / (kappa + 1.0)) * topo.scatter_scale;

    // BS -> RIS.
    const double th_bs = bearing(topo.bs, topo.ris);
    const double th_ris_in = bearing(topo.ris, topo.bs);
    const double g_bs_ris = std::sqrt(topo.gain(distance(topo.bs, topo.ris), topo.pl_ris));
    d.G.resize(m, nb);
    for (Eigen::Index e = 0; e < m; ++e) {
        std::mt19937_64 rng(substream_seed(seed, kTagBsRis, static_cast<std::uint64_t>(e)));
        for (Eigen::Index a = 0; a < nb; ++a) {
            const cplx los = detail::steering(th_ris_in, static_cast<std::size_t>(e)) *
                             std::conj(detail::steering(th_bs, static_cast<std::size_t>(a)));
            d.G(e, a) = g_bs_ris * (w_los * los + w_nlos * detail::cn(rng));
        }
    }

    for (std::size_t k = 0; k < cfg.K; ++k) {
        const Point2 u = user_position(topo, seed, k);
        // Direct link.
        const double g_dir = std::sqrt(topo.gain(distance(topo.bs, u), topo.pl_direct));
        CMat f(nu, nb);
        std::mt19937_64 rf(substream_seed(seed, kTagDirect, k));
        for (Eigen::Index a = 0; a < nb; ++a)
            for (Eigen::Index i = 0; i < nu; ++i) f(i, a) = g_dir * topo.scatter_scale * detail::cn(rf);
        d.F.push_back(std::move(f));

        // RIS -> user.
        const double g_ru = std::sqrt(topo.gain(distance(topo.ris, u), topo.pl_ris));
        const double th_out = bearing(topo.ris, u);
        const double th_in = bearing(u, topo.ris);
        CMat gk(nu, m);
        for (Eigen::Index e = 0; e < m; ++e) {
            std::mt19937_64 rg(substream_seed(seed, kTagRisUser, k, static_cast<std::uint64_t>(e)));
            for (Eigen::Index i = 0; i < nu; ++i) {
                const cplx los = detail::steering(th_in, static_cast<std::size_t>(i)) *
                                 std::conj(detail::steering(th_out, static_cast<std::size_t>(e)));
                gk(i, e) = g_ru * (w_los * los + w_nlos * detail::cn(rg));
            }
        }
        d.G_list.push_back(std::move(gk));
    }
    return d;
}

} // namespace risrsma::harness
