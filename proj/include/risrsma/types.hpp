#pragma once

// Core value types of the RIS-aided rate-splitting downlink model.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace risrsma {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Index = Eigen::Index;

/// Shape or configuration inconsistency in the system model.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Numerical breakdown (singular matrix, non-finite value).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// All system constants for one scenario. Rates and message lengths are in nats.
struct ScenarioConfig {
    std::size_t K = 4;       // users
    std::size_t N_BS = 2;    // BS antennas
    std::size_t N_u = 2;     // antennas per user
    std::size_t M = 20;      // RIS elements, 0 means no RIS
    double P = 10.0;         // BS power budget [W]
    double sigma2 = 1e-13;   // noise variance [W]
    double n_p = 256;        // private codeword length [channel uses]
    double n_c = 256;        // common codeword length [channel uses]
    double eps_p = 5e-6;
    double eps_c = 5e-6;
    std::vector<double> l;   // per-user message length [nats]
    double alpha = 0.5;      // latency weight
    double eta = 1.0 / 0.35; // inverse PA efficiency
    double P_s = 0.75;       // static power per user [W]

    /// Streams per user.
    [[nodiscard]] std::size_t N() const { return std::min(N_BS, N_u); }

    void validate() const {
        auto req = [](bool ok, const std::string& what) {
            if (!ok) throw ModelError("invalid ScenarioConfig: " + what);
        };
        req(K >= 1, "K >= 1");
        req(N_BS >= 1 && N_u >= 1, "antenna counts >= 1");
        req(P > 0.0, "P > 0");
        req(sigma2 > 0.0, "sigma2 > 0");
        req(n_p >= 1.0 && n_c >= 1.0, "codeword lengths >= 1");
        req(eps_p > 0.0 && eps_p < 0.5, "0 < eps_p < 0.5");
        req(eps_c > 0.0 && eps_c < 0.5, "0 < eps_c < 0.5");
        req(l.size() == K, "l has K entries");
        for (double lk : l) req(lk > 0.0, "l_k > 0");
        req(alpha >= 0.0 && alpha <= 1.0, "alpha in [0,1]");
        req(eta >= 1.0, "eta >= 1");
        req(P_s > 0.0, "P_s > 0");
    }
};

/// One channel realization: direct links, RIS->user links and the BS->RIS link.
struct ChannelDrop {
    std::vector<CMat> F;      // K x (N_u x N_BS)
    std::vector<CMat> G_list; // K x (N_u x M)
    CMat G;                   // M x N_BS
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t users() const { return F.size(); }
    [[nodiscard]] std::size_t ris_elements() const { return static_cast<std::size_t>(G.rows()); }

    void validate(const ScenarioConfig& cfg) const {
        auto req = [](bool ok, const std::string& what) {
            if (!ok) throw ModelError("invalid ChannelDrop: " + what);
        };
        req(F.size() == cfg.K && G_list.size() == cfg.K, "K matrices per link set");
        const auto nu = static_cast<Eigen::Index>(cfg.N_u);
        const auto nb = static_cast<Eigen::Index>(cfg.N_BS);
        const auto m = static_cast<Eigen::Index>(cfg.M);
        req(G.rows() == m && G.cols() == nb, "G is M x N_BS");
        for (std::size_t k = 0; k < cfg.K; ++k) {
            req(F[k].rows() == nu && F[k].cols() == nb, "F_k is N_u x N_BS");
            req(G_list[k].rows() == nu && G_list[k].cols() == m, "G_k is N_u x M");
            req(F[k].allFinite() && G_list[k].allFinite(), "finite entries");
        }
        req(G.allFinite(), "finite entries");
    }
};

/// Diagonal of the RIS scattering matrix.
struct RisPhase {
    CVec psi;

    static RisPhase zeros(std::size_t m) { return {CVec::Zero(static_cast<Eigen::Index>(m))}; }
    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(psi.size()); }
};

/// Common precoder and per-user private precoders, each N_BS x N.
struct BeamformerSet {
    CMat U_common;
    std::vector<CMat> U_private;

    static BeamformerSet zeros(const ScenarioConfig& cfg) {
        const auto nb = static_cast<Eigen::Index>(cfg.N_BS);
        const auto n = static_cast<Eigen::Index>(cfg.N());
        BeamformerSet b;
        b.U_common = CMat::Zero(nb, n);
        b.U_private.assign(cfg.K, CMat::Zero(nb, n));
        return b;
    }

    [[nodiscard]] double total_power() const {
        double p = U_common.squaredNorm();
        for (const auto& u : U_private) p += u.squaredNorm();
        return p;
    }

    BeamformerSet& operator*=(double c) {
        U_common *= c;
        for (auto& u : U_private) u *= c;
        return *this;
    }
};

/// Decision variables of the joint problem.
struct DesignPoint {
    BeamformerSet beams;
    RisPhase ris;
    RVec z; // common-rate shares
};

} // namespace risrsma
