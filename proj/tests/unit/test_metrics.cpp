#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

using namespace risrsma;

namespace {

// Extended-precision Q via erfcl and bisection for its inverse.
long double q_ld(long double x) { return 0.5L * std::erfc(x / std::sqrt(2.0L)); }

long double inverse_q_bisect(long double p) {
    long double lo = -40.0L, hi = 40.0L;
    for (int i = 0; i < 200; ++i) {
        const long double mid = 0.5L * (lo + hi);
        if (q_ld(mid) > p) lo = mid;
        else hi = mid;
    }
    return 0.5L * (lo + hi);
}

using LCMat = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;

LCMat widen(const CMat& a) { return a.cast<std::complex<long double>>(); }

// Rate by determinant and explicit inverse in long double.
long double dense_rate(const CMat& w, const CMat& s, double qinv, double n) {
    const LCMat W = widen(w), S = widen(s);
    const LCMat D = W + S;
    const long double logdet = std::log(std::abs(D.determinant())) - std::log(std::abs(W.determinant()));
    const long double tr = (S * D.inverse()).trace().real();
    return logdet - static_cast<long double>(qinv) * std::sqrt(2.0L * tr / n);
}

MetricsReport reference_report(const ScenarioConfig& cfg, const ChannelDrop& drop, const DesignPoint& dp) {
    MetricsReport r;
    const auto K = static_cast<Index>(cfg.K);
    r.r_c_per_user.resize(K);
    r.r_p.resize(K);
    r.p.resize(K);
    const auto nu = static_cast<Index>(cfg.N_u);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const CMat h = effective_channel(drop, dp.ris, k);
        CMat all = CMat::Zero(nu, nu);
        for (const auto& u : dp.beams.U_private) all += h * u * u.adjoint() * h.adjoint();
        const CMat noise = cfg.sigma2 * CMat::Identity(nu, nu);
        const CMat sc = h * dp.beams.U_common * dp.beams.U_common.adjoint() * h.adjoint();
        const CMat sk = h * dp.beams.U_private[k] * dp.beams.U_private[k].adjoint() * h.adjoint();
        const auto i = static_cast<Index>(k);
        r.r_c_per_user(i) = static_cast<double>(dense_rate(noise + all, sc, inverse_q(cfg.eps_c), cfg.n_c));
        r.r_p(i) = static_cast<double>(dense_rate(noise + all - sk, sk, inverse_q(cfg.eps_p), cfg.n_p));
        double trp = 0.0, trc = 0.0;
        for (Index a = 0; a < dp.beams.U_private[k].size(); ++a) trp += std::norm(dp.beams.U_private[k](a));
        for (Index a = 0; a < dp.beams.U_common.size(); ++a) trc += std::norm(dp.beams.U_common(a));
        r.p(i) = cfg.P_s + cfg.eta * trp + cfg.eta / static_cast<double>(cfg.K) * trc;
    }
    return r;
}

} // namespace

TEST(InverseQ, MedianIsZero) { EXPECT_EQ(inverse_q(0.5), 0.0); }

TEST(InverseQ, MatchesBisectionOracle) {
    EXPECT_NEAR(inverse_q(1e-5), 4.26489, 1e-5);
    for (double p : {1e-12, 1e-9, 1e-7, 5e-6, 1e-5, 1e-3, 0.01, 0.02425, 0.1, 0.3, 0.49, 0.7, 0.95, 1 - 1e-6}) {
        const long double ref = inverse_q_bisect(p);
        EXPECT_NEAR(inverse_q(p), static_cast<double>(ref), 1e-9) << "p=" << p;
    }
    const double x = inverse_q(5e-6);
    EXPECT_LE(std::abs(q_function(x) - 5e-6) / 5e-6, 1e-6);
}

TEST(InverseQ, Antisymmetric) {
    for (double p : {1e-8, 1e-3, 0.2, 0.45}) EXPECT_NEAR(inverse_q(1.0 - p), -inverse_q(p), 1e-9);
}

TEST(InverseQ, RejectsOutOfRange) {
    for (double p : {0.0, 1.0, -0.1, 1.5, std::numeric_limits<double>::quiet_NaN()})
        EXPECT_THROW(inverse_q(p), DomainError);
}

namespace {

ScenarioConfig scalar_config(std::size_t K) {
    auto c = fx::small_config(K, 1, 1, 0);
    c.sigma2 = 1.0;
    return c;
}

ChannelDrop scalar_drop(const std::vector<double>& gains) {
    ChannelDrop d;
    d.G = CMat::Zero(0, 1);
    for (double g : gains) {
        d.F.push_back(CMat::Constant(1, 1, g));
        d.G_list.push_back(CMat::Zero(1, 0));
    }
    return d;
}

} // namespace

TEST(FblRate, ZeroCommonBeamGivesZeroRate) {
    std::mt19937_64 rng(1);
    const auto cfg = fx::small_config();
    const auto drop = fx::random_drop(cfg, rng);
    auto b = fx::random_beams(cfg, rng, 2.0, false);
    EXPECT_EQ(common_rate_fbl(cfg, drop, fx::random_phase(cfg.M, rng), b, 0), 0.0);
    b.U_private[1].setZero();
    EXPECT_EQ(private_rate_fbl(cfg, drop, fx::random_phase(cfg.M, rng), b, 1), 0.0);
}

TEST(FblRate, ScalarCommonClosedForm) {
    const auto cfg = scalar_config(1);
    const auto drop = scalar_drop({1.0});
    BeamformerSet b = BeamformerSet::zeros(cfg);
    b.U_common(0, 0) = 1.0;
    const double expected = std::log(2.0) - inverse_q(5e-6) / 16.0;
    EXPECT_NEAR(common_rate_fbl(cfg, drop, RisPhase::zeros(0), b, 0), expected, 1e-12);
    EXPECT_NEAR(expected, 0.4171, 1e-4);
}

TEST(FblRate, ScalarPrivateClosedForm) {
    const auto cfg = scalar_config(1);
    const auto drop = scalar_drop({1.0});
    BeamformerSet b = BeamformerSet::zeros(cfg);
    b.U_private[0](0, 0) = 1.0;
    EXPECT_NEAR(private_rate_fbl(cfg, drop, RisPhase::zeros(0), b, 0), std::log(2.0) - inverse_q(5e-6) / 16.0,
                1e-12);
}

TEST(FblRate, TwoUserScalarWithInterference) {
    const auto cfg = scalar_config(2);
    const auto drop = scalar_drop({0.8, 1.3});
    BeamformerSet b = BeamformerSet::zeros(cfg);
    b.U_common(0, 0) = 0.9;
    b.U_private[0](0, 0) = cplx(0.6, 0.2);
    b.U_private[1](0, 0) = cplx(-0.4, 0.7);
    const long double qc = inverse_q_bisect(cfg.eps_c), qp = inverse_q_bisect(cfg.eps_p);
    for (std::size_t k = 0; k < 2; ++k) {
        const long double h2 = std::pow(static_cast<long double>(std::abs(drop.F[k](0, 0))), 2);
        const long double sc = h2 * std::norm(b.U_common(0, 0));
        const long double s0 = h2 * std::norm(b.U_private[0](0, 0)), s1 = h2 * std::norm(b.U_private[1](0, 0));
        const long double sk = k == 0 ? s0 : s1, other = k == 0 ? s1 : s0;
        const long double rc = std::log1p(sc / (1 + s0 + s1)) - qc * std::sqrt(2 * sc / (1 + sc + s0 + s1) / 256.0L);
        const long double rp = std::log1p(sk / (1 + other)) - qp * std::sqrt(2 * sk / (1 + s0 + s1) / 256.0L);
        EXPECT_NEAR(common_rate_fbl(cfg, drop, RisPhase::zeros(0), b, k), static_cast<double>(rc), 1e-12);
        EXPECT_NEAR(private_rate_fbl(cfg, drop, RisPhase::zeros(0), b, k), static_cast<double>(rp), 1e-12);
    }
}

TEST(FblRate, DispersionGapVanishesAsInverseSquareRoot) {
    // gap(n) = Q^{-1}(eps) sqrt(2 Tr / n): gap * sqrt(n) is constant in n and
    // at n = 1e12 the gap is at most 1e-6 * Q^{-1}(eps) * sqrt(2 N).
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        auto cfg = fx::small_config(3, 2, 2, 4);
        const auto drop = fx::random_drop(cfg, rng);
        const auto ris = fx::random_phase(cfg.M, rng);
        const auto b = fx::random_beams(cfg, rng, cfg.P);
        const double bound = 1e-6 * inverse_q(cfg.eps_p) * std::sqrt(2.0 * static_cast<double>(cfg.N()));
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const auto x = received_matrices(effective_channel(drop, ris, k), b);
            const double lc = risrsma::detail::common_rate_from_received(x, cfg.sigma2, 0.0, 1.0);
            const double lp = risrsma::detail::private_rate_from_received(x, k, cfg.sigma2, 0.0, 1.0);
            std::vector<double> sc, sp;
            for (double n : {1e4, 1e8, 1e12}) {
                cfg.n_c = cfg.n_p = n;
                const double gc = lc - common_rate_fbl(cfg, drop, ris, b, k);
                const double gp = lp - private_rate_fbl(cfg, drop, ris, b, k);
                EXPECT_GE(gc, 0.0);
                EXPECT_GE(gp, 0.0);
                if (n == 1e12) {
                    EXPECT_LE(gc, bound);
                    EXPECT_LE(gp, bound);
                }
                sc.push_back(gc * std::sqrt(n));
                sp.push_back(gp * std::sqrt(n));
            }
            EXPECT_NEAR(sc[0], sc[1], 1e-8 * std::max(1.0, sc[0]) + 1e-16 * 1e4);
            EXPECT_NEAR(sp[0], sp[1], 1e-8 * std::max(1.0, sp[0]) + 1e-16 * 1e4);
            // At 1e12 the difference of two O(1) rates carries ~1e-16 absolute error.
            EXPECT_NEAR(sc[0], sc[2], 1e-3 * std::max(1.0, sc[0]));
            EXPECT_NEAR(sp[0], sp[2], 1e-3 * std::max(1.0, sp[0]));
        }
    }
}

TEST(FblRate, MatchesDenseExtendedPrecisionOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const auto cfg = fx::small_config(3, 3, 2, 4);
        const auto drop = fx::random_drop(cfg, rng);
        auto dp = fx::random_design(cfg, rng);
        const auto ref = reference_report(cfg, drop, dp);
        const auto rep = metrics_report(cfg, drop, dp);
        for (Index k = 0; k < 3; ++k) {
            EXPECT_NEAR(rep.r_c_per_user(k), ref.r_c_per_user(k), 1e-10);
            EXPECT_NEAR(rep.r_p(k), ref.r_p(k), 1e-10);
            EXPECT_NEAR(rep.p(k), ref.p(k), 1e-12);
        }
    }
}

TEST(FblRate, MonotoneInBlocklengthAndReliability) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto cfg = fx::small_config();
        const auto drop = fx::random_drop(cfg, rng);
        const auto ris = fx::random_phase(cfg.M, rng);
        const auto b = fx::random_beams(cfg, rng, cfg.P);
        double prev_c = -1e300, prev_p = -1e300;
        for (double n : {16.0, 64.0, 256.0, 1024.0, 1e5}) {
            cfg.n_c = cfg.n_p = n;
            const double rc = common_rate_fbl(cfg, drop, ris, b, 0), rp = private_rate_fbl(cfg, drop, ris, b, 0);
            EXPECT_GE(rc, prev_c);
            EXPECT_GE(rp, prev_p);
            prev_c = rc;
            prev_p = rp;
        }
        cfg.n_c = cfg.n_p = 256;
        prev_c = prev_p = 1e300;
        for (double eps : {0.4, 0.1, 1e-3, 1e-6, 1e-10}) {
            cfg.eps_c = cfg.eps_p = eps;
            const double rc = common_rate_fbl(cfg, drop, ris, b, 1), rp = private_rate_fbl(cfg, drop, ris, b, 1);
            EXPECT_LE(rc, prev_c);
            EXPECT_LE(rp, prev_p);
            prev_c = rc;
            prev_p = rp;
        }
    }
}

TEST(FblRate, ShrinkingCommonBeamNeverIncreasesLogDet) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uc(0.01, 0.99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto cfg = fx::small_config();
        const auto drop = fx::random_drop(cfg, rng);
        const auto ris = fx::random_phase(cfg.M, rng);
        auto b = fx::random_beams(cfg, rng, cfg.P);
        const auto logdet = [&](const BeamformerSet& bb) {
            const auto x = received_matrices(effective_channel(drop, ris, 0), bb);
            return risrsma::detail::common_rate_from_received(x, cfg.sigma2, 0.0, 1.0);
        };
        const double before = logdet(b);
        b.U_common *= uc(rng);
        EXPECT_LE(logdet(b), before + 1e-12);
    }
}

TEST(ReliabilitySplit, EqualSplit) {
    auto [ec, ep] = reliability_split(1e-5);
    EXPECT_DOUBLE_EQ(ec, 5e-6);
    EXPECT_DOUBLE_EQ(ep, 5e-6);
    EXPECT_NEAR(combined_error(ec, ep), 1e-5 - 2.5e-11, 1e-20);
    EXPECT_LE(combined_error(ec, ep), 1e-5);
    std::tie(ec, ep) = reliability_split(0.2);
    EXPECT_DOUBLE_EQ(ec, 0.1);
    EXPECT_DOUBLE_EQ(ep, 0.1);
    EXPECT_THROW(reliability_split(0.5), DomainError);
    EXPECT_THROW(reliability_split(0.0), DomainError);
}

TEST(PowerConsumption, StaticAndArithmeticCases) {
    auto cfg = fx::small_config(2, 1, 1, 0);
    cfg.P_s = 1.0;
    cfg.eta = 2.0;
    BeamformerSet b = BeamformerSet::zeros(cfg);
    EXPECT_DOUBLE_EQ(power_consumption(cfg, b, 0), 1.0);
    b.U_private[0](0, 0) = std::sqrt(0.5);
    b.U_common(0, 0) = 1.0;
    EXPECT_NEAR(power_consumption(cfg, b, 0), 3.0, 1e-14);
}

TEST(PowerConsumption, MatchesEntrywiseSum) {
    std::mt19937_64 rng(6);
    const auto cfg = fx::small_config(3, 3, 2, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto b = fx::random_beams(cfg, rng, 3.0);
        for (std::size_t k = 0; k < cfg.K; ++k) {
            double tp = 0.0, tc = 0.0;
            for (Index c = 0; c < b.U_common.cols(); ++c)
                for (Index r = 0; r < b.U_common.rows(); ++r) {
                    tp += b.U_private[k](r, c).real() * b.U_private[k](r, c).real() +
                          b.U_private[k](r, c).imag() * b.U_private[k](r, c).imag();
                    tc += b.U_common(r, c).real() * b.U_common(r, c).real() +
                          b.U_common(r, c).imag() * b.U_common(r, c).imag();
                }
            EXPECT_NEAR(power_consumption(cfg, b, k), cfg.P_s + cfg.eta * tp + cfg.eta / 3.0 * tc, 1e-12);
            EXPECT_GE(power_consumption(cfg, b, k), cfg.P_s);
        }
    }
}

TEST(Objective, WeightedExamples) {
    auto cfg = fx::small_config(2, 1, 1, 0);
    MetricsReport rep;
    rep.r_p = RVec(2);
    rep.p = RVec(2);
    // d = l / r, e = r / p: pick l so that delays are {2, 5} and EEs {1, 0.5}.
    cfg.l = {2.0 * 3.0, 5.0 * 1.0};
    rep.r_p << 3.0, 1.0;
    rep.p << 3.0, 2.0;
    cfg.alpha = 1.0;
    finish_report(cfg, RVec::Zero(2), rep);
    EXPECT_DOUBLE_EQ(rep.objective, 5.0);
    cfg.alpha = 0.5;
    finish_report(cfg, RVec::Zero(2), rep);
    EXPECT_DOUBLE_EQ(rep.objective, 2.25);
}

TEST(Objective, NegativeRateClampsAndGivesInfiniteDelay) {
    auto cfg = fx::small_config(2, 1, 1, 0);
    MetricsReport rep;
    rep.r_p = RVec(2);
    rep.p = RVec::Constant(2, 1.0);
    rep.r_p << -0.2, 1.0;
    finish_report(cfg, RVec::Zero(2), rep);
    EXPECT_EQ(rep.ee(0), 0.0);
    EXPECT_TRUE(std::isinf(rep.delay(0)));
    EXPECT_TRUE(std::isinf(rep.objective));
    EXPECT_DOUBLE_EQ(rep.r_total(0), -0.2);
    cfg.alpha = 0.0;
    finish_report(cfg, RVec::Zero(2), rep);
    EXPECT_DOUBLE_EQ(rep.objective, 0.0);
}

TEST(Objective, RecomposesFromIndependentRates) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        auto cfg = fx::small_config(3, 2, 2, 3);
        std::uniform_real_distribution<double> ua(0.0, 1.0);
        cfg.alpha = ua(rng);
        const auto drop = fx::random_drop(cfg, rng);
        auto dp = fx::random_design(cfg, rng);
        auto ref = reference_report(cfg, drop, dp);
        const double cap = std::max(0.0, ref.r_c_per_user.minCoeff());
        dp.z = RVec::Constant(3, cap / 3.0);
        const auto rep = metrics_report(cfg, drop, dp);
        double dmax = 0.0, emin = 1e300;
        for (Index k = 0; k < 3; ++k) {
            const double r = std::max(0.0, dp.z(k) + ref.r_p(k));
            EXPECT_EQ(rep.r_total(k), dp.z(k) + rep.r_p(k));
            dmax = std::max(dmax, cfg.l[static_cast<std::size_t>(k)] / r);
            emin = std::min(emin, r / ref.p(k));
        }
        const double expected = cfg.alpha * dmax - (1.0 - cfg.alpha) * emin;
        if (std::isinf(expected)) EXPECT_EQ(rep.objective, expected);
        else EXPECT_NEAR(rep.objective, expected, 1e-9 * std::max(1.0, dmax));
    }
}

TEST(Objective, EnergyPowerDelayProductIsMessageLength) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto cfg = fx::small_config(3, 2, 2, 3);
        const auto drop = fx::random_drop(cfg, rng);
        const auto dp = fx::random_design(cfg, rng);
        const auto rep = metrics_report(cfg, drop, dp);
        for (Index k = 0; k < 3; ++k)
            if (rep.r_total(k) > 0.0)
                EXPECT_NEAR(rep.ee(k) * rep.p(k) * rep.delay(k), cfg.l[static_cast<std::size_t>(k)], 1e-9);
    }
}
