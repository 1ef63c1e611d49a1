#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace risrsma;

TEST(EffectiveChannel, ZeroReflectionGivesDirectLink) {
    std::mt19937_64 rng(1);
    const auto cfg = fx::small_config();
    const auto drop = fx::random_drop(cfg, rng);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const CMat h = effective_channel(drop, RisPhase::zeros(cfg.M), k);
        EXPECT_EQ((h - drop.F[k]).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(EffectiveChannel, ScalarArithmetic) {
    ChannelDrop d;
    d.F = {CMat::Constant(1, 1, 1.0)};
    d.G_list = {CMat::Constant(1, 1, 3.0)};
    d.G = CMat::Constant(1, 1, 2.0);
    RisPhase r = RisPhase::zeros(1);
    r.psi(0) = cplx(0.0, 0.5);
    const CMat h = effective_channel(d, r, 0);
    EXPECT_NEAR(std::abs(h(0, 0) - cplx(1.0, 3.0)), 0.0, 1e-15);
}

TEST(EffectiveChannel, MatchesDenseDiagonalProduct) {
    std::mt19937_64 rng(2);
    const auto cfg = fx::small_config(2, 2, 2, 3);
    const auto drop = fx::random_drop(cfg, rng);
    const auto ris = fx::random_phase(3, rng, false);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        CMat psi = CMat::Zero(3, 3);
        for (Index m = 0; m < 3; ++m) psi(m, m) = ris.psi(m);
        const CMat ref = drop.G_list[k] * psi * drop.G + drop.F[k];
        EXPECT_LT((effective_channel(drop, ris, k) - ref).norm(), 1e-13 * ref.norm());
    }
}

TEST(EffectiveChannel, LinearInPsi) {
    std::mt19937_64 rng(3);
    const auto cfg = fx::small_config(2, 3, 2, 5);
    const auto drop = fx::random_drop(cfg, rng);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p1 = fx::random_phase(5, rng, false), p2 = fx::random_phase(5, rng, false);
        const double a = u(rng), b = u(rng);
        RisPhase mix{a * p1.psi + b * p2.psi};
        for (std::size_t k = 0; k < cfg.K; ++k) {
            const CMat f = drop.F[k];
            const CMat lhs = effective_channel(drop, mix, k) - f;
            const CMat rhs = a * (effective_channel(drop, p1, k) - f) + b * (effective_channel(drop, p2, k) - f);
            EXPECT_LE((lhs - rhs).norm(), 1e-10 * std::max(1.0, rhs.norm()));
        }
    }
}

TEST(EffectiveChannel, NoRisIsBitIdenticalToDirectLink) {
    std::mt19937_64 rng(4);
    const auto cfg = fx::small_config(3, 2, 2, 0);
    const auto drop = fx::random_drop(cfg, rng);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const CMat h = effective_channel(drop, RisPhase::zeros(0), k);
        ASSERT_EQ(h.size(), drop.F[k].size());
        EXPECT_EQ(std::memcmp(h.data(), drop.F[k].data(), sizeof(cplx) * static_cast<std::size_t>(h.size())), 0);
    }
}

TEST(EffectiveChannel, ShapeMismatchThrows) {
    std::mt19937_64 rng(5);
    const auto cfg = fx::small_config(2, 2, 2, 3);
    const auto drop = fx::random_drop(cfg, rng);
    EXPECT_THROW(effective_channel(drop, RisPhase::zeros(2), 0), ModelError);
    EXPECT_THROW(effective_channel(drop, RisPhase::zeros(3), 5), ModelError);
}

TEST(ScenarioConfigCheck, RejectsOutOfDomainValues) {
    auto c = fx::small_config();
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.N(), 2u);
    c.N_u = 1;
    EXPECT_EQ(c.N(), 1u);
    auto bad = fx::small_config();
    bad.eps_p = 0.5;
    EXPECT_THROW(bad.validate(), ModelError);
    bad = fx::small_config();
    bad.P = 0.0;
    EXPECT_THROW(bad.validate(), ModelError);
    bad = fx::small_config();
    bad.l.pop_back();
    EXPECT_THROW(bad.validate(), ModelError);
    bad = fx::small_config();
    bad.n_c = 0.5;
    EXPECT_THROW(bad.validate(), ModelError);
}

TEST(ChannelDropCheck, RejectsNonFiniteEntries) {
    std::mt19937_64 rng(6);
    const auto cfg = fx::small_config();
    auto drop = fx::random_drop(cfg, rng);
    EXPECT_NO_THROW(drop.validate(cfg));
    drop.F[1](0, 0) = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
    EXPECT_THROW(drop.validate(cfg), ModelError);
}

TEST(ValidateDesign, AllZeroDesignIsFeasibleWithFullPowerSlack) {
    std::mt19937_64 rng(7);
    const auto cfg = fx::small_config();
    const auto drop = fx::random_drop(cfg, rng);
    DesignPoint dp{BeamformerSet::zeros(cfg), RisPhase::zeros(cfg.M), RVec::Zero(2)};
    const auto rep = validate_design(cfg, drop, dp);
    EXPECT_TRUE(rep.feasible);
    EXPECT_DOUBLE_EQ(rep.power_slack, cfg.P);
}

TEST(ValidateDesign, DoublePowerIsInfeasible) {
    std::mt19937_64 rng(8);
    const auto cfg = fx::small_config();
    const auto drop = fx::random_drop(cfg, rng);
    DesignPoint dp = fx::random_design(cfg, rng);
    dp.beams *= std::sqrt(2.0 * cfg.P / dp.beams.total_power());
    const auto rep = validate_design(cfg, drop, dp);
    EXPECT_FALSE(rep.feasible);
    EXPECT_NEAR(rep.power_slack, -cfg.P, 1e-12);
}

TEST(ValidateDesign, ShareAboveCommonRateViolatesCap) {
    std::mt19937_64 rng(9);
    const auto cfg = fx::small_config();
    const auto drop = fx::random_drop(cfg, rng);
    DesignPoint dp = fx::random_design(cfg, rng);
    double rc = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cfg.K; ++k) rc = std::min(rc, common_rate_fbl(cfg, drop, dp.ris, dp.beams, k));
    ASSERT_GT(rc, 0.0);
    dp.z(0) = rc * 1.01;
    const auto rep = validate_design(cfg, drop, dp);
    EXPECT_FALSE(rep.feasible);
    EXPECT_LT(rep.cap_slack, 0.0);
    dp.z(0) = rc * 0.99;
    EXPECT_TRUE(validate_design(cfg, drop, dp).feasible);
}

TEST(ValidateDesign, RisMagnitudeAndNegativeShares) {
    std::mt19937_64 rng(10);
    const auto cfg = fx::small_config();
    const auto drop = fx::random_drop(cfg, rng);
    DesignPoint dp = fx::random_design(cfg, rng);
    dp.ris.psi(1) = cplx(1.0 + 1e-6, 0.0);
    EXPECT_FALSE(validate_design(cfg, drop, dp).feasible);
    dp.ris.psi(1) = cplx(1.0 + 1e-10, 0.0);
    EXPECT_TRUE(validate_design(cfg, drop, dp).feasible);
    dp.z(1) = -1e-3;
    EXPECT_FALSE(validate_design(cfg, drop, dp).feasible);
}

TEST(ValidateDesign, PowerSlackMonotoneUnderScaling) {
    std::mt19937_64 rng(11);
    const auto cfg = fx::small_config();
    const auto drop = fx::random_drop(cfg, rng);
    std::uniform_real_distribution<double> uc(1.0, 3.0);
    for (int trial = 0; trial < 30; ++trial) {
        DesignPoint dp = fx::random_design(cfg, rng);
        const double before = validate_design(cfg, drop, dp).power_slack;
        dp.beams *= uc(rng);
        EXPECT_LE(validate_design(cfg, drop, dp).power_slack, before);
    }
}
