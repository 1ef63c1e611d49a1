#include "fixtures.hpp"

#include "risrsma/ao.hpp"

#include <gtest/gtest.h>

using namespace risrsma;

namespace {

const VariantSpec kRisRsma = VariantSpec::parse("RIS-RSMA");
const VariantSpec kRisSdma = VariantSpec::parse("RIS-SDMA");
const VariantSpec kNoRisRsma = VariantSpec::parse("NoRIS-RSMA");
const VariantSpec kNoRisSdma = VariantSpec::parse("NoRIS-SDMA");

AoOptions quick(std::uint64_t seed) {
    AoOptions o;
    o.seed = seed;
    o.max_iter = 30;
    return o;
}

} // namespace

TEST(Variant, NamesRoundTrip) {
    for (const char* n : {"RIS-RSMA", "RIS-SDMA", "NoRIS-RSMA", "NoRIS-SDMA", "RandRIS-RSMA", "RandRIS-SDMA"})
        EXPECT_EQ(VariantSpec::parse(n).name(), n);
    EXPECT_THROW(VariantSpec::parse("RIS"), ModelError);
    EXPECT_THROW(VariantSpec::parse("IRS-RSMA"), ModelError);
    EXPECT_THROW(VariantSpec::parse("RIS-NOMA"), ModelError);
}

TEST(Initialize, FeasibleWithExpectedStructure) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const auto cfg = fx::small_config(1 + trial % 4, 1 + trial % 3, 1 + trial % 2, trial % 5);
        const auto drop = fx::random_drop(cfg, rng);
        for (const auto& v : {kRisRsma, kRisSdma, kNoRisRsma, kNoRisSdma, VariantSpec::parse("RandRIS-SDMA")}) {
            const auto dp = initialize(cfg, drop, v, rng);
            const auto vc = variant_config(cfg, v);
            EXPECT_TRUE(validate_design(vc, variant_drop(drop, v), dp).feasible);
            EXPECT_NEAR(dp.beams.total_power(), 0.9 * cfg.P, 1e-9 * cfg.P);
            EXPECT_EQ(dp.z.norm(), 0.0);
            if (!v.rsma()) {
                EXPECT_EQ(dp.beams.U_common.norm(), 0.0);
            } else {
                EXPECT_GT(dp.beams.U_common.norm(), 0.0);
            }
            if (v.ris == RisMode::Absent) {
                EXPECT_EQ(dp.ris.size(), 0u);
            } else {
                ASSERT_EQ(dp.ris.size(), cfg.M);
                for (Index e = 0; e < dp.ris.psi.size(); ++e) EXPECT_NEAR(std::abs(dp.ris.psi(e)), 1.0, 1e-12);
            }
        }
    }
}

TEST(LambdaUpdate, ZeroRateGivesZeroWeight) {
    std::mt19937_64 rng(2);
    const auto cfg = fx::small_config();
    const auto drop = fx::random_drop(cfg, rng);
    DesignPoint dp{BeamformerSet::zeros(cfg), RisPhase::zeros(cfg.M), RVec::Zero(2)};
    const RVec lam = lambda_update(cfg, drop, dp);
    EXPECT_EQ(lam.norm(), 0.0);
}

TEST(LambdaUpdate, MaximizesQuadraticTransform) {
    // For fixed (r, p), 2 lam sqrt(r) - lam^2 p peaks at lam = sqrt(r)/p with value r/p.
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const auto cfg = fx::small_config(3, 2, 2, 2);
        const auto drop = fx::random_drop(cfg, rng);
        const auto dp = fx::random_design(cfg, rng);
        const auto rep = metrics_report(cfg, drop, dp);
        const RVec lam = lambda_update(cfg, drop, dp);
        for (Index k = 0; k < 3; ++k) {
            const double r = std::max(rep.r_total(k), 0.0), p = rep.p(k);
            auto f = [&](double l) { return 2.0 * l * std::sqrt(r) - l * l * p; };
            EXPECT_NEAR(f(lam(k)), r / p, 1e-12 * std::max(1.0, r / p));
            EXPECT_GE(f(lam(k)), f(lam(k) * 1.01) - 1e-15);
            EXPECT_GE(f(lam(k)), f(lam(k) * 0.99) - 1e-15);
        }
    }
    // Scalar case: r = 4, p = 2 gives lam = 1.
    const double r = 4.0, p = 2.0;
    EXPECT_DOUBLE_EQ(std::sqrt(r) / p, 1.0);
}

TEST(AdaptDesign, MapsAcrossVariants) {
    std::mt19937_64 rng(4);
    auto cfg = fx::small_config(2, 2, 2, 5);
    auto small = cfg;
    small.M = 3;
    auto dp = fx::random_design(small, rng);
    dp.z << 0.1, 0.2;
    const auto fixed = fx::random_phase(5, rng);
    const auto grown = adapt_design(cfg, kRisRsma, dp, fixed);
    ASSERT_EQ(grown.ris.size(), 5u);
    EXPECT_EQ(grown.ris.psi.head(3), dp.ris.psi);
    EXPECT_EQ(grown.ris.psi.tail(2).norm(), 0.0);
    EXPECT_EQ(grown.z, dp.z);
    const auto sdma = adapt_design(cfg, kRisSdma, dp, fixed);
    EXPECT_EQ(sdma.beams.U_common.norm(), 0.0);
    EXPECT_EQ(sdma.z.norm(), 0.0);
    EXPECT_EQ(adapt_design(cfg, kNoRisSdma, dp, fixed).ris.size(), 0u);
    EXPECT_EQ(adapt_design(cfg, VariantSpec::parse("RandRIS-RSMA"), dp, fixed).ris.psi, fixed.psi);
}

TEST(AoSolve, TraceIsMonotoneAndFeasible) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 12; ++trial) {
        auto cfg = fx::small_config(2 + trial % 2, 2, 2, 4);
        cfg.alpha = std::array{1.0, 0.5, 0.0}[trial % 3];
        const auto drop = fx::random_drop(cfg, rng);
        const auto& v = std::array{kRisRsma, kRisSdma, kNoRisRsma, kNoRisSdma}[trial % 4];
        const auto tr = ao_solve(cfg, drop, v, quick(static_cast<std::uint64_t>(trial)));
        double prev = tr.initial_objective;
        for (const auto& it : tr.iterations) {
            EXPECT_LE(it.objective, prev);
            prev = it.objective;
        }
        EXPECT_LE(tr.final_objective(), tr.initial_objective);
        const auto vc = variant_config(cfg, v);
        const auto vd = variant_drop(drop, v);
        EXPECT_TRUE(validate_design(vc, vd, tr.final_design).feasible);
        EXPECT_NEAR(true_objective(vc, vd, tr.final_design), tr.final_objective(),
                    1e-12 * std::max(1.0, std::abs(tr.final_objective())));
    }
}

TEST(AoSolve, FixedSeedIsReproducible) {
    std::mt19937_64 rng(6);
    const auto cfg = fx::small_config(3, 2, 2, 4);
    const auto drop = fx::random_drop(cfg, rng);
    const auto a = ao_solve(cfg, drop, kRisRsma, quick(7));
    const auto b = ao_solve(cfg, drop, kRisRsma, quick(7));
    EXPECT_EQ(a.final_objective(), b.final_objective());
    EXPECT_EQ(a.iteration_count(), b.iteration_count());
    EXPECT_EQ(a.final_design.ris.psi, b.final_design.ris.psi);
}

TEST(AoSolve, AbsentRisMatchesZeroElementRis) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 4; ++trial) {
        const auto cfg = fx::small_config(3, 2, 2, 4);
        const auto drop = fx::random_drop(cfg, rng);
        auto bare = cfg;
        bare.M = 0;
        const auto bare_drop = variant_drop(drop, kNoRisRsma);
        const auto a = ao_solve(cfg, drop, kNoRisRsma, quick(3));
        const auto b = ao_solve(bare, bare_drop, kRisRsma, quick(3));
        EXPECT_NEAR(a.final_objective(), b.final_objective(), 1e-12 * a.final_objective());
    }
}

TEST(AoSolve, WarmStartNeverHurts) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 6; ++trial) {
        const auto cfg = fx::small_config(3, 2, 2, 3);
        const auto drop = fx::random_drop(cfg, rng);
        const auto sdma = ao_solve(cfg, drop, kNoRisSdma, quick(1));
        const auto cold = ao_solve(cfg, drop, kNoRisRsma, quick(1));
        const auto warm = ao_solve(cfg, drop, kNoRisRsma, quick(1), {sdma.final_design});
        EXPECT_LE(warm.final_objective(), cold.final_objective());
        // SDMA designs are feasible for RSMA, so the warm RSMA run dominates SDMA.
        EXPECT_LE(warm.final_objective(), sdma.final_objective() * (1.0 + 1e-12));
        EXPECT_GE(warm.starts, 1);
    }
}

TEST(AoSolve, ConvergedPointIsNearlyStationary) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 4; ++trial) {
        auto cfg = fx::small_config(2, 2, 2, 3);
        cfg.alpha = 1.0;
        const auto drop = fx::random_drop(cfg, rng);
        AoOptions o = quick(2);
        o.max_iter = 100;
        o.delta = 1e-6;
        const auto tr = ao_solve(cfg, drop, kRisRsma, o);
        if (!tr.converged()) continue;
        // Restarting from the converged design gains almost nothing.
        SolveTrace dummy;
        dummy.final_metrics.objective = std::numeric_limits<double>::infinity();
        const auto again = ao_improve(cfg, drop, kRisRsma, o, dummy, {tr.final_design}, RisPhase::zeros(cfg.M));
        EXPECT_LE(again.final_objective(), tr.final_objective());
        EXPECT_GE(again.final_objective(), tr.final_objective() * (1.0 - 1e-2));
    }
}

TEST(AoSolve, DeadUserYieldsInfiniteDelayWithoutThrowing) {
    std::mt19937_64 rng(10);
    auto cfg = fx::small_config(2, 2, 2, 2);
    cfg.alpha = 1.0;
    auto drop = fx::random_drop(cfg, rng);
    drop.F[1].setZero();
    drop.G_list[1].setZero();
    SolveTrace tr;
    ASSERT_NO_THROW(tr = ao_solve(cfg, drop, kRisRsma, quick(1)));
    EXPECT_TRUE(std::isinf(tr.final_objective()));
    EXPECT_FALSE(tr.converged());
}

TEST(AoSolve, PureEnergyEfficiencyIsFinite) {
    std::mt19937_64 rng(11);
    auto cfg = fx::small_config(2, 2, 2, 2);
    cfg.alpha = 0.0;
    const auto drop = fx::random_drop(cfg, rng);
    const auto tr = ao_solve(cfg, drop, kRisSdma, quick(1));
    ASSERT_TRUE(std::isfinite(tr.final_objective()));
    EXPECT_NEAR(tr.final_objective(), -tr.final_metrics.min_ee(), 1e-15);
    EXPECT_GT(tr.final_metrics.min_ee(), 0.0);
}
