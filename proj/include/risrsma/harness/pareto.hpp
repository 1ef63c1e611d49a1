#pragma once

// Latency / energy-efficiency trade-off over the weight alpha.

#include "risrsma/ao.hpp"

#include <algorithm>
#include <map>
#include <vector>

namespace risrsma::harness {

struct ParetoPoint {
    double alpha = 0.0;
    double mean_delay = 0.0; // mean over drops of the min-max delay
    double mean_ee = 0.0;    // mean over drops of the max-min EE
    std::vector<double> delays;
    std::vector<double> ees;
};

/// Solves every drop at every alpha and averages. Interior weights are
/// solved first; the alpha = 1 and alpha = 0 endpoints then take all other
/// designs of the same drop as warm-start candidates, so each endpoint
/// dominates the set on its own metric drop by drop.
inline std::vector<ParetoPoint> pareto_region(const ScenarioConfig& cfg, const std::vector<ChannelDrop>& drops,
                                              const VariantSpec& variant, const std::vector<double>& alpha_grid,
                                              AoOptions options = {}) {
    if (alpha_grid.empty()) throw ModelError("pareto_region: empty alpha grid");
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
        if (!(alpha_grid[i] >= 0.0 && alpha_grid[i] <= 1.0)) throw ModelError("pareto_region: alpha outside [0,1]");
        if (i && !(alpha_grid[i] > alpha_grid[i - 1])) throw ModelError("pareto_region: alpha grid must ascend");
    }
    const std::size_t A = alpha_grid.size();
    std::vector<ParetoPoint> pts(A);
    for (std::size_t a = 0; a < A; ++a) pts[a].alpha = alpha_grid[a];

    std::vector<std::size_t> order;
    for (std::size_t a = 0; a < A; ++a)
        if (alpha_grid[a] > 0.0 && alpha_grid[a] < 1.0) order.push_back(a);
    for (std::size_t a = 0; a < A; ++a)
        if (alpha_grid[a] == 1.0) order.push_back(a);
    for (std::size_t a = 0; a < A; ++a)
        if (alpha_grid[a] == 0.0) order.push_back(a);

    const std::uint64_t base_seed = options.seed;
    for (std::size_t d = 0; d < drops.size(); ++d) {
        options.seed = base_seed + d;
        std::map<std::size_t, SolveTrace> res;
        auto others = [&](std::size_t self) {
            std::vector<DesignPoint> c;
            for (const auto& [a, t] : res)
                if (a != self) c.push_back(t.final_design);
            return c;
        };
        for (std::size_t a : order) {
            ScenarioConfig c = cfg;
            c.alpha = alpha_grid[a];
            const bool endpoint = c.alpha == 0.0 || c.alpha == 1.0;
            res[a] = ao_solve(c, drops[d], variant, options, endpoint ? others(a) : std::vector<DesignPoint>{});
        }
        // alpha = 1 was solved before alpha = 0 existed; offer that design too.
        for (std::size_t a = 0; a < A; ++a) {
            if (alpha_grid[a] != 1.0) continue;
            for (std::size_t b = 0; b < A; ++b) {
                if (alpha_grid[b] != 0.0) continue;
                ScenarioConfig c = cfg;
                c.alpha = 1.0;
                std::mt19937_64 rng(options.seed);
                const RisPhase fixed = initialize(c, drops[d], variant, rng).ris;
                res[a] = ao_improve(c, drops[d], variant, options, res[a], {res[b].final_design}, fixed);
            }
        }
        for (std::size_t a = 0; a < A; ++a) {
            pts[a].delays.push_back(res[a].final_metrics.max_delay());
            pts[a].ees.push_back(res[a].final_metrics.min_ee());
        }
    }
    for (auto& p : pts) {
        double sd = 0.0, se = 0.0;
        for (double v : p.delays) sd += v;
        for (double v : p.ees) se += v;
        p.mean_delay = sd / static_cast<double>(p.delays.size());
        p.mean_ee = se / static_cast<double>(p.ees.size());
    }
    return pts;
}

/// Keeps the points that no other point dominates (lower or equal delay and
/// higher or equal EE, strictly better in one). Output is sorted by delay.
inline std::vector<ParetoPoint> pareto_filter(const std::vector<ParetoPoint>& pts) {
    std::vector<ParetoPoint> out;
    for (const auto& p : pts) {
        const bool dominated = std::any_of(pts.begin(), pts.end(), [&](const ParetoPoint& q) {
            return q.mean_delay <= p.mean_delay && q.mean_ee >= p.mean_ee &&
                   (q.mean_delay < p.mean_delay || q.mean_ee > p.mean_ee);
        });
        if (!dominated) out.push_back(p);
    }
    std::sort(out.begin(), out.end(),
              [](const ParetoPoint& a, const ParetoPoint& b) { return a.mean_delay < b.mean_delay; });
    return out;
}

} // namespace risrsma::harness
