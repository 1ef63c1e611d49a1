#pragma once

// Monte Carlo orchestration over sweep points, variants and drops.

#include "risrsma/harness/plan.hpp"
#include "risrsma/harness/results.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

namespace risrsma::harness {

/// Warm-start sources per variant. A variant is solved after its sources
/// so that their designs can seed it; only sources present in the plan are
/// used.
inline std::vector<VariantSpec> warm_start_sources(const VariantSpec& v) {
    const auto P = [](const char* s) { return VariantSpec::parse(s); };
    const std::string n = v.name();
    if (n == "NoRIS-RSMA") return {P("NoRIS-SDMA")};
    if (n == "RIS-SDMA") return {P("NoRIS-SDMA")};
    if (n == "RIS-RSMA") return {P("RIS-SDMA"), P("NoRIS-RSMA")};
    if (n == "RandRIS-SDMA") return {P("NoRIS-SDMA")};
    if (n == "RandRIS-RSMA") return {P("RandRIS-SDMA"), P("NoRIS-RSMA")};
    return {};
}

/// Orders variants so that every warm-start source comes first.
inline std::vector<VariantSpec> solve_order(const std::vector<VariantSpec>& variants) {
    static const char* const rank[] = {"NoRIS-SDMA", "NoRIS-RSMA", "RIS-SDMA", "RandRIS-SDMA", "RIS-RSMA",
                                       "RandRIS-RSMA"};
    std::vector<VariantSpec> out;
    for (const char* r : rank)
        for (const auto& v : variants)
            if (v.name() == r && std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    return out;
}

inline std::uint64_t drop_seed(std::uint64_t master, std::size_t d) { return substream_seed(master, kTagDrop, d); }
inline std::uint64_t ao_seed(std::uint64_t dseed) { return substream_seed(dseed, kTagInit); }

struct RunOutput {
    std::vector<std::string> axes;
    std::vector<ResultRow> rows;
    /// True-objective trace of drop 0 per (point, variant); the first entry
    /// is the objective of the starting design.
    std::map<std::pair<std::size_t, std::string>, std::vector<double>> traces;
};

namespace detail {

inline ResultRow make_row(const std::vector<double>& coords, const VariantSpec& v, std::uint64_t seed,
                          std::size_t d, const SolveTrace& t, double wall_ms) {
    ResultRow r;
    r.coords = coords;
    r.variant = v.name();
    r.seed = seed;
    r.drop = d;
    r.minmax_delay = t.final_metrics.max_delay();
    r.maxmin_ee = t.final_metrics.min_ee();
    r.objective = t.final_objective();
    r.iters = t.iteration_count();
    r.converged = t.converged();
    r.wall_ms = wall_ms;
    r.quantize();
    return r;
}

inline ResultRow failed_row(const std::vector<double>& coords, const VariantSpec& v, std::uint64_t seed,
                            std::size_t d) {
    ResultRow r;
    r.coords = coords;
    r.variant = v.name();
    r.seed = seed;
    r.drop = d;
    r.minmax_delay = std::numeric_limits<double>::infinity();
    r.maxmin_ee = 0.0;
    r.objective = std::numeric_limits<double>::infinity();
    r.iters = 0;
    r.converged = false;
    return r;
}

inline std::vector<double> objective_trace(const SolveTrace& t) {
    std::vector<double> v{t.initial_objective};
    for (const auto& it : t.iterations) v.push_back(it.objective);
    return v;
}

} // namespace detail

/// Runs every (point, variant, drop). Points that differ only in M are
/// solved together per drop, smallest M first, so that the previous M's
/// design can seed the next one. Work items are (point group, drop) pairs
/// distributed over plan.threads workers; rows are canonically sorted at
/// the end, so the output does not depend on scheduling.
inline RunOutput run_plan(const ExperimentPlan& plan, const std::function<void(std::size_t, std::size_t)>& progress = {}) {
    plan.validate();
    RunOutput out;
    out.axes = plan.axis_names();

    // Group points by their non-M coordinates.
    std::ptrdiff_t m_axis = -1;
    for (std::size_t i = 0; i < plan.sweeps.size(); ++i)
        if (plan.sweeps[i].axis == Axis::M) m_axis = static_cast<std::ptrdiff_t>(i);
    std::map<std::vector<double>, std::vector<std::size_t>> groups_map;
    for (std::size_t p = 0; p < plan.points(); ++p) {
        auto key = plan.coordinates(p);
        if (m_axis >= 0) key.erase(key.begin() + m_axis);
        groups_map[key].push_back(p);
    }
    std::vector<std::vector<std::size_t>> groups;
    for (auto& [key, pts] : groups_map) {
        std::stable_sort(pts.begin(), pts.end(),
                         [&](std::size_t a, std::size_t b) { return plan.config_at(a).M < plan.config_at(b).M; });
        groups.push_back(pts);
    }

    const auto order = solve_order(plan.variants);
    const std::size_t tasks = groups.size() * plan.drops;
    std::atomic<std::size_t> next{0}, done{0};
    std::mutex mu;
    std::exception_ptr fatal;

    auto work = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks) return;
            const std::size_t g = t / plan.drops, d = t % plan.drops;
            const std::uint64_t dseed = drop_seed(plan.seed, d);
            std::vector<ResultRow> rows;
            std::map<std::pair<std::size_t, std::string>, std::vector<double>> traces;
            try {
                std::map<std::string, DesignPoint> prev_m; // variant -> design at the previous M
                for (std::size_t p : groups[g]) {
                    const ScenarioConfig cfg = plan.config_at(p);
                    const auto coords = plan.coordinates(p);
                    const ChannelDrop drop = generate_drop(cfg, plan.topology, dseed);
                    AoOptions opt = plan.ao_options();
                    opt.seed = ao_seed(dseed);
                    std::map<std::string, DesignPoint> solved;
                    for (const auto& v : order) {
                        std::vector<DesignPoint> cands;
                        if (plan.warm_start) {
                            for (const auto& s : warm_start_sources(v))
                                if (auto it = solved.find(s.name()); it != solved.end()) cands.push_back(it->second);
                            if (auto it = prev_m.find(v.name()); it != prev_m.end()) cands.push_back(it->second);
                        }
                        const auto t0 = std::chrono::steady_clock::now();
                        try {
                            const SolveTrace tr = ao_solve(cfg, drop, v, opt, cands);
                            const double ms =
                                plan.record_timing
                                    ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                                          .count()
                                    : 0.0;
                            rows.push_back(detail::make_row(coords, v, dseed, d, tr, ms));
                            solved[v.name()] = tr.final_design;
                            if (d == 0) traces[{p, v.name()}] = detail::objective_trace(tr);
                        } catch (const ModelError&) {
                            throw;
                        } catch (const std::exception&) {
                            rows.push_back(detail::failed_row(coords, v, dseed, d));
                        }
                    }
                    prev_m = std::move(solved);
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!fatal) fatal = std::current_exception();
                next.store(tasks);
                return;
            }
            std::lock_guard lock(mu);
            for (auto& r : rows) out.rows.push_back(std::move(r));
            for (auto& [k, v] : traces) out.traces[k] = std::move(v);
            const std::size_t n = ++done;
            if (progress) progress(n, tasks);
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(plan.threads, static_cast<unsigned>(tasks)));
    if (threads == 1) work();
    else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (fatal) std::rethrow_exception(fatal);
    canonical_sort(out.rows);
    return out;
}

/// Writes results.csv, results.json, summary.csv, the per-axis .dat files
/// and one convergence trace under plan.output_dir.
inline void write_outputs(const ExperimentPlan& plan, const RunOutput& run) {
    const std::filesystem::path dir = plan.output_dir;
    export_results(run.axes, run.rows, ExportFormat::Csv, dir / "results.csv");
    export_results(run.axes, run.rows, ExportFormat::Json, dir / "results.json");
    write_summary(run.axes, run.rows, dir / "summary.csv");
    write_dat_files(run.axes, run.rows, dir);
    if (!run.traces.empty()) {
        const auto& [key, objs] = *run.traces.begin();
        write_trace_dat(objs, dir / ("trace_" + key.second + ".dat"));
    }
}

} // namespace risrsma::harness
