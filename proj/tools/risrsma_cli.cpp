// Command-line front end: run plans, trace the latency/EE region, compare
// against the grid oracle and convert result files.

#include "risrsma/harness/oracle.hpp"
#include "risrsma/harness/pareto.hpp"
#include "risrsma/harness/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

using namespace risrsma;
using namespace risrsma::harness;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> drops;
    std::optional<std::string> out;
    std::vector<std::string> variants;
    std::optional<unsigned> threads;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--drops", o.drops, "drops per sweep point")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out, "output directory (default: $RISRSMA_OUT or the plan's output_dir)");
    cmd->add_option("--variants", o.variants, "variants, e.g. RIS-RSMA NoRIS-SDMA")->delimiter(',');
    cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentPlan load_with(const std::string& path, const Overrides& o) {
    ExperimentPlan plan = path.empty() ? ExperimentPlan{} : load_plan(path);
    if (const char* env = std::getenv("RISRSMA_OUT"); env && *env) plan.output_dir = env;
    if (o.seed) plan.seed = *o.seed;
    if (o.drops) plan.drops = *o.drops;
    if (o.out) plan.output_dir = *o.out;
    if (!o.variants.empty()) {
        plan.variants.clear();
        for (const auto& v : o.variants) plan.variants.push_back(VariantSpec::parse(v));
    }
    if (o.threads) plan.threads = *o.threads;
    plan.validate();
    return plan;
}

std::vector<ChannelDrop> make_drops(const ExperimentPlan& plan, const ScenarioConfig& cfg) {
    std::vector<ChannelDrop> drops;
    for (std::size_t d = 0; d < plan.drops; ++d)
        drops.push_back(generate_drop(cfg, plan.topology, drop_seed(plan.seed, d)));
    return drops;
}

int cmd_run(const std::string& path, const Overrides& o) {
    const auto plan = load_with(path, o);
    std::cerr << "running " << plan.points() << " point(s) x " << plan.variants.size() << " variant(s) x "
              << plan.drops << " drop(s)\n";
    const auto run = run_plan(plan, [](std::size_t done, std::size_t total) {
        std::cerr << "\r  " << done << '/' << total << std::flush;
    });
    std::cerr << '\n';
    write_outputs(plan, run);
    for (const auto& [key, s] : summarize(run.rows)) {
        for (std::size_t i = 0; i < run.axes.size(); ++i) std::cout << run.axes[i] << '=' << format9(key.first[i]) << ' ';
        std::cout << key.second << ": mean delay " << format9(s.mean_delay) << ", mean EE " << format9(s.mean_ee)
                  << ", converged " << s.successes << '/' << s.count << '\n';
    }
    std::cout << "results written to " << plan.output_dir << '\n';
    return 0;
}

int cmd_pareto(const std::string& path, const Overrides& o, std::vector<double> alphas) {
    const auto plan = load_with(path, o);
    if (alphas.empty()) alphas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    const auto drops = make_drops(plan, plan.base);
    AoOptions opt = plan.ao_options();
    opt.seed = plan.seed;
    const std::filesystem::path dir = plan.output_dir;
    for (const auto& v : plan.variants) {
        const auto pts = pareto_region(plan.base, drops, v, alphas, opt);
        const auto path_dat = dir / ("pareto_" + v.name() + ".dat");
        std::filesystem::create_directories(dir);
        std::ofstream out(path_dat);
        if (!out) throw ExportError("cannot write '" + path_dat.string() + "'");
        out << "# alpha mean_minmax_delay mean_maxmin_ee\n";
        for (const auto& p : pts) {
            out << format9(p.alpha) << ' ' << format9(p.mean_delay) << ' ' << format9(p.mean_ee) << '\n';
            std::cout << v.name() << " alpha=" << format9(p.alpha) << " delay=" << format9(p.mean_delay)
                      << " ee=" << format9(p.mean_ee) << '\n';
        }
        const auto kept = pareto_filter(pts);
        std::cout << v.name() << ": " << kept.size() << '/' << pts.size() << " points on the frontier\n";
    }
    return 0;
}

int cmd_oracle(const std::string& path, const Overrides& o) {
    const auto plan = load_with(path, o);
    const auto drops = make_drops(plan, plan.base);
    AoOptions opt = plan.ao_options();
    for (const auto& v : plan.variants) {
        for (std::size_t d = 0; d < drops.size(); ++d) {
            const auto orc = grid_oracle(plan.base, drops[d], v);
            opt.seed = ao_seed(drops[d].seed);
            const auto ao = ao_solve(plan.base, drops[d], v, opt);
            std::cout << v.name() << " drop " << d << ": oracle " << format9(orc.objective)
                      << (orc.feasible ? "" : " (infeasible)") << ", ao " << format9(ao.final_objective()) << '\n';
        }
    }
    return 0;
}

int cmd_export(const std::string& in, const std::string& format, const std::string& out) {
    const auto table = read_csv(in);
    export_results(table.axes, table.rows, format == "json" ? ExportFormat::Json : ExportFormat::Csv, out);
    std::cout << table.rows.size() << " rows written to " << out << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RIS-aided rate-splitting MIMO downlink latency / energy-efficiency optimizer"};
    app.require_subcommand(1);

    Overrides ov;
    std::string plan_path;

    auto* run = app.add_subcommand("run", "run every sweep point, variant and drop of a plan");
    run->add_option("plan", plan_path, "plan file (JSON)")->required()->check(CLI::ExistingFile);
    add_overrides(run, ov);

    std::vector<double> alphas;
    auto* pareto = app.add_subcommand("pareto", "latency / EE region over the weight alpha");
    pareto->add_option("plan", plan_path, "plan file (JSON); the base scenario is used")->check(CLI::ExistingFile);
    pareto->add_option("--alphas", alphas, "ascending alpha grid in [0,1]")->delimiter(',');
    add_overrides(pareto, ov);

    auto* oracle = app.add_subcommand("oracle", "compare the optimizer with exhaustive search on a tiny plan");
    oracle->add_option("plan", plan_path, "plan file (JSON) with K <= 2, N_BS = N_u = 1, M <= 1")
        ->required()
        ->check(CLI::ExistingFile);
    add_overrides(oracle, ov);

    std::string in_csv, format = "json", out_path;
    auto* exp = app.add_subcommand("export", "convert a results CSV to JSON or canonical CSV");
    exp->add_option("input", in_csv, "results CSV")->required()->check(CLI::ExistingFile);
    exp->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    exp->add_option("--out", out_path, "output file")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(plan_path, ov);
        if (*pareto) return cmd_pareto(plan_path, ov, alphas);
        if (*oracle) return cmd_oracle(plan_path, ov);
        if (*exp) return cmd_export(in_csv, format, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
