#pragma once

// Experiment plans: base scenario, sweep axes, variants and Monte Carlo
// settings. Plan files are JSON objects; unknown keys are rejected.

#include "risrsma/ao.hpp"
#include "risrsma/harness/channel.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace risrsma::harness {

/// Sweepable parameters. P_dB is the BS budget in dBW; eps_total is split
/// equally between common and private streams.
enum class Axis { P_dB, EpsTotal, M, Alpha, K };

inline const char* axis_name(Axis a) {
    switch (a) {
    case Axis::P_dB: return "P_dB";
    case Axis::EpsTotal: return "eps_total";
    case Axis::M: return "M";
    case Axis::Alpha: return "alpha";
    case Axis::K: return "K";
    }
    return "?";
}

inline Axis parse_axis(const std::string& s) {
    for (Axis a : {Axis::P_dB, Axis::EpsTotal, Axis::M, Axis::Alpha, Axis::K})
        if (s == axis_name(a)) return a;
    throw ModelError("unknown sweep parameter '" + s + "'");
}

struct SweepAxis {
    Axis axis = Axis::P_dB;
    std::vector<double> values;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double bits_to_nats(double bits) { return bits * std::log(2.0); }

struct ExperimentPlan {
    ScenarioConfig base;   // linear units, l in nats
    double l_bits = 256.0; // per-user message length used when K changes
    TopologyConfig topology;
    std::vector<SweepAxis> sweeps;
    std::vector<VariantSpec> variants;
    std::size_t drops = 50;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    double delta = 1e-4;
    int max_iter = 100;
    bool warm_start = true;
    bool record_timing = false;
    unsigned threads = 1;

    ExperimentPlan() {
        base.l.assign(base.K, bits_to_nats(l_bits));
        base.P = db_to_linear(10.0);
        base.sigma2 = dbm_to_watts(-100.0);
        variants = {VariantSpec::parse("RIS-RSMA")};
    }

    [[nodiscard]] std::vector<std::string> axis_names() const {
        std::vector<std::string> n;
        for (const auto& s : sweeps) n.emplace_back(axis_name(s.axis));
        return n;
    }

    /// Number of sweep points (product of the axis lengths).
    [[nodiscard]] std::size_t points() const {
        std::size_t n = 1;
        for (const auto& s : sweeps) n *= s.values.size();
        return n;
    }

    /// Coordinates of point p; the first axis varies slowest.
    [[nodiscard]] std::vector<double> coordinates(std::size_t p) const {
        std::vector<double> c(sweeps.size());
        for (std::size_t i = sweeps.size(); i-- > 0;) {
            const auto n = sweeps[i].values.size();
            c[i] = sweeps[i].values[p % n];
            p /= n;
        }
        return c;
    }

    /// Scenario at point p. All unit conversions of sweep values happen here.
    [[nodiscard]] ScenarioConfig config_at(std::size_t p) const {
        ScenarioConfig cfg = base;
        const auto c = coordinates(p);
        for (std::size_t i = 0; i < sweeps.size(); ++i) {
            const double v = c[i];
            switch (sweeps[i].axis) {
            case Axis::P_dB: cfg.P = db_to_linear(v); break;
            case Axis::EpsTotal: std::tie(cfg.eps_c, cfg.eps_p) = reliability_split(v); break;
            case Axis::M: cfg.M = static_cast<std::size_t>(v); break;
            case Axis::Alpha: cfg.alpha = v; break;
            case Axis::K:
                cfg.K = static_cast<std::size_t>(v);
                cfg.l.assign(cfg.K, bits_to_nats(l_bits));
                break;
            }
        }
        return cfg;
    }

    [[nodiscard]] AoOptions ao_options() const {
        AoOptions o;
        o.delta = delta;
        o.max_iter = max_iter;
        return o;
    }

    void validate() const {
        auto req = [](bool ok, const std::string& what) {
            if (!ok) throw ModelError("invalid plan: " + what);
        };
        req(drops >= 1, "drops >= 1");
        req(!variants.empty(), "at least one variant");
        req(delta > 0.0 && max_iter >= 1, "solver settings");
        std::set<Axis> seen;
        for (const auto& s : sweeps) {
            req(seen.insert(s.axis).second, std::string("duplicate sweep axis ") + axis_name(s.axis));
            req(!s.values.empty(), std::string("empty sweep axis ") + axis_name(s.axis));
            for (double v : s.values) {
                switch (s.axis) {
                case Axis::P_dB: req(std::isfinite(v), "P_dB finite"); break;
                case Axis::EpsTotal: req(v > 0.0 && v < 0.5, "eps_total in (0, 0.5)"); break;
                case Axis::M: req(v >= 0.0 && v == std::floor(v), "M a nonnegative integer"); break;
                case Axis::Alpha: req(v >= 0.0 && v <= 1.0, "alpha in [0, 1]"); break;
                case Axis::K: req(v >= 1.0 && v == std::floor(v), "K a positive integer"); break;
                }
            }
        }
        for (std::size_t p = 0; p < points(); ++p) config_at(p).validate();
    }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ModelError("plan: '" + where + "' must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ModelError("plan: unknown key '" + k + "' in " + where);
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline Point2 read_point(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ModelError("plan: positions are [x, y] arrays");
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace detail

/// Parses a plan from JSON text. Units: P_dB in dBW, noise_dBm in dBm,
/// l_bits in bits.
inline ExperimentPlan parse_plan(const std::string& text) {
    using detail::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelError(std::string("plan: ") + e.what());
    }
    ExperimentPlan plan;
    try {
        detail::check_keys(j,
                           {"scenario", "topology", "sweeps", "variants", "drops", "seed", "output_dir", "solver",
                            "warm_start", "record_timing", "threads"},
                           "plan");
        if (j.contains("scenario")) {
            const auto& s = j.at("scenario");
            detail::check_keys(s,
                               {"K", "N_BS", "N_u", "M", "P_dB", "noise_dBm", "n_p", "n_c", "eps_total", "l_bits",
                                "alpha", "eta", "P_s"},
                               "scenario");
            auto& c = plan.base;
            detail::read_opt(s, "K", c.K);
            detail::read_opt(s, "N_BS", c.N_BS);
            detail::read_opt(s, "N_u", c.N_u);
            detail::read_opt(s, "M", c.M);
            if (s.contains("P_dB")) c.P = db_to_linear(s.at("P_dB").get<double>());
            if (s.contains("noise_dBm")) c.sigma2 = dbm_to_watts(s.at("noise_dBm").get<double>());
            detail::read_opt(s, "n_p", c.n_p);
            detail::read_opt(s, "n_c", c.n_c);
            if (s.contains("eps_total")) std::tie(c.eps_c, c.eps_p) = reliability_split(s.at("eps_total").get<double>());
            detail::read_opt(s, "l_bits", plan.l_bits);
            detail::read_opt(s, "alpha", c.alpha);
            detail::read_opt(s, "eta", c.eta);
            detail::read_opt(s, "P_s", c.P_s);
            c.l.assign(c.K, bits_to_nats(plan.l_bits));
        }
        if (j.contains("topology")) {
            const auto& t = j.at("topology");
            detail::check_keys(t,
                               {"bs", "ris", "user_r_min", "user_r_max", "user_angle_deg", "pl_ref_db", "pl_direct",
                                "pl_ris", "rician_k_db"},
                               "topology");
            auto& tp = plan.topology;
            if (t.contains("bs")) tp.bs = detail::read_point(t.at("bs"));
            if (t.contains("ris")) tp.ris = detail::read_point(t.at("ris"));
            detail::read_opt(t, "user_r_min", tp.user_r_min);
            detail::read_opt(t, "user_r_max", tp.user_r_max);
            detail::read_opt(t, "user_angle_deg", tp.user_angle_deg);
            detail::read_opt(t, "pl_ref_db", tp.pl_ref_db);
            detail::read_opt(t, "pl_direct", tp.pl_direct);
            detail::read_opt(t, "pl_ris", tp.pl_ris);
            detail::read_opt(t, "rician_k_db", tp.rician_k_db);
        }
        if (j.contains("sweeps")) {
            if (!j.at("sweeps").is_array()) throw ModelError("plan: 'sweeps' must be an array");
            for (const auto& s : j.at("sweeps")) {
                detail::check_keys(s, {"param", "values"}, "sweep");
                plan.sweeps.push_back({parse_axis(s.at("param").get<std::string>()),
                                       s.at("values").get<std::vector<double>>()});
            }
        }
        if (j.contains("variants")) {
            plan.variants.clear();
            for (const auto& v : j.at("variants")) plan.variants.push_back(VariantSpec::parse(v.get<std::string>()));
        }
        detail::read_opt(j, "drops", plan.drops);
        detail::read_opt(j, "seed", plan.seed);
        detail::read_opt(j, "output_dir", plan.output_dir);
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            detail::check_keys(s, {"delta", "max_iter"}, "solver");
            detail::read_opt(s, "delta", plan.delta);
            detail::read_opt(s, "max_iter", plan.max_iter);
        }
        detail::read_opt(j, "warm_start", plan.warm_start);
        detail::read_opt(j, "record_timing", plan.record_timing);
        detail::read_opt(j, "threads", plan.threads);
    } catch (const json::exception& e) {
        throw ModelError(std::string("plan: ") + e.what());
    }
    plan.validate();
    return plan;
}

inline ExperimentPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open plan file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_plan(ss.str());
}

} // namespace risrsma::harness
