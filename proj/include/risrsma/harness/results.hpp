#pragma once

// Result rows, summary statistics and file exporters.

#include "risrsma/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace risrsma::harness {

class ExportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rounds to 9 significant digits so that a value survives a text round trip
/// unchanged. Infinities and NaN pass through.
inline double quantize9(double v) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8e", v);
    return std::strtod(buf, nullptr);
}

inline std::string format9(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ExportError("malformed number '" + s + "'");
    return v;
}

struct ResultRow {
    std::vector<double> coords; // one per sweep axis, in plan order
    std::string variant;
    std::uint64_t seed = 0; // drop seed
    std::size_t drop = 0;   // drop index, used for ordering only
    double minmax_delay = 0.0;
    double maxmin_ee = 0.0;
    double objective = 0.0;
    int iters = 0;
    bool converged = false;
    double wall_ms = 0.0;

    /// Applies 9-digit quantization to every floating field.
    void quantize() {
        for (double& c : coords) c = quantize9(c);
        minmax_delay = quantize9(minmax_delay);
        maxmin_ee = quantize9(maxmin_ee);
        objective = quantize9(objective);
        wall_ms = quantize9(wall_ms);
    }

    [[nodiscard]] bool success() const { return converged && std::isfinite(minmax_delay); }
};

/// Canonical order: sweep coordinates, then variant, then drop index.
inline void canonical_sort(std::vector<ResultRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.coords, a.variant, a.drop) < std::tie(b.coords, b.variant, b.drop);
    });
}

inline std::vector<std::string> csv_header(const std::vector<std::string>& axes) {
    std::vector<std::string> h = axes;
    for (const char* c : {"variant", "seed", "minmax_delay", "maxmin_ee", "objective", "iters", "converged", "wall_ms"})
        h.emplace_back(c);
    return h;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ExportError("cannot write '" + path.string() + "'");
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw ExportError("write failed for '" + path.string() + "'");
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) f.push_back(cur);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    return f;
}

} // namespace detail

inline std::string to_csv(const std::vector<std::string>& axes, const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    const auto h = csv_header(axes);
    for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "," : "") << h[i];
    os << '\n';
    for (const auto& r : rows) {
        if (r.coords.size() != axes.size()) throw ExportError("row has the wrong number of sweep coordinates");
        for (double c : r.coords) os << format9(c) << ',';
        os << r.variant << ',' << r.seed << ',' << format9(r.minmax_delay) << ',' << format9(r.maxmin_ee) << ','
           << format9(r.objective) << ',' << r.iters << ',' << (r.converged ? 1 : 0) << ',' << format9(r.wall_ms)
           << '\n';
    }
    return os.str();
}

inline nlohmann::ordered_json to_json(const std::vector<std::string>& axes, const std::vector<ResultRow>& rows) {
    // JSON has no infinity; non-finite values are written as strings.
    auto num = [](double v) -> nlohmann::ordered_json {
        if (std::isfinite(v)) return quantize9(v);
        return format9(v);
    };
    nlohmann::ordered_json out;
    out["columns"] = csv_header(axes);
    out["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        for (std::size_t i = 0; i < axes.size(); ++i) j[axes[i]] = num(r.coords.at(i));
        j["variant"] = r.variant;
        j["seed"] = r.seed;
        j["minmax_delay"] = num(r.minmax_delay);
        j["maxmin_ee"] = num(r.maxmin_ee);
        j["objective"] = num(r.objective);
        j["iters"] = r.iters;
        j["converged"] = r.converged;
        j["wall_ms"] = num(r.wall_ms);
        out["rows"].push_back(std::move(j));
    }
    return out;
}

enum class ExportFormat { Csv, Json };

inline void export_results(const std::vector<std::string>& axes, const std::vector<ResultRow>& rows,
                           ExportFormat format, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    if (format == ExportFormat::Csv) out << to_csv(axes, rows);
    else out << to_json(axes, rows).dump(2) << '\n';
    detail::finish(out, path);
}

struct CsvTable {
    std::vector<std::string> axes;
    std::vector<ResultRow> rows;
};

inline CsvTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ExportError("empty CSV");
    const auto header = detail::split_csv(line);
    const auto fixed = csv_header({});
    if (header.size() < fixed.size() ||
        !std::equal(fixed.begin(), fixed.end(), header.end() - static_cast<std::ptrdiff_t>(fixed.size())))
        throw ExportError("unexpected CSV header");
    CsvTable t;
    t.axes.assign(header.begin(), header.end() - static_cast<std::ptrdiff_t>(fixed.size()));
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != header.size()) throw ExportError("CSV line " + std::to_string(n + 2) + " has wrong width");
        ResultRow r;
        std::size_t i = 0;
        for (; i < t.axes.size(); ++i) r.coords.push_back(parse_double(f[i]));
        r.variant = f[i++];
        r.seed = std::stoull(f[i++]);
        r.minmax_delay = parse_double(f[i++]);
        r.maxmin_ee = parse_double(f[i++]);
        r.objective = parse_double(f[i++]);
        r.iters = std::stoi(f[i++]);
        r.converged = f[i++] == "1";
        r.wall_ms = parse_double(f[i++]);
        r.drop = n++;
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ExportError("cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_csv(ss.str());
    } catch (const std::exception& e) {
        throw ExportError(path.string() + ": " + e.what());
    }
}

/// Aggregates over one (point, variant) cell. The raw figures cover every
/// drop; the success figures only converged drops with finite delay.
struct Summary {
    std::size_t count = 0;
    std::size_t successes = 0;
    double mean_delay = 0.0;
    double mean_ee = 0.0;
    double mean_objective = 0.0;
    double mean_iters = 0.0;
    double success_mean_delay = std::numeric_limits<double>::quiet_NaN();
    double success_mean_ee = std::numeric_limits<double>::quiet_NaN();
};

using SummaryKey = std::pair<std::vector<double>, std::string>;

inline std::map<SummaryKey, Summary> summarize(const std::vector<ResultRow>& rows) {
    std::map<SummaryKey, Summary> out;
    std::map<SummaryKey, std::pair<double, double>> succ;
    for (const auto& r : rows) {
        const SummaryKey key{r.coords, r.variant};
        auto& s = out[key];
        ++s.count;
        s.mean_delay += r.minmax_delay;
        s.mean_ee += r.maxmin_ee;
        s.mean_objective += r.objective;
        s.mean_iters += r.iters;
        if (r.success()) {
            ++s.successes;
            succ[key].first += r.minmax_delay;
            succ[key].second += r.maxmin_ee;
        }
    }
    for (auto& [key, s] : out) {
        const auto n = static_cast<double>(s.count);
        s.mean_delay /= n;
        s.mean_ee /= n;
        s.mean_objective /= n;
        s.mean_iters /= n;
        if (s.successes > 0) {
            s.success_mean_delay = succ[key].first / static_cast<double>(s.successes);
            s.success_mean_ee = succ[key].second / static_cast<double>(s.successes);
        }
    }
    return out;
}

inline void write_summary(const std::vector<std::string>& axes, const std::vector<ResultRow>& rows,
                          const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    for (const auto& a : axes) out << a << ',';
    out << "variant,drops,successes,mean_delay,mean_ee,mean_objective,mean_iters,success_mean_delay,success_mean_ee\n";
    for (const auto& [key, s] : summarize(rows)) {
        for (double c : key.first) out << format9(c) << ',';
        out << key.second << ',' << s.count << ',' << s.successes << ',' << format9(s.mean_delay) << ','
            << format9(s.mean_ee) << ',' << format9(s.mean_objective) << ',' << format9(s.mean_iters) << ','
            << format9(s.success_mean_delay) << ',' << format9(s.success_mean_ee) << '\n';
    }
    detail::finish(out, path);
}

/// Two-column plot files: for each variant and each sweep axis, mean delay
/// and mean EE against that axis (other axes fixed at their listed values,
/// one file per combination of the remaining coordinates).
inline std::vector<std::filesystem::path> write_dat_files(const std::vector<std::string>& axes,
                                                          const std::vector<ResultRow>& rows,
                                                          const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> written;
    const auto summary = summarize(rows);
    for (std::size_t a = 0; a < axes.size(); ++a) {
        // (variant, other coords) -> [(x, summary)]
        std::map<std::pair<std::string, std::vector<double>>, std::vector<std::pair<double, Summary>>> series;
        for (const auto& [key, s] : summary) {
            std::vector<double> rest = key.first;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(a));
            series[{key.second, rest}].emplace_back(key.first[a], s);
        }
        for (const auto& [id, pts] : series) {
            std::string stem = id.first + "_vs_" + axes[a];
            for (std::size_t i = 0, j = 0; i < axes.size(); ++i) {
                if (i == a) continue;
                stem += "_" + axes[i] + "=" + format9(id.second[j++]);
            }
            for (const char* what : {"delay", "ee"}) {
                const auto path = dir / (std::string(what) + "_" + stem + ".dat");
                auto out = detail::open_out(path);
                out << "# " << axes[a] << ' ' << (what[0] == 'd' ? "mean_minmax_delay" : "mean_maxmin_ee") << '\n';
                for (const auto& [x, s] : pts)
                    out << format9(x) << ' ' << format9(what[0] == 'd' ? s.mean_delay : s.mean_ee) << '\n';
                detail::finish(out, path);
                written.push_back(path);
            }
        }
    }
    return written;
}

/// Convergence trace: iteration index against true objective.
inline void write_trace_dat(const std::vector<double>& objectives, const std::filesystem::path& path) {
    auto out = detail::open_out(path);
    out << "# iteration objective\n";
    for (std::size_t i = 0; i < objectives.size(); ++i) out << i << ' ' << format9(objectives[i]) << '\n';
    detail::finish(out, path);
}

} // namespace risrsma::harness
