#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "quant/discrepancy.hpp"
#include "quant/selectors.hpp"
#include "quant/solvers.hpp"
#include "quant/target.hpp"
#include "quant/version.hpp"

namespace quant {

using Json = nlohmann::ordered_json;  // stable key order so diffs are meaningful

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Locale-independent float parse; returns false on any trailing garbage.
// from_chars does not accept an explicit plus sign, so strip one.
inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '+' && s[1] != '-') s.remove_prefix(1);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

inline std::string file_digest(const std::string& path) {
    const std::uint64_t h = detail::fnv1a64(detail::read_file(path));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + buf;
}

// CSV matrix loader: one point per row, d numeric columns. A non-numeric
// first row is treated as a header. Row order is preserved.
inline Matrix load_csv_matrix(const std::string& path) {
    const std::string content = detail::read_file(path);
    std::vector<std::vector<double>> rows;
    Index width = -1;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool first_data_line = true;
    while (pos <= content.size()) {
        const std::size_t nl = content.find('\n', pos);
        std::string_view line(content.data() + pos,
                              (nl == std::string::npos ? content.size() : nl) - pos);
        pos = (nl == std::string::npos) ? content.size() + 1 : nl + 1;
        ++line_no;
        line = detail::trim(line);
        if (line.empty()) continue;

        std::vector<double> row;
        bool ok = true;
        std::size_t field_start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                double value = 0.0;
                if (!detail::parse_double(line.substr(field_start, i - field_start), value)) {
                    ok = false;
                    break;
                }
                row.push_back(value);
                field_start = i + 1;
            }
        }
        if (!ok) {
            if (first_data_line) {
                first_data_line = false;  // header row
                continue;
            }
            throw DataError(path + ": line " + std::to_string(line_no) + " is not numeric");
        }
        first_data_line = false;
        if (width < 0) width = static_cast<Index>(row.size());
        if (static_cast<Index>(row.size()) != width)
            throw DataError(path + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(row.size()) + " columns, expected " +
                            std::to_string(width));
        for (std::size_t j = 0; j < row.size(); ++j)
            if (!std::isfinite(row[j]))
                throw DataError(path + ": non-finite value at line " + std::to_string(line_no) +
                                ", column " + std::to_string(j + 1));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path + ": no data rows");
    Matrix out(static_cast<Index>(rows.size()), width);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (Index j = 0; j < width; ++j) out(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    return out;
}

inline CandidateSet load_candidates(const std::string& path, const std::string& format = "csv",
                                    const std::string& score_path = "") {
    if (format != "csv") throw ConfigError("unsupported candidate format: " + format);
    CandidateSet set;
    set.points = load_csv_matrix(path);
    set.provenance = path;
    if (!score_path.empty()) {
        set.scores = load_csv_matrix(score_path);
        set.has_scores = true;
        if (set.scores.rows() != set.points.rows() || set.scores.cols() != set.points.cols())
            throw DataError("score file " + score_path + " has " + std::to_string(set.scores.rows()) +
                            " rows x " + std::to_string(set.scores.cols()) + " cols but " + path +
                            " has " + std::to_string(set.points.rows()) + " rows x " +
                            std::to_string(set.points.cols()) + " cols");
    }
    set.validate();
    return set;
}

// Mixture specification document:
//   {"d": int, "components": [{"weight": w, "mean": [...], "var_diag": [...]}]}
inline GaussianMixture mixture_from_json(const Json& doc) {
    GaussianMixture mix;
    if (!doc.contains("d") || !doc.contains("components"))
        throw DataError("mixture document needs keys \"d\" and \"components\"");
    const Index d = doc.at("d").get<Index>();
    for (const auto& cj : doc.at("components")) {
        GaussianMixture::Component comp;
        comp.weight = cj.at("weight").get<double>();
        const auto mean = cj.at("mean").get<std::vector<double>>();
        const auto var = cj.at("var_diag").get<std::vector<double>>();
        if (static_cast<Index>(mean.size()) != d || static_cast<Index>(var.size()) != d)
            throw DataError("mixture component dimension does not match d");
        comp.mean = Eigen::Map<const Vector>(mean.data(), d);
        comp.var_diag = Eigen::Map<const Vector>(var.data(), d);
        mix.components.push_back(std::move(comp));
    }
    mix.validate();
    return mix;
}

inline GaussianMixture load_mixture(const std::string& path) {
    Json doc;
    try {
        doc = Json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
    return mixture_from_json(doc);
}

inline Json mixture_to_json(const GaussianMixture& mix) {
    Json doc;
    doc["d"] = mix.dim();
    doc["components"] = Json::array();
    for (const auto& comp : mix.components) {
        Json cj;
        cj["weight"] = comp.weight;
        cj["mean"] = std::vector<double>(comp.mean.data(), comp.mean.data() + comp.mean.size());
        cj["var_diag"] =
            std::vector<double>(comp.var_diag.data(), comp.var_diag.data() + comp.var_diag.size());
        doc["components"].push_back(cj);
    }
    return doc;
}

inline Json result_to_json(const SelectionResult& result) {
    Json doc;
    doc["pi"] = result.pi;
    doc["trace"] = result.trace;
    doc["timings_ms"] = result.timings_ms;
    Json cfg;
    cfg["algorithm"] = to_string(result.algorithm);
    cfg["mode"] = to_string(result.mode);
    cfg["m"] = result.m;
    cfg["s"] = result.s;
    cfg["b"] = result.b;
    cfg["batch_strategy"] = to_string(result.batch_strategy);
    cfg["seed"] = result.seed;
    cfg["solver"] = result.solver;
    cfg["binary"] = result.binary;
    cfg["kernel"] = result.kernel;
    cfg["lengthscale"] = result.lengthscale;
    doc["config"] = cfg;
    return doc;
}

// JSON or CSV emission. CSV columns: iteration, chosen indices
// (semicolon-joined), mmd_squared, cumulative_ms. Indices are 0-based.
inline void write_result(const SelectionResult& result, const std::string& path,
                         const std::string& format = "json") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write to " + path);
    if (format == "json") {
        out << result_to_json(result).dump(2) << "\n";
    } else if (format == "csv") {
        out << "iteration,chosen,mmd_squared,cumulative_ms\n";
        double cum = 0.0;
        for (std::size_t i = 0; i < result.pi.size(); ++i) {
            cum += i < result.timings_ms.size() ? result.timings_ms[i] : 0.0;
            out << i << ",";
            for (std::size_t j = 0; j < result.pi[i].size(); ++j) {
                if (j) out << ';';
                out << result.pi[i][j];
            }
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", result.trace[i]);
            out << "," << buf;
            std::snprintf(buf, sizeof buf, "%.6f", cum);
            out << "," << buf << "\n";
        }
    } else {
        throw ConfigError("unsupported output format: " + format);
    }
    if (!out) throw DataError("write failed for " + path);
}

inline SelectionResult result_from_json(const Json& doc) {
    SelectionResult res;
    res.pi = doc.at("pi").get<std::vector<std::vector<Index>>>();
    res.trace = doc.at("trace").get<std::vector<double>>();
    if (doc.contains("timings_ms")) res.timings_ms = doc.at("timings_ms").get<std::vector<double>>();
    if (doc.contains("config")) {
        const auto& cfg = doc.at("config");
        res.m = cfg.value("m", static_cast<Index>(res.pi.size()));
        res.s = cfg.value("s", res.pi.empty() ? Index{1} : static_cast<Index>(res.pi.front().size()));
        res.seed = cfg.value("seed", std::uint64_t{0});
    }
    return res;
}

inline SelectionResult read_result(const std::string& path) {
    Json doc;
    try {
        doc = Json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
    try {
        return result_from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": not a selection result: " + e.what());
    }
}

// Computable side of the finite-sample error bound: the simplex-optimal
// squared discrepancy plus the constant term, compared against the measured
// value of a finished selection.
struct DiagnosticReport {
    double phi_squared = 0.0;
    double fw_gap = 0.0;
    long fw_iterations = 0;
    double c2_mu = 0.0;    // double integral of the kernel against the target
    double c2_n = 0.0;     // max_i k(x_i, x_i)
    double bound = 0.0;    // phi^2 + gap + C^2 (1 + log m)/m
    double mmd_squared = 0.0;
    Index iterations = 0;  // m
    bool satisfied = false;
};

inline DiagnosticReport diagnose(const CandidateSet& candidates, const TargetModel& target,
                                 const KernelSpec& kernel, const SelectionResult& result,
                                 double fw_tol = 1e-8, long fw_max_iter = 100000) {
    if (result.pi.empty()) throw DataError("diagnose: result has no iterations");
    KernelContext ctx(candidates, target, kernel);

    EmpiricalMeasure measure;
    for (const auto& row : result.pi)
        for (Index idx : row) measure.indices.push_back(idx);
    measure.validate(ctx.size());

    const Index n = ctx.size();
    std::vector<Index> all(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) all[static_cast<std::size_t>(j)] = j;
    const Matrix K = ctx.submatrix(all);

    DiagnosticReport rep;
    const auto qp = solve_simplex_qp(K, ctx.kernel_means(), ctx.c2(), fw_max_iter, fw_tol);
    rep.phi_squared = qp.phi_squared;
    rep.fw_gap = qp.duality_gap;
    rep.fw_iterations = qp.fw_iterations;
    rep.c2_mu = ctx.c2();
    double diag_max = -std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n; ++j) diag_max = std::max(diag_max, ctx.diagonal(j));
    rep.c2_n = diag_max;
    rep.iterations = static_cast<Index>(result.pi.size());

    const double c_sum = std::sqrt(std::max(0.0, rep.c2_mu)) + std::sqrt(std::max(0.0, rep.c2_n));
    const double m = static_cast<double>(rep.iterations);
    rep.bound = rep.phi_squared + rep.fw_gap + c_sum * c_sum * (1.0 + std::log(m)) / m;
    rep.mmd_squared = mmd_squared(measure, ctx);
    rep.satisfied = rep.mmd_squared <= rep.bound;
    return rep;
}

inline Json report_to_json(const DiagnosticReport& rep) {
    Json doc;
    doc["phi_squared"] = rep.phi_squared;
    doc["fw_gap"] = rep.fw_gap;
    doc["fw_iterations"] = rep.fw_iterations;
    doc["c2_mu"] = rep.c2_mu;
    doc["c2_n"] = rep.c2_n;
    doc["iterations"] = rep.iterations;
    doc["bound"] = rep.bound;
    doc["mmd_squared"] = rep.mmd_squared;
    doc["satisfied"] = rep.satisfied;
    return doc;
}

}  // namespace quant
