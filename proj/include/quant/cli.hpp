#pragma once

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quant/io.hpp"
#include "quant/sdr.hpp"

namespace quant::cli {

struct CommonArgs {
    std::string input;
    std::string scores;
    std::string mixture;
    std::string mode = "mmd";
    std::string kernel = "se";
    std::string lengthscale = "median";
    std::size_t median_subsample = 1000;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string output;
    std::string format = "json";
};

namespace detail {

inline void add_common(CLI::App* cmd, CommonArgs& a, bool input_required) {
    auto* in = cmd->add_option("--input", a.input, "candidate points CSV (one point per row)")
                   ->envname("QUANT_INPUT");
    if (input_required) in->required();
    cmd->add_option("--scores", a.scores, "score CSV parallel to --input (ksd mode)")
        ->envname("QUANT_SCORES");
    cmd->add_option("--mixture", a.mixture, "Gaussian mixture target JSON")->envname("QUANT_MIXTURE");
    cmd->add_option("--mode", a.mode, "discrepancy mode")
        ->check(CLI::IsMember({"mmd", "ksd"}))
        ->envname("QUANT_MODE");
    cmd->add_option("--kernel", a.kernel, "base kernel family")
        ->check(CLI::IsMember({"se", "imq"}))
        ->envname("QUANT_KERNEL");
    cmd->add_option("--lengthscale", a.lengthscale, "positive value or 'median'")
        ->envname("QUANT_LENGTHSCALE");
    cmd->add_option("--median-subsample", a.median_subsample,
                    "points used by the median heuristic")
        ->envname("QUANT_MEDIAN_SUBSAMPLE");
    cmd->add_option("--seed", a.seed, "seed for all randomised steps")->envname("QUANT_SEED");
    cmd->add_option("--threads", a.threads, "worker thread cap")->envname("QUANT_THREADS");
    cmd->add_option("--output", a.output, "output path")->envname("QUANT_OUTPUT");
    cmd->add_option("--format", a.format, "result format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->envname("QUANT_FORMAT");
}

inline Mode parse_mode(const std::string& s) { return s == "ksd" ? Mode::ksd : Mode::mmd; }

inline KernelFamily parse_family(const std::string& s) {
    return s == "imq" ? KernelFamily::inverse_multiquadric : KernelFamily::squared_exponential;
}

struct LoadedProblem {
    CandidateSet candidates;
    TargetModel target = TargetModel::score_only(Matrix::Ones(1, 1));
    KernelSpec kernel;
};

inline LoadedProblem load_problem(const CommonArgs& a) {
    LoadedProblem p;
    const Mode mode = parse_mode(a.mode);
    p.candidates = load_candidates(a.input, "csv", a.scores);

    if (mode == Mode::mmd) {
        if (a.mixture.empty())
            throw ConfigError("mmd mode needs --mixture (analytic target with exact kernel means)");
        p.target = TargetModel::mixture(load_mixture(a.mixture), Mode::mmd);
    } else {
        if (!a.mixture.empty()) {
            p.target = TargetModel::mixture(load_mixture(a.mixture), Mode::ksd);
        } else if (p.candidates.has_scores) {
            p.target = TargetModel::score_only(p.candidates.scores);
        } else {
            throw ConfigError("ksd mode needs --scores (precomputed score file) or --mixture");
        }
    }

    p.kernel.family = parse_family(a.kernel);
    if (a.lengthscale == "median") {
        p.kernel.lengthscale = median_heuristic(p.candidates.points, a.median_subsample, a.seed);
    } else {
        double value = 0.0;
        if (!quant::detail::parse_double(a.lengthscale, value) || !(value > 0.0))
            throw ConfigError("--lengthscale must be a positive number or 'median', got '" +
                              a.lengthscale + "'");
        p.kernel.lengthscale = value;
    }
    p.kernel.validate();
    p.target.check_kernel_pairing(p.kernel);
    return p;
}

inline Json manifest_for(const std::string& command, const CommonArgs& a, const Json& extra,
                         const KernelSpec& resolved_kernel) {
    Json m;
    m["library_version"] = library_version;
    m["command"] = command;
    Json cfg;
    cfg["input"] = a.input;
    cfg["scores"] = a.scores;
    cfg["mixture"] = a.mixture;
    cfg["mode"] = a.mode;
    cfg["kernel"] = a.kernel;
    cfg["lengthscale"] = a.lengthscale;
    cfg["resolved_lengthscale"] = resolved_kernel.lengthscale;
    cfg["median_subsample"] = a.median_subsample;
    cfg["seed"] = a.seed;
    cfg["threads"] = a.threads;
    cfg["format"] = a.format;
    for (auto it = extra.begin(); it != extra.end(); ++it) cfg[it.key()] = it.value();
    m["config"] = cfg;
    Json digests;
    if (!a.input.empty()) digests[a.input] = file_digest(a.input);
    if (!a.scores.empty()) digests[a.scores] = file_digest(a.scores);
    if (!a.mixture.empty()) digests[a.mixture] = file_digest(a.mixture);
    m["input_digests"] = digests;
    m["output"] = a.output;
    return m;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write to " + path);
    out << text;
    if (!out) throw DataError("write failed for " + path);
}

inline double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t h = values.size() / 2;
    if (values.size() % 2 == 1) return values[h];
    return 0.5 * (values[h - 1] + values[h]);
}

}  // namespace detail

struct SelectArgs {
    CommonArgs common;
    std::string algorithm = "myopic";
    Index points = 1;
    Index s = 1;
    Index batch = 0;
    std::string batch_strategy = "uniform";
    std::string solver = "auto";
    bool binary = false;
    Index rank = 0;
    long draws = 50;
    double sdr_tol = 1e-6;
    long sdr_max_iter = 500;
    std::string trace_csv;
};

inline SelectionResult run_selection(const KernelContext& ctx, const SelectArgs& args) {
    const Index total = args.points;
    if (total < 1) throw ConfigError("--points must be >= 1");

    SolverOptions solver;
    solver.binary = args.binary;
    if (args.solver == "exhaustive") solver.method = SolverMethod::exhaustive;
    else if (args.solver == "bnb") solver.method = SolverMethod::branch_bound;
    else solver.method = SolverMethod::automatic;

    if (args.algorithm == "myopic") {
        if (args.s != 1) throw ConfigError("myopic selection is s=1; use --algorithm nonmyopic");
        return select_myopic(ctx, total, args.common.seed);
    }
    if (args.algorithm == "oneshot") {
        return select_oneshot(ctx, total, solver);
    }
    if (args.algorithm == "sdr") {
        SdrOptions opts;
        opts.rank = args.rank;
        opts.draws = args.draws;
        opts.tol = args.sdr_tol;
        opts.max_iter = args.sdr_max_iter;
        opts.seed = args.common.seed;
        return select_sdr(ctx, total, opts);
    }

    if (args.s < 1 || total % args.s != 0)
        throw ConfigError("--s must divide --points; got points=" + std::to_string(total) +
                          " s=" + std::to_string(args.s));
    const Index m = total / args.s;
    if (args.algorithm == "nonmyopic") {
        return select_nonmyopic(ctx, m, args.s, solver);
    }
    if (args.algorithm == "minibatch") {
        if (args.batch < 1) throw ConfigError("minibatch selection needs --batch");
        SelectionConfig cfg;
        cfg.m = m;
        cfg.s = args.s;
        cfg.b = args.batch;
        cfg.batch_strategy = args.batch_strategy == "sequential"
                                 ? BatchStrategy::sequential_blocks
                                 : BatchStrategy::uniform_without_replacement;
        cfg.seed = args.common.seed;
        cfg.solver = solver;
        return select_minibatch(ctx, cfg);
    }
    throw ConfigError("unknown algorithm: " + args.algorithm);
}

inline int cmd_select(const SelectArgs& args) {
    if (args.common.threads > 0) set_thread_count(args.common.threads);
    auto problem = detail::load_problem(args.common);
    KernelContext ctx(problem.candidates, problem.target, problem.kernel);
    const SelectionResult result = run_selection(ctx, args);

    const std::string out_path = args.common.output.empty() ? "result.json" : args.common.output;
    write_result(result, out_path, args.common.format);
    if (!args.trace_csv.empty()) {
        std::ostringstream csv;
        csv << "iteration,points_selected,mmd_squared,cumulative_ms\n";
        double cum = 0.0;
        for (std::size_t i = 0; i < result.trace.size(); ++i) {
            cum += i < result.timings_ms.size() ? result.timings_ms[i] : 0.0;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", result.trace[i]);
            csv << i << "," << (i + 1) * static_cast<std::size_t>(result.s) << "," << buf << ",";
            std::snprintf(buf, sizeof buf, "%.6f", cum);
            csv << buf << "\n";
        }
        detail::write_text(args.trace_csv, csv.str());
    }

    Json extra;
    extra["algorithm"] = args.algorithm;
    extra["points"] = args.points;
    extra["s"] = args.s;
    extra["batch"] = args.batch;
    extra["batch_strategy"] = args.batch_strategy;
    extra["solver"] = args.solver;
    extra["binary"] = args.binary;
    if (args.algorithm == "sdr") {
        extra["rank"] = args.rank;
        extra["draws"] = args.draws;
        extra["sdr_tol"] = args.sdr_tol;
        extra["sdr_max_iter"] = args.sdr_max_iter;
    }
    Json manifest = detail::manifest_for("select", args.common, extra, problem.kernel);
    detail::write_text(out_path + ".manifest.json", manifest.dump(2) + "\n");
    return 0;
}

struct BenchmarkArgs {
    CommonArgs common;
    std::vector<std::string> algorithms{"nonmyopic"};
    Index candidates = 1000;
    Index points = 60;
    std::vector<Index> s_values{1, 2, 4};
    Index batch = 0;
    int seeds = 10;
};

inline int cmd_benchmark(const BenchmarkArgs& args) {
    if (args.common.threads > 0) set_thread_count(args.common.threads);
    if (args.common.mixture.empty())
        throw ConfigError("benchmark needs --mixture as the sampling target");
    const GaussianMixture mix = load_mixture(args.common.mixture);
    const Mode mode = detail::parse_mode(args.common.mode);
    const TargetModel target = TargetModel::mixture(mix, mode);

    const std::string prefix = args.common.output.empty() ? "benchmark" : args.common.output;
    std::ostringstream runs;
    runs << "seed,algorithm,s,b,iteration,points,mmd_squared,cumulative_ms\n";
    std::map<std::pair<std::string, Index>, std::vector<double>> finals;

    for (int seed_idx = 0; seed_idx < args.seeds; ++seed_idx) {
        const std::uint64_t seed = args.common.seed + static_cast<std::uint64_t>(seed_idx);
        Rng rng(seed);
        CandidateSet set;
        set.points.resize(args.candidates, mix.dim());
        for (Index i = 0; i < args.candidates; ++i)
            set.points.row(i) = mix.sample(rng).transpose();
        set.provenance = "sampled(seed=" + std::to_string(seed) + ")";

        KernelSpec kernel;
        kernel.family = detail::parse_family(args.common.kernel);
        if (args.common.lengthscale == "median")
            kernel.lengthscale = median_heuristic(set.points, args.common.median_subsample, seed);
        else {
            double v = 0.0;
            if (!quant::detail::parse_double(args.common.lengthscale, v) || !(v > 0.0))
                throw ConfigError("--lengthscale must be positive or 'median'");
            kernel.lengthscale = v;
        }
        KernelContext ctx(set, target, kernel);

        for (const auto& alg : args.algorithms) {
            for (Index s : args.s_values) {
                if (args.points % s != 0) continue;
                SelectArgs sel;
                sel.common = args.common;
                sel.common.seed = seed;
                sel.algorithm = alg == "myopic" && s != 1 ? "nonmyopic" : alg;
                sel.points = args.points;
                sel.s = sel.algorithm == "myopic" ? 1 : s;
                sel.batch = args.batch;
                if (alg == "myopic" && s != 1) continue;
                const auto result = run_selection(ctx, sel);

                const std::string cell = prefix + "_trace_" + alg + "_s" + std::to_string(s) +
                                         "_seed" + std::to_string(seed_idx) + ".csv";
                write_result(result, cell, "csv");

                double cum = 0.0;
                for (std::size_t i = 0; i < result.trace.size(); ++i) {
                    cum += result.timings_ms[i];
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.17g", result.trace[i]);
                    runs << seed << "," << alg << "," << s << "," << args.batch << "," << i << ","
                         << (i + 1) * static_cast<std::size_t>(result.s) << "," << buf << ",";
                    std::snprintf(buf, sizeof buf, "%.6f", cum);
                    runs << buf << "\n";
                }
                finals[{alg, s}].push_back(result.trace.back());
            }
        }
    }

    detail::write_text(prefix + "_runs.csv", runs.str());
    std::ostringstream summary;
    summary << "algorithm,s,median_final_mmd_squared\n";
    for (const auto& [key, values] : finals) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", detail::median_of(values));
        summary << key.first << "," << key.second << "," << buf << "\n";
    }
    detail::write_text(prefix + "_summary.csv", summary.str());
    return 0;
}

struct DiagnoseArgs {
    CommonArgs common;
    std::string result_path;
};

inline int cmd_diagnose(const DiagnoseArgs& args) {
    if (args.common.threads > 0) set_thread_count(args.common.threads);
    auto problem = detail::load_problem(args.common);
    const SelectionResult result = read_result(args.result_path);
    const DiagnosticReport rep =
        diagnose(problem.candidates, problem.target, problem.kernel, result);

    const Json doc = report_to_json(rep);
    std::cout << "simplex-optimal phi^2: " << rep.phi_squared << " (fw gap " << rep.fw_gap << ", "
              << rep.fw_iterations << " iterations)\n"
              << "C^2_mu: " << rep.c2_mu << "  C^2_n: " << rep.c2_n << "\n"
              << "bound at m=" << rep.iterations << ": " << rep.bound << "\n"
              << "measured MMD^2: " << rep.mmd_squared << "\n"
              << "bound satisfied: " << (rep.satisfied ? "yes" : "no") << "\n";
    if (!args.common.output.empty()) detail::write_text(args.common.output, doc.dump(2) + "\n");
    return 0;
}

// Entry point shared by the binary and the in-process CLI tests.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"greedy quantisation of probability distributions by MMD/KSD minimisation"};
    app.require_subcommand(1);

    SelectArgs sel;
    auto* select = app.add_subcommand("select", "select representative points from a candidate set");
    detail::add_common(select, sel.common, true);
    select->add_option("--algorithm", sel.algorithm, "selection algorithm")
        ->check(CLI::IsMember({"myopic", "nonmyopic", "minibatch", "oneshot", "sdr"}))
        ->envname("QUANT_ALGORITHM");
    select->add_option("--points", sel.points, "total number of points to select")->required();
    select->add_option("--s", sel.s, "points selected per iteration (must divide --points)");
    select->add_option("--batch", sel.batch, "mini-batch size b");
    select->add_option("--batch-strategy", sel.batch_strategy, "mini-batch construction")
        ->check(CLI::IsMember({"uniform", "sequential"}));
    select->add_option("--solver", sel.solver, "subset solver")
        ->check(CLI::IsMember({"auto", "exhaustive", "bnb"}));
    select->add_flag("--binary", sel.binary, "select each candidate at most once");
    select->add_option("--rank", sel.rank, "sdr factor rank (0 = auto)");
    select->add_option("--draws", sel.draws, "sdr rounding draws R");
    select->add_option("--sdr-tol", sel.sdr_tol, "sdr constraint tolerance");
    select->add_option("--sdr-max-iter", sel.sdr_max_iter, "sdr iteration cap");
    select->add_option("--trace-csv", sel.trace_csv, "also write a per-iteration trace CSV");

    BenchmarkArgs bench;
    auto* benchmark =
        app.add_subcommand("benchmark", "seeded grid over algorithms and s, with CSV output");
    detail::add_common(benchmark, bench.common, false);
    benchmark->add_option("--algorithms", bench.algorithms, "algorithms to run");
    benchmark->add_option("--candidates", bench.candidates, "candidates sampled per seed");
    benchmark->add_option("--select", bench.points, "points selected per run");
    benchmark->add_option("--s-values", bench.s_values, "list of s values");
    benchmark->add_option("--batch", bench.batch, "mini-batch size for minibatch cells");
    benchmark->add_option("--seeds", bench.seeds, "number of seeds in the grid");

    DiagnoseArgs diag;
    auto* diagnose_cmd =
        app.add_subcommand("diagnose", "check a finished selection against the error bound");
    detail::add_common(diagnose_cmd, diag.common, true);
    diagnose_cmd->add_option("--result", diag.result_path, "selection result JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ExitCode::usage);
    }

    try {
        if (select->parsed()) return cmd_select(sel);
        if (benchmark->parsed()) return cmd_benchmark(bench);
        if (diagnose_cmd->parsed()) return cmd_diagnose(diag);
        return static_cast<int>(ExitCode::usage);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::usage);
    } catch (const SizeGuardError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::size_guard);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    }
}

}  // namespace quant::cli
