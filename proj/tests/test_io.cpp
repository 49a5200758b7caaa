#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "quant/io.hpp"
#include "support.hpp"

using namespace quant;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("quant_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p.string();
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("candidate loading") {
    TempDir tmp;

    SECTION("plain two-point file") {
        const auto set = load_candidates(tmp.file("a.csv", "0,0\n1,1\n"));
        CHECK(set.size() == 2);
        CHECK(set.dim() == 2);
        CHECK(set.points(1, 1) == 1.0);
    }
    SECTION("header row is skipped") {
        const auto set = load_candidates(tmp.file("b.csv", "x1,x2\n0,0\n1,1\n"));
        CHECK(set.size() == 2);
        CHECK(set.dim() == 2);
    }
    SECTION("ragged rows are rejected with the line number") {
        CHECK_THROWS_WITH(load_candidates(tmp.file("c.csv", "0,0\n1\n")),
                          Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("non-finite values are rejected with the line number") {
        CHECK_THROWS_WITH(load_candidates(tmp.file("d.csv", "0,0\nnan,1\n")),
                          Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("score shape mismatch names both shapes") {
        const auto points = tmp.file("p.csv", "0,0\n1,1\n");
        const auto scores = tmp.file("s.csv", "0,0\n1,1\n2,2\n");
        CHECK_THROWS_WITH(load_candidates(points, "csv", scores),
                          Catch::Matchers::ContainsSubstring("3 rows") &&
                              Catch::Matchers::ContainsSubstring("2 rows"));
    }
    SECTION("scientific notation and negatives parse") {
        const auto set = load_candidates(tmp.file("e.csv", "1e-3,-2.5E2\n-0.25,+4\n"));
        CHECK(set.points(0, 0) == Approx(1e-3));
        CHECK(set.points(0, 1) == Approx(-250.0));
    }
    SECTION("empty file is rejected") {
        CHECK_THROWS_AS(load_candidates(tmp.file("f.csv", "")), DataError);
    }
}

TEST_CASE("mixture documents") {
    TempDir tmp;
    const std::string doc = R"({"d": 2, "components": [
        {"weight": 0.25, "mean": [0, 0], "var_diag": [1, 1]},
        {"weight": 0.75, "mean": [2, -1], "var_diag": [0.5, 0.2]}
    ]})";

    SECTION("round trip") {
        const auto mix = load_mixture(tmp.file("m.json", doc));
        CHECK(mix.components.size() == 2);
        CHECK(mix.components[1].weight == 0.75);
        const auto again = mixture_from_json(mixture_to_json(mix));
        CHECK(again.components[1].mean[1] == -1.0);
    }
    SECTION("invalid weight sum is rejected") {
        const std::string bad = R"({"d": 1, "components": [
            {"weight": 0.6, "mean": [0], "var_diag": [1]}]})";
        CHECK_THROWS_AS(load_mixture(tmp.file("bad.json", bad)), DataError);
    }
    SECTION("dimension mismatch is rejected") {
        const std::string bad = R"({"d": 2, "components": [
            {"weight": 1.0, "mean": [0], "var_diag": [1]}]})";
        CHECK_THROWS_AS(load_mixture(tmp.file("bad2.json", bad)), DataError);
    }
    SECTION("malformed json is a data error") {
        CHECK_THROWS_AS(load_mixture(tmp.file("bad3.json", "{not json")), DataError);
    }
}

TEST_CASE("result round trip") {
    TempDir tmp;
    SelectionResult res;
    res.pi = {{3, 1}, {0, 2}};
    res.trace = {0.5, 0.25};
    res.timings_ms = {1.5, 2.0};
    res.algorithm = Algorithm::nonmyopic;
    res.mode = Mode::mmd;
    res.m = 2;
    res.s = 2;
    res.kernel = "se";
    res.lengthscale = 0.7;

    SECTION("json keeps the index matrix intact") {
        const auto path = tmp.file("r.json");
        write_result(res, path, "json");
        const auto loaded = read_result(path);
        REQUIRE(loaded.pi == res.pi);
        REQUIRE(loaded.trace == res.trace);
    }
    SECTION("json key order is stable") {
        const std::string dumped = result_to_json(res).dump();
        const auto pos_pi = dumped.find("\"pi\"");
        const auto pos_trace = dumped.find("\"trace\"");
        const auto pos_timings = dumped.find("\"timings_ms\"");
        const auto pos_config = dumped.find("\"config\"");
        REQUIRE(pos_pi < pos_trace);
        REQUIRE(pos_trace < pos_timings);
        REQUIRE(pos_timings < pos_config);
    }
    SECTION("csv trace is cumulative in time") {
        const auto path = tmp.file("r.csv");
        write_result(res, path, "csv");
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        REQUIRE(line == "iteration,chosen,mmd_squared,cumulative_ms");
        double prev = -1.0;
        while (std::getline(in, line)) {
            const auto comma = line.rfind(',');
            const double cum = std::stod(line.substr(comma + 1));
            REQUIRE(cum >= prev);
            prev = cum;
        }
        REQUIRE(prev >= 3.49);  // 1.5 + 2.0 accumulated
    }
    SECTION("semicolon-joined indices") {
        const auto path = tmp.file("r2.csv");
        write_result(res, path, "csv");
        std::ifstream in(path);
        std::string header, first;
        std::getline(in, header);
        std::getline(in, first);
        CHECK(first.find("3;1") != std::string::npos);
    }
}

TEST_CASE("diagnostics") {
    Rng rng(211);
    KernelSpec se{KernelFamily::squared_exponential, 0.8};
    KernelSpec imq{KernelFamily::inverse_multiquadric, 1.0};

    SECTION("ksd mode reports a zero double integral") {
        const auto mix = support::standard_gaussian(2);
        CandidateSet set;
        set.points = support::sample_points(mix, 20, rng);
        const auto target = TargetModel::mixture(mix, Mode::ksd);
        KernelContext ctx(set, target, imq);
        const auto res = select_myopic(ctx, 5);
        const auto rep = diagnose(set, target, imq, res);
        CHECK(rep.c2_mu == 0.0);
        CHECK(rep.bound >= rep.phi_squared);
    }
    SECTION("single candidate pins the weights") {
        const auto mix = support::standard_gaussian(1);
        CandidateSet set;
        set.points = Matrix::Constant(1, 1, 0.3);
        const auto target = TargetModel::mixture(mix, Mode::mmd);
        KernelContext ctx(set, target, se);
        const auto res = select_myopic(ctx, 3);
        const auto rep = diagnose(set, target, se, res);
        const double k00 = ctx.eval(0, 0);
        const double h0 = ctx.kernel_mean(0);
        CHECK(rep.phi_squared == Approx(k00 - 2.0 * h0 + ctx.c2()).epsilon(1e-12));
        CHECK(rep.satisfied);
    }
    SECTION("tampered indices are a data error") {
        const auto mix = support::standard_gaussian(1);
        CandidateSet set;
        set.points = support::sample_points(mix, 10, rng);
        const auto target = TargetModel::mixture(mix, Mode::mmd);
        KernelContext ctx(set, target, se);
        auto res = select_myopic(ctx, 3);
        res.pi[1][0] = 10;  // out of range
        CHECK_THROWS_AS(diagnose(set, target, se, res), DataError);
    }
}

TEST_CASE("file digest is stable") {
    TempDir tmp;
    const auto path = tmp.file("x.bin", "some bytes");
    const auto a = file_digest(path);
    const auto b = file_digest(path);
    REQUIRE(a == b);
    CHECK(a.rfind("fnv1a64:", 0) == 0);
    const auto other = file_digest(tmp.file("y.bin", "other bytes"));
    CHECK(a != other);
}
