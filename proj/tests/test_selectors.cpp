#include <catch2/catch_amalgamated.hpp>

#include "quant/selectors.hpp"
#include "support.hpp"

using namespace quant;
using Catch::Approx;

namespace {

struct Instance {
    CandidateSet set;
    TargetModel target = TargetModel::score_only(Matrix::Ones(1, 1));
    KernelSpec kernel;
};

Instance random_instance(Rng& rng, Index n, Mode mode) {
    Instance inst;
    const auto mix = support::random_mixture(rng, 2, 4);
    inst.set.points = support::sample_points(mix, n, rng);
    inst.target = TargetModel::mixture(mix, mode);
    inst.kernel = {mode == Mode::mmd ? KernelFamily::squared_exponential
                                     : KernelFamily::inverse_multiquadric,
                   0.4 + uniform01(rng)};
    return inst;
}

void check_trace_consistency(const SelectionResult& res, const KernelContext& ctx) {
    std::vector<Index> so_far;
    for (std::size_t i = 0; i < res.pi.size(); ++i) {
        so_far.insert(so_far.end(), res.pi[i].begin(), res.pi[i].end());
        const double scratch = support::mmd2_uniform_by_loop(so_far, ctx);
        const double clamped = scratch < 0.0 ? 0.0 : scratch;
        REQUIRE(res.trace[i] == Approx(clamped).epsilon(1e-9).margin(1e-12));
    }
}

}  // namespace

TEST_CASE("myopic selection") {
    Rng rng(61);

    SECTION("first ksd pick minimises half the diagonal") {
        const auto inst = random_instance(rng, 40, Mode::ksd);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        const auto res = select_myopic(ctx, 1);
        Index expect = 0;
        double best = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < ctx.size(); ++j) {
            const double val = 0.5 * ctx.eval(j, j);
            if (val < best) {
                best = val;
                expect = j;
            }
        }
        REQUIRE(res.pi.size() == 1);
        CHECK(res.pi[0][0] == expect);
        check_trace_consistency(res, ctx);
    }
    SECTION("single candidate is forced repeatedly") {
        Instance inst = random_instance(rng, 1, Mode::mmd);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        const auto res = select_myopic(ctx, 5);
        for (const auto& row : res.pi) CHECK(row == std::vector<Index>{0});
    }
    SECTION("rejects an empty iteration count") {
        Instance inst = random_instance(rng, 5, Mode::mmd);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        CHECK_THROWS_AS(select_myopic(ctx, 0), ConfigError);
    }
}

TEST_CASE("nonmyopic selection with s=1 equals myopic exactly") {
    Rng rng(67);
    for (int trial = 0; trial < 12; ++trial) {
        const Mode mode = trial % 2 == 0 ? Mode::mmd : Mode::ksd;
        const Index n = 10 + static_cast<Index>(uniform_below(rng, 80));
        const Index m = 1 + static_cast<Index>(uniform_below(rng, 12));
        const auto inst = random_instance(rng, n, mode);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        const auto a = select_myopic(ctx, m);
        const auto b = select_nonmyopic(ctx, m, 1);
        REQUIRE(a.pi == b.pi);
        for (std::size_t i = 0; i < a.trace.size(); ++i) REQUIRE(a.trace[i] == b.trace[i]);
        check_trace_consistency(b, ctx);
    }
}

TEST_CASE("nonmyopic selection") {
    Rng rng(71);

    SECTION("binary one-shot row selects everything when s = n") {
        const auto inst = random_instance(rng, 6, Mode::mmd);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        SolverOptions opts;
        opts.binary = true;
        const auto res = select_nonmyopic(ctx, 1, 6, opts);
        REQUIRE(res.pi.size() == 1);
        CHECK(res.pi[0] == std::vector<Index>{0, 1, 2, 3, 4, 5});
    }
    SECTION("two-cluster toy picks one point per cluster") {
        GaussianMixture mix;
        for (double centre : {-2.0, 2.0}) {
            GaussianMixture::Component c;
            c.weight = 0.5;
            c.mean = Vector::Constant(1, centre);
            c.var_diag = Vector::Constant(1, 0.05);
            mix.components.push_back(c);
        }
        CandidateSet set;
        set.points.resize(6, 1);
        set.points << -2.1, -2.0, -1.9, 1.9, 2.0, 2.1;
        const auto target = TargetModel::mixture(mix, Mode::mmd);
        KernelSpec se{KernelFamily::squared_exponential, 0.5};
        KernelContext ctx(set, target, se);

        const auto res = select_nonmyopic(ctx, 1, 2);
        REQUIRE(res.pi.size() == 1);
        const bool split_clusters = (res.pi[0][0] < 3) != (res.pi[0][1] < 3);
        CHECK(split_clusters);

        // exhaustive oracle over all 21 multisets of size 2
        double best = std::numeric_limits<double>::infinity();
        std::vector<Index> best_pair;
        for (Index a = 0; a < 6; ++a)
            for (Index b = a; b < 6; ++b) {
                const double v = support::mmd2_uniform_by_loop({a, b}, ctx);
                if (v < best) {
                    best = v;
                    best_pair = {a, b};
                }
            }
        CHECK(res.pi[0] == best_pair);
        CHECK(res.trace[0] == Approx(best).epsilon(1e-9));
    }
    SECTION("trace matches scratch recomputation for s=3") {
        const auto inst = random_instance(rng, 30, Mode::ksd);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        const auto res = select_nonmyopic(ctx, 4, 3);
        REQUIRE(res.pi.size() == 4);
        for (const auto& row : res.pi) REQUIRE(row.size() == 3);
        check_trace_consistency(res, ctx);
    }
}

TEST_CASE("minibatch selection") {
    Rng rng(73);

    SECTION("full batch reproduces the nonmyopic path exactly") {
        for (int trial = 0; trial < 4; ++trial) {
            const Mode mode = trial % 2 == 0 ? Mode::mmd : Mode::ksd;
            const auto inst = random_instance(rng, 25, mode);
            KernelContext ctx(inst.set, inst.target, inst.kernel);
            SelectionConfig cfg;
            cfg.m = 5;
            cfg.s = 2;
            cfg.b = 25;
            cfg.seed = 17 + static_cast<std::uint64_t>(trial);
            const auto full = select_minibatch(ctx, cfg);
            const auto ref = select_nonmyopic(ctx, 5, 2);
            REQUIRE(full.pi == ref.pi);
        }
    }
    SECTION("fixed seed reproduces the schedule and selection") {
        const auto inst = random_instance(rng, 50, Mode::mmd);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        SelectionConfig cfg;
        cfg.m = 6;
        cfg.s = 2;
        cfg.b = 10;
        cfg.seed = 99;
        const auto a = select_minibatch(ctx, cfg);
        const auto b = select_minibatch(ctx, cfg);
        REQUIRE(a.pi == b.pi);
        cfg.seed = 100;
        const auto c = select_minibatch(ctx, cfg);
        CHECK(a.pi != c.pi);
    }
    SECTION("sequential blocks walk the candidate order") {
        const auto schedule = BatchSchedule::build(10, 3, 4, BatchStrategy::sequential_blocks, 0);
        REQUIRE(schedule.batches.size() == 3);
        CHECK(schedule.batches[0] == std::vector<Index>{0, 1, 2, 3});
        CHECK(schedule.batches[1] == std::vector<Index>{4, 5, 6, 7});
        CHECK(schedule.batches[2] == std::vector<Index>{0, 1, 8, 9});  // wraps, sorted
    }
    SECTION("batch size guards") {
        const auto inst = random_instance(rng, 10, Mode::mmd);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        SelectionConfig cfg;
        cfg.m = 2;
        cfg.s = 3;
        cfg.b = 2;  // b < s
        CHECK_THROWS_AS(select_minibatch(ctx, cfg), ConfigError);
        cfg.b = 11;  // b > n
        CHECK_THROWS_AS(select_minibatch(ctx, cfg), ConfigError);
    }
    SECTION("mini-batch quality stays within the recorded envelope") {
        // Envelope fixed after first measurement: across 10 seeds the final
        // mini-batch discrepancy stayed within 3x the full-batch value.
        const auto mix = support::random_mixture(rng, 2, 4);
        CandidateSet set;
        set.points = support::sample_points(mix, 200, rng);
        const auto target = TargetModel::mixture(mix, Mode::mmd);
        KernelSpec se{KernelFamily::squared_exponential, 0.5};
        KernelContext ctx(set, target, se);
        const auto full = select_nonmyopic(ctx, 10, 2);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            SelectionConfig cfg;
            cfg.m = 10;
            cfg.s = 2;
            cfg.b = 20;
            cfg.seed = seed;
            const auto mini = select_minibatch(ctx, cfg);
            REQUIRE(mini.trace.back() <= 3.0 * full.trace.back());
        }
    }
}

TEST_CASE("oneshot selection") {
    Rng rng(79);

    SECTION("m=1 equals the first myopic pick") {
        const auto inst = random_instance(rng, 30, Mode::ksd);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        const auto one = select_oneshot(ctx, 1);
        const auto myo = select_myopic(ctx, 1);
        REQUIRE(one.pi.size() == 1);
        CHECK(one.pi[0] == myo.pi[0]);
    }
    SECTION("binary n=3 m=3 is forced") {
        const auto inst = random_instance(rng, 3, Mode::mmd);
        KernelContext ctx(inst.set, inst.target, inst.kernel);
        SolverOptions opts;
        opts.binary = true;
        const auto res = select_oneshot(ctx, 3, opts);
        CHECK(res.pi[0] == std::vector<Index>{0, 1, 2});
    }
    SECTION("dominates sequential selection at equal point counts") {
        for (int trial = 0; trial < 10; ++trial) {
            const Mode mode = trial % 2 == 0 ? Mode::mmd : Mode::ksd;
            const Index n = 4 + static_cast<Index>(uniform_below(rng, 9));
            const auto inst = random_instance(rng, n, mode);
            KernelContext ctx(inst.set, inst.target, inst.kernel);
            const auto one = select_oneshot(ctx, 4);
            for (auto [m, s] : {std::pair<Index, Index>{4, 1}, {2, 2}}) {
                const auto seq = select_nonmyopic(ctx, m, s);
                REQUIRE(one.trace.back() <=
                        seq.trace.back() + 1e-12 * std::max(1.0, seq.trace.back()));
            }
        }
    }
}
