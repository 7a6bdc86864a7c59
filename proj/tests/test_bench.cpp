#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "evomir/bench.hpp"

using namespace evomir;
using namespace evomir::bench;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::filesystem::path kCorpus = std::filesystem::path(EVOMIR_SOURCE_DIR) / "corpus" / "v1";

// Plain recurrence, written out independently of the library.
std::vector<std::vector<int>> dp(const std::string& a, const std::string& b) {
    std::vector<std::vector<int>> H(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int s = a[i - 1] == b[j - 1] ? 2 : -2;
            H[i][j] = std::max({0, H[i - 1][j - 1] + s, H[i - 1][j] - 1, H[i][j - 1] - 1});
        }
    }
    return H;
}

vm::ExecutionResult run(const mir::Program& p, const TestCase& t, std::uint64_t seed = 0) {
    return vm::launch(p, t.launch, {t.params, t.inputs, seed, UINT64_MAX});
}

std::vector<std::int32_t> occupancy_out(const vm::ExecutionResult& r, std::size_t cells) {
    const auto& o = r.outputs.at("occ_out");
    return {o.begin(), o.begin() + static_cast<std::ptrdiff_t>(cells)};
}

}  // namespace

TEST(Scoring, Defaults) {
    ScoringParams p;
    EXPECT_EQ(p.match, 2);
    EXPECT_EQ(p.mismatch, -2);
    EXPECT_EQ(p.gap, -1);
    EXPECT_NO_THROW(p.check());
    EXPECT_THROW((ScoringParams{0, -2, -1}.check()), std::invalid_argument);
    EXPECT_THROW((ScoringParams{2, 1, -1}.check()), std::invalid_argument);
}

TEST(SwReference, WorkedExamplePair) {
    auto r = sw_reference("ATGCT", "AGCT");
    EXPECT_EQ(r.best, 7);
    EXPECT_EQ(r.H, dp("ATGCT", "AGCT"));
    EXPECT_EQ(r.alignment.a, "ATGCT");
    EXPECT_EQ(r.alignment.b, "A-GCT");
    EXPECT_EQ(r.alignment.a_begin, 0u);
    EXPECT_EQ(r.alignment.a_end, 5u);
    EXPECT_EQ(r.alignment.b_begin, 0u);
    EXPECT_EQ(r.alignment.b_end, 4u);
}

TEST(SwReference, MatrixPropertiesOnRandomPairs) {
    Rng rng(21);
    for (int k = 0; k < 50; ++k) {
        auto a = random_dna(rng, 1 + rng.below(40));
        auto b = random_dna(rng, 1 + rng.below(40));
        auto r = sw_reference(a, b);
        const auto H = dp(a, b);
        ASSERT_EQ(r.H, H);
        int best = 0;
        for (const auto& row : H) best = std::max(best, *std::max_element(row.begin(), row.end()));
        EXPECT_EQ(r.best, best);
        EXPECT_EQ(r.H[r.best_i][r.best_j], best);
        for (std::size_t j = 0; j <= b.size(); ++j) EXPECT_EQ(H[0][j], 0);
        EXPECT_EQ(sw_reference(b, a).best, r.best);
        // The traced alignment scores exactly `best`.
        int score = 0;
        for (std::size_t i = 0; i < r.alignment.a.size(); ++i) {
            const char x = r.alignment.a[i], y = r.alignment.b[i];
            score += (x == '-' || y == '-') ? -1 : (x == y ? 2 : -2);
        }
        EXPECT_EQ(score, r.best);
        std::string ua = r.alignment.a, ub = r.alignment.b;
        ua.erase(std::remove(ua.begin(), ua.end(), '-'), ua.end());
        ub.erase(std::remove(ub.begin(), ub.end(), '-'), ub.end());
        EXPECT_EQ(ua, a.substr(r.alignment.a_begin, r.alignment.a_end - r.alignment.a_begin));
        EXPECT_EQ(ub, b.substr(r.alignment.b_begin, r.alignment.b_end - r.alignment.b_begin));
    }
}

TEST(SwReference, IdenticalSequences) {
    for (std::size_t L : {1u, 5u, 33u}) {
        Rng rng(L);
        auto a = random_dna(rng, L);
        EXPECT_EQ(sw_reference(a, a).best, static_cast<int>(2 * L));
    }
}

TEST(SwReference, RejectsNonDna) {
    EXPECT_THROW(sw_reference("ACGN", "ACG"), std::invalid_argument);
    EXPECT_THROW(encode_dna("acg"), std::invalid_argument);
    EXPECT_EQ(encode_dna("ACGT"), (std::vector<std::int32_t>{0, 1, 2, 3}));
}

TEST(SwKernels, MatchReferenceAndTunedIsCheaper) {
    auto naive = sw_kernel_naive();
    auto tuned = sw_kernel_tuned();
    Rng rng(5);
    double naive_cycles = 0, tuned_cycles = 0;
    for (int k = 0; k < 12; ++k) {
        auto a = random_dna(rng, 4 + rng.below(40));
        auto b = random_dna(rng, 4 + rng.below(70));
        auto t = sw_test("p", Partition::Fitness, a, b);
        auto rn = run_test(naive, t, {}, vm::CostModel::defaults());
        auto rt = run_test(tuned, t, {}, vm::CostModel::defaults());
        EXPECT_TRUE(rn.passed) << rn.failure;
        EXPECT_TRUE(rt.passed) << rt.failure;
        EXPECT_LT(rt.cycles, rn.cycles);
        naive_cycles += rn.cycles;
        tuned_cycles += rt.cycles;
    }
    EXPECT_GE(naive_cycles, 3 * tuned_cycles);
}

TEST(SwKernels, WorkedExamplePairInTheVm) {
    auto t = sw_test("example", Partition::Fitness, "ATGCT", "AGCT");
    for (auto* p : {&sw_kernel_naive, &sw_kernel_tuned}) {
        auto r = run((*p)(), t);
        ASSERT_TRUE(r.ok());
        EXPECT_EQ(r.outputs.at("best")[0], 7);
        const auto H = dp("ATGCT", "AGCT");
        for (std::size_t i = 0; i < H.size(); ++i)
            for (std::size_t j = 0; j < H[i].size(); ++j) EXPECT_EQ(r.outputs.at("score")[i * 5 + j], H[i][j]);
    }
}

TEST(SwKernels, ClearLoopRemovalIsValidAndFaster) {
    auto naive = sw_kernel_naive();
    auto edits = sw_clear_loop_removal(naive);
    ASSERT_EQ(edits.size(), 3u);
    auto m = evo::materialize(naive, edits);
    ASSERT_TRUE(std::holds_alternative<mir::Program>(m));
    Rng rng(8);
    for (int k = 0; k < 5; ++k) {
        auto t = sw_test("p", Partition::Fitness, random_dna(rng, 30), random_dna(rng, 40));
        auto base = run_test(naive, t, {}, vm::CostModel::defaults());
        auto fast = run_test(std::get<mir::Program>(m), t, {}, vm::CostModel::defaults());
        EXPECT_TRUE(fast.passed) << fast.failure;
        EXPECT_LT(fast.cycles, base.cycles);
    }
}

TEST(SwKernels, QuadEditsTargetExpectedBlocks) {
    auto tuned = sw_kernel_tuned();
    auto quad = sw_quad_edits(tuned);
    ASSERT_EQ(quad.size(), 4u);
    std::map<std::uint64_t, mir::InstId> target;
    for (const auto& e : quad) {
        EXPECT_EQ(e.kind, evo::EditKind::OperandReplace);
        target[e.uid] = e.target;
    }
    EXPECT_EQ(target.at(6), terminator_of(tuned, "sync"));
    EXPECT_EQ(target.at(8), terminator_of(tuned, "body"));
    EXPECT_EQ(target.at(10), terminator_of(tuned, "xa_done"));
    EXPECT_EQ(target.at(5), terminator_of(tuned, "pub_edge_chk"));
    EXPECT_THROW(terminator_of(tuned, "no_such_block"), std::exception);
    EXPECT_THROW(value_id(tuned, "no_such_value"), std::exception);
}

TEST(Grid, PadCrop) {
    Grid g(3, 2);
    std::iota(g.cells.begin(), g.cells.end(), 1);
    auto p = pad_grid(g);
    EXPECT_EQ(p.width, 5);
    EXPECT_EQ(p.height, 4);
    EXPECT_EQ(p.cells.size(), 20u);
    for (int x = 0; x < 5; ++x) EXPECT_EQ(p.at(x, 0), 0);
    EXPECT_EQ(p.at(1, 1), 1);
    EXPECT_EQ(crop_grid(p), g);
    auto z = pad_grid(Grid(0, 0));
    EXPECT_EQ(z.width, 2);
    EXPECT_EQ(z.height, 2);
    EXPECT_EQ(z.cells, std::vector<std::int32_t>(4, 0));
}

TEST(Diffusion, UniformStaysUniform) {
    Grid g(7, 5, 1000);
    EXPECT_EQ(diffusion_reference(g, 10, 128), g);
}

TEST(Diffusion, ConservesTotalExactly) {
    Rng rng(3);
    for (int k = 0; k < 10; ++k) {
        Grid g(1 + static_cast<int>(rng.below(20)), 1 + static_cast<int>(rng.below(20)));
        for (auto& c : g.cells) c = static_cast<std::int32_t>(rng.below(100000));
        auto out = diffusion_reference(g, 1 + static_cast<int>(rng.below(8)), 1 + static_cast<int>(rng.below(256)));
        EXPECT_EQ(total_concentration(out), total_concentration(g));
        for (auto c : out.cells) EXPECT_GE(c, 0);
    }
}

TEST(Diffusion, ImpulseSpreadsWithFourFoldSymmetry) {
    Grid g(9, 9);
    g.at(4, 4) = 1 << 20;
    auto out = diffusion_reference(g, 3, 200);
    for (int y = 0; y < 9; ++y) {
        for (int x = 0; x < 9; ++x) {
            EXPECT_EQ(out.at(x, y), out.at(8 - x, y));
            EXPECT_EQ(out.at(x, y), out.at(x, 8 - y));
            EXPECT_EQ(out.at(x, y), out.at(y, x));
        }
    }
    EXPECT_GT(out.at(4, 3), 0);
    EXPECT_LT(out.at(4, 4), g.at(4, 4));
}

TEST(Diffusion, OneByOneGridIsUnchanged) {
    Grid g(1, 1, 777);
    EXPECT_EQ(diffusion_reference(g, 5, 128), g);
    for (bool padded : {false, true}) {
        auto t = diffusion_test("one", Partition::Fitness, g, 5, 128, padded);
        auto r = run(padded ? grid_diffusion_padded() : grid_diffusion_checked(), t);
        ASSERT_TRUE(r.ok());
        EXPECT_EQ(r.outputs.at("grid_out")[0], 777);
    }
    EXPECT_THROW(diffusion_reference(g, 1, 0), std::invalid_argument);
    EXPECT_THROW(diffusion_reference(g, 1, 257), std::invalid_argument);
}

TEST(Diffusion, KernelsMatchReferenceAndEachOther) {
    Rng rng(12);
    for (int k = 0; k < 6; ++k) {
        Grid g(2 + static_cast<int>(rng.below(20)), 2 + static_cast<int>(rng.below(20)));
        for (auto& c : g.cells) c = static_cast<std::int32_t>(rng.below(60000));
        const auto want = diffusion_reference(g, 4, 128);
        auto rc = run(grid_diffusion_checked(), diffusion_test("c", Partition::Fitness, g, 4, 128, false));
        auto rp = run(grid_diffusion_padded(), diffusion_test("p", Partition::Fitness, g, 4, 128, true));
        ASSERT_TRUE(rc.ok());
        ASSERT_TRUE(rp.ok());
        const auto n = static_cast<std::ptrdiff_t>(g.cells.size());
        std::vector<std::int32_t> oc(rc.outputs.at("grid_out").begin(), rc.outputs.at("grid_out").begin() + n);
        std::vector<std::int32_t> op(rp.outputs.at("grid_out").begin(), rp.outputs.at("grid_out").begin() + n);
        EXPECT_EQ(oc, want.cells);
        EXPECT_EQ(op, want.cells);
        const auto cmp = static_cast<std::size_t>(mir::Category::Compare);
        EXPECT_LT(rp.category_counts[cmp], rc.category_counts[cmp]);
    }
}

TEST(Tcell, ConservesAgentsAndIsDeterministic) {
    Rng rng(4);
    const int w = 10, h = 10;
    auto occ = random_occupancy(rng, w, h, 30);
    auto t = tcell_test("w", Partition::Fitness, occ, w, h, 150, {1}, 3, 1);
    auto a = run(tcell_walk(), t, 31);
    auto b = run(tcell_walk(), t, 31);
    ASSERT_TRUE(a.ok());
    EXPECT_EQ(a.outputs, b.outputs);
    auto out = occupancy_out(a, w * h);
    auto ids = out;
    std::erase(ids, 0);
    std::sort(ids.begin(), ids.end());
    auto want = occ;
    std::erase(want, 0);
    std::sort(want.begin(), want.end());
    EXPECT_EQ(ids, want);
    EXPECT_NE(out, occ);
}

TEST(Tcell, ReferenceConservesAgents) {
    Rng rng(9);
    auto occ = random_occupancy(rng, 12, 7, 20);
    auto r = tcell_reference(occ, 12, 7, 300, rng);
    EXPECT_EQ(std::count_if(r.occupancy.begin(), r.occupancy.end(), [](int v) { return v != 0; }), 20);
    std::int64_t visits = std::accumulate(r.visits.begin(), r.visits.end(), std::int64_t{0});
    EXPECT_EQ(visits, 20 * 300);
}

TEST(Tcell, TwoAgentCollisionFollowsStoreOrder) {
    // Agents 1 and 2 sit in cells 0 and 2 of a 3x1 strip; find a seed where
    // agent 1 steps right and agent 2 steps left, so both bid for cell 1.
    std::uint64_t seed = 0;
    for (; seed < 10000; ++seed) {
        if ((vm::rand_stream(seed, 0, 0, 0) & 3) == 1 && (vm::rand_stream(seed, 0, 2, 0) & 3) == 0) break;
    }
    ASSERT_LT(seed, 10000u);
    auto t = tcell_test("pair", Partition::Fitness, {1, 0, 2}, 3, 1, 1, {seed}, 3, 1);
    auto r = run(tcell_walk(), t, seed);
    ASSERT_TRUE(r.ok());
    // Lanes 0 and 2 store their bids in the same turn; lane 2 lands last and
    // wins, so agent 2 moves and agent 1 stays.
    EXPECT_EQ(occupancy_out(r, 3), (std::vector<std::int32_t>{1, 2, 0}));
}

TEST(Tcell, StochasticValidatorDiscriminates) {
    auto suite = default_suite("tcell_walk");
    ASSERT_EQ(suite.validator.mode, Validator::Mode::Stochastic);
    const auto* t = suite.partition(Partition::Fitness).front();
    EXPECT_GE(t->seeds.size(), 3u);
    auto ok = run_test(tcell_walk(), *t, suite.validator, vm::CostModel::defaults());
    EXPECT_TRUE(ok.passed) << ok.failure;
    auto bad = run_test(tcell_walk_biased(), *t, suite.validator, vm::CostModel::defaults());
    EXPECT_FALSE(bad.passed);
}

TEST(Suites, SeedDeterministicAndShaped) {
    SwSuiteConfig cfg;
    EXPECT_EQ(cfg.pairs, 64);
    EXPECT_EQ(cfg.min_len, 16);
    EXPECT_EQ(cfg.max_len, 64);
    EXPECT_EQ(cfg.heldout_pairs, 16);
    EXPECT_EQ(cfg.heldout_min, 128);
    EXPECT_EQ(cfg.heldout_max, 256);
    cfg.pairs = 6;
    cfg.heldout_pairs = 2;
    auto a = gen_sw_suite(cfg), b = gen_sw_suite(cfg);
    EXPECT_EQ(suite_to_json(a), suite_to_json(b));
    EXPECT_EQ(a.partition(Partition::Fitness).size(), 6u);
    EXPECT_EQ(a.partition(Partition::HeldOut).size(), 2u);
    for (const auto* t : a.partition(Partition::HeldOut)) {
        EXPECT_GE(t->params[0], 128);
        EXPECT_LE(t->params[0], 256);
    }
    cfg.seed = 8;
    EXPECT_NE(suite_to_json(gen_sw_suite(cfg)), suite_to_json(a));

    GridSuiteConfig g;
    g.grids = 2;
    g.heldout_grids = 1;
    auto gs = gen_grid_suite(g);
    const auto* fit = gs.partition(Partition::Fitness).front();
    const auto* held = gs.partition(Partition::HeldOut).front();
    EXPECT_GT(held->params[0] * held->params[1], fit->params[0] * fit->params[1]);
    EXPECT_EQ(suite_to_json(gs), suite_to_json(gen_grid_suite(g)));
}

TEST(Suites, JsonRoundTripRecomputesExpectations) {
    for (const auto& name : kernel_names()) {
        auto s = default_suite(name);
        auto j = suite_to_json(s);
        auto back = suite_from_json(j);
        ASSERT_EQ(back.tests.size(), s.tests.size()) << name;
        EXPECT_EQ(back.validator.mode, s.validator.mode);
        for (std::size_t i = 0; i < s.tests.size(); ++i) {
            EXPECT_EQ(back.tests[i].name, s.tests[i].name);
            EXPECT_EQ(back.tests[i].inputs, s.tests[i].inputs);
            EXPECT_EQ(back.tests[i].expected, s.tests[i].expected);
            EXPECT_EQ(back.tests[i].params, s.tests[i].params);
        }
        EXPECT_EQ(suite_to_json(back), j);
    }
}

TEST(Suites, DefaultSuitesPassOnTheirKernels) {
    for (const auto& name : kernel_names()) {
        if (name == "sw_naive") continue;  // covered by the acceptance run
        auto s = default_suite(name);
        auto p = kernel(name);
        for (const auto& t : s.tests) {
            auto r = run_test(p, t, s.validator, vm::CostModel::defaults());
            EXPECT_TRUE(r.passed) << name << "/" << t.name << ": " << r.failure;
        }
    }
}

TEST(Corpus, FilesMatchBuiltInKernels) {
    auto names = kernel_names();
    EXPECT_EQ(names, (std::vector<std::string>{"sw_naive", "sw_tuned", "grid_checked", "grid_padded", "tcell_walk"}));
    for (const auto& n : names) {
        EXPECT_EQ(slurp(kCorpus / (n + ".ir")), std::string(kernel_source(n))) << n;
    }
    EXPECT_THROW(kernel_source("nope"), std::out_of_range);
}

TEST(Corpus, SuiteFilesMatchGenerators) {
    for (const auto& n : kernel_names()) {
        auto j = nlohmann::json::parse(slurp(kCorpus / "suites" / (n + ".json")));
        EXPECT_EQ(j, suite_to_json(default_suite(n))) << n;
    }
    auto small = nlohmann::json::parse(slurp(kCorpus / "suites" / "sw_small.json"));
    auto s = suite_from_json(small);
    EXPECT_EQ(s.partition(Partition::Fitness).size(), 8u);
    EXPECT_EQ(s.partition(Partition::HeldOut).size(), 2u);
}

TEST(DiffusionGuard, DroppedGuardPassesSmallGridFaultsLarge) {
    auto checked = grid_diffusion_checked();
    auto e = diffusion_drop_down_guard(checked);
    auto m = evo::materialize(checked, {e});
    ASSERT_TRUE(std::holds_alternative<mir::Program>(m));
    const auto& p = std::get<mir::Program>(m);
    auto suite = default_suite("grid_checked");
    for (const auto* t : suite.partition(Partition::Fitness)) {
        auto r = run_test(p, *t, suite.validator, vm::CostModel::defaults());
        EXPECT_TRUE(r.passed) << t->name << ": " << r.failure;
    }
    const auto* held = suite.partition(Partition::HeldOut).front();
    auto r = run(p, *held);
    EXPECT_EQ(r.status, vm::Status::Fault);
    EXPECT_EQ(r.fault, vm::FaultKind::OutOfBounds);
}
