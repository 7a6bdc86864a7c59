#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "evomir/bench.hpp"
#include "evomir/evo.hpp"

using namespace evomir;
using namespace evomir::evo;

namespace {

mir::Program straight() {
    return mir::parse(R"(global @G[i32 x 4]
fn @k() {
entry:
  %t = tid.lane
  %a = add %t, 1
  %b = mul %a, 2
  st.global @G, 0, %a
  st.global @G, 1, %b
  ret
})");
}

const mir::Program& get(const std::variant<mir::Program, ApplyError>& r) {
    EXPECT_TRUE(std::holds_alternative<mir::Program>(r))
        << (std::holds_alternative<ApplyError>(r) ? std::get<ApplyError>(r).message : "");
    return std::get<mir::Program>(r);
}

TestSuite small_sw_suite(std::string kernel) {
    bench::SwSuiteConfig cfg;
    cfg.kernel = std::move(kernel);
    cfg.pairs = 4;
    cfg.min_len = 8;
    cfg.max_len = 20;
    cfg.heldout_pairs = 1;
    cfg.heldout_min = 40;
    cfg.heldout_max = 48;
    return bench::gen_sw_suite(cfg);
}

SearchConfig small_config(std::uint64_t seed) {
    SearchConfig c;
    c.population_size = 16;
    c.generations = 6;
    c.seed = seed;
    return c;
}

std::multiset<std::uint64_t> uid_multiset(const Variant& v) {
    auto u = v.uids();
    return {u.begin(), u.end()};
}

}  // namespace

TEST(Apply, DeleteStoreLeavesTheRest) {
    auto p = straight();
    const auto store = p.kernel().blocks[0].insts[3].id;
    Edit e{EditKind::InstDelete, 1, store};
    auto q = get(apply_edit(p, e));
    auto expect = p;
    auto& insts = expect.kernel().blocks[0].insts;
    insts.erase(insts.begin() + 3);
    EXPECT_EQ(mir::print(q), mir::print(expect));
}

TEST(Apply, SwapTwiceIsIdentity) {
    auto p = straight();
    const auto& insts = p.kernel().blocks[0].insts;
    Edit e{EditKind::InstSwap, 1, insts[3].id, insts[4].id};
    auto once = get(apply_edit(p, e));
    EXPECT_NE(mir::print(once), mir::print(p));
    auto twice = get(apply_edit(once, e));
    EXPECT_EQ(mir::print(twice), mir::print(p));
}

TEST(Apply, DeletingTerminatorFails) {
    auto p = straight();
    Edit e{EditKind::InstDelete, 1, p.kernel().blocks[0].insts.back().id};
    EXPECT_TRUE(std::holds_alternative<ApplyError>(apply_edit(p, e)));
}

TEST(Apply, MissingTarget) {
    auto p = straight();
    Edit e{EditKind::InstDelete, 1, 12345};
    auto r = apply_edit(p, e);
    ASSERT_TRUE(std::holds_alternative<ApplyError>(r));
    EXPECT_EQ(std::get<ApplyError>(r).kind, ApplyErrorKind::MissingTarget);
}

TEST(Apply, CopyGetsFreshIdAndDonorLocation) {
    auto p = mir::parse(R"(global @G[i32 x 4]
fn @k() {
entry:
  %t = tid.lane
  %a = add %t, 1 !loc "k.cu:7"
  st.global @G, 0, %a
  ret
})");
    const auto& insts = p.kernel().blocks[0].insts;
    Edit e{EditKind::InstCopy, 9, insts[1].id, insts[2].id};
    auto q = get(apply_edit(p, e));
    const auto& out = q.kernel().blocks[0].insts;
    ASSERT_EQ(out.size(), insts.size() + 1);
    EXPECT_EQ(out[2].id, e.fresh_id());
    EXPECT_EQ(out[2].loc, "k.cu:7");
    EXPECT_TRUE(mir::verify(q).empty());
}

TEST(Apply, MoveRepairsOperandsDeterministically) {
    auto p = straight();
    const auto& insts = p.kernel().blocks[0].insts;
    // Move %b before %a: its use of %a must be rebound to something in scope.
    Edit e{EditKind::InstMove, 3, insts[2].id, insts[1].id};
    auto a = get(apply_edit(p, e));
    auto b = get(apply_edit(p, e));
    EXPECT_TRUE(mir::verify(a).empty());
    EXPECT_EQ(mir::print(a), mir::print(b));
}

TEST(Apply, CopiedBarrierInNaiveLoopRunsSlower) {
    auto p = bench::sw_kernel_naive();
    const auto& fn = p.kernel();
    const auto body = *fn.block_index("clear_body");
    const auto sync = *fn.block_index("sync");
    Edit e{EditKind::InstCopy, 1, fn.blocks[sync].insts[0].id, fn.blocks[body].insts[0].id};
    ASSERT_EQ(fn.blocks[sync].insts[0].op, mir::Opcode::BarBlock);
    auto q = get(apply_edit(p, e));
    auto t = bench::sw_test("x", Partition::Fitness, "ACGTACGTAC", "ACGGTCAGTA");
    auto base = run_test(p, t, {}, vm::CostModel::defaults());
    auto slow = run_test(q, t, {}, vm::CostModel::defaults());
    ASSERT_TRUE(base.passed);
    ASSERT_TRUE(slow.passed) << slow.failure;
    EXPECT_GT(slow.cycles, base.cycles);
}

TEST(Materialize, EmptyListIsIdentity) {
    auto p = bench::sw_kernel_tuned();
    auto r = materialize(p, {});
    ASSERT_TRUE(std::holds_alternative<mir::Program>(r));
    EXPECT_EQ(mir::print(std::get<mir::Program>(r)), mir::print(p));
}

TEST(Materialize, FoldLawOnRandomEdits) {
    auto p = bench::sw_kernel_naive();
    int checked = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        Rng rng({42, s});
        auto e1 = random_edit(p, rng, 1);
        if (!e1) continue;
        auto r1 = apply_edit(p, *e1);
        if (!std::holds_alternative<mir::Program>(r1)) continue;
        const auto& p1 = std::get<mir::Program>(r1);
        auto e2 = random_edit(p1, rng, 2);
        if (!e2) continue;
        auto r2 = apply_edit(p1, *e2);
        if (!std::holds_alternative<mir::Program>(r2)) continue;
        auto m = materialize(p, {*e1, *e2});
        ASSERT_TRUE(std::holds_alternative<mir::Program>(m));
        EXPECT_EQ(mir::print(std::get<mir::Program>(m)), mir::print(std::get<mir::Program>(r2)));
        ++checked;
    }
    EXPECT_GT(checked, 50);
}

TEST(Materialize, FailingEditReportsIndex) {
    auto p = straight();
    const auto store = p.kernel().blocks[0].insts[3].id;
    Edit e1{EditKind::InstDelete, 1, store};
    Edit e2{EditKind::InstDelete, 2, store};
    auto r = materialize(p, {e1, e2});
    ASSERT_TRUE(std::holds_alternative<MaterializeError>(r));
    EXPECT_EQ(std::get<MaterializeError>(r).index, 1u);
    EXPECT_EQ(std::get<MaterializeError>(r).cause.kind, ApplyErrorKind::MissingTarget);
}

TEST(Materialize, PureAcrossCalls) {
    auto p = bench::sw_kernel_tuned();
    Variant v = seed_variant(p);
    Rng rng(8);
    for (std::uint64_t uid = 1; uid <= 12; ++uid) v = mutate(v, rng, uid);
    auto a = materialize(p, v.edits);
    auto b = materialize(p, v.edits);
    ASSERT_TRUE(std::holds_alternative<mir::Program>(a));
    EXPECT_EQ(mir::print(std::get<mir::Program>(a)), mir::print(std::get<mir::Program>(b)));
    EXPECT_EQ(mir::print(std::get<mir::Program>(a)), mir::print(*v.program));
}

TEST(Mutate, ReproducibleAndGrowsByAtMostOne) {
    auto p = bench::sw_kernel_naive();
    auto root = seed_variant(p);
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng r1(s), r2(s);
        auto a = mutate(root, r1, 7);
        auto b = mutate(root, r2, 7);
        EXPECT_EQ(a.edits, b.edits);
        EXPECT_LE(a.edits.size(), 1u);
        if (!a.edits.empty()) EXPECT_TRUE(mir::verify(*a.program).empty());
    }
}

TEST(Mutate, AllSixKindsOccur) {
    auto p = bench::sw_kernel_naive();
    auto root = seed_variant(p);
    Rng rng(42);
    std::set<EditKind> kinds;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        auto v = mutate(root, rng, i + 1);
        if (!v.edits.empty()) kinds.insert(v.edits.back().kind);
    }
    EXPECT_EQ(kinds.size(), kEditKindCount);
}

TEST(Mutate, RandomMutantsRoundTrip) {
    auto p = bench::sw_kernel_naive();
    Variant v = seed_variant(p);
    Rng rng(1000);
    for (std::uint64_t i = 1; i <= 1000; ++i) {
        if (v.edits.size() >= 25) v = seed_variant(p);
        v = mutate(v, rng, i);
        const auto text = mir::print(*v.program);
        auto back = mir::parse(text);
        ASSERT_TRUE(mir::structurally_equal(back, *v.program)) << i;
        ASSERT_EQ(mir::print(back), text);
        ASSERT_TRUE(mir::verify(back).empty()) << i;
    }
}

TEST(Mutate, PoolDrawsOnlyAbsentEdits) {
    auto p = bench::sw_kernel_tuned();
    auto pool = bench::sw_quad_edits(p);
    Variant v = seed_variant(p);
    Rng rng(3);
    for (int i = 0; i < 4; ++i) v = mutate_from_pool(v, rng, pool);
    auto u = v.uids();
    std::sort(u.begin(), u.end());
    EXPECT_EQ(u, (std::vector<std::uint64_t>{5, 6, 8, 10}));
    auto again = mutate_from_pool(v, rng, pool);
    EXPECT_EQ(again.edits.size(), 4u);
}

TEST(Crossover, EmptyParents) {
    auto p = bench::sw_kernel_tuned();
    auto root = seed_variant(p);
    Rng rng(1);
    auto [a, b] = crossover(root, root, rng, p);
    EXPECT_TRUE(a.edits.empty());
    EXPECT_TRUE(b.edits.empty());
}

TEST(Crossover, BoundaryCutConcatenates) {
    auto p = bench::sw_kernel_naive();
    auto edits = bench::sw_clear_loop_removal(p);
    Variant a = seed_variant(p), b = seed_variant(p);
    a.edits = {edits[0]};
    a.program = std::make_shared<const mir::Program>(std::get<mir::Program>(materialize(p, a.edits)));
    b.edits = {edits[1], edits[2]};
    b.program = std::make_shared<const mir::Program>(std::get<mir::Program>(materialize(p, b.edits)));
    auto [c1, c2] = crossover_at(a, b, a.edits.size(), 0, p);
    EXPECT_EQ(c1.edits, (EditList{edits[0], edits[1], edits[2]}));
    EXPECT_EQ(c2.edits, EditList{});
}

TEST(Crossover, ChildrenInventNoEdits) {
    auto p = bench::sw_kernel_naive();
    Rng rng(11);
    for (int round = 0; round < 40; ++round) {
        Variant a = seed_variant(p), b = seed_variant(p);
        for (int k = 0; k < 4; ++k) {
            a = mutate(a, rng, 100 * round + k + 1);
            b = mutate(b, rng, 100 * round + 50 + k);
        }
        auto [c1, c2] = crossover(a, b, rng, p);
        auto pool = uid_multiset(a);
        for (auto u : uid_multiset(b)) pool.insert(u);
        for (const auto* c : {&c1, &c2}) {
            auto left = pool;
            for (auto u : c->uids()) {
                auto it = left.find(u);
                ASSERT_NE(it, left.end());
                left.erase(it);
            }
            auto m = materialize(p, c->edits);
            ASSERT_TRUE(std::holds_alternative<mir::Program>(m));
            EXPECT_EQ(mir::print(std::get<mir::Program>(m)), mir::print(*c->program));
        }
    }
}

TEST(Evaluate, SeedMatchesBaselineAndBrokenStoreIsInvalid) {
    auto p = bench::sw_kernel_naive();
    auto suite = small_sw_suite("sw_naive");
    auto tests = suite.partition(Partition::Fitness);
    auto costs = vm::CostModel::defaults();
    auto budgets = derive_budgets(p, tests, suite.validator, costs, 4.0);
    auto root = seed_variant(p);
    auto base = evaluate(root, p, tests, suite.validator, costs, budgets);
    ASSERT_TRUE(base.fitness.has_value()) << base.reason;
    double sum = 0;
    for (auto* t : tests) sum += run_test(p, *t, suite.validator, costs).cycles;
    EXPECT_DOUBLE_EQ(base.fitness->mean_cycles, sum / static_cast<double>(tests.size()));

    // The score writeback store in the cell block.
    mir::InstId writeback = 0;
    for (const auto& inst : p.kernel().blocks[*p.kernel().block_index("cell")].insts) {
        if (inst.op == mir::Opcode::StGlobal) writeback = inst.id;
    }
    Variant broken = root;
    broken.edits = {Edit{EditKind::InstDelete, 1, writeback}};
    broken.program.reset();
    auto bad = evaluate(broken, p, tests, suite.validator, costs, budgets);
    EXPECT_FALSE(bad.fitness.has_value());
    EXPECT_NE(bad.reason.find("score"), std::string::npos) << bad.reason;

    Variant fast = root;
    fast.edits = bench::sw_clear_loop_removal(p);
    fast.program.reset();
    auto good = evaluate(fast, p, tests, suite.validator, costs, budgets);
    ASSERT_TRUE(good.fitness.has_value()) << good.reason;
    EXPECT_LT(good.fitness->mean_cycles, base.fitness->mean_cycles);
}

TEST(Config, DefaultsAndValidation) {
    SearchConfig c;
    EXPECT_EQ(c.population_size, 256);
    EXPECT_EQ(c.elitism, 4);
    EXPECT_DOUBLE_EQ(c.crossover_prob, 0.8);
    EXPECT_DOUBLE_EQ(c.mutation_prob, 0.3);
    EXPECT_EQ(c.tournament_size, 2);
    EXPECT_NO_THROW(c.check());
    auto bad = c;
    bad.elitism = 256;
    EXPECT_THROW(bad.check(), std::exception);
    bad = c;
    bad.mutation_prob = 1.5;
    EXPECT_THROW(bad.check(), std::exception);
    auto back = SearchConfig::from_json(small_config(9).to_json());
    EXPECT_EQ(back.to_json(), small_config(9).to_json());
}

TEST(Evolve, InvariantsOnSmallRun) {
    auto p = bench::sw_kernel_tuned();
    auto suite = small_sw_suite("sw_tuned");
    auto cfg = small_config(3);
    std::vector<std::size_t> pop_sizes;
    SearchHooks hooks;
    hooks.on_checkpoint = [&](const Checkpoint& cp) { pop_sizes.push_back(cp.population.size()); };
    auto res = evolve(p, suite, cfg, vm::CostModel::defaults(), hooks);

    ASSERT_EQ(res.log.size(), static_cast<std::size_t>(cfg.generations));
    for (std::size_t g = 1; g < res.log.size(); ++g) EXPECT_LE(res.log[g].best, res.log[g - 1].best) << g;
    EXPECT_EQ(pop_sizes.size(), static_cast<std::size_t>(cfg.generations - 1));
    for (auto n : pop_sizes) EXPECT_EQ(n, static_cast<std::size_t>(cfg.population_size));
    for (const auto& g : res.log) {
        EXPECT_LE(g.survivors.size(), static_cast<std::size_t>(cfg.population_size));
        EXPECT_NEAR(g.valid_rate, static_cast<double>(g.survivors.size()) / cfg.population_size, 1e-12);
        for (std::size_t k = 1; k < g.survivors.size(); ++k) {
            EXPECT_LE(g.survivors[k - 1].fitness, g.survivors[k].fitness);
        }
    }
    ASSERT_TRUE(res.best.fitness.has_value());
    EXPECT_LE(res.best.fitness->mean_cycles, res.baseline.mean_cycles);
    EXPECT_DOUBLE_EQ(res.best.fitness->mean_cycles, res.log.back().best);
    // Every uid in a survivor list was created by then.
    for (const auto& g : res.log)
        for (const auto& s : g.survivors)
            for (auto u : s.uids) EXPECT_TRUE(res.edits_seen.count(u)) << u;
}

TEST(Evolve, DeterministicAndJobsIndependent) {
    auto p = bench::sw_kernel_tuned();
    auto suite = small_sw_suite("sw_tuned");
    auto cfg = small_config(5);
    auto dump = [](const SearchResult& r) {
        std::string s;
        for (const auto& g : r.log) s += g.to_json().dump() + "\n";
        return s;
    };
    auto a = evolve(p, suite, cfg, vm::CostModel::defaults());
    auto b = evolve(p, suite, cfg, vm::CostModel::defaults());
    cfg.jobs = 4;
    auto c = evolve(p, suite, cfg, vm::CostModel::defaults());
    EXPECT_EQ(dump(a), dump(b));
    EXPECT_EQ(dump(a), dump(c));
    EXPECT_EQ(a.best.edits, c.best.edits);
}

TEST(Evolve, ResumeMatchesStraightRun) {
    auto p = bench::sw_kernel_tuned();
    auto suite = small_sw_suite("sw_tuned");
    auto cfg = small_config(6);
    std::optional<Checkpoint> mid;
    SearchHooks hooks;
    hooks.on_checkpoint = [&](const Checkpoint& cp) {
        if (cp.generation == 2) mid = Checkpoint::from_json(cp.to_json(), p);
    };
    auto full = evolve(p, suite, cfg, vm::CostModel::defaults(), hooks);
    ASSERT_TRUE(mid.has_value());
    auto resumed = evolve(p, suite, cfg, vm::CostModel::defaults(), {}, mid);
    ASSERT_EQ(resumed.log.size(), full.log.size());
    for (std::size_t g = 0; g < full.log.size(); ++g) {
        EXPECT_EQ(resumed.log[g].to_json(), full.log[g].to_json()) << g;
    }
}

TEST(Evolve, InvalidSeedAborts) {
    auto p = bench::sw_kernel_tuned();
    auto suite = small_sw_suite("sw_tuned");
    suite.tests[0].expected["best"] = {-1};
    EXPECT_THROW(evolve(p, suite, small_config(1), vm::CostModel::defaults()), SearchError);
}

TEST(Json, EditRoundTrip) {
    auto p = bench::sw_kernel_naive();
    Rng rng(4);
    for (std::uint64_t i = 1; i <= 100; ++i) {
        auto e = random_edit(p, rng, i);
        if (!e) continue;
        auto back = edit_from_json(to_json(*e));
        EXPECT_EQ(back, *e);
    }
    GenerationLog g{3, 10.5, 12.0, 0.5, {1, 2}, {{{1, 2}, 10.5}}};
    EXPECT_EQ(GenerationLog::from_json(g.to_json()).to_json(), g.to_json());
}
