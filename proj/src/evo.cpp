#include "evomir/evo.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

namespace evomir::evo {

using mir::Instruction;
using mir::InstId;
using mir::Operand;
using mir::OperandKind;
using mir::Position;
using mir::Program;

namespace {

// Purposes that separate the keyed RNG streams.
enum : std::uint64_t { kInit = 1, kSelect = 2, kCross = 3, kMutate = 4, kRepair = 5 };

constexpr std::array<std::string_view, kEditKindCount> kKindNames = {
    "inst_copy", "inst_delete", "inst_move", "inst_replace", "inst_swap", "operand_replace"};

std::optional<Position> find(const mir::Function& fn, InstId id) {
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
        const auto& insts = fn.blocks[b].insts;
        for (std::size_t i = 0; i < insts.size(); ++i) {
            if (insts[i].id == id) return Position{b, i};
        }
    }
    return std::nullopt;
}

Instruction& at(mir::Function& fn, Position p) { return fn.blocks[p.block].insts[p.index]; }

ApplyError missing(InstId id) {
    return {ApplyErrorKind::MissingTarget, "instruction " + std::to_string(id) + " does not exist"};
}

// Rebinds every scalar operand that no longer type-checks or no longer
// dominates its use. Choices come from a stream keyed by the edit uid so the
// same edit repairs the same way wherever it is replayed.
std::optional<ApplyError> repair(Program& p, std::uint64_t uid) {
    auto& fn = p.kernel();
    mir::FunctionScope scope(p, fn);
    Rng rng({uid, kRepair});
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
        for (std::size_t i = 0; i < fn.blocks[b].insts.size(); ++i) {
            auto& inst = fn.blocks[b].insts[i];
            for (std::size_t k = 0; k < inst.nops; ++k) {
                const auto want = mir::expected_operand_type(inst, k);
                if (!want) continue;
                const Operand& o = inst.ops[k];
                bool ok;
                if (o.kind == OperandKind::Imm) {
                    ok = o.imm_type == *want;
                } else if (o.is_ref()) {
                    ok = scope.type_of(o) == want && scope.available_at(o, {b, i});
                } else {
                    ok = false;
                }
                if (ok) continue;
                auto cands = scope.in_scope({b, i}, *want);
                if (cands.empty()) {
                    return ApplyError{ApplyErrorKind::NoCandidate,
                                      "no " + std::string(mir::type_name(*want)) + " value in scope for operand " +
                                          std::to_string(k) + " of instruction " + std::to_string(inst.id)};
                }
                inst.ops[k] = cands[rng.below(cands.size())];
            }
        }
    }
    return std::nullopt;
}

std::string copy_name(const Instruction& donor, InstId id) {
    if (!donor.has_result()) return {};
    return (donor.name.empty() ? std::string("v") : donor.name) + "." + std::to_string(id);
}

}  // namespace

std::string_view edit_kind_name(EditKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<EditKind> edit_kind_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == name) return static_cast<EditKind>(i);
    }
    return std::nullopt;
}

std::string_view apply_error_name(ApplyErrorKind k) {
    switch (k) {
        case ApplyErrorKind::MissingTarget: return "missing-target";
        case ApplyErrorKind::NoCandidate: return "no-candidate";
        case ApplyErrorKind::Invalid: return "invalid";
        case ApplyErrorKind::BadEdit: return "bad-edit";
    }
    return "?";
}

std::optional<ApplyError> apply_edit_in_place(Program& p, const Edit& e) {
    auto& fn = p.kernel();
    switch (e.kind) {
        case EditKind::InstCopy: {
            auto donor = find(fn, e.target);
            if (!donor) return missing(e.target);
            auto before = find(fn, e.other);
            if (!before) return missing(e.other);
            const InstId id = e.fresh_id();
            if (find(fn, id)) {
                return ApplyError{ApplyErrorKind::Invalid, "instruction " + std::to_string(id) + " already exists"};
            }
            Instruction copy = at(fn, *donor);
            copy.id = id;
            copy.name = copy_name(copy, id);
            auto& insts = fn.blocks[before->block].insts;
            insts.insert(insts.begin() + static_cast<std::ptrdiff_t>(before->index), std::move(copy));
            break;
        }
        case EditKind::InstDelete: {
            auto t = find(fn, e.target);
            if (!t) return missing(e.target);
            auto& insts = fn.blocks[t->block].insts;
            insts.erase(insts.begin() + static_cast<std::ptrdiff_t>(t->index));
            break;
        }
        case EditKind::InstMove: {
            if (e.target == e.other) return ApplyError{ApplyErrorKind::BadEdit, "instruction moved before itself"};
            auto t = find(fn, e.target);
            if (!t) return missing(e.target);
            if (!find(fn, e.other)) return missing(e.other);
            Instruction moved = std::move(at(fn, *t));
            auto& from = fn.blocks[t->block].insts;
            from.erase(from.begin() + static_cast<std::ptrdiff_t>(t->index));
            auto before = find(fn, e.other);
            auto& to = fn.blocks[before->block].insts;
            to.insert(to.begin() + static_cast<std::ptrdiff_t>(before->index), std::move(moved));
            break;
        }
        case EditKind::InstReplace: {
            if (e.target == e.other) return ApplyError{ApplyErrorKind::BadEdit, "instruction replaced by itself"};
            auto t = find(fn, e.target);
            if (!t) return missing(e.target);
            auto d = find(fn, e.other);
            if (!d) return missing(e.other);
            const Instruction& old = at(fn, *t);
            Instruction repl = at(fn, *d);
            if (old.is_terminator() != repl.is_terminator()) {
                return ApplyError{ApplyErrorKind::BadEdit, "replace mixes a terminator with a non-terminator"};
            }
            repl.id = old.id;
            if (repl.has_result()) {
                repl.name = old.has_result() && !old.name.empty() ? old.name : copy_name(repl, old.id);
            } else {
                repl.name.clear();
            }
            at(fn, *t) = std::move(repl);
            break;
        }
        case EditKind::InstSwap: {
            if (e.target == e.other) return ApplyError{ApplyErrorKind::BadEdit, "instruction swapped with itself"};
            auto a = find(fn, e.target);
            if (!a) return missing(e.target);
            auto b = find(fn, e.other);
            if (!b) return missing(e.other);
            std::swap(at(fn, *a), at(fn, *b));
            break;
        }
        case EditKind::OperandReplace: {
            auto t = find(fn, e.target);
            if (!t) return missing(e.target);
            auto& inst = at(fn, *t);
            if (e.index >= inst.nops || !mir::expected_operand_type(inst, e.index)) {
                return ApplyError{ApplyErrorKind::BadEdit, "operand " + std::to_string(e.index) +
                                                               " of instruction " + std::to_string(e.target) +
                                                               " is not a scalar operand"};
            }
            if (!e.value.is_scalar()) return ApplyError{ApplyErrorKind::BadEdit, "replacement is not a value"};
            inst.ops[e.index] = e.value;
            break;
        }
    }
    if (auto err = repair(p, e.uid)) return err;
    auto violations = mir::verify(p);
    if (!violations.empty()) {
        return ApplyError{ApplyErrorKind::Invalid, std::string(mir::violation_kind_name(violations.front().kind)) +
                                                       ": " + violations.front().message};
    }
    return std::nullopt;
}

std::variant<Program, ApplyError> apply_edit(const Program& program, const Edit& edit) {
    Program p = program;
    if (auto err = apply_edit_in_place(p, edit)) return *err;
    return p;
}

std::variant<Program, MaterializeError> materialize(const Program& seed, const EditList& edits) {
    Program p = seed;
    for (std::size_t i = 0; i < edits.size(); ++i) {
        if (auto err = apply_edit_in_place(p, edits[i])) return MaterializeError{i, *err};
    }
    return p;
}

std::vector<std::uint64_t> Variant::uids() const {
    std::vector<std::uint64_t> out;
    out.reserve(edits.size());
    for (const auto& e : edits) out.push_back(e.uid);
    return out;
}

Variant seed_variant(const Program& seed) {
    Variant v;
    v.program = std::make_shared<const Program>(seed);
    return v;
}

namespace {

std::vector<std::string> locs_of(const mir::Function& fn, std::initializer_list<InstId> ids) {
    std::vector<std::string> out;
    for (auto id : ids) {
        if (auto p = find(fn, id)) {
            const auto& loc = fn.blocks[p->block].insts[p->index].loc;
            if (!loc.empty()) out.push_back(loc);
        }
    }
    return out;
}

}  // namespace

std::optional<Edit> random_edit(const Program& program, Rng& rng, std::uint64_t uid) {
    const auto& fn = program.kernel();
    std::vector<Position> all, body;
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
        for (std::size_t i = 0; i < fn.blocks[b].insts.size(); ++i) {
            all.push_back({b, i});
            if (!fn.blocks[b].insts[i].is_terminator()) body.push_back({b, i});
        }
    }
    auto inst = [&](Position p) -> const Instruction& { return fn.blocks[p.block].insts[p.index]; };
    auto pick = [&](const std::vector<Position>& from) { return from[rng.below(from.size())]; };

    Edit e;
    e.uid = uid;
    e.kind = static_cast<EditKind>(rng.below(kEditKindCount));
    switch (e.kind) {
        case EditKind::InstCopy: {
            if (body.empty()) return std::nullopt;
            e.target = inst(pick(body)).id;
            e.other = inst(pick(all)).id;
            break;
        }
        case EditKind::InstDelete: {
            if (body.empty()) return std::nullopt;
            e.target = inst(pick(body)).id;
            break;
        }
        case EditKind::InstMove: {
            if (body.empty() || all.size() < 2) return std::nullopt;
            e.target = inst(pick(body)).id;
            do {
                e.other = inst(pick(all)).id;
            } while (e.other == e.target);
            break;
        }
        case EditKind::InstReplace: {
            const auto& t = inst(pick(all));
            std::vector<Position> donors;
            for (auto p : all) {
                if (inst(p).id != t.id && inst(p).is_terminator() == t.is_terminator()) donors.push_back(p);
            }
            if (donors.empty()) return std::nullopt;
            e.target = t.id;
            e.other = inst(pick(donors)).id;
            break;
        }
        case EditKind::InstSwap: {
            if (body.size() < 2) return std::nullopt;
            e.target = inst(pick(body)).id;
            do {
                e.other = inst(pick(body)).id;
            } while (e.other == e.target);
            break;
        }
        case EditKind::OperandReplace: {
            std::vector<Position> targets;
            for (auto p : all) {
                const auto& in = inst(p);
                for (std::size_t k = 0; k < in.nops; ++k) {
                    if (mir::expected_operand_type(in, k)) {
                        targets.push_back(p);
                        break;
                    }
                }
            }
            if (targets.empty()) return std::nullopt;
            const Position tp = pick(targets);
            const auto& t = inst(tp);
            std::vector<std::size_t> slots;
            for (std::size_t k = 0; k < t.nops; ++k) {
                if (mir::expected_operand_type(t, k)) slots.push_back(k);
            }
            const std::size_t k = slots[rng.below(slots.size())];
            mir::FunctionScope scope(program, fn);
            auto cands = scope.in_scope(tp, *mir::expected_operand_type(t, k));
            std::erase(cands, t.ops[k]);
            if (cands.empty()) return std::nullopt;
            e.target = t.id;
            e.index = static_cast<std::uint8_t>(k);
            e.value = cands[rng.below(cands.size())];
            break;
        }
    }
    e.source_locs = locs_of(fn, {e.target, e.other});
    return e;
}

Variant mutate(const Variant& v, Rng& rng, std::uint64_t uid) {
    for (int attempt = 0; attempt < 20; ++attempt) {
        auto e = random_edit(*v.program, rng, uid);
        if (!e) continue;
        Program p = *v.program;
        if (apply_edit_in_place(p, *e)) continue;
        Variant out;
        out.edits = v.edits;
        out.edits.push_back(std::move(*e));
        out.program = std::make_shared<const Program>(std::move(p));
        return out;
    }
    return v;
}

Variant mutate_from_pool(const Variant& v, Rng& rng, const EditList& pool) {
    std::set<std::uint64_t> present;
    for (const auto& e : v.edits) present.insert(e.uid);
    std::vector<const Edit*> open;
    for (const auto& e : pool) {
        if (!present.count(e.uid)) open.push_back(&e);
    }
    for (int attempt = 0; attempt < 20 && !open.empty(); ++attempt) {
        const Edit& e = *open[rng.below(open.size())];
        Program p = *v.program;
        if (apply_edit_in_place(p, e)) continue;
        Variant out;
        out.edits = v.edits;
        out.edits.push_back(e);
        out.program = std::make_shared<const Program>(std::move(p));
        return out;
    }
    return v;
}

std::pair<Variant, Variant> crossover_at(const Variant& a, const Variant& b, std::size_t i, std::size_t j,
                                         const Program& seed) {
    i = std::min(i, a.edits.size());
    j = std::min(j, b.edits.size());
    auto make = [&](const EditList& head, std::size_t h, const EditList& tail, std::size_t t, const Variant& parent) {
        Variant c;
        c.edits.assign(head.begin(), head.begin() + static_cast<std::ptrdiff_t>(h));
        // Parents often share ancestry; an edit already in the head is not repeated.
        for (auto it = tail.begin() + static_cast<std::ptrdiff_t>(t); it != tail.end(); ++it) {
            const auto dup = std::find_if(c.edits.begin(), c.edits.end(),
                                          [&](const Edit& e) { return e.uid == it->uid; });
            if (dup == c.edits.end()) c.edits.push_back(*it);
        }
        if (c.edits == parent.edits) return parent;
        auto m = materialize(seed, c.edits);
        if (auto* p = std::get_if<Program>(&m)) {
            c.program = std::make_shared<const Program>(std::move(*p));
            return c;
        }
        return parent;
    };
    return {make(a.edits, i, b.edits, j, a), make(b.edits, j, a.edits, i, b)};
}

std::pair<Variant, Variant> crossover(const Variant& a, const Variant& b, Rng& rng, const Program& seed) {
    const std::size_t i = rng.below(a.edits.size() + 1);
    const std::size_t j = rng.below(b.edits.size() + 1);
    return crossover_at(a, b, i, j, seed);
}

EvalOutcome evaluate_program(const Program& program, const std::vector<const TestCase*>& tests,
                             const Validator& validator, const vm::CostModel& costs,
                             const std::vector<std::uint64_t>& budgets) {
    EvalOutcome out;
    Fitness f;
    double total = 0;
    for (std::size_t k = 0; k < tests.size(); ++k) {
        const std::uint64_t budget = k < budgets.size() ? budgets[k] : 0;
        TestOutcome r;
        try {
            r = run_test(program, *tests[k], validator, costs, budget);
        } catch (const std::exception& ex) {
            out.reason = tests[k]->name + ": " + ex.what();
            return out;
        }
        if (!r.passed) {
            out.reason = r.failure;
            return out;
        }
        f.per_test_cycles.push_back(r.cycles);
        total += r.cycles;
    }
    f.mean_cycles = tests.empty() ? 0.0 : total / static_cast<double>(tests.size());
    out.fitness = std::move(f);
    return out;
}

EvalOutcome evaluate(const Variant& v, const Program& seed, const std::vector<const TestCase*>& tests,
                     const Validator& validator, const vm::CostModel& costs,
                     const std::vector<std::uint64_t>& budgets) {
    if (v.program) return evaluate_program(*v.program, tests, validator, costs, budgets);
    auto m = materialize(seed, v.edits);
    if (auto* err = std::get_if<MaterializeError>(&m)) {
        EvalOutcome out;
        out.reason = "materialize failed at edit " + std::to_string(err->index) + " (" +
                     std::string(apply_error_name(err->cause.kind)) + "): " + err->cause.message;
        return out;
    }
    return evaluate_program(std::get<Program>(m), tests, validator, costs, budgets);
}

std::vector<std::uint64_t> derive_budgets(const Program& seed, const std::vector<const TestCase*>& tests,
                                          const Validator& validator, const vm::CostModel& costs, double factor) {
    std::vector<std::uint64_t> out;
    for (const auto* t : tests) {
        if (t->cycle_budget) {
            out.push_back(t->cycle_budget);
            continue;
        }
        auto r = run_test(seed, *t, validator, costs);
        const double b = std::max(1.0, factor) * static_cast<double>(std::max<std::uint64_t>(r.max_warp_cycles, 1));
        out.push_back(static_cast<std::uint64_t>(b));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration and logs

void SearchConfig::check() const {
    if (population_size < 1) throw std::invalid_argument("population_size must be at least 1");
    if (elitism < 0 || elitism >= population_size) throw std::invalid_argument("elitism must be in [0, population_size)");
    if (crossover_prob < 0 || crossover_prob > 1) throw std::invalid_argument("crossover_prob must be in [0, 1]");
    if (mutation_prob < 0 || mutation_prob > 1) throw std::invalid_argument("mutation_prob must be in [0, 1]");
    if (generations < 1) throw std::invalid_argument("generations must be at least 1");
    if (tournament_size < 1) throw std::invalid_argument("tournament_size must be at least 1");
    if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
}

nlohmann::json SearchConfig::to_json() const {
    nlohmann::json j = {{"population_size", population_size}, {"elitism", elitism},
                        {"crossover_prob", crossover_prob},   {"mutation_prob", mutation_prob},
                        {"generations", generations},         {"seed", seed},
                        {"tournament_size", tournament_size}, {"budget_factor", budget_factor}};
    if (!edit_pool.empty()) j["edit_pool"] = evo::to_json(edit_pool);
    return j;
}

SearchConfig SearchConfig::from_json(const nlohmann::json& j) { return from_json(j, SearchConfig{}); }

SearchConfig SearchConfig::from_json(const nlohmann::json& j, SearchConfig c) {
    c.population_size = j.value("population_size", c.population_size);
    c.elitism = j.value("elitism", c.elitism);
    c.crossover_prob = j.value("crossover_prob", c.crossover_prob);
    c.mutation_prob = j.value("mutation_prob", c.mutation_prob);
    c.generations = j.value("generations", c.generations);
    c.seed = j.value("seed", c.seed);
    c.tournament_size = j.value("tournament_size", c.tournament_size);
    c.budget_factor = j.value("budget_factor", c.budget_factor);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("edit_pool")) c.edit_pool = edit_list_from_json(j["edit_pool"]);
    return c;
}

nlohmann::json GenerationLog::to_json() const {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& v : survivors) s.push_back({{"uids", v.uids}, {"fitness", v.fitness}});
    return {{"generation", generation}, {"best", best},          {"mean", mean},
            {"valid_rate", valid_rate}, {"best_uids", best_uids}, {"survivors", s}};
}

GenerationLog GenerationLog::from_json(const nlohmann::json& j) {
    GenerationLog g;
    g.generation = j.at("generation").get<int>();
    g.best = j.value("best", 0.0);
    g.mean = j.value("mean", 0.0);
    g.valid_rate = j.value("valid_rate", 0.0);
    g.best_uids = j.value("best_uids", std::vector<std::uint64_t>{});
    if (j.contains("survivors")) {
        for (const auto& s : j["survivors"]) {
            g.survivors.push_back({s.at("uids").get<std::vector<std::uint64_t>>(), s.value("fitness", 0.0)});
        }
    }
    return g;
}

nlohmann::json operand_to_json(const Operand& o) {
    switch (o.kind) {
        case OperandKind::Value: return {{"kind", "value"}, {"id", o.v}};
        case OperandKind::Param: return {{"kind", "param"}, {"index", o.v}};
        case OperandKind::Imm:
            return {{"kind", "imm"}, {"type", mir::type_name(o.imm_type)}, {"value", o.v}};
        case OperandKind::Buffer: return {{"kind", "buffer"}, {"index", o.v}};
        case OperandKind::Slot: return {{"kind", "slot"}, {"index", o.v}};
        case OperandKind::Label: return {{"kind", "label"}, {"index", o.v}};
    }
    return {};
}

Operand operand_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "value") return Operand::value(j.at("id").get<InstId>());
    if (kind == "param") return Operand::param(j.at("index").get<std::size_t>());
    if (kind == "imm") {
        const auto type = j.value("type", std::string("i32"));
        if (type == "bool") return Operand::imm_bool(j.at("value").get<std::int64_t>() != 0);
        return Operand::imm_i32(j.at("value").get<std::int32_t>());
    }
    throw std::invalid_argument("unsupported operand kind '" + kind + "'");
}

nlohmann::json to_json(const Edit& e) {
    nlohmann::json j = {{"uid", e.uid}, {"kind", edit_kind_name(e.kind)}, {"target", e.target}};
    switch (e.kind) {
        case EditKind::InstCopy:
            j["before"] = e.other;
            j["new_id"] = e.fresh_id();
            break;
        case EditKind::InstMove: j["before"] = e.other; break;
        case EditKind::InstReplace: j["donor"] = e.other; break;
        case EditKind::InstSwap: j["other"] = e.other; break;
        case EditKind::OperandReplace:
            j["index"] = e.index;
            j["value"] = operand_to_json(e.value);
            break;
        case EditKind::InstDelete: break;
    }
    j["source_locs"] = e.source_locs;
    return j;
}

Edit edit_from_json(const nlohmann::json& j) {
    Edit e;
    const auto kind = j.at("kind").get<std::string>();
    auto k = edit_kind_from_name(kind);
    if (!k) throw std::invalid_argument("unknown edit kind '" + kind + "'");
    e.kind = *k;
    e.uid = j.at("uid").get<std::uint64_t>();
    e.target = j.at("target").get<InstId>();
    switch (e.kind) {
        case EditKind::InstCopy:
        case EditKind::InstMove: e.other = j.at("before").get<InstId>(); break;
        case EditKind::InstReplace: e.other = j.at("donor").get<InstId>(); break;
        case EditKind::InstSwap: e.other = j.at("other").get<InstId>(); break;
        case EditKind::OperandReplace:
            e.index = j.at("index").get<std::uint8_t>();
            e.value = operand_from_json(j.at("value"));
            break;
        case EditKind::InstDelete: break;
    }
    e.source_locs = j.value("source_locs", std::vector<std::string>{});
    return e;
}

nlohmann::json to_json(const EditList& edits) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : edits) j.push_back(to_json(e));
    return j;
}

EditList edit_list_from_json(const nlohmann::json& j) {
    EditList out;
    for (const auto& e : j) out.push_back(edit_from_json(e));
    return out;
}

nlohmann::json Checkpoint::to_json() const {
    nlohmann::json pop = nlohmann::json::array();
    for (const auto& ind : population) pop.push_back(evo::to_json(ind));
    nlohmann::json lg = nlohmann::json::array();
    for (const auto& g : log) lg.push_back(g.to_json());
    return {{"generation", generation}, {"next_uid", next_uid}, {"population", pop},
            {"log", lg},                {"best", evo::to_json(best.edits)}};
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j, const Program& seed) {
    Checkpoint c;
    c.generation = j.at("generation").get<int>();
    c.next_uid = j.at("next_uid").get<std::uint64_t>();
    for (const auto& ind : j.at("population")) c.population.push_back(edit_list_from_json(ind));
    for (const auto& g : j.at("log")) c.log.push_back(GenerationLog::from_json(g));
    c.best.edits = edit_list_from_json(j.at("best"));
    auto m = materialize(seed, c.best.edits);
    if (auto* p = std::get_if<Program>(&m)) {
        c.best.program = std::make_shared<const Program>(std::move(*p));
    } else {
        throw std::invalid_argument("checkpoint best variant does not materialize");
    }
    return c;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Search loop

namespace {

bool ranks_before(const Variant& a, std::size_t ia, const Variant& b, std::size_t ib) {
    if (a.fitness->mean_cycles != b.fitness->mean_cycles) return a.fitness->mean_cycles < b.fitness->mean_cycles;
    if (a.edits.size() != b.edits.size()) return a.edits.size() < b.edits.size();
    const auto ua = a.uids(), ub = b.uids();
    if (ua != ub) return ua < ub;
    return ia < ib;
}

}  // namespace

SearchResult evolve(const Program& seed, const TestSuite& suite, const SearchConfig& cfg, const vm::CostModel& costs,
                    const SearchHooks& hooks, const std::optional<Checkpoint>& resume) {
    cfg.check();
    if (auto v = mir::verify(seed); !v.empty()) throw SearchError("seed program does not verify: " + v.front().message);
    const auto tests = suite.partition(Partition::Fitness);
    if (tests.empty()) throw SearchError("suite '" + suite.name + "' has no fitness tests");

    SearchResult res;
    res.budgets = derive_budgets(seed, tests, suite.validator, costs, cfg.budget_factor);
    auto base = evaluate_program(seed, tests, suite.validator, costs, res.budgets);
    if (!base.fitness) throw SearchError("seed program fails its own suite: " + base.reason);
    res.baseline = *base.fitness;

    std::unordered_map<std::string, EvalOutcome> cache;
    const std::size_t P = static_cast<std::size_t>(cfg.population_size);
    std::vector<Variant> pop;
    std::uint64_t next_uid = 1;
    int start = 0;
    const Variant root = seed_variant(seed);
    res.best = root;
    res.best.fitness = res.baseline;

    auto note_edits = [&](const Variant& v) {
        for (const auto& e : v.edits) res.edits_seen.emplace(e.uid, e);
    };
    auto spawn = [&](const Variant& parent, Rng& rng) {
        if (!cfg.edit_pool.empty()) return mutate_from_pool(parent, rng, cfg.edit_pool);
        return mutate(parent, rng, next_uid++);
    };

    if (resume) {
        start = resume->generation + 1;
        next_uid = resume->next_uid;
        res.log = resume->log;
        if (resume->best.program) {
            res.best = resume->best;
            res.best.fitness = evaluate(res.best, seed, tests, suite.validator, costs, res.budgets).fitness;
            if (!res.best.fitness) res.best = root, res.best.fitness = res.baseline;
        }
        for (const auto& edits : resume->population) {
            auto m = materialize(seed, edits);
            Variant v;
            v.edits = edits;
            if (auto* p = std::get_if<Program>(&m)) {
                v.program = std::make_shared<const Program>(std::move(*p));
            } else {
                v = root;
            }
            pop.push_back(std::move(v));
        }
        if (pop.size() != P) throw SearchError("checkpoint population size does not match the configuration");
    } else {
        for (std::size_t slot = 0; slot < P; ++slot) {
            Rng rng({cfg.seed, 0, slot, kInit});
            pop.push_back(spawn(root, rng));
        }
    }

    for (int g = start; g < cfg.generations; ++g) {
        // Evaluate distinct unseen programs; the order of completion does not
        // influence anything downstream.
        std::vector<std::string> keys(P);
        for (std::size_t i = 0; i < P; ++i) keys[i] = mir::print(*pop[i].program);
        std::vector<std::size_t> todo;
        std::set<std::string> queued;
        for (std::size_t i = 0; i < P; ++i) {
            if (cache.count(keys[i]) || queued.count(keys[i])) {
                ++res.cache_hits;
                continue;
            }
            queued.insert(keys[i]);
            todo.push_back(i);
        }
        std::vector<EvalOutcome> fresh(todo.size());
        parallel_for(todo.size(), cfg.jobs, [&](std::size_t k) {
            fresh[k] = evaluate_program(*pop[todo[k]].program, tests, suite.validator, costs, res.budgets);
        });
        for (std::size_t k = 0; k < todo.size(); ++k) cache.emplace(keys[todo[k]], std::move(fresh[k]));
        res.evaluations += todo.size();

        std::vector<std::size_t> valid;
        for (std::size_t i = 0; i < P; ++i) {
            const auto& out = cache.at(keys[i]);
            pop[i].fitness = out.fitness;
            pop[i].invalid_reason = out.reason;
            note_edits(pop[i]);
            if (out.fitness) valid.push_back(i);
        }
        std::sort(valid.begin(), valid.end(),
                  [&](std::size_t a, std::size_t b) { return ranks_before(pop[a], a, pop[b], b); });

        GenerationLog entry;
        entry.generation = g;
        entry.valid_rate = static_cast<double>(valid.size()) / static_cast<double>(P);
        if (!valid.empty()) {
            const auto& top = pop[valid.front()];
            entry.best = top.fitness->mean_cycles;
            entry.best_uids = top.uids();
            double sum = 0;
            for (auto i : valid) {
                sum += pop[i].fitness->mean_cycles;
                entry.survivors.push_back({pop[i].uids(), pop[i].fitness->mean_cycles});
            }
            entry.mean = sum / static_cast<double>(valid.size());
            if (top.fitness->mean_cycles < res.best.fitness->mean_cycles) res.best = top;
        }
        if (entry.best_uids.empty() && valid.empty()) entry.best = res.best.fitness->mean_cycles;
        res.log.push_back(entry);
        if (hooks.on_generation) hooks.on_generation(entry);
        if (g + 1 == cfg.generations) break;

        // Breed generation g + 1.
        std::vector<Variant> next;
        const std::size_t elites = std::min<std::size_t>(static_cast<std::size_t>(cfg.elitism), valid.size());
        for (std::size_t k = 0; k < elites; ++k) next.push_back(pop[valid[k]]);
        const std::size_t fill = P - elites;
        std::vector<Variant> winners;
        for (std::size_t k = 0; k < fill; ++k) {
            if (valid.empty()) {
                winners.push_back(root);
                continue;
            }
            Rng rng({cfg.seed, static_cast<std::uint64_t>(g), k, kSelect});
            std::size_t best_rank = valid.size();
            for (int d = 0; d < cfg.tournament_size; ++d) best_rank = std::min<std::size_t>(best_rank, rng.below(valid.size()));
            winners.push_back(pop[valid[best_rank]]);
        }
        for (std::size_t k = 0; k + 1 < fill; k += 2) {
            Rng rng({cfg.seed, static_cast<std::uint64_t>(g), k, kCross});
            if (rng.chance(cfg.crossover_prob)) {
                auto [c1, c2] = crossover(winners[k], winners[k + 1], rng, seed);
                winners[k] = std::move(c1);
                winners[k + 1] = std::move(c2);
            }
        }
        for (std::size_t k = 0; k < fill; ++k) {
            Rng rng({cfg.seed, static_cast<std::uint64_t>(g), k, kMutate});
            Variant child = rng.chance(cfg.mutation_prob) ? spawn(winners[k], rng) : std::move(winners[k]);
            child.fitness.reset();
            child.invalid_reason.clear();
            next.push_back(std::move(child));
        }
        pop = std::move(next);

        if (hooks.on_checkpoint) {
            Checkpoint cp;
            cp.generation = g;
            cp.next_uid = next_uid;
            for (const auto& v : pop) cp.population.push_back(v.edits);
            cp.log = res.log;
            cp.best = res.best;
            hooks.on_checkpoint(cp);
        }
    }
    for (const auto& e : res.best.edits) res.edits_seen.emplace(e.uid, e);
    return res;
}

}  // namespace evomir::evo
