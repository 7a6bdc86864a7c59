#include "evomir/postopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace evomir::postopt {

using nlohmann::json;

UidSet make_set(std::vector<Uid> uids) {
    std::sort(uids.begin(), uids.end());
    uids.erase(std::unique(uids.begin(), uids.end()), uids.end());
    return uids;
}

UidSet set_minus(const UidSet& a, const UidSet& b) {
    UidSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

UidSet set_union(const UidSet& a, const UidSet& b) {
    UidSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

double improvement(double from, double to) { return from == 0 ? 0.0 : (from - to) / from; }

// ---------------------------------------------------------------------------

FitnessOracle::FitnessOracle(mir::Program seed, evo::EditList edits, std::vector<const TestCase*> tests,
                             Validator validator, vm::CostModel costs, double budget_factor)
    : edits_(std::move(edits)) {
    auto budgets = evo::derive_budgets(seed, tests, validator, costs, budget_factor);
    auto order = edits_;
    fn_ = [seed = std::move(seed), order = std::move(order), tests = std::move(tests), validator,
           costs = std::move(costs), budgets = std::move(budgets)](const UidSet& subset) -> Cycles {
        evo::EditList chosen;
        for (const auto& e : order) {
            if (std::binary_search(subset.begin(), subset.end(), e.uid)) chosen.push_back(e);
        }
        auto m = evo::materialize(seed, chosen);
        if (!std::holds_alternative<mir::Program>(m)) return std::nullopt;
        auto out = evo::evaluate_program(std::get<mir::Program>(m), tests, validator, costs, budgets);
        if (!out.fitness) return std::nullopt;
        return out.fitness->mean_cycles;
    };
}

FitnessOracle::FitnessOracle(Fn fn) : fn_(std::move(fn)) {}

Cycles FitnessOracle::operator()(const UidSet& subset) {
    {
        std::lock_guard lock(mu_);
        ++calls_;
        if (auto it = cache_.find(subset); it != cache_.end()) return it->second;
    }
    Cycles v = fn_(subset);
    std::lock_guard lock(mu_);
    auto [it, inserted] = cache_.emplace(subset, v);
    // Two threads may race on the same key; both computed the same value.
    if (inserted && !(subset.empty() && baseline_)) ++misses_;
    return it->second;
}

double FitnessOracle::baseline() {
    {
        std::lock_guard lock(mu_);
        if (baseline_) return *baseline_;
        if (auto it = cache_.find(UidSet{}); it != cache_.end() && it->second) {
            baseline_ = it->second;
            return *baseline_;
        }
    }
    Cycles v = fn_({});
    if (!v) throw std::runtime_error("the unmodified program fails its tests");
    std::lock_guard lock(mu_);
    cache_.emplace(UidSet{}, v);
    baseline_ = v;
    return *v;
}

std::uint64_t FitnessOracle::misses() const {
    std::lock_guard lock(mu_);
    return misses_;
}

std::uint64_t FitnessOracle::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

void FitnessOracle::reset_counters() {
    std::lock_guard lock(mu_);
    misses_ = calls_ = 0;
}

// ---------------------------------------------------------------------------

MinimizeResult minimize_weak_edits(const std::vector<Uid>& order, FitnessOracle& f, double theta) {
    MinimizeResult r;
    const auto S = make_set(order);
    if (S.size() != order.size()) throw std::invalid_argument("iteration order repeats an edit");
    if (S.empty()) return r;
    const auto misses0 = f.misses();
    const double base = f.baseline();
    const auto full = f(S);
    if (!full) throw std::runtime_error("the full edit set fails");
    for (Uid e : order) {
        const auto current = set_minus(S, r.weaks);
        const auto with = f(current);
        const auto without = f(set_minus(current, {e}));
        // Removing e must leave a working program for it to count as weak.
        if (!with || !without) continue;
        if (improvement(*without, *with) < theta) r.weaks = set_union(r.weaks, {e});
    }
    r.kept = set_minus(S, r.weaks);
    r.full_improvement = improvement(base, *full);
    const auto kept = f(r.kept);
    r.kept_improvement = kept ? improvement(base, *kept) : -std::numeric_limits<double>::infinity();
    r.oracle_calls = f.misses() - misses0;
    return r;
}

SeparateResult separate_edits(const std::vector<Uid>& order, FitnessOracle& f, double tol) {
    SeparateResult r;
    const auto S = make_set(order);
    if (S.size() != order.size()) throw std::invalid_argument("iteration order repeats an edit");
    const auto misses0 = f.misses();
    if (!S.empty()) {
        const double base = f.baseline();
        if (!f(S)) throw std::runtime_error("the full edit set fails");
        for (Uid e : order) {
            const auto alone = f({e});
            const auto rest = set_minus(S, r.independent);
            const auto rest_without = f(set_minus(rest, {e}));
            if (!alone || !rest_without) continue;
            const auto rest_with = f(rest);
            if (!rest_with) continue;
            const double incr = improvement(base, *alone);
            const double decr = improvement(*rest_without, *rest_with);
            if (std::abs(incr - decr) <= tol) {
                r.independent = set_union(r.independent, {e});
                r.perf_incr[e] = incr;
                r.perf_decr[e] = decr;
            }
        }
    }
    r.epistatic = set_minus(S, r.independent);
    r.oracle_calls = f.misses() - misses0;
    return r;
}

// ---------------------------------------------------------------------------

Cycles SubsetTable::at(const UidSet& subset) const {
    std::uint64_t mask = 0;
    for (Uid u : subset) {
        auto it = std::find(edits.begin(), edits.end(), u);
        if (it == edits.end()) throw std::out_of_range("edit " + std::to_string(u) + " is not in the table");
        mask |= std::uint64_t{1} << (it - edits.begin());
    }
    return fitness.at(mask);
}

std::optional<double> SubsetTable::perf(std::uint64_t mask) const {
    const auto& v = fitness.at(mask);
    if (!v) return std::nullopt;
    return improvement(baseline, *v);
}

SubsetTable enumerate_subsets(const std::vector<Uid>& edits, FitnessOracle& f, int jobs) {
    if (edits.size() > kMaxEpistatic) {
        throw TooManyEdits(std::to_string(edits.size()) + " epistatic edits; at most " +
                           std::to_string(kMaxEpistatic) + " can be enumerated, minimize the edit set first");
    }
    if (make_set(edits).size() != edits.size()) throw std::invalid_argument("edit list repeats an edit");
    SubsetTable t;
    t.edits = edits;
    t.baseline = f.baseline();
    const std::size_t n = std::size_t{1} << edits.size();
    t.fitness.assign(n, std::nullopt);
    evo::parallel_for(n, jobs, [&](std::size_t mask) {
        std::vector<Uid> s;
        for (std::size_t k = 0; k < edits.size(); ++k) {
            if (mask >> k & 1) s.push_back(edits[k]);
        }
        t.fitness[mask] = f(make_set(std::move(s)));
    });
    return t;
}

std::optional<double> marginal(const SubsetTable& table, std::size_t k, std::uint64_t mask) {
    const auto with = table.perf(mask | (std::uint64_t{1} << k));
    if (!with) return std::nullopt;
    const auto without = table.perf(mask);
    if (!without) return std::numeric_limits<double>::infinity();
    return *with - *without;
}

namespace {

bool differs(const std::optional<double>& a, const std::optional<double>& b, double theta) {
    if (!a || !b) return a.has_value() != b.has_value();
    if (std::isinf(*a) || std::isinf(*b)) return *a != *b;
    return std::abs(*a - *b) > theta;
}

}  // namespace

InteractionGraph interaction_graph(const SubsetTable& table, double theta) {
    const std::size_t n = table.edits.size();
    const std::uint64_t all = (std::uint64_t{1} << n) - 1;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    InteractionGraph g;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const std::uint64_t bi = std::uint64_t{1} << i, bj = std::uint64_t{1} << j;
            const std::uint64_t rest = all & ~bi & ~bj;
            bool interacts = false, requires_j = true;
            // Every T within rest, including the empty set.
            for (std::uint64_t T = rest;; T = (T - 1) & rest) {
                const auto d_without = marginal(table, i, T);
                const auto d_with = marginal(table, i, T | bj);
                if (differs(d_with, d_without, theta)) interacts = true;
                if (d_without && *d_without >= theta) requires_j = false;
                if (T == 0) break;
            }
            if (interacts) parent[find(i)] = find(j);
            if (requires_j) g.dependencies.emplace_back(table.edits[i], table.edits[j]);
        }
    }
    std::map<std::size_t, UidSet> groups;
    for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(table.edits[i]);
    for (auto& [root, members] : groups) {
        Cluster c;
        c.members = make_set(members);
        std::uint64_t mask = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (find(i) == root) mask |= std::uint64_t{1} << i;
        }
        if (auto p = table.perf(mask)) c.improvement = *p - *table.perf(0);
        g.clusters.push_back(std::move(c));
    }
    std::sort(g.clusters.begin(), g.clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
    // Dependencies only make sense inside one cluster.
    std::erase_if(g.dependencies, [&](const std::pair<Uid, Uid>& e) {
        for (const auto& c : g.clusters) {
            const bool a = std::binary_search(c.members.begin(), c.members.end(), e.first);
            const bool b = std::binary_search(c.members.begin(), c.members.end(), e.second);
            if (a || b) return !(a && b);
        }
        return true;
    });
    std::sort(g.dependencies.begin(), g.dependencies.end());
    return g;
}

// ---------------------------------------------------------------------------

DiscoveryHistory discovery_history(const std::vector<evo::GenerationLog>& log, const UidSet& final_edits) {
    DiscoveryHistory h;
    for (Uid u : final_edits) h.first_generation[u] = std::nullopt;
    for (const auto& g : log) {
        for (const auto& s : g.survivors) {
            for (Uid u : s.uids) {
                auto it = h.first_generation.find(u);
                if (it != h.first_generation.end() && !it->second) it->second = g.generation;
            }
        }
        UidSet group;
        for (Uid u : g.best_uids) {
            if (std::binary_search(final_edits.begin(), final_edits.end(), u)) group.push_back(u);
        }
        h.best_groups.emplace_back(g.generation, make_set(std::move(group)));
    }
    return h;
}

std::vector<Uid> discovery_order(const DiscoveryHistory& h, const UidSet& edits) {
    std::vector<Uid> out(edits.begin(), edits.end());
    auto gen = [&](Uid u) {
        auto it = h.first_generation.find(u);
        return it == h.first_generation.end() || !it->second ? std::numeric_limits<int>::max() : *it->second;
    };
    std::stable_sort(out.begin(), out.end(), [&](Uid a, Uid b) {
        const int ga = gen(a), gb = gen(b);
        return ga != gb ? ga < gb : a < b;
    });
    return out;
}

namespace {

struct Found {
    const mir::Function* fn;
    const mir::Block* block;
    const mir::Instruction* inst;
};

std::optional<Found> locate(const mir::Program& p, mir::InstId id) {
    for (const auto& fn : p.functions) {
        for (const auto& b : fn.blocks) {
            for (const auto& inst : b.insts) {
                if (inst.id == id) return Found{&fn, &b, &inst};
            }
        }
    }
    return std::nullopt;
}

std::string describe(const mir::Program& p, const Found& f) {
    std::string s = "@" + f.fn->name + " block " + f.block->label;
    s += " at " + (f.inst->loc.empty() ? std::string("<no source location>") : f.inst->loc);
    s += ": " + mir::print_instruction(p, *f.fn, *f.inst);
    return s;
}

}  // namespace

std::string source_map(const evo::Edit& edit, const mir::Program& seed) {
    using K = evo::EditKind;
    std::string s = std::string(evo::edit_kind_name(edit.kind)) + " #" + std::to_string(edit.uid) + " ";
    auto target = locate(seed, edit.target);
    if (!target) return s + "synthetic/derived location (instruction " + std::to_string(edit.target) + ")";
    switch (edit.kind) {
        case K::InstCopy: {
            s += "copies " + describe(seed, *target);
            if (auto at = locate(seed, edit.other)) s += " | before " + describe(seed, *at);
            break;
        }
        case K::InstMove:
            s += describe(seed, *target);
            if (auto at = locate(seed, edit.other)) s += " | before " + describe(seed, *at);
            break;
        case K::InstReplace:
            s += describe(seed, *target);
            if (auto d = locate(seed, edit.other)) {
                s += " | with " + describe(seed, *d);
            } else {
                s += " | with synthetic/derived instruction " + std::to_string(edit.other);
            }
            break;
        case K::InstSwap:
            s += describe(seed, *target);
            if (auto o = locate(seed, edit.other)) s += " | with " + describe(seed, *o);
            break;
        case K::OperandReplace:
            s += "operand " + std::to_string(edit.index) + " of " + describe(seed, *target);
            break;
        case K::InstDelete: s += describe(seed, *target); break;
    }
    return s;
}

// ---------------------------------------------------------------------------

AnalysisReport analyze(const mir::Program& seed, const evo::EditList& edits, FitnessOracle& oracle,
                       const std::vector<evo::GenerationLog>& log, const AnalysisOptions& opts) {
    AnalysisReport r;
    std::vector<Uid> uids;
    for (const auto& e : edits) uids.push_back(e.uid);
    r.input = make_set(uids);
    if (r.input.size() != uids.size()) throw std::invalid_argument("edit list repeats a uid");
    for (const auto& e : edits) r.annotations[e.uid] = source_map(e, seed);
    r.baseline = oracle.baseline();

    std::vector<Uid> order = uids;
    if (opts.history && !log.empty()) {
        r.history = discovery_history(log, r.input);
        order = discovery_order(*r.history, r.input);
        r.stages.push_back("history: " + std::to_string(log.size()) + " generations");
    } else {
        std::sort(order.begin(), order.end());
    }
    auto ordered = [&](const UidSet& s) {
        std::vector<Uid> out;
        for (Uid u : order) {
            if (std::binary_search(s.begin(), s.end(), u)) out.push_back(u);
        }
        return out;
    };

    r.kept = r.input;
    if (const auto full = oracle(r.input)) {
        r.full_improvement = r.kept_improvement = improvement(r.baseline, *full);
    } else {
        throw std::runtime_error("the edit set fails its tests");
    }
    if (opts.minimize) {
        auto m = minimize_weak_edits(ordered(r.input), oracle, opts.theta);
        r.kept = m.kept;
        r.weaks = m.weaks;
        r.kept_improvement = m.kept_improvement;
        r.stages.push_back("minimize: " + std::to_string(r.input.size()) + " edits -> " +
                           std::to_string(r.kept.size()) + " kept, " + std::to_string(r.weaks.size()) + " weak, " +
                           std::to_string(m.oracle_calls) + " evaluations");
    }
    const bool separate = opts.separate || opts.clusters;
    if (separate) {
        auto s = separate_edits(ordered(r.kept), oracle, opts.tol);
        r.independent = s.independent;
        r.epistatic = s.epistatic;
        r.perf_incr = s.perf_incr;
        r.stages.push_back(std::string(opts.separate ? "" : "(implied) ") + "separate: " +
                           std::to_string(r.kept.size()) + " edits -> " + std::to_string(r.independent.size()) +
                           " independent, " + std::to_string(r.epistatic.size()) + " epistatic, " +
                           std::to_string(s.oracle_calls) + " evaluations");
    }
    if (opts.clusters) {
        const auto misses0 = oracle.misses();
        r.subsets = enumerate_subsets(ordered(r.epistatic), oracle, opts.jobs);
        r.graph = interaction_graph(*r.subsets, opts.theta);
        r.stages.push_back("clusters: " + std::to_string(r.subsets->fitness.size()) + " subsets, " +
                           std::to_string(r.graph->clusters.size()) + " clusters, " +
                           std::to_string(r.graph->dependencies.size()) + " dependency edges, " +
                           std::to_string(oracle.misses() - misses0) + " evaluations");
    }
    return r;
}

namespace {

json cycles_json(const Cycles& c) { return c ? json(*c) : json(nullptr); }

}  // namespace

json AnalysisReport::to_json() const {
    json j;
    j["baseline_cycles"] = baseline;
    j["input"] = input;
    j["weaks"] = weaks;
    j["kept"] = kept;
    j["independent"] = json::array();
    for (Uid u : independent) {
        json e{{"uid", u}};
        if (auto it = perf_incr.find(u); it != perf_incr.end()) e["perf_incr"] = it->second;
        j["independent"].push_back(e);
    }
    j["epistatic"] = epistatic;
    j["full_improvement"] = full_improvement;
    j["kept_improvement"] = kept_improvement;
    if (subsets) {
        json rows = json::array();
        for (std::size_t mask = 0; mask < subsets->fitness.size(); ++mask) {
            UidSet s;
            for (std::size_t k = 0; k < subsets->edits.size(); ++k) {
                if (mask >> k & 1) s.push_back(subsets->edits[k]);
            }
            rows.push_back({{"subset", make_set(s)}, {"cycles", cycles_json(subsets->fitness[mask])}});
        }
        j["subset_table"] = rows;
    }
    if (graph) {
        json cl = json::array();
        for (const auto& c : graph->clusters) {
            cl.push_back({{"members", c.members},
                          {"improvement", c.improvement ? json(*c.improvement) : json(nullptr)}});
        }
        j["clusters"] = cl;
        json edges = json::array();
        for (const auto& [a, b] : graph->dependencies) edges.push_back({{"from", a}, {"to", b}});
        j["dependency_edges"] = edges;
        j["edge_rule"] =
            "i -> j (i requires j) when every subset holding i but not j fails or gains less than the threshold "
            "from i; one formalization among several";
    }
    if (history) {
        json fg = json::object();
        for (const auto& [u, g] : history->first_generation) fg[std::to_string(u)] = g ? json(*g) : json(nullptr);
        j["history"]["first_generation"] = fg;
        json groups = json::array();
        for (const auto& [gen, s] : history->best_groups) groups.push_back({{"generation", gen}, {"edits", s}});
        j["history"]["best_groups"] = groups;
    }
    json ann = json::object();
    for (const auto& [u, a] : annotations) ann[std::to_string(u)] = a;
    j["annotations"] = ann;
    j["stages"] = stages;
    return j;
}

std::string AnalysisReport::to_dot() const {
    std::ostringstream os;
    os << "digraph edits {\n  rankdir=LR;\n";
    if (graph) {
        int idx = 0;
        for (const auto& c : graph->clusters) {
            os << "  subgraph cluster_" << idx++ << " {\n    label=\"";
            if (c.improvement) {
                os << std::fixed;
                os.precision(2);
                os << *c.improvement * 100 << "%";
            } else {
                os << "fails";
            }
            os << "\";\n";
            for (Uid u : c.members) os << "    e" << u << " [label=\"" << u << "\"];\n";
            os << "  }\n";
        }
        for (const auto& [a, b] : graph->dependencies) os << "  e" << a << " -> e" << b << ";\n";
    }
    os << "}\n";
    return os.str();
}

std::string AnalysisReport::subsets_csv() const {
    std::ostringstream os;
    os << "subset,cycles,improvement\n";
    if (!subsets) return os.str();
    for (std::size_t mask = 0; mask < subsets->fitness.size(); ++mask) {
        std::string name;
        for (std::size_t k = 0; k < subsets->edits.size(); ++k) {
            if (mask >> k & 1) name += (name.empty() ? "" : " ") + std::to_string(subsets->edits[k]);
        }
        os << '"' << name << "\",";
        if (const auto& c = subsets->fitness[mask]) {
            os << *c << "," << *subsets->perf(mask);
        } else {
            os << "fail,";
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace evomir::postopt
