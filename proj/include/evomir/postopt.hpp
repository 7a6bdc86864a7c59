#pragma once

// Post-hoc analysis of an edit set found by the search: weak-edit removal,
// independent/epistatic separation, exhaustive subset evaluation and the
// interaction graph, discovery history and source annotations.

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evomir/evo.hpp"
#include "evomir/mir.hpp"
#include "evomir/simtvm.hpp"
#include "evomir/suite.hpp"

namespace evomir::postopt {

using Uid = std::uint64_t;
using UidSet = std::vector<Uid>;  // kept sorted

// nullopt stands for Failure.
using Cycles = std::optional<double>;

// f(S) for subsets of a fixed edit list. Subsets are applied in the order the
// edits have in that list. Results are memoized by uid set; `misses()` counts
// the evaluations that were not answered from the cache.
class FitnessOracle {
public:
    using Fn = std::function<Cycles(const UidSet&)>;

    // Evaluates materialize(seed, subset) on `tests`; budgets as in evolve.
    FitnessOracle(mir::Program seed, evo::EditList edits, std::vector<const TestCase*> tests, Validator validator,
                  vm::CostModel costs, double budget_factor = 4.0);
    // Synthetic landscape.
    explicit FitnessOracle(Fn fn);

    Cycles operator()(const UidSet& subset);
    // f(empty set); computed once and not counted as a miss.
    double baseline();

    std::uint64_t misses() const;
    std::uint64_t calls() const;
    void reset_counters();

    const evo::EditList& edits() const { return edits_; }

private:
    Fn fn_;
    evo::EditList edits_;
    mutable std::mutex mu_;
    std::map<UidSet, Cycles> cache_;
    std::optional<double> baseline_;
    std::uint64_t misses_ = 0, calls_ = 0;
};

UidSet make_set(std::vector<Uid> uids);
UidSet set_minus(const UidSet& a, const UidSet& b);
UidSet set_union(const UidSet& a, const UidSet& b);

// Relative improvement (from - to) / from.
double improvement(double from, double to);

struct MinimizeResult {
    UidSet kept;
    UidSet weaks;
    double full_improvement = 0;  // perf(S)
    double kept_improvement = 0;  // perf(kept)
    std::uint64_t oracle_calls = 0;
};

// `order` gives the iteration order (normally discovery order); it must hold
// exactly the uids of `S`. Throws std::runtime_error when f(S) fails.
MinimizeResult minimize_weak_edits(const std::vector<Uid>& order, FitnessOracle& f, double theta = 0.01);

struct SeparateResult {
    UidSet independent;
    UidSet epistatic;
    std::map<Uid, double> perf_incr;  // independent edits only
    std::map<Uid, double> perf_decr;
    std::uint64_t oracle_calls = 0;
};

SeparateResult separate_edits(const std::vector<Uid>& order, FitnessOracle& f, double tol = 0.01);

struct SubsetTable {
    std::vector<Uid> edits;       // bit k of a mask selects edits[k]
    std::vector<Cycles> fitness;  // indexed by mask
    double baseline = 0;

    Cycles at(const UidSet& subset) const;
    // (f(empty) - f(mask)) / f(empty)
    std::optional<double> perf(std::uint64_t mask) const;
};

constexpr std::size_t kMaxEpistatic = 20;

class TooManyEdits : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

SubsetTable enumerate_subsets(const std::vector<Uid>& edits, FitnessOracle& f, int jobs = 1);

struct Cluster {
    UidSet members;
    std::optional<double> improvement;  // perf(cluster) - perf(empty)
};

struct InteractionGraph {
    std::vector<Cluster> clusters;                  // ordered by smallest member
    std::vector<std::pair<Uid, Uid>> dependencies;  // (i, j): i requires j; sorted
};

// Marginal of edit k given subset mask T (T must not contain k). nullopt when
// T+k fails; +infinity when T fails but T+k does not.
std::optional<double> marginal(const SubsetTable& table, std::size_t k, std::uint64_t mask);

InteractionGraph interaction_graph(const SubsetTable& table, double theta = 0.01);

struct DiscoveryHistory {
    std::map<Uid, std::optional<int>> first_generation;  // nullopt: never observed
    std::vector<std::pair<int, UidSet>> best_groups;      // final edits in each generation's best
};

DiscoveryHistory discovery_history(const std::vector<evo::GenerationLog>& log, const UidSet& final_edits);

// Order by first generation (unobserved last), then uid.
std::vector<Uid> discovery_order(const DiscoveryHistory& h, const UidSet& edits);

std::string source_map(const evo::Edit& edit, const mir::Program& seed);

struct AnalysisOptions {
    bool minimize = true;
    bool separate = true;
    bool clusters = true;
    bool history = true;
    double theta = 0.01;
    double tol = 0.01;
    int jobs = 1;
};

struct AnalysisReport {
    UidSet input;
    UidSet weaks;
    UidSet kept;
    UidSet independent;
    UidSet epistatic;
    std::map<Uid, double> perf_incr;
    std::optional<SubsetTable> subsets;
    std::optional<InteractionGraph> graph;
    std::optional<DiscoveryHistory> history;
    std::map<Uid, std::string> annotations;
    double baseline = 0;
    double full_improvement = 0;
    double kept_improvement = 0;
    std::vector<std::string> stages;  // what ran, in order, with inputs and outputs

    nlohmann::json to_json() const;
    std::string to_dot() const;
    std::string subsets_csv() const;
};

// Runs the requested stages in order minimize, separate, clusters. Asking for
// clusters without separation runs separation first; history needs `log`.
AnalysisReport analyze(const mir::Program& seed, const evo::EditList& edits, FitnessOracle& oracle,
                       const std::vector<evo::GenerationLog>& log, const AnalysisOptions& opts);

}  // namespace evomir::postopt
