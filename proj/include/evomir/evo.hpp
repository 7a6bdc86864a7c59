#pragma once

// Edit-list genomes, mutation with operand repair, crossover, test-validated
// fitness and the generational search loop.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "evomir/mir.hpp"
#include "evomir/rng.hpp"
#include "evomir/simtvm.hpp"
#include "evomir/suite.hpp"

namespace evomir::evo {

enum class EditKind : std::uint8_t { InstCopy, InstDelete, InstMove, InstReplace, InstSwap, OperandReplace };
constexpr std::size_t kEditKindCount = 6;

std::string_view edit_kind_name(EditKind k);
std::optional<EditKind> edit_kind_from_name(std::string_view name);

// Field use by kind:
//   InstCopy       target = donor, other = insertion point (insert before it)
//   InstDelete     target
//   InstMove       target, other = insertion point
//   InstReplace    target, other = donor
//   InstSwap       target, other
//   OperandReplace target, index, value
struct Edit {
    EditKind kind = EditKind::InstDelete;
    std::uint64_t uid = 0;
    mir::InstId target = 0;
    mir::InstId other = 0;
    std::uint8_t index = 0;
    mir::Operand value;
    std::vector<std::string> source_locs;

    // Id given to the instruction an InstCopy creates.
    mir::InstId fresh_id() const { return mir::kFreshIdBase + static_cast<mir::InstId>(uid); }

    friend bool operator==(const Edit& a, const Edit& b) {
        return a.kind == b.kind && a.uid == b.uid && a.target == b.target && a.other == b.other &&
               a.index == b.index && a.value == b.value;
    }
};

using EditList = std::vector<Edit>;

enum class ApplyErrorKind : std::uint8_t { MissingTarget, NoCandidate, Invalid, BadEdit };
std::string_view apply_error_name(ApplyErrorKind k);

struct ApplyError {
    ApplyErrorKind kind;
    std::string message;
};

struct MaterializeError {
    std::size_t index;  // position of the first failing edit
    ApplyError cause;
};

std::variant<mir::Program, ApplyError> apply_edit(const mir::Program& program, const Edit& edit);
// In-place form; leaves `program` unspecified on failure.
std::optional<ApplyError> apply_edit_in_place(mir::Program& program, const Edit& edit);

std::variant<mir::Program, MaterializeError> materialize(const mir::Program& seed, const EditList& edits);

struct Fitness {
    double mean_cycles = 0;
    std::vector<double> per_test_cycles;
};

struct Variant {
    EditList edits;
    std::shared_ptr<const mir::Program> program;  // materialize(seed, edits)
    std::optional<Fitness> fitness;
    std::string invalid_reason;

    std::vector<std::uint64_t> uids() const;
};

Variant seed_variant(const mir::Program& seed);

// Appends one random edit with the given uid. Gives back the variant
// unchanged when 20 attempts all fail to apply.
Variant mutate(const Variant& v, Rng& rng, std::uint64_t uid);
// Same, but draws the edit from `pool` (edits already present are skipped).
Variant mutate_from_pool(const Variant& v, Rng& rng, const EditList& pool);

// Builds the edit a mutation would append; nullopt when the drawn kind has no
// legal target in `program`.
std::optional<Edit> random_edit(const mir::Program& program, Rng& rng, std::uint64_t uid);

std::pair<Variant, Variant> crossover(const Variant& a, const Variant& b, Rng& rng, const mir::Program& seed);
// Crossover with explicit cut points.
std::pair<Variant, Variant> crossover_at(const Variant& a, const Variant& b, std::size_t i, std::size_t j,
                                         const mir::Program& seed);

struct EvalOutcome {
    std::optional<Fitness> fitness;
    std::string reason;  // why the variant is invalid
};

// Runs the tests in order and stops at the first failure.
EvalOutcome evaluate_program(const mir::Program& program, const std::vector<const TestCase*>& tests,
                             const Validator& validator, const vm::CostModel& costs,
                             const std::vector<std::uint64_t>& budgets);

EvalOutcome evaluate(const Variant& v, const mir::Program& seed, const std::vector<const TestCase*>& tests,
                     const Validator& validator, const vm::CostModel& costs,
                     const std::vector<std::uint64_t>& budgets);

// Per-test cycle budgets: factor times the seed's largest per-warp cycle count
// on that test (tests with their own budget keep it).
std::vector<std::uint64_t> derive_budgets(const mir::Program& seed, const std::vector<const TestCase*>& tests,
                                          const Validator& validator, const vm::CostModel& costs, double factor);

struct SearchConfig {
    int population_size = 256;
    int elitism = 4;
    double crossover_prob = 0.8;
    double mutation_prob = 0.3;
    int generations = 50;
    std::uint64_t seed = 1;
    int tournament_size = 2;
    double budget_factor = 4.0;
    int jobs = 1;
    EditList edit_pool;  // when nonempty, mutations draw from it

    void check() const;
    nlohmann::json to_json() const;
    static SearchConfig from_json(const nlohmann::json& j);
    static SearchConfig from_json(const nlohmann::json& j, SearchConfig base);
};

struct Survivor {
    std::vector<std::uint64_t> uids;
    double fitness = 0;
};

struct GenerationLog {
    int generation = 0;
    double best = 0;
    double mean = 0;
    double valid_rate = 0;
    std::vector<std::uint64_t> best_uids;
    std::vector<Survivor> survivors;  // every valid individual, in rank order

    nlohmann::json to_json() const;
    static GenerationLog from_json(const nlohmann::json& j);
};

// State needed to continue a search after generation `generation`.
struct Checkpoint {
    int generation = -1;  // last completed generation
    std::uint64_t next_uid = 1;
    std::vector<EditList> population;  // individuals of generation + 1
    std::vector<GenerationLog> log;
    Variant best;

    nlohmann::json to_json() const;
    static Checkpoint from_json(const nlohmann::json& j, const mir::Program& seed);
};

struct SearchResult {
    Variant best;
    std::vector<GenerationLog> log;
    Fitness baseline;
    std::vector<std::uint64_t> budgets;
    std::uint64_t evaluations = 0;  // distinct programs run
    std::uint64_t cache_hits = 0;
    std::map<std::uint64_t, Edit> edits_seen;  // every edit ever created, by uid
};

struct SearchHooks {
    std::function<void(const GenerationLog&)> on_generation;
    std::function<void(const Checkpoint&)> on_checkpoint;
};

class SearchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

SearchResult evolve(const mir::Program& seed, const TestSuite& suite, const SearchConfig& config,
                    const vm::CostModel& costs, const SearchHooks& hooks = {},
                    const std::optional<Checkpoint>& resume = std::nullopt);

// Edit (de)serialization.
nlohmann::json to_json(const Edit& e);
Edit edit_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EditList& edits);
EditList edit_list_from_json(const nlohmann::json& j);
nlohmann::json operand_to_json(const mir::Operand& o);
mir::Operand operand_from_json(const nlohmann::json& j);

// Runs f(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& f);

}  // namespace evomir::evo
