#pragma once

// Test cases, suites and the output validators that decide pass/fail.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evomir/mir.hpp"
#include "evomir/simtvm.hpp"

namespace evomir {

enum class Partition : std::uint8_t { Fitness, HeldOut };

// Ground-truth per-cell moments for one output buffer.
struct StochasticTruth {
    std::string buffer;
    std::vector<double> mean;
    std::vector<double> var;
};

struct TestCase {
    std::string name;
    Partition partition = Partition::Fitness;
    vm::LaunchConfig launch;
    std::vector<std::int32_t> params;
    vm::Buffers inputs;
    vm::Buffers expected;  // each listed buffer must start with these values
    std::vector<std::uint64_t> seeds{0};  // one launch per seed
    std::optional<StochasticTruth> truth;
    std::uint64_t cycle_budget = 0;  // 0: decided by the caller
};

struct Validator {
    enum class Mode : std::uint8_t { Exact, Stochastic } mode = Mode::Exact;
    // Stochastic: a cell passes when |mean - mu| <= mean_tol * sqrt(var_gt + 1)
    // and |var - var_gt| <= var_tol * (var_gt + 1).
    double mean_tol = 4.0;
    double var_tol = 8.0;
};

struct TestSuite {
    std::string name;
    std::string kernel;  // built-in kernel the suite was generated for
    Validator validator;
    std::vector<TestCase> tests;

    std::vector<const TestCase*> partition(Partition p) const;
};

struct TestOutcome {
    bool passed = false;
    double cycles = 0;  // mean over the replicate launches
    std::uint64_t max_warp_cycles = 0;
    vm::Status status = vm::Status::Completed;
    std::string failure;  // empty when passed
    std::vector<vm::ExecutionResult> runs;  // kept only when requested
};

// Runs every replicate of `test` and validates the outputs. `budget` overrides
// the test's own cycle budget when nonzero.
TestOutcome run_test(const mir::Program& program, const TestCase& test, const Validator& validator,
                     const vm::CostModel& costs, std::uint64_t budget = 0, bool keep_runs = false);

// Per-cell sample mean and unbiased variance over replicate outputs.
void sample_moments(const std::vector<std::vector<std::int32_t>>& replicates, std::vector<double>& mean,
                    std::vector<double>& var);

// Empty when the replicates are consistent with the truth; otherwise a
// description of the first offending cell.
std::string check_stochastic(const std::vector<std::vector<std::int32_t>>& replicates, const StochasticTruth& truth,
                             const Validator& validator);

nlohmann::json to_json(const TestCase& t);
TestCase test_case_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Validator& v);
Validator validator_from_json(const nlohmann::json& j);
std::string_view partition_name(Partition p);

}  // namespace evomir
