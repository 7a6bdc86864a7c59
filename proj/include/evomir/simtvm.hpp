#pragma once

// Deterministic SIMT interpreter with an additive per-opcode cycle model.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "evomir/mir.hpp"

namespace evomir::vm {

struct LaunchConfig {
    int blocks = 1;
    int threads_per_block = 32;
    int warp_size = 32;

    // Throws std::invalid_argument when the shape is unusable.
    void check() const;
    int warps_per_block() const { return threads_per_block / warp_size; }
};

struct CostModel {
    std::array<std::uint32_t, mir::kOpcodeCount> cost{};

    std::uint32_t of(mir::Opcode op) const { return cost[static_cast<std::size_t>(op)]; }

    static CostModel defaults();
    // Keys are opcode names; missing keys keep their value from `base`.
    static CostModel from_json(const nlohmann::json& j, const CostModel& base = defaults());
    nlohmann::json to_json() const;
};

enum class Status : std::uint8_t { Completed, Timeout, Fault };
enum class FaultKind : std::uint8_t { None, OutOfBounds, DivByZero, Deadlock, Malformed };

std::string_view status_name(Status s);
std::string_view fault_name(FaultKind f);

using Buffers = std::map<std::string, std::vector<std::int32_t>>;

struct ExecutionResult {
    Buffers outputs;  // every global buffer, by name
    std::uint64_t cycles = 0;
    std::uint64_t max_warp_cycles = 0;
    Status status = Status::Completed;
    FaultKind fault = FaultKind::None;
    std::string fault_location;
    // Warp-issued instruction counts.
    std::array<std::uint64_t, mir::kOpcodeCount> op_counts{};
    // Same counts grouped by category; and/or/xor count as compare logic
    // only when they operate on bool.
    std::array<std::uint64_t, mir::kCategoryCount> category_counts{};

    bool ok() const { return status == Status::Completed; }
    std::uint64_t instructions() const;
    nlohmann::json to_json() const;
    friend bool operator==(const ExecutionResult&, const ExecutionResult&) = default;
};

struct LaunchArgs {
    std::vector<std::int32_t> params;  // kernel parameters; bool as 0/1
    Buffers inputs;                    // shorter than declared means zero padded
    std::uint64_t seed = 0;
    std::uint64_t cycle_budget = UINT64_MAX;  // per warp
};

// Pure function of its arguments. `trace`, when given, receives one line per
// warp-issued instruction: block warp mask id opcode cost.
ExecutionResult launch(const mir::Program& program, const LaunchConfig& config, const LaunchArgs& args,
                       const CostModel& costs = CostModel::defaults(), std::ostream* trace = nullptr);

// Fraction of executed instructions per category; sums to 1 for any run that
// executed at least one instruction.
std::array<double, mir::kCategoryCount> instruction_mix(const ExecutionResult& result);

// Value of the `counter`-th rand executed by `thread` (index within the block).
std::int32_t rand_stream(std::uint64_t seed, int block, int thread, std::uint64_t counter);

}  // namespace evomir::vm
