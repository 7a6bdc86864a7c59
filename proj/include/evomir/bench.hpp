#pragma once

// Built-in kernels with planted inefficiencies, their CPU reference oracles,
// and generators for the test suites that validate them.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "evomir/evo.hpp"
#include "evomir/mir.hpp"
#include "evomir/rng.hpp"
#include "evomir/suite.hpp"

namespace evomir::bench {

// ---------------------------------------------------------------------------
// Smith-Waterman

struct ScoringParams {
    int match = 2;
    int mismatch = -2;
    int gap = -1;

    void check() const;
};

struct Alignment {
    std::string a;  // aligned rows, '-' marks a gap
    std::string b;
    std::size_t a_begin = 0, a_end = 0;  // half-open ranges in the inputs
    std::size_t b_begin = 0, b_end = 0;
};

struct SwResult {
    std::vector<std::vector<int>> H;  // (n+1) x (m+1)
    int best = 0;
    std::size_t best_i = 0, best_j = 0;
    Alignment alignment;
};

// Ties in the traceback prefer diagonal, then up, then left. The maximum cell
// is the first one in row-major order.
SwResult sw_reference(std::string_view a, std::string_view b, const ScoringParams& params = {});

// A=0, C=1, G=2, T=3; throws std::invalid_argument on anything else.
std::vector<std::int32_t> encode_dna(std::string_view seq);
std::string random_dna(Rng& rng, std::size_t length);

// ---------------------------------------------------------------------------
// Grids

struct Grid {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> cells;  // row-major

    Grid() = default;
    Grid(int w, int h, std::int32_t fill = 0) : width(w), height(h), cells(static_cast<std::size_t>(w) * h, fill) {}

    std::int32_t& at(int x, int y) { return cells[static_cast<std::size_t>(y) * width + x]; }
    std::int32_t at(int x, int y) const { return cells[static_cast<std::size_t>(y) * width + x]; }
    friend bool operator==(const Grid&, const Grid&) = default;
};

Grid pad_grid(const Grid& g);
Grid crop_grid(const Grid& padded);

// Fixed-point rate over 1024. Each step moves q = v * rate / 1024 from a cell
// towards each in-grid neighbour, so the total is conserved exactly.
Grid diffusion_reference(const Grid& g, int steps, int rate);
std::int64_t total_concentration(const Grid& g);

// ---------------------------------------------------------------------------
// T-cell walk

// Occupancy holds agent ids (1-based) or 0. Agents try to step in a random
// direction; bids on the same free cell go to the highest bidding cell index.
struct WalkResult {
    std::vector<std::int32_t> occupancy;
    std::vector<std::int32_t> visits;  // steps each cell ended occupied
};

WalkResult tcell_reference(const std::vector<std::int32_t>& occupancy, int width, int height, int steps, Rng& rng);
StochasticTruth tcell_truth(const std::vector<std::int32_t>& occupancy, int width, int height, int steps,
                            int replicates, std::uint64_t seed);
std::vector<std::int32_t> random_occupancy(Rng& rng, int width, int height, int agents);

// ---------------------------------------------------------------------------
// Kernels

std::vector<std::string> kernel_names();
// IR text of a built-in kernel; throws std::out_of_range for unknown names.
std::string_view kernel_source(std::string_view name);
mir::Program kernel(std::string_view name);

mir::Program sw_kernel_naive();
mir::Program sw_kernel_tuned();
mir::Program grid_diffusion_checked();
mir::Program grid_diffusion_padded();
mir::Program tcell_walk();

// Negative control: every agent always proposes the cell to its left.
mir::Program tcell_walk_biased();

// Id of the terminator of block `label` in the kernel function.
mir::InstId terminator_of(const mir::Program& p, std::string_view label);
// Id of the instruction whose result is named `name`.
mir::InstId value_id(const mir::Program& p, std::string_view name);

// Deletes the two stores and the barrier of the naive kernel's per-step
// clearing loop (uids 1, 2, 3).
evo::EditList sw_clear_loop_removal(const mir::Program& naive);

// The four interdependent edits on the tuned kernel, uids 5, 6, 8 and 10:
//   6  publish every thread's scores to the full exchange arrays
//   8  read the left neighbour from the full array instead of shfl/edge
//   10 same for the diagonal neighbour
//   5  stop publishing the per-warp edge values
evo::EditList sw_quad_edits(const mir::Program& tuned);

// Drops the bounds check on the downward neighbour of the checked diffusion
// kernel (uid 1).
evo::Edit diffusion_drop_down_guard(const mir::Program& checked);

// ---------------------------------------------------------------------------
// Suites

struct SwSuiteConfig {
    std::string kernel = "sw_naive";
    int pairs = 64;
    int min_len = 16;
    int max_len = 64;
    int heldout_pairs = 16;
    int heldout_min = 128;
    int heldout_max = 256;
    std::uint64_t seed = 7;
    ScoringParams scoring;
};

struct GridSuiteConfig {
    std::string kernel = "grid_checked";
    int width = 32;
    int height = 32;
    int heldout_width = 64;
    int heldout_height = 64;
    int grids = 8;
    int heldout_grids = 2;
    int steps = 4;
    int rate = 128;
    // tcell only
    int agent_percent = 25;  // share of cells holding an agent
    int replicates = 5;
    int truth_replicates = 100;
    std::uint64_t seed = 11;
};

TestCase sw_test(std::string name, Partition part, std::string_view a, std::string_view b,
                 const ScoringParams& scoring = {});
TestCase diffusion_test(std::string name, Partition part, const Grid& g, int steps, int rate, bool padded);
TestCase tcell_test(std::string name, Partition part, const std::vector<std::int32_t>& occupancy, int width,
                    int height, int steps, const std::vector<std::uint64_t>& seeds, int truth_replicates,
                    std::uint64_t truth_seed);

TestSuite gen_sw_suite(const SwSuiteConfig& cfg);
// Exact suites for the diffusion kernels, stochastic ones for tcell.
TestSuite gen_grid_suite(const GridSuiteConfig& cfg);

// Default suite for a built-in kernel.
TestSuite default_suite(std::string_view kernel_name);

// Suite files keep domain inputs (sequences as strings, grids as row-major
// arrays); expected outputs are recomputed from the oracles on load.
nlohmann::json suite_to_json(const TestSuite& suite);
TestSuite suite_from_json(const nlohmann::json& j);

}  // namespace evomir::bench
