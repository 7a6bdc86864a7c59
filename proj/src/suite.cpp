#include "evomir/suite.hpp"

#include <cmath>
#include <sstream>

namespace evomir {

std::vector<const TestCase*> TestSuite::partition(Partition p) const {
    std::vector<const TestCase*> out;
    for (const auto& t : tests) {
        if (t.partition == p) out.push_back(&t);
    }
    return out;
}

std::string_view partition_name(Partition p) { return p == Partition::Fitness ? "fitness" : "heldout"; }

void sample_moments(const std::vector<std::vector<std::int32_t>>& reps, std::vector<double>& mean,
                    std::vector<double>& var) {
    const std::size_t cells = reps.empty() ? 0 : reps.front().size();
    mean.assign(cells, 0.0);
    var.assign(cells, 0.0);
    if (reps.empty()) return;
    const double n = static_cast<double>(reps.size());
    for (const auto& r : reps) {
        for (std::size_t c = 0; c < cells; ++c) mean[c] += r[c];
    }
    for (auto& m : mean) m /= n;
    if (reps.size() < 2) return;
    for (const auto& r : reps) {
        for (std::size_t c = 0; c < cells; ++c) {
            const double d = r[c] - mean[c];
            var[c] += d * d;
        }
    }
    for (auto& v : var) v /= n - 1.0;
}

std::string check_stochastic(const std::vector<std::vector<std::int32_t>>& reps, const StochasticTruth& truth,
                             const Validator& v) {
    if (reps.size() < 3) return "stochastic validation needs at least 3 replicates";
    const std::size_t cells = truth.mean.size();
    std::vector<std::vector<std::int32_t>> cut;
    cut.reserve(reps.size());
    for (const auto& r : reps) {
        if (r.size() < cells) return "output @" + truth.buffer + " shorter than the ground truth";
        cut.emplace_back(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(cells));
    }
    std::vector<double> mean, var;
    sample_moments(cut, mean, var);
    for (std::size_t c = 0; c < cells; ++c) {
        const double scale = truth.var[c] + 1.0;
        if (std::abs(mean[c] - truth.mean[c]) > v.mean_tol * std::sqrt(scale)) {
            std::ostringstream os;
            os << "@" << truth.buffer << "[" << c << "] mean " << mean[c] << " vs " << truth.mean[c];
            return os.str();
        }
        if (std::abs(var[c] - truth.var[c]) > v.var_tol * scale) {
            std::ostringstream os;
            os << "@" << truth.buffer << "[" << c << "] variance " << var[c] << " vs " << truth.var[c];
            return os.str();
        }
    }
    return {};
}

namespace {

std::string check_exact(const vm::ExecutionResult& r, const vm::Buffers& expected) {
    for (const auto& [name, want] : expected) {
        auto it = r.outputs.find(name);
        if (it == r.outputs.end()) return "missing output @" + name;
        const auto& got = it->second;
        if (got.size() < want.size()) return "output @" + name + " too short";
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (got[i] != want[i]) {
                return "@" + name + "[" + std::to_string(i) + "] = " + std::to_string(got[i]) + ", expected " +
                       std::to_string(want[i]);
            }
        }
    }
    return {};
}

}  // namespace

TestOutcome run_test(const mir::Program& program, const TestCase& test, const Validator& validator,
                     const vm::CostModel& costs, std::uint64_t budget, bool keep_runs) {
    TestOutcome out;
    vm::LaunchArgs args;
    args.params = test.params;
    args.inputs = test.inputs;
    args.cycle_budget = budget ? budget : (test.cycle_budget ? test.cycle_budget : UINT64_MAX);
    std::vector<std::vector<std::int32_t>> replicates;
    double total = 0;
    for (auto seed : test.seeds) {
        args.seed = seed;
        auto r = vm::launch(program, test.launch, args, costs);
        out.max_warp_cycles = std::max(out.max_warp_cycles, r.max_warp_cycles);
        total += static_cast<double>(r.cycles);
        if (!r.ok()) {
            out.status = r.status;
            out.failure = test.name + ": " + std::string(vm::status_name(r.status));
            if (r.status == vm::Status::Fault) out.failure += " (" + std::string(vm::fault_name(r.fault)) + ")";
            if (!r.fault_location.empty()) out.failure += " at " + r.fault_location;
            if (keep_runs) out.runs.push_back(std::move(r));
            return out;
        }
        if (validator.mode == Validator::Mode::Exact) {
            auto why = check_exact(r, test.expected);
            if (!why.empty()) {
                out.failure = test.name + ": validation mismatch " + why;
                if (keep_runs) out.runs.push_back(std::move(r));
                return out;
            }
        } else if (test.truth) {
            auto it = r.outputs.find(test.truth->buffer);
            if (it == r.outputs.end()) {
                out.failure = test.name + ": missing output @" + test.truth->buffer;
                return out;
            }
            replicates.push_back(it->second);
        }
        if (keep_runs) out.runs.push_back(std::move(r));
    }
    if (validator.mode == Validator::Mode::Stochastic) {
        if (!test.truth) {
            out.failure = test.name + ": stochastic test without ground truth";
            return out;
        }
        auto why = check_stochastic(replicates, *test.truth, validator);
        if (!why.empty()) {
            out.failure = test.name + ": validation mismatch " + why;
            return out;
        }
    }
    out.cycles = test.seeds.empty() ? 0.0 : total / static_cast<double>(test.seeds.size());
    out.passed = true;
    return out;
}

nlohmann::json to_json(const Validator& v) {
    nlohmann::json j;
    j["mode"] = v.mode == Validator::Mode::Exact ? "exact" : "stochastic";
    if (v.mode == Validator::Mode::Stochastic) {
        j["mean_tol"] = v.mean_tol;
        j["var_tol"] = v.var_tol;
    }
    return j;
}

Validator validator_from_json(const nlohmann::json& j) {
    Validator v;
    const auto mode = j.value("mode", std::string("exact"));
    if (mode == "exact") {
        v.mode = Validator::Mode::Exact;
    } else if (mode == "stochastic") {
        v.mode = Validator::Mode::Stochastic;
    } else {
        throw std::invalid_argument("unknown validator mode '" + mode + "'");
    }
    v.mean_tol = j.value("mean_tol", v.mean_tol);
    v.var_tol = j.value("var_tol", v.var_tol);
    return v;
}

nlohmann::json to_json(const TestCase& t) {
    nlohmann::json j;
    j["name"] = t.name;
    j["partition"] = partition_name(t.partition);
    j["launch"] = {{"blocks", t.launch.blocks},
                   {"threads_per_block", t.launch.threads_per_block},
                   {"warp_size", t.launch.warp_size}};
    j["params"] = t.params;
    j["inputs"] = t.inputs;
    j["expected"] = t.expected;
    j["seeds"] = t.seeds;
    if (t.truth) j["truth"] = {{"buffer", t.truth->buffer}, {"mean", t.truth->mean}, {"var", t.truth->var}};
    if (t.cycle_budget) j["cycle_budget"] = t.cycle_budget;
    return j;
}

TestCase test_case_from_json(const nlohmann::json& j) {
    TestCase t;
    t.name = j.at("name").get<std::string>();
    const auto part = j.value("partition", std::string("fitness"));
    if (part != "fitness" && part != "heldout") throw std::invalid_argument("unknown partition '" + part + "'");
    t.partition = part == "fitness" ? Partition::Fitness : Partition::HeldOut;
    if (j.contains("launch")) {
        const auto& l = j["launch"];
        t.launch.blocks = l.value("blocks", 1);
        t.launch.threads_per_block = l.value("threads_per_block", 32);
        t.launch.warp_size = l.value("warp_size", 32);
    }
    t.params = j.value("params", std::vector<std::int32_t>{});
    t.inputs = j.value("inputs", vm::Buffers{});
    t.expected = j.value("expected", vm::Buffers{});
    t.seeds = j.value("seeds", std::vector<std::uint64_t>{0});
    if (j.contains("truth")) {
        const auto& tr = j["truth"];
        t.truth = StochasticTruth{tr.at("buffer").get<std::string>(), tr.at("mean").get<std::vector<double>>(),
                                  tr.at("var").get<std::vector<double>>()};
    }
    t.cycle_budget = j.value("cycle_budget", std::uint64_t{0});
    return t;
}

}  // namespace evomir
