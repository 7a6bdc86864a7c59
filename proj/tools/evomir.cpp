// evomir: command-line driver.
//
//   evomir [--seed N] [--jobs N] [--cost-model FILE] [--config FILE] <command> ...
//
// Exit codes: 0 success, 1 usage or input error, 2 execution fault or
// timeout, 3 validation failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evomir/bench.hpp"
#include "evomir/evo.hpp"
#include "evomir/mir.hpp"
#include "evomir/postopt.hpp"
#include "evomir/simtvm.hpp"
#include "evomir/suite.hpp"

#ifndef EVOMIR_DEFAULT_CORPUS
#define EVOMIR_DEFAULT_CORPUS "corpus/v1"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evomir;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr const char* kCorpusVersion = "v1";

enum Exit { kOk = 0, kUsage = 1, kFault = 2, kInvalid = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 1;
    bool seed_set = false;
    int jobs = 1;
    bool jobs_set = false;
    std::string cost_model_file;
    std::string config_file;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& text) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot write " + p.string());
        out << text;
    }
    fs::rename(tmp, p);
}

json read_json(const fs::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::parse_error& e) {
        throw UsageError(p.string() + ": " + e.what());
    }
}

std::string fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

fs::path corpus_dir() {
    if (const char* env = std::getenv("EVOMIR_CORPUS"); env && *env) return env;
    return EVOMIR_DEFAULT_CORPUS;
}

struct LoadedProgram {
    mir::Program program;
    std::string text;
    std::string name;
};

// A path, a file in the corpus, or the name of a built-in kernel.
LoadedProgram load_program(const std::string& arg) {
    LoadedProgram lp;
    fs::path p = arg;
    if (!fs::exists(p)) {
        for (const auto& c : {corpus_dir() / arg, corpus_dir() / (arg + ".ir")}) {
            if (fs::exists(c)) {
                p = c;
                break;
            }
        }
    }
    if (fs::exists(p)) {
        lp.text = read_file(p);
    } else {
        try {
            lp.text = std::string(bench::kernel_source(arg));
        } catch (const std::out_of_range&) {
            throw UsageError("no program file or built-in kernel named '" + arg + "'");
        }
    }
    try {
        lp.program = mir::parse(lp.text);
    } catch (const mir::ParseError& e) {
        throw UsageError(p.string() + ":" + e.what());
    }
    if (auto v = mir::verify(lp.program); !v.empty()) {
        throw UsageError(p.string() + ": program does not verify: " + v.front().message);
    }
    lp.name = lp.program.meta("kernel").value_or(p.stem().string());
    return lp;
}

// A suite file, a suite in the corpus, or "default" for the kernel's
// generated default suite.
TestSuite load_suite(const std::string& arg, const std::string& kernel_name) {
    if (arg.empty() || arg == "default") {
        try {
            return bench::default_suite(kernel_name);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    fs::path p = arg;
    if (!fs::exists(p)) {
        for (const auto& c : {corpus_dir() / "suites" / arg, corpus_dir() / "suites" / (arg + ".json")}) {
            if (fs::exists(c)) {
                p = c;
                break;
            }
        }
    }
    try {
        auto s = bench::suite_from_json(read_json(p));
        if (s.kernel.empty()) s.kernel = kernel_name;
        return s;
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(p.string() + ": " + e.what());
    }
}

json config_json(const Globals& g) {
    if (g.config_file.empty()) return json::object();
    auto j = read_json(g.config_file);
    if (!j.is_object()) throw UsageError("--config must hold a JSON object");
    return j;
}

vm::CostModel cost_model(const Globals& g) {
    auto m = vm::CostModel::defaults();
    try {
        auto cfg = config_json(g);
        if (cfg.contains("cost_model")) m = vm::CostModel::from_json(cfg["cost_model"], m);
        if (!g.cost_model_file.empty()) m = vm::CostModel::from_json(read_json(g.cost_model_file), m);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return m;
}

std::vector<std::int32_t> parse_ints(const std::string& s) {
    std::vector<std::int32_t> out;
    std::string body = s;
    if (!body.empty() && body.front() == '[') body = body.substr(1, body.size() - (body.back() == ']' ? 2 : 1));
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            out.push_back(static_cast<std::int32_t>(std::stol(item)));
        } catch (const std::exception&) {
            throw UsageError("not an integer: '" + item + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// vm

struct VmOptions {
    std::string program;
    std::string suite;
    std::string test;
    std::string partition = "all";
    std::string trace;
    std::string params;
    std::vector<std::string> inputs;
    int blocks = 1, threads = 32, warp = 32;
    std::uint64_t budget = 0;
};

int cmd_vm(const Globals& g, const VmOptions& o) {
    auto lp = load_program(o.program);
    const auto costs = cost_model(g);
    std::ofstream trace;
    if (!o.trace.empty()) {
        trace.open(o.trace, std::ios::trunc);
        if (!trace) throw UsageError("cannot write " + o.trace);
    }
    if (o.suite.empty()) {
        vm::LaunchConfig lc{o.blocks, o.threads, o.warp};
        vm::LaunchArgs args;
        args.params = parse_ints(o.params);
        for (const auto& in : o.inputs) {
            const auto eq = in.find('=');
            if (eq == std::string::npos) throw UsageError("--input expects NAME=v1,v2,... or NAME=@file.json");
            const auto name = in.substr(0, eq), value = in.substr(eq + 1);
            if (!value.empty() && value.front() == '@') {
                args.inputs[name] = read_json(value.substr(1)).get<std::vector<std::int32_t>>();
            } else {
                args.inputs[name] = parse_ints(value);
            }
        }
        args.seed = g.seed;
        if (o.budget) args.cycle_budget = o.budget;
        vm::ExecutionResult r;
        try {
            r = vm::launch(lp.program, lc, args, costs, trace.is_open() ? &trace : nullptr);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        auto j = r.to_json();
        j["program"] = lp.name;
        std::cout << j.dump(2) << "\n";
        return r.ok() ? kOk : kFault;
    }

    auto suite = load_suite(o.suite, lp.name);
    json tests = json::array();
    bool fault = false, invalid = false, any = false;
    double total = 0;
    std::size_t ran = 0;
    for (const auto& t : suite.tests) {
        if (!o.test.empty() && t.name != o.test) continue;
        if (o.partition != "all" && partition_name(t.partition) != o.partition) continue;
        any = true;
        TestOutcome out;
        try {
            out = run_test(lp.program, t, suite.validator, costs, o.budget);
        } catch (const std::invalid_argument& e) {
            throw UsageError(t.name + ": " + e.what());
        }
        if (trace.is_open()) {
            for (auto seed : t.seeds) {
                trace << "# test " << t.name << " seed " << seed << "\n";
                vm::LaunchArgs args{t.params, t.inputs, seed, o.budget ? o.budget : UINT64_MAX};
                vm::launch(lp.program, t.launch, args, costs, &trace);
            }
        }
        json e{{"name", t.name},
               {"partition", partition_name(t.partition)},
               {"status", vm::status_name(out.status)},
               {"passed", out.passed},
               {"cycles", out.cycles},
               {"max_warp_cycles", out.max_warp_cycles}};
        if (!out.passed) e["failure"] = out.failure;
        if (out.status != vm::Status::Completed) {
            fault = true;
        } else if (!out.passed) {
            invalid = true;
        } else {
            total += out.cycles;
            ++ran;
        }
        tests.push_back(std::move(e));
    }
    if (!any) throw UsageError("no test matched the selection");
    json j{{"program", lp.name},
           {"suite", suite.name},
           {"partition", o.partition},
           {"status", fault ? "fault" : invalid ? "mismatch" : "completed"},
           {"passed", !fault && !invalid},
           {"cycles", total},
           {"mean_cycles", ran ? total / static_cast<double>(ran) : 0.0},
           {"tests", tests}};
    std::cout << j.dump(2) << "\n";
    return fault ? kFault : invalid ? kInvalid : kOk;
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
    std::string program;
    std::string suite = "default";
    std::string out = "run";
    int population = 0;
    int generations = 0;
    std::string edit_pool;
    bool resume = false;
    int checkpoint_every = 1;
};

json manifest(const std::string& command, const json& config, const std::string& program_text,
              const std::string& suite_text, const vm::CostModel& costs, std::uint64_t seed, int jobs) {
    const json inputs{{"program_hash", fnv1a(program_text)},
                      {"suite_hash", fnv1a(suite_text)},
                      {"cost_model_hash", fnv1a(costs.to_json().dump())}};
    const json hashed{{"command", command}, {"config", config}, {"inputs", inputs}, {"tool_version", kToolVersion}};
    return {{"tool", "evomir"},
            {"tool_version", kToolVersion},
            {"command", command},
            {"config", config},
            {"config_hash", fnv1a(hashed.dump())},
            {"inputs", inputs},
            {"corpus", {{"path", corpus_dir().string()}, {"version", kCorpusVersion}}},
            {"seeds", {{"search", seed}}},
            {"jobs", jobs},
            {"created", utc_now()}};
}

std::string jsonl(const std::vector<evo::GenerationLog>& log) {
    std::string out;
    for (const auto& g : log) out += g.to_json().dump() + "\n";
    return out;
}

int cmd_run(const Globals& g, const RunOptions& o) {
    auto lp = load_program(o.program);
    const auto costs = cost_model(g);
    auto suite = load_suite(o.suite, lp.name);

    // Desk defaults, then the config file, then explicit flags.
    evo::SearchConfig cfg;
    cfg.population_size = 64;
    cfg.generations = 50;
    try {
        auto cj = config_json(g);
        cfg = evo::SearchConfig::from_json(cj.contains("search") ? cj["search"] : cj, cfg);
    } catch (const json::exception& e) {
        throw UsageError(std::string("--config: ") + e.what());
    }
    if (g.seed_set) cfg.seed = g.seed;
    if (g.jobs_set) cfg.jobs = g.jobs;
    if (o.population) cfg.population_size = o.population;
    if (o.generations) cfg.generations = o.generations;
    if (o.edit_pool == "planted-quad") {
        cfg.edit_pool = bench::sw_quad_edits(lp.program);
    } else if (!o.edit_pool.empty()) {
        cfg.edit_pool = evo::edit_list_from_json(read_json(o.edit_pool));
    }
    try {
        cfg.check();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const fs::path dir = o.out;
    fs::create_directories(dir);
    const auto seed_text = mir::print(lp.program);
    const auto suite_text = bench::suite_to_json(suite).dump(1);
    auto cfg_json = cfg.to_json();
    write_file(dir / "seed.ir", seed_text);
    write_file(dir / "suite.json", suite_text + "\n");
    write_file(dir / "config.json", cfg_json.dump(2) + "\n");
    write_file(dir / "cost_model.json", costs.to_json().dump(2) + "\n");
    write_file(dir / "manifest.json", manifest("run", cfg_json, seed_text, suite_text, costs, cfg.seed, cfg.jobs).dump(2) + "\n");

    std::optional<evo::Checkpoint> resume;
    const auto cp_path = dir / "checkpoint.json";
    if (o.resume && fs::exists(cp_path)) {
        try {
            resume = evo::Checkpoint::from_json(read_json(cp_path), lp.program);
        } catch (const std::exception& e) {
            throw UsageError(cp_path.string() + ": " + e.what());
        }
        std::cerr << "resuming after generation " << resume->generation << "\n";
    }

    evo::SearchHooks hooks;
    std::ofstream progress(dir / "generations.jsonl", std::ios::trunc);
    if (resume) progress << jsonl(resume->log);
    hooks.on_generation = [&](const evo::GenerationLog& e) {
        progress << e.to_json().dump() << "\n";
        progress.flush();
        std::cerr << "generation " << e.generation << " best " << e.best << " valid " << e.valid_rate << "\n";
    };
    hooks.on_checkpoint = [&](const evo::Checkpoint& cp) {
        if (o.checkpoint_every > 0 && (cp.generation + 1) % o.checkpoint_every == 0) {
            write_file(cp_path, cp.to_json().dump() + "\n");
        }
    };
    evo::SearchResult res;
    try {
        res = evo::evolve(lp.program, suite, cfg, costs, hooks, resume);
    } catch (const evo::SearchError& e) {
        throw UsageError(e.what());
    }
    progress.close();
    write_file(dir / "generations.jsonl", jsonl(res.log));
    write_file(dir / "best.ir", mir::print(*res.best.program));
    write_file(dir / "edits.json", evo::to_json(res.best.edits).dump(2) + "\n");

    // Final validation on every partition, held-out tests included.
    json failures = json::array();
    for (const auto& t : suite.tests) {
        auto out = run_test(*res.best.program, t, suite.validator, costs);
        if (!out.passed) failures.push_back(out.failure);
    }
    const double best = res.best.fitness ? res.best.fitness->mean_cycles : res.baseline.mean_cycles;
    json result{{"program", lp.name},
                {"suite", suite.name},
                {"baseline_cycles", res.baseline.mean_cycles},
                {"best_cycles", best},
                {"speedup", best > 0 ? res.baseline.mean_cycles / best : 0.0},
                {"best_edits", res.best.edits.size()},
                {"best_uids", res.best.uids()},
                {"generations", res.log.size()},
                {"evaluations", res.evaluations},
                {"cache_hits", res.cache_hits},
                {"validation", {{"passed", failures.empty()}, {"failures", failures}}}};
    write_file(dir / "result.json", result.dump(2) + "\n");
    std::cout << result.dump(2) << "\n";
    return failures.empty() ? kOk : kInvalid;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
    std::string dir;
    std::string out;
    bool minimize = false, separate = false, clusters = false, history = false;
    double theta = 0.01, tol = 0.01;
};

std::vector<evo::GenerationLog> read_log(const fs::path& p) {
    std::vector<evo::GenerationLog> log;
    if (!fs::exists(p)) return log;
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) log.push_back(evo::GenerationLog::from_json(json::parse(line)));
    }
    return log;
}

int cmd_analyze(const Globals& g, const AnalyzeOptions& o) {
    const fs::path dir = o.dir;
    for (const char* f : {"seed.ir", "suite.json", "edits.json"}) {
        if (!fs::exists(dir / f)) throw UsageError(dir.string() + " is not a complete run directory (missing " + f + ")");
    }
    auto lp = load_program((dir / "seed.ir").string());
    auto suite = bench::suite_from_json(read_json(dir / "suite.json"));
    auto costs = vm::CostModel::defaults();
    if (fs::exists(dir / "cost_model.json")) costs = vm::CostModel::from_json(read_json(dir / "cost_model.json"), costs);
    if (!g.cost_model_file.empty()) costs = cost_model(g);
    auto edits = evo::edit_list_from_json(read_json(dir / "edits.json"));
    auto log = read_log(dir / "generations.jsonl");

    postopt::AnalysisOptions ao;
    const bool none = !o.minimize && !o.separate && !o.clusters && !o.history;
    ao.minimize = none || o.minimize;
    ao.separate = none || o.separate;
    ao.clusters = none || o.clusters;
    ao.history = none || o.history;
    ao.theta = o.theta;
    ao.tol = o.tol;
    ao.jobs = g.jobs;
    postopt::FitnessOracle oracle(lp.program, edits, suite.partition(Partition::Fitness), suite.validator, costs);
    postopt::AnalysisReport rep;
    try {
        rep = postopt::analyze(lp.program, edits, oracle, log, ao);
    } catch (const postopt::TooManyEdits& e) {
        throw UsageError(e.what());
    } catch (const std::runtime_error& e) {
        std::cerr << "evomir: " << e.what() << "\n";
        return kInvalid;
    }
    for (const auto& s : rep.stages) std::cerr << s << "\n";
    const fs::path out = o.out.empty() ? dir : fs::path(o.out);
    fs::create_directories(out);
    auto j = rep.to_json();
    write_file(out / "analysis.json", j.dump(2) + "\n");
    write_file(out / "analysis.dot", rep.to_dot());
    write_file(out / "subsets.csv", rep.subsets_csv());
    std::cout << j.dump(2) << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
    bool list = false, validate = false, baseline = false;
    std::string export_dir;
};

int cmd_bench(const Globals& g, const BenchOptions& o) {
    const auto costs = cost_model(g);
    if (o.list) {
        for (const auto& n : bench::kernel_names()) std::cout << n << "\n";
    }
    if (!o.export_dir.empty()) {
        const fs::path dir = o.export_dir;
        fs::create_directories(dir / "suites");
        for (const auto& n : bench::kernel_names()) {
            write_file(dir / (n + ".ir"), std::string(bench::kernel_source(n)));
            write_file(dir / "suites" / (n + ".json"), bench::suite_to_json(bench::default_suite(n)).dump(1) + "\n");
        }
        bench::SwSuiteConfig small;
        small.pairs = 8;
        small.min_len = 16;
        small.max_len = 40;
        small.heldout_pairs = 2;
        small.heldout_min = 64;
        small.heldout_max = 96;
        write_file(dir / "suites" / "sw_small.json", bench::suite_to_json(bench::gen_sw_suite(small)).dump(1) + "\n");
        std::cerr << "exported corpus to " << dir.string() << "\n";
    }
    int rc = kOk;
    if (o.validate) {
        for (const auto& n : bench::kernel_names()) {
            const auto p = bench::kernel(n);
            std::string why;
            if (auto v = mir::verify(p); !v.empty()) why = "verify: " + v.front().message;
            if (why.empty() && !mir::structurally_equal(p, mir::parse(mir::print(p)))) why = "print/parse round trip";
            const auto suite = bench::default_suite(n);
            std::size_t passed = 0;
            for (const auto& t : suite.tests) {
                if (!why.empty()) break;
                auto out = run_test(p, t, suite.validator, costs);
                if (out.passed) {
                    ++passed;
                } else {
                    why = out.failure;
                }
            }
            std::cout << (why.empty() ? "PASS " : "FAIL ") << n << " " << suite.name << " " << passed << "/"
                      << suite.tests.size() << (why.empty() ? "" : " " + why) << "\n";
            if (!why.empty()) rc = kInvalid;
        }
    }
    if (o.baseline) {
        std::cout << "kernel,suite,cycles\n";
        for (const auto& n : bench::kernel_names()) {
            const auto p = bench::kernel(n);
            const auto suite = bench::default_suite(n);
            double total = 0;
            std::size_t count = 0;
            for (const auto* t : suite.partition(Partition::Fitness)) {
                auto out = run_test(p, *t, suite.validator, costs);
                if (!out.passed) {
                    std::cerr << n << ": " << out.failure << "\n";
                    rc = kInvalid;
                    continue;
                }
                total += out.cycles;
                ++count;
            }
            std::cout << n << "," << suite.name << "," << (count ? total / static_cast<double>(count) : 0.0) << "\n";
        }
    }
    return rc;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const fs::path& dir, bool csv) {
    if (!fs::exists(dir / "result.json")) throw UsageError(dir.string() + " has no result.json");
    auto log = read_log(dir / "generations.jsonl");
    if (csv) {
        std::cout << "generation,best,mean,valid_rate,best_edits\n";
        for (const auto& g : log) {
            std::cout << g.generation << "," << g.best << "," << g.mean << "," << g.valid_rate << ","
                      << g.best_uids.size() << "\n";
        }
        return kOk;
    }
    json j;
    j["result"] = read_json(dir / "result.json");
    if (fs::exists(dir / "manifest.json")) j["manifest"] = read_json(dir / "manifest.json");
    json curve = json::array();
    for (const auto& g : log) curve.push_back({{"generation", g.generation}, {"best", g.best}, {"valid_rate", g.valid_rate}});
    j["best_per_generation"] = curve;
    if (fs::exists(dir / "analysis.json")) {
        auto a = read_json(dir / "analysis.json");
        json summary;
        for (const char* k : {"weaks", "kept", "epistatic", "clusters", "dependency_edges", "full_improvement",
                              "kept_improvement"}) {
            if (a.contains(k)) summary[k] = a[k];
        }
        j["analysis"] = summary;
    }
    std::cout << j.dump(2) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evolutionary optimizer for SIMT kernels written in a small SSA IR"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Search seed (vm: seed of the rand streams)")->each([&](const std::string&) {
        g.seed_set = true;
    });
    app.add_option("--jobs", g.jobs, "Worker threads for evaluation")->check(CLI::PositiveNumber)->each([&](const std::string&) {
        g.jobs_set = true;
    });
    app.add_option("--cost-model", g.cost_model_file, "JSON object of opcode costs overriding the defaults");
    app.add_option("--config", g.config_file, "JSON search configuration");

    VmOptions vo;
    auto* vm_cmd = app.add_subcommand("vm", "Execute a program on a suite or on inline inputs");
    vm_cmd->add_option("program", vo.program, "IR file, corpus entry or built-in kernel")->required();
    vm_cmd->add_option("--suite", vo.suite, "Suite JSON file, or 'default'");
    vm_cmd->add_option("--test", vo.test, "Run only the named test");
    vm_cmd->add_option("--partition", vo.partition, "fitness, heldout or all")
        ->check(CLI::IsMember({"fitness", "heldout", "all"}));
    vm_cmd->add_option("--trace", vo.trace, "Write the per-instruction trace here");
    vm_cmd->add_option("--params", vo.params, "Comma-separated kernel parameters (inline mode)");
    vm_cmd->add_option("--input", vo.inputs, "NAME=v1,v2,... or NAME=@file.json (inline mode)");
    vm_cmd->add_option("--blocks", vo.blocks, "Blocks (inline mode)");
    vm_cmd->add_option("--threads", vo.threads, "Threads per block (inline mode)");
    vm_cmd->add_option("--warp-size", vo.warp, "Warp size (inline mode)");
    vm_cmd->add_option("--budget", vo.budget, "Per-warp cycle budget");

    RunOptions ro;
    auto* run_cmd = app.add_subcommand("run", "Search for a faster variant of a program");
    run_cmd->add_option("program", ro.program, "Seed program")->required();
    run_cmd->add_option("--suite", ro.suite, "Suite JSON file, or 'default'");
    run_cmd->add_option("--out", ro.out, "Output directory");
    run_cmd->add_option("--population", ro.population, "Population size");
    run_cmd->add_option("--generations", ro.generations, "Generations");
    run_cmd->add_option("--edit-pool", ro.edit_pool, "Draw mutations from this edit list (or 'planted-quad')");
    run_cmd->add_flag("--resume", ro.resume, "Continue from the directory's checkpoint");
    run_cmd->add_option("--checkpoint-every", ro.checkpoint_every, "Checkpoint period in generations (0: never)");

    AnalyzeOptions ao;
    auto* an_cmd = app.add_subcommand("analyze", "Minimize and dissect the edits of a finished run");
    an_cmd->add_option("dir", ao.dir, "Run directory")->required();
    an_cmd->add_option("--out", ao.out, "Write reports here instead of the run directory");
    an_cmd->add_flag("--minimize", ao.minimize, "Remove weak edits");
    an_cmd->add_flag("--separate", ao.separate, "Split independent and epistatic edits");
    an_cmd->add_flag("--clusters", ao.clusters, "Enumerate epistatic subsets and build the interaction graph");
    an_cmd->add_flag("--history", ao.history, "First generation of each final edit");
    an_cmd->add_option("--theta", ao.theta, "Weak-edit and interaction threshold");
    an_cmd->add_option("--tol", ao.tol, "Independence tolerance");

    BenchOptions bo;
    auto* bench_cmd = app.add_subcommand("bench", "Inspect the built-in kernels");
    bench_cmd->add_flag("--list", bo.list, "List the kernels");
    bench_cmd->add_flag("--validate", bo.validate, "Check every kernel against its oracle");
    bench_cmd->add_flag("--baseline", bo.baseline, "CSV of baseline cycles");
    bench_cmd->add_option("--export", bo.export_dir, "Write kernels and default suites to a corpus directory");

    std::string report_dir;
    bool report_csv = false;
    auto* rep_cmd = app.add_subcommand("report", "Summarize a run directory");
    rep_cmd->add_option("dir", report_dir, "Run directory")->required();
    rep_cmd->add_flag("--csv", report_csv, "Per-generation CSV instead of JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*vm_cmd) return cmd_vm(g, vo);
        if (*run_cmd) return cmd_run(g, ro);
        if (*an_cmd) return cmd_analyze(g, ao);
        if (*bench_cmd) {
            if (!bo.list && !bo.validate && !bo.baseline && bo.export_dir.empty()) {
                throw UsageError("bench needs --list, --validate, --baseline or --export");
            }
            return cmd_bench(g, bo);
        }
        if (*rep_cmd) return cmd_report(report_dir, report_csv);
    } catch (const UsageError& e) {
        std::cerr << "evomir: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "evomir: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
