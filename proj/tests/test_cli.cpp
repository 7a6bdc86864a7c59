#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evomir/bench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run cli(const std::string& args) {
    const std::string cmd = std::string("EVOMIR_CORPUS='") + EVOMIR_SOURCE_DIR + "/corpus/v1' '" + EVOMIR_CLI +
                            "' " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("evomir_cli_test_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

const std::string kSmallRun = "run sw_tuned --suite sw_small --population 8 --generations 5 --seed 3";

}  // namespace

TEST(Cli, BenchList) {
    auto r = cli("bench --list");
    EXPECT_EQ(r.code, 0);
    std::istringstream in(r.out);
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) names.push_back(line.substr(0, line.find_first_of(" \t")));
    }
    EXPECT_EQ(names, evomir::bench::kernel_names());
}

TEST(Cli, BenchValidatePasses) {
    auto r = cli("bench --validate");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST(Cli, BenchBaselineNaiveAtLeastThreeTimesTuned) {
    auto r = cli("bench --baseline");
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "kernel,suite,cycles");
    std::map<std::string, double> cycles;
    while (std::getline(in, line)) {
        auto a = line.find(','), b = line.rfind(',');
        cycles[line.substr(0, a)] = std::stod(line.substr(b + 1));
    }
    EXPECT_EQ(cycles.size(), 5u);
    EXPECT_GE(cycles.at("sw_naive"), 3 * cycles.at("sw_tuned"));
    EXPECT_LT(cycles.at("grid_padded"), cycles.at("grid_checked"));
}

TEST(Cli, VmSuiteModeAndExitCodes) {
    auto ok = cli("vm sw_tuned --suite sw_small");
    EXPECT_EQ(ok.code, 0);
    auto j = json::parse(ok.out);
    EXPECT_EQ(j["status"], "completed");
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_GT(j["cycles"].get<double>(), 0);

    EXPECT_EQ(cli("vm").code, 1);
    EXPECT_EQ(cli("vm sw_tuned --bogus").code, 1);
    EXPECT_EQ(cli("vm /no/such/file.ir").code, 1);
    EXPECT_EQ(cli("frobnicate").code, 1);

    auto d = scratch("vm");
    write(d / "oob.ir", "global @G[i32 x 4]\nfn @k() {\nentry:\n  %t = tid.block\n  st.global @G, %t, 1\n  ret\n}\n");
    auto fault = cli("vm " + (d / "oob.ir").string());
    EXPECT_EQ(fault.code, 2);
    EXPECT_EQ(json::parse(fault.out)["status"], "fault");
    write(d / "loop.ir", "fn @k() {\nentry:\n  br l\nl:\n  %c = icmp.eq 1, 1\n  condbr %c, l, x\nx:\n  ret\n}\n");
    EXPECT_EQ(cli("vm " + (d / "loop.ir").string() + " --budget 500").code, 2);
    write(d / "bad.ir", "fn @k() {\nentry:\n  %y = add %x, 1\n  ret\n}\n");
    EXPECT_EQ(cli("vm " + (d / "bad.ir").string()).code, 1);

    // Unpadded grids fed to the padded kernel give wrong outputs.
    auto wrong = cli("vm grid_padded --suite " + (fs::path(EVOMIR_SOURCE_DIR) / "corpus/v1/suites/grid_checked.json").string());
    EXPECT_EQ(wrong.code, 3);
    EXPECT_FALSE(json::parse(wrong.out)["passed"].get<bool>());
}

TEST(Cli, CostModelOverrideShiftsCyclesBySharedCount) {
    auto d = scratch("cost");
    write(d / "costs.json", R"({"ld.shared": 16, "st.shared": 16})");
    const std::string args = "vm sw_tuned --params 5,4 --input seqa=0,3,2,1,3 --input seqb=0,2,1,3 --threads 32";
    auto base = cli(args);
    auto doubled = cli("--cost-model " + (d / "costs.json").string() + " " + args);
    ASSERT_EQ(base.code, 0);
    ASSERT_EQ(doubled.code, 0);
    auto a = json::parse(base.out), b = json::parse(doubled.out);
    EXPECT_EQ(a["outputs"]["best"][0], 7);
    const auto shared = a["op_counts"]["ld.shared"].get<std::uint64_t>() + a["op_counts"]["st.shared"].get<std::uint64_t>();
    ASSERT_GT(shared, 0u);
    EXPECT_EQ(b["cycles"].get<std::uint64_t>() - a["cycles"].get<std::uint64_t>(), shared * 8);
    write(d / "bad.json", R"({"ld.shared": 0})");
    EXPECT_EQ(cli("--cost-model " + (d / "bad.json").string() + " " + args).code, 1);
}

TEST(Cli, TraceMatchesReportedWork) {
    auto d = scratch("trace");
    auto r = cli("vm sw_tuned --params 5,4 --input seqa=0,3,2,1,3 --input seqb=0,2,1,3 --trace " +
                 (d / "t.trace").string());
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    std::istringstream in(slurp(d / "t.trace"));
    std::string line;
    std::uint64_t lines = 0, cost = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++lines;
        cost += std::stoull(line.substr(line.rfind(' ') + 1));
    }
    EXPECT_EQ(lines, j["instructions"].get<std::uint64_t>());
    EXPECT_EQ(cost, j["cycles"].get<std::uint64_t>());
}

TEST(Cli, RunIsReproducibleAndJobsIndependent) {
    auto a = scratch("run_a"), b = scratch("run_b"), c = scratch("run_c");
    ASSERT_EQ(cli(kSmallRun + " --out " + a.string()).code, 0);
    ASSERT_EQ(cli(kSmallRun + " --out " + b.string()).code, 0);
    ASSERT_EQ(cli("--jobs 3 " + kSmallRun + " --out " + c.string()).code, 0);
    const auto log = slurp(a / "generations.jsonl");
    EXPECT_FALSE(log.empty());
    EXPECT_EQ(log, slurp(b / "generations.jsonl"));
    EXPECT_EQ(log, slurp(c / "generations.jsonl"));
    EXPECT_EQ(slurp(a / "best.ir"), slurp(c / "best.ir"));
    EXPECT_EQ(slurp(a / "edits.json"), slurp(b / "edits.json"));
    for (const char* f : {"seed.ir", "suite.json", "config.json", "cost_model.json", "manifest.json", "result.json"}) {
        EXPECT_TRUE(fs::exists(a / f)) << f;
    }
    auto ma = json::parse(slurp(a / "manifest.json")), mb = json::parse(slurp(b / "manifest.json"));
    EXPECT_EQ(ma["config_hash"], mb["config_hash"]);
    EXPECT_EQ(ma["inputs"], mb["inputs"]);
    auto result = json::parse(slurp(a / "result.json"));
    EXPECT_TRUE(result["validation"]["passed"].get<bool>());
    EXPECT_EQ(result["generations"], 5);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
    auto d = scratch("config");
    write(d / "cfg.json", R"({"search": {"population_size": 6, "generations": 2, "seed": 4, "elitism": 1}})");
    ASSERT_EQ(cli("--config " + (d / "cfg.json").string() + " run sw_tuned --suite sw_small --generations 3 --out " +
                  (d / "o").string())
                  .code,
              0);
    auto cfg = json::parse(slurp(d / "o" / "config.json"));
    EXPECT_EQ(cfg["population_size"], 6);
    EXPECT_EQ(cfg["generations"], 3);
    EXPECT_EQ(cfg["seed"], 4);
    EXPECT_EQ(cfg["elitism"], 1);
    write(d / "full.json", R"({"population_size": 256, "generations": 300})");
    ASSERT_EQ(cli("--config " + (d / "full.json").string() + " run sw_tuned --suite sw_small --generations 1 --out " +
                  (d / "p").string())
                  .code,
              0);
    EXPECT_EQ(json::parse(slurp(d / "p" / "config.json"))["population_size"], 256);
    write(d / "broken.json", R"({"population_size": 4, "elitism": 4})");
    EXPECT_EQ(cli("--config " + (d / "broken.json").string() + " run sw_tuned --suite sw_small --out " +
                  (d / "x").string())
                  .code,
              1);
}

TEST(Cli, ResumeReproducesUninterruptedRun) {
    auto full = scratch("resume_full"), part = scratch("resume_part");
    const std::string run = "run sw_tuned --suite sw_small --population 8 --generations 6 --seed 9 --checkpoint-every 2";
    ASSERT_EQ(cli(run + " --out " + full.string()).code, 0);
    // Keep only the checkpoint, as after a crash.
    fs::copy_file(full / "checkpoint.json", part / "checkpoint.json");
    auto cp = json::parse(slurp(part / "checkpoint.json"));
    EXPECT_EQ(cp["generation"], 3);
    ASSERT_EQ(cli(run + " --resume --out " + part.string()).code, 0);
    EXPECT_EQ(slurp(full / "generations.jsonl"), slurp(part / "generations.jsonl"));
    EXPECT_EQ(slurp(full / "best.ir"), slurp(part / "best.ir"));
}

TEST(Cli, PlantedQuadAnalyzeRecoversClusterShape) {
    auto d = scratch("quad");
    auto r = cli("run sw_tuned --suite sw_small --edit-pool planted-quad --population 16 --generations 12 --seed 2 "
                 "--out " + d.string());
    ASSERT_EQ(r.code, 0);
    auto result = json::parse(r.out);
    auto uids = result["best_uids"].get<std::vector<int>>();
    std::sort(uids.begin(), uids.end());
    ASSERT_EQ(uids, (std::vector<int>{5, 6, 8, 10}));
    ASSERT_EQ(cli("analyze " + d.string() + " --clusters").code, 0);
    auto a = json::parse(slurp(d / "analysis.json"));
    EXPECT_EQ(a["epistatic"].size(), 4u);
    ASSERT_EQ(a["clusters"].size(), 1u);
    std::set<std::pair<int, int>> edges;
    for (const auto& e : a["dependency_edges"]) edges.emplace(e["from"].get<int>(), e["to"].get<int>());
    EXPECT_EQ(edges, (std::set<std::pair<int, int>>{{8, 6}, {10, 6}, {5, 6}, {5, 8}, {5, 10}}));
    const auto stages = a["stages"].get<std::vector<std::string>>();
    ASSERT_GE(stages.size(), 2u);
    EXPECT_NE(stages[stages.size() - 2].find("(implied) separate"), std::string::npos);
    const auto dot = slurp(d / "analysis.dot");
    for (const char* e : {"e8 -> e6", "e10 -> e6", "e5 -> e6", "e5 -> e8", "e5 -> e10"}) {
        EXPECT_NE(dot.find(e), std::string::npos) << e;
    }
    const auto csv = slurp(d / "subsets.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);

    ASSERT_EQ(cli("analyze " + d.string() + " --history --out " + (d / "h").string()).code, 0);
    auto h = json::parse(slurp(d / "h" / "analysis.json"));
    for (const char* u : {"5", "6", "8", "10"}) EXPECT_TRUE(h["history"]["first_generation"][u].is_number_integer()) << u;
    EXPECT_FALSE(h.contains("clusters"));
}

TEST(Cli, Report) {
    auto d = scratch("report");
    ASSERT_EQ(cli(kSmallRun + " --out " + d.string()).code, 0);
    auto r = cli("report " + d.string());
    EXPECT_EQ(r.code, 0);
    EXPECT_NO_THROW(json::parse(r.out));
    auto csv = cli("report " + d.string() + " --csv");
    EXPECT_EQ(csv.code, 0);
    EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 6);
    EXPECT_EQ(cli("report /no/such/dir").code, 1);
}
