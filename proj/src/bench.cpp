#include "evomir/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace evomir::bench {

using nlohmann::json;

void ScoringParams::check() const {
    if (match <= 0) throw std::invalid_argument("match score must be positive");
    if (mismatch >= 0 || gap >= 0) throw std::invalid_argument("mismatch and gap scores must be negative");
}

std::vector<std::int32_t> encode_dna(std::string_view seq) {
    std::vector<std::int32_t> out;
    out.reserve(seq.size());
    for (char c : seq) {
        switch (c) {
            case 'A': out.push_back(0); break;
            case 'C': out.push_back(1); break;
            case 'G': out.push_back(2); break;
            case 'T': out.push_back(3); break;
            default: throw std::invalid_argument(std::string("not a DNA base: '") + c + "'");
        }
    }
    return out;
}

std::string random_dna(Rng& rng, std::size_t length) {
    static constexpr char kBases[] = "ACGT";
    std::string s(length, 'A');
    for (auto& c : s) c = kBases[rng.below(4)];
    return s;
}

SwResult sw_reference(std::string_view a, std::string_view b, const ScoringParams& params) {
    params.check();
    if (a.empty() || b.empty()) throw std::invalid_argument("sequences must be nonempty");
    encode_dna(a);
    encode_dna(b);
    const std::size_t n = a.size(), m = b.size();
    SwResult r;
    r.H.assign(n + 1, std::vector<int>(m + 1, 0));
    auto& H = r.H;
    auto s = [&](std::size_t i, std::size_t j) { return a[i - 1] == b[j - 1] ? params.match : params.mismatch; };
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            H[i][j] = std::max({0, H[i - 1][j - 1] + s(i, j), H[i - 1][j] + params.gap, H[i][j - 1] + params.gap});
            if (H[i][j] > r.best) {
                r.best = H[i][j];
                r.best_i = i;
                r.best_j = j;
            }
        }
    }
    std::string ra, rb;
    std::size_t i = r.best_i, j = r.best_j;
    while (i > 0 && j > 0 && H[i][j] > 0) {
        if (H[i][j] == H[i - 1][j - 1] + s(i, j)) {
            ra += a[i - 1];
            rb += b[j - 1];
            --i;
            --j;
        } else if (H[i][j] == H[i - 1][j] + params.gap) {
            ra += a[i - 1];
            rb += '-';
            --i;
        } else {
            ra += '-';
            rb += b[j - 1];
            --j;
        }
    }
    std::reverse(ra.begin(), ra.end());
    std::reverse(rb.begin(), rb.end());
    r.alignment = {ra, rb, i, r.best_i, j, r.best_j};
    return r;
}

Grid pad_grid(const Grid& g) {
    Grid p(g.width + 2, g.height + 2);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) p.at(x + 1, y + 1) = g.at(x, y);
    }
    return p;
}

Grid crop_grid(const Grid& p) {
    if (p.width < 2 || p.height < 2) throw std::invalid_argument("padded grid must be at least 2x2");
    Grid g(p.width - 2, p.height - 2);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) g.at(x, y) = p.at(x + 1, y + 1);
    }
    return g;
}

Grid diffusion_reference(const Grid& g, int steps, int rate) {
    if (rate <= 0 || rate > 256) throw std::invalid_argument("rate must be in (0, 256] over 1024");
    if (steps < 0) throw std::invalid_argument("steps must be non-negative");
    Grid cur = g, next = g;
    auto q = [rate](std::int32_t v) { return static_cast<std::int32_t>(static_cast<std::int64_t>(v) * rate / 1024); };
    for (int s = 0; s < steps; ++s) {
        for (int y = 0; y < g.height; ++y) {
            for (int x = 0; x < g.width; ++x) {
                std::int32_t v = cur.at(x, y);
                const std::int32_t qc = q(v);
                const int dx[] = {-1, 1, 0, 0}, dy[] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int nx = x + dx[k], ny = y + dy[k];
                    if (nx < 0 || ny < 0 || nx >= g.width || ny >= g.height) continue;
                    v += q(cur.at(nx, ny)) - qc;
                }
                next.at(x, y) = v;
            }
        }
        std::swap(cur, next);
    }
    return cur;
}

std::int64_t total_concentration(const Grid& g) {
    return std::accumulate(g.cells.begin(), g.cells.end(), std::int64_t{0});
}

WalkResult tcell_reference(const std::vector<std::int32_t>& occupancy, int width, int height, int steps, Rng& rng) {
    const auto cells = static_cast<std::size_t>(width) * height;
    if (occupancy.size() != cells) throw std::invalid_argument("occupancy size does not match the grid");
    WalkResult r{occupancy, std::vector<std::int32_t>(cells, 0)};
    std::vector<std::int32_t> prop(cells), next(cells);
    std::vector<std::ptrdiff_t> want(cells);
    for (int s = 0; s < steps; ++s) {
        std::fill(prop.begin(), prop.end(), 0);
        std::fill(want.begin(), want.end(), -1);
        for (std::size_t t = 0; t < cells; ++t) {
            if (r.occupancy[t] == 0) continue;
            const int x = static_cast<int>(t % width), y = static_cast<int>(t / width);
            int nx = x, ny = y;
            switch (rng.below(4)) {
                case 0: --nx; break;
                case 1: ++nx; break;
                case 2: --ny; break;
                default: ++ny;
            }
            if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
            const auto tgt = static_cast<std::size_t>(ny) * width + nx;
            if (r.occupancy[tgt] != 0) continue;
            prop[tgt] = static_cast<std::int32_t>(t + 1);  // later (higher) bidders overwrite
            want[t] = static_cast<std::ptrdiff_t>(tgt);
        }
        std::fill(next.begin(), next.end(), 0);
        for (std::size_t t = 0; t < cells; ++t) {
            if (r.occupancy[t] == 0) continue;
            const bool won = want[t] >= 0 && prop[static_cast<std::size_t>(want[t])] == static_cast<std::int32_t>(t + 1);
            next[won ? static_cast<std::size_t>(want[t]) : t] = r.occupancy[t];
        }
        std::swap(r.occupancy, next);
        for (std::size_t t = 0; t < cells; ++t) r.visits[t] += r.occupancy[t] != 0;
    }
    return r;
}

StochasticTruth tcell_truth(const std::vector<std::int32_t>& occupancy, int width, int height, int steps,
                            int replicates, std::uint64_t seed) {
    if (replicates < 3) throw std::invalid_argument("ground truth needs at least 3 replicates");
    std::vector<std::vector<std::int32_t>> reps;
    for (int i = 0; i < replicates; ++i) {
        Rng rng({seed, static_cast<std::uint64_t>(i)});
        reps.push_back(tcell_reference(occupancy, width, height, steps, rng).visits);
    }
    StochasticTruth t;
    t.buffer = "visits";
    sample_moments(reps, t.mean, t.var);
    return t;
}

std::vector<std::int32_t> random_occupancy(Rng& rng, int width, int height, int agents) {
    const auto cells = static_cast<std::size_t>(width) * height;
    if (agents < 0 || static_cast<std::size_t>(agents) > cells) throw std::invalid_argument("too many agents");
    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(agents); ++i) {
        std::swap(order[i], order[i + rng.below(cells - i)]);
    }
    std::vector<std::int32_t> occ(cells, 0);
    for (int i = 0; i < agents; ++i) occ[order[static_cast<std::size_t>(i)]] = i + 1;
    return occ;
}

// ---------------------------------------------------------------------------

mir::Program tcell_walk_biased() {
    auto p = tcell_walk();
    for (auto& b : p.kernel().blocks) {
        for (auto& inst : b.insts) {
            if (inst.name == "dir") inst.ops[1] = mir::Operand::imm_i32(0);
        }
    }
    return p;
}

mir::InstId terminator_of(const mir::Program& p, std::string_view label) {
    const auto& fn = p.kernel();
    auto b = fn.block_index(label);
    if (!b || fn.blocks[*b].insts.empty()) throw std::out_of_range("no block '" + std::string(label) + "'");
    return fn.blocks[*b].insts.back().id;
}

mir::InstId value_id(const mir::Program& p, std::string_view name) {
    for (const auto& b : p.kernel().blocks) {
        for (const auto& inst : b.insts) {
            if (inst.name == name) return inst.id;
        }
    }
    throw std::out_of_range("no value %" + std::string(name));
}

namespace {

std::string loc_of(const mir::Program& p, mir::InstId id) {
    for (const auto& b : p.kernel().blocks) {
        for (const auto& inst : b.insts) {
            if (inst.id == id) return inst.loc;
        }
    }
    return {};
}

evo::Edit cond_swap(const mir::Program& p, std::uint64_t uid, std::string_view block, std::string_view value) {
    evo::Edit e;
    e.kind = evo::EditKind::OperandReplace;
    e.uid = uid;
    e.target = terminator_of(p, block);
    e.index = 0;
    e.value = mir::Operand::value(value_id(p, value));
    if (auto l = loc_of(p, e.target); !l.empty()) e.source_locs.push_back(l);
    return e;
}

}  // namespace

evo::EditList sw_clear_loop_removal(const mir::Program& naive) {
    const auto& fn = naive.kernel();
    auto b = fn.block_index("clear_body");
    if (!b) throw std::invalid_argument("program has no clearing loop");
    evo::EditList out;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& inst = fn.blocks[*b].insts.at(i);
        evo::Edit e;
        e.kind = evo::EditKind::InstDelete;
        e.uid = i + 1;
        e.target = inst.id;
        if (!inst.loc.empty()) e.source_locs.push_back(inst.loc);
        out.push_back(e);
    }
    return out;
}

evo::EditList sw_quad_edits(const mir::Program& tuned) {
    return {cond_swap(tuned, 6, "sync", "valid"), cond_swap(tuned, 8, "body", "valid"),
            cond_swap(tuned, 10, "xa_done", "valid"), cond_swap(tuned, 5, "pub_edge_chk", "late")};
}

evo::Edit diffusion_drop_down_guard(const mir::Program& checked) { return cond_swap(checked, 1, "gd", "on"); }

// ---------------------------------------------------------------------------

namespace {

int round_up(int v, int to) { return std::max(to, (v + to - 1) / to * to); }

std::string numbered(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%03d", prefix, i);
    return buf;
}

enum class Domain { Sw, Diffusion, Tcell, Raw };

Domain domain_of(std::string_view kernel) {
    if (kernel.starts_with("sw_")) return Domain::Sw;
    if (kernel.starts_with("grid_")) return Domain::Diffusion;
    if (kernel.starts_with("tcell")) return Domain::Tcell;
    return Domain::Raw;
}

std::string_view domain_name(Domain d) {
    switch (d) {
        case Domain::Sw: return "sw";
        case Domain::Diffusion: return "diffusion";
        case Domain::Tcell: return "tcell";
        default: return "raw";
    }
}

std::string decode_dna(const std::vector<std::int32_t>& v, std::size_t n) {
    static constexpr char kBases[] = "ACGT";
    std::string s;
    for (std::size_t i = 0; i < n && i < v.size(); ++i) s += kBases[v[i] & 3];
    return s;
}

Grid random_grid(Rng& rng, int w, int h) {
    Grid g(w, h);
    for (auto& c : g.cells) c = static_cast<std::int32_t>(rng.below(64));
    const int spikes = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < spikes && !g.cells.empty(); ++i) {
        g.cells[rng.below(g.cells.size())] += 10000 + static_cast<std::int32_t>(rng.below(50000));
    }
    return g;
}

}  // namespace

TestCase sw_test(std::string name, Partition part, std::string_view a, std::string_view b,
                 const ScoringParams& scoring) {
    if (a.size() > 256 || b.size() > 256) throw std::invalid_argument("sequences longer than 256 are not supported");
    auto ref = sw_reference(a, b, scoring);
    TestCase t;
    t.name = std::move(name);
    t.partition = part;
    const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    t.launch = {1, round_up(m, 32), 32};
    t.params = {n, m};
    t.inputs["seqa"] = encode_dna(a);
    t.inputs["seqb"] = encode_dna(b);
    auto& score = t.expected["score"];
    for (const auto& row : ref.H) score.insert(score.end(), row.begin(), row.end());
    t.expected["best"] = {ref.best};
    return t;
}

TestCase diffusion_test(std::string name, Partition part, const Grid& g, int steps, int rate, bool padded) {
    if (g.width < 1 || g.height < 1 || g.width * g.height > 4096) {
        throw std::invalid_argument("grid must have between 1 and 4096 cells");
    }
    TestCase t;
    t.name = std::move(name);
    t.partition = part;
    t.launch = {1, round_up(g.width * g.height, 32), 32};
    t.params = {g.width, g.height, steps, rate};
    t.inputs["grid_in"] = padded ? pad_grid(g).cells : g.cells;
    t.expected["grid_out"] = diffusion_reference(g, steps, rate).cells;
    return t;
}

TestCase tcell_test(std::string name, Partition part, const std::vector<std::int32_t>& occupancy, int width,
                    int height, int steps, const std::vector<std::uint64_t>& seeds, int truth_replicates,
                    std::uint64_t truth_seed) {
    if (width * height > 1024) throw std::invalid_argument("tcell grids hold at most 1024 cells");
    TestCase t;
    t.name = std::move(name);
    t.partition = part;
    t.launch = {1, round_up(width * height, 32), 32};
    t.params = {width, height, steps};
    t.inputs["occ_in"] = occupancy;
    t.seeds = seeds;
    t.truth = tcell_truth(occupancy, width, height, steps, truth_replicates, truth_seed);
    return t;
}

TestSuite gen_sw_suite(const SwSuiteConfig& cfg) {
    if (cfg.min_len < 1 || cfg.max_len < cfg.min_len || cfg.heldout_min < 1 || cfg.heldout_max < cfg.heldout_min ||
        cfg.max_len > 256 || cfg.heldout_max > 256 || cfg.pairs < 0 || cfg.heldout_pairs < 0) {
        throw std::invalid_argument("bad sequence suite ranges");
    }
    TestSuite s;
    s.name = "sw";
    s.kernel = cfg.kernel;
    s.validator.mode = Validator::Mode::Exact;
    Rng rng({cfg.seed, 0x5357u});
    auto len = [&](int lo, int hi) { return static_cast<std::size_t>(lo) + rng.below(static_cast<std::uint64_t>(hi - lo + 1)); };
    for (int i = 0; i < cfg.pairs; ++i) {
        auto a = random_dna(rng, len(cfg.min_len, cfg.max_len));
        auto b = random_dna(rng, len(cfg.min_len, cfg.max_len));
        s.tests.push_back(sw_test(numbered("pair", i), Partition::Fitness, a, b, cfg.scoring));
    }
    for (int i = 0; i < cfg.heldout_pairs; ++i) {
        auto a = random_dna(rng, len(cfg.heldout_min, cfg.heldout_max));
        auto b = random_dna(rng, len(cfg.heldout_min, cfg.heldout_max));
        s.tests.push_back(sw_test(numbered("heldout", i), Partition::HeldOut, a, b, cfg.scoring));
    }
    return s;
}

TestSuite gen_grid_suite(const GridSuiteConfig& cfg) {
    if (cfg.width < 1 || cfg.height < 1 || cfg.heldout_width * cfg.heldout_height <= cfg.width * cfg.height) {
        throw std::invalid_argument("held-out grid must be larger than the fitness grid");
    }
    const auto domain = domain_of(cfg.kernel);
    if (domain != Domain::Diffusion && domain != Domain::Tcell) {
        throw std::invalid_argument("no grid suite for kernel '" + cfg.kernel + "'");
    }
    TestSuite s;
    s.kernel = cfg.kernel;
    Rng rng({cfg.seed, 0x4752u});
    if (domain == Domain::Diffusion) {
        s.name = "diffusion";
        s.validator.mode = Validator::Mode::Exact;
        const bool padded = cfg.kernel == "grid_padded";
        for (int i = 0; i < cfg.grids; ++i) {
            s.tests.push_back(diffusion_test(numbered("grid", i), Partition::Fitness,
                                             random_grid(rng, cfg.width, cfg.height), cfg.steps, cfg.rate, padded));
        }
        for (int i = 0; i < cfg.heldout_grids; ++i) {
            s.tests.push_back(diffusion_test(numbered("heldout", i), Partition::HeldOut,
                                             random_grid(rng, cfg.heldout_width, cfg.heldout_height), cfg.steps,
                                             cfg.rate, padded));
        }
        return s;
    }
    s.name = "tcell";
    s.validator.mode = Validator::Mode::Stochastic;
    auto make = [&](const char* prefix, int i, Partition part, int w, int h) {
        const auto cells = w * h;
        const int agents = std::clamp(cells * cfg.agent_percent / 100, 1, cells);
        auto occ = random_occupancy(rng, w, h, agents);
        std::vector<std::uint64_t> seeds;
        for (int r = 0; r < cfg.replicates; ++r) seeds.push_back(rng.next());
        s.tests.push_back(tcell_test(numbered(prefix, i), part, occ, w, h, cfg.steps, seeds, cfg.truth_replicates,
                                     rng.next()));
    };
    for (int i = 0; i < cfg.grids; ++i) make("walk", i, Partition::Fitness, cfg.width, cfg.height);
    for (int i = 0; i < cfg.heldout_grids; ++i) make("heldout", i, Partition::HeldOut, cfg.heldout_width, cfg.heldout_height);
    return s;
}

TestSuite default_suite(std::string_view kernel_name) {
    switch (domain_of(kernel_name)) {
        case Domain::Sw: {
            SwSuiteConfig c;
            c.kernel = std::string(kernel_name);
            return gen_sw_suite(c);
        }
        case Domain::Diffusion: {
            GridSuiteConfig c;
            c.kernel = std::string(kernel_name);
            return gen_grid_suite(c);
        }
        case Domain::Tcell: {
            GridSuiteConfig c;
            c.kernel = std::string(kernel_name);
            c.width = c.height = 16;
            c.heldout_width = c.heldout_height = 24;
            c.grids = 2;
            c.heldout_grids = 1;
            c.steps = 200;
            return gen_grid_suite(c);
        }
        default: throw std::invalid_argument("no default suite for '" + std::string(kernel_name) + "'");
    }
}

json suite_to_json(const TestSuite& suite) {
    json j;
    const auto domain = domain_of(suite.kernel);
    j["name"] = suite.name;
    j["kernel"] = suite.kernel;
    j["domain"] = domain_name(domain);
    j["validator"] = to_json(suite.validator);
    json tests = json::array();
    for (const auto& t : suite.tests) {
        json e;
        e["name"] = t.name;
        e["partition"] = partition_name(t.partition);
        switch (domain) {
            case Domain::Sw:
                e["a"] = decode_dna(t.inputs.at("seqa"), static_cast<std::size_t>(t.params.at(0)));
                e["b"] = decode_dna(t.inputs.at("seqb"), static_cast<std::size_t>(t.params.at(1)));
                break;
            case Domain::Diffusion: {
                e["width"] = t.params.at(0);
                e["height"] = t.params.at(1);
                e["steps"] = t.params.at(2);
                e["rate"] = t.params.at(3);
                const auto& in = t.inputs.at("grid_in");
                if (suite.kernel == "grid_padded") {
                    Grid p(t.params[0] + 2, t.params[1] + 2);
                    p.cells = in;
                    e["grid"] = crop_grid(p).cells;
                } else {
                    e["grid"] = in;
                }
                break;
            }
            case Domain::Tcell:
                e["width"] = t.params.at(0);
                e["height"] = t.params.at(1);
                e["steps"] = t.params.at(2);
                e["occupancy"] = t.inputs.at("occ_in");
                e["seeds"] = t.seeds;
                if (t.truth) e["truth"] = {{"buffer", t.truth->buffer}, {"mean", t.truth->mean}, {"var", t.truth->var}};
                break;
            default: e = to_json(t);
        }
        if (t.cycle_budget) e["cycle_budget"] = t.cycle_budget;
        tests.push_back(std::move(e));
    }
    j["tests"] = std::move(tests);
    return j;
}

TestSuite suite_from_json(const json& j) {
    TestSuite s;
    s.name = j.value("name", std::string("suite"));
    s.kernel = j.value("kernel", std::string());
    s.validator = j.contains("validator") ? validator_from_json(j["validator"]) : Validator{};
    const auto dname = j.value("domain", std::string(domain_name(domain_of(s.kernel))));
    ScoringParams scoring;
    if (j.contains("scoring")) {
        scoring.match = j["scoring"].value("match", scoring.match);
        scoring.mismatch = j["scoring"].value("mismatch", scoring.mismatch);
        scoring.gap = j["scoring"].value("gap", scoring.gap);
    }
    for (const auto& e : j.at("tests")) {
        const auto name = e.at("name").get<std::string>();
        const auto part = e.value("partition", std::string("fitness")) == "heldout" ? Partition::HeldOut
                                                                                   : Partition::Fitness;
        TestCase t;
        if (dname == "sw") {
            t = sw_test(name, part, e.at("a").get<std::string>(), e.at("b").get<std::string>(), scoring);
        } else if (dname == "diffusion") {
            Grid g(e.at("width").get<int>(), e.at("height").get<int>());
            g.cells = e.at("grid").get<std::vector<std::int32_t>>();
            if (g.cells.size() != static_cast<std::size_t>(g.width) * g.height) {
                throw std::invalid_argument("test " + name + ": grid size does not match its dimensions");
            }
            t = diffusion_test(name, part, g, e.value("steps", 4), e.value("rate", 128), s.kernel == "grid_padded");
        } else if (dname == "tcell") {
            const int w = e.at("width").get<int>(), h = e.at("height").get<int>();
            const auto occ = e.at("occupancy").get<std::vector<std::int32_t>>();
            const auto seeds = e.at("seeds").get<std::vector<std::uint64_t>>();
            const int steps = e.value("steps", 100);
            if (e.contains("truth")) {
                t.name = name;
                t.partition = part;
                t.launch = {1, round_up(w * h, 32), 32};
                t.params = {w, h, steps};
                t.inputs["occ_in"] = occ;
                t.seeds = seeds;
                const auto& tr = e["truth"];
                t.truth = StochasticTruth{tr.value("buffer", std::string("visits")),
                                          tr.at("mean").get<std::vector<double>>(),
                                          tr.at("var").get<std::vector<double>>()};
            } else {
                t = tcell_test(name, part, occ, w, h, steps, seeds, e.value("truth_replicates", 100),
                               e.value("truth_seed", std::uint64_t{0}));
            }
        } else if (dname == "raw") {
            t = test_case_from_json(e);
        } else {
            throw std::invalid_argument("unknown suite domain '" + dname + "'");
        }
        t.cycle_budget = e.value("cycle_budget", std::uint64_t{0});
        s.tests.push_back(std::move(t));
    }
    return s;
}

}  // namespace evomir::bench
