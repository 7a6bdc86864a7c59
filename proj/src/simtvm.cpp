#include "evomir/simtvm.hpp"

#include <bit>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "evomir/rng.hpp"

namespace evomir::vm {

using mir::Category;
using mir::Opcode;

void LaunchConfig::check() const {
    if (blocks < 1 || threads_per_block < 1 || warp_size < 1) {
        throw std::invalid_argument("launch counts must be at least 1");
    }
    if (warp_size > 64) throw std::invalid_argument("warp size above 64 is not supported");
    if (threads_per_block % warp_size != 0) {
        throw std::invalid_argument("threads_per_block must be a multiple of warp_size");
    }
}

CostModel CostModel::defaults() {
    CostModel m;
    for (std::size_t i = 0; i < mir::kOpcodeCount; ++i) {
        const auto op = static_cast<Opcode>(i);
        std::uint32_t c = 1;
        switch (op) {
            case Opcode::Br:
            case Opcode::CondBr:
            case Opcode::Ret: c = 2; break;
            case Opcode::Shfl: c = 2; break;
            case Opcode::LdShared:
            case Opcode::StShared: c = 8; break;
            case Opcode::LdGlobal:
            case Opcode::StGlobal: c = 100; break;
            case Opcode::LdLocal:
            case Opcode::StLocal: c = 2; break;
            case Opcode::BarWarp: c = 5; break;
            case Opcode::BarBlock: c = 20; break;
            case Opcode::Rand: c = 4; break;
            default: c = 1;
        }
        m.cost[i] = c;
    }
    return m;
}

CostModel CostModel::from_json(const nlohmann::json& j, const CostModel& base) {
    if (!j.is_object()) throw std::invalid_argument("cost model must be a JSON object");
    CostModel m = base;
    for (const auto& [key, value] : j.items()) {
        auto op = mir::opcode_from_name(key);
        if (!op) throw std::invalid_argument("cost model: unknown opcode '" + key + "'");
        if (!value.is_number_integer() || value.get<std::int64_t>() < 1) {
            throw std::invalid_argument("cost model: cost of '" + key + "' must be an integer >= 1");
        }
        m.cost[static_cast<std::size_t>(*op)] = value.get<std::uint32_t>();
    }
    return m;
}

nlohmann::json CostModel::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < mir::kOpcodeCount; ++i) {
        j[std::string(mir::info(static_cast<Opcode>(i)).name)] = cost[i];
    }
    return j;
}

std::string_view status_name(Status s) {
    switch (s) {
        case Status::Completed: return "completed";
        case Status::Timeout: return "timeout";
        case Status::Fault: return "fault";
    }
    return "?";
}

std::string_view fault_name(FaultKind f) {
    switch (f) {
        case FaultKind::None: return "none";
        case FaultKind::OutOfBounds: return "oob";
        case FaultKind::DivByZero: return "div_by_zero";
        case FaultKind::Deadlock: return "deadlock";
        case FaultKind::Malformed: return "malformed";
    }
    return "?";
}

std::uint64_t ExecutionResult::instructions() const {
    std::uint64_t n = 0;
    for (auto c : op_counts) n += c;
    return n;
}

nlohmann::json ExecutionResult::to_json() const {
    nlohmann::json j;
    j["status"] = status_name(status);
    if (status == Status::Fault) {
        j["fault"] = {{"kind", fault_name(fault)}, {"location", fault_location}};
    }
    j["cycles"] = cycles;
    j["max_warp_cycles"] = max_warp_cycles;
    j["instructions"] = instructions();
    nlohmann::json cats = nlohmann::json::object();
    const auto mix = instruction_mix(*this);
    nlohmann::json fractions = nlohmann::json::object();
    for (std::size_t i = 0; i < mir::kCategoryCount; ++i) {
        const auto name = std::string(mir::category_name(static_cast<Category>(i)));
        cats[name] = category_counts[i];
        fractions[name] = mix[i];
    }
    j["category_counts"] = cats;
    j["instruction_mix"] = fractions;
    nlohmann::json ops = nlohmann::json::object();
    for (std::size_t i = 0; i < mir::kOpcodeCount; ++i) {
        if (op_counts[i]) ops[std::string(mir::info(static_cast<Opcode>(i)).name)] = op_counts[i];
    }
    j["op_counts"] = ops;
    j["outputs"] = outputs;
    return j;
}

std::int32_t rand_stream(std::uint64_t seed, int block, int thread, std::uint64_t counter) {
    const auto h = hash_key({seed, static_cast<std::uint64_t>(block), static_cast<std::uint64_t>(thread), counter});
    return static_cast<std::int32_t>(h >> 33);
}

std::array<double, mir::kCategoryCount> instruction_mix(const ExecutionResult& r) {
    std::array<double, mir::kCategoryCount> out{};
    std::uint64_t total = 0;
    for (auto c : r.category_counts) total += c;
    if (total == 0) return out;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(r.category_counts[i]) / total;
    return out;
}

namespace {

struct Src {
    bool reg = false;
    std::int32_t v = 0;
};

struct CInst {
    Opcode op{};
    Category cat{};
    std::uint32_t cost = 1;
    std::int32_t dst = -1;
    Src a, b, c;
    std::int32_t buf = -1;   // index into the space-specific memory table
    std::int32_t slot = -1;
    std::int32_t t1 = -1, t2 = -1;  // branch targets as flat pcs
    std::int32_t reconv = -1;       // condbr: start of the immediate post-dominator
    const mir::Instruction* src = nullptr;
    std::size_t block = 0;
};

struct Compiled {
    std::vector<CInst> code;
    std::int32_t nregs = 0;
    std::vector<std::size_t> global_of;  // program buffer index -> global memory slot
    std::vector<std::size_t> shared_of;
    std::vector<std::int32_t> global_size, shared_size;
    std::vector<std::string> global_name;
};

struct MalformedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Compiled compile(const mir::Program& p, const mir::Function& fn, std::span<const std::int32_t> params,
                 const CostModel& costs) {
    Compiled out;
    out.global_of.assign(p.buffers.size(), SIZE_MAX);
    out.shared_of.assign(p.buffers.size(), SIZE_MAX);
    for (std::size_t i = 0; i < p.buffers.size(); ++i) {
        const auto& b = p.buffers[i];
        if (b.space == mir::MemSpace::Global) {
            out.global_of[i] = out.global_size.size();
            out.global_size.push_back(b.size);
            out.global_name.push_back(b.name);
        } else {
            out.shared_of[i] = out.shared_size.size();
            out.shared_size.push_back(b.size);
        }
    }

    std::vector<std::int32_t> start(fn.blocks.size() + 1, 0);
    std::unordered_map<mir::InstId, std::int32_t> reg;
    std::unordered_map<mir::InstId, mir::ScalarType> types;
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
        start[b + 1] = start[b] + static_cast<std::int32_t>(fn.blocks[b].insts.size());
        for (const auto& inst : fn.blocks[b].insts) {
            if (inst.has_result()) {
                reg[inst.id] = out.nregs++;
                types[inst.id] = inst.type;
            }
        }
    }
    const auto cfg = mir::build_cfg(fn);
    const auto ipdom = mir::post_dominators(fn, cfg);

    auto scalar = [&](const mir::Operand& o) {
        switch (o.kind) {
            case mir::OperandKind::Imm: return Src{false, static_cast<std::int32_t>(o.v)};
            case mir::OperandKind::Param: {
                if (o.v < 0 || static_cast<std::size_t>(o.v) >= params.size()) throw MalformedError("bad parameter");
                return Src{false, params[static_cast<std::size_t>(o.v)]};
            }
            case mir::OperandKind::Value: {
                auto it = reg.find(static_cast<mir::InstId>(o.v));
                if (it == reg.end()) throw MalformedError("undefined value");
                return Src{true, it->second};
            }
            default: throw MalformedError("operand is not a scalar");
        }
    };
    auto target = [&](const mir::Operand& o) {
        if (o.kind != mir::OperandKind::Label || o.v < 0 || static_cast<std::size_t>(o.v) >= fn.blocks.size()) {
            throw MalformedError("bad label");
        }
        return start[static_cast<std::size_t>(o.v)];
    };
    auto buffer = [&](const mir::Operand& o, const std::vector<std::size_t>& table) {
        if (o.kind != mir::OperandKind::Buffer || o.v < 0 || static_cast<std::size_t>(o.v) >= table.size() ||
            table[static_cast<std::size_t>(o.v)] == SIZE_MAX) {
            throw MalformedError("bad buffer");
        }
        return static_cast<std::int32_t>(table[static_cast<std::size_t>(o.v)]);
    };

    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
        const auto& insts = fn.blocks[b].insts;
        if (insts.empty() || !insts.back().is_terminator()) throw MalformedError("block without terminator");
        for (const auto& inst : insts) {
            const auto& oi = mir::info(inst.op);
            if (inst.nops != oi.arity) throw MalformedError("arity");
            CInst ci;
            ci.op = inst.op;
            ci.cost = costs.of(inst.op);
            ci.cat = oi.category;
            if ((inst.op == Opcode::And || inst.op == Opcode::Or || inst.op == Opcode::Xor) &&
                inst.type == mir::ScalarType::I32) {
                ci.cat = Category::Arith;
            }
            ci.src = &inst;
            ci.block = b;
            if (inst.has_result()) ci.dst = reg.at(inst.id);
            switch (inst.op) {
                case Opcode::Br: ci.t1 = target(inst.ops[0]); break;
                case Opcode::CondBr: {
                    ci.a = scalar(inst.ops[0]);
                    ci.t1 = target(inst.ops[1]);
                    ci.t2 = target(inst.ops[2]);
                    if (!ipdom[b]) throw MalformedError("branch cannot reach the exit");
                    ci.reconv = start[*ipdom[b]];
                    break;
                }
                case Opcode::LdGlobal:
                    ci.buf = buffer(inst.ops[0], out.global_of);
                    ci.a = scalar(inst.ops[1]);
                    break;
                case Opcode::StGlobal:
                    ci.buf = buffer(inst.ops[0], out.global_of);
                    ci.a = scalar(inst.ops[1]);
                    ci.b = scalar(inst.ops[2]);
                    break;
                case Opcode::LdShared:
                    ci.buf = buffer(inst.ops[0], out.shared_of);
                    ci.a = scalar(inst.ops[1]);
                    break;
                case Opcode::StShared:
                    ci.buf = buffer(inst.ops[0], out.shared_of);
                    ci.a = scalar(inst.ops[1]);
                    ci.b = scalar(inst.ops[2]);
                    break;
                case Opcode::LdLocal:
                case Opcode::StLocal:
                    if (inst.ops[0].kind != mir::OperandKind::Slot || inst.ops[0].v < 0 || inst.ops[0].v >= p.local_slots) {
                        throw MalformedError("bad slot");
                    }
                    ci.slot = static_cast<std::int32_t>(inst.ops[0].v);
                    if (inst.op == Opcode::StLocal) ci.a = scalar(inst.ops[1]);
                    break;
                default: {
                    Src* dst[3] = {&ci.a, &ci.b, &ci.c};
                    for (std::size_t k = 0; k < inst.nops; ++k) *dst[k] = scalar(inst.ops[k]);
                }
            }
            out.code.push_back(ci);
        }
    }
    return out;
}

std::string describe(const mir::Function& fn, const CInst& ci, int lane) {
    std::string s = "@" + fn.name + "/" + fn.blocks[ci.block].label + " " + std::string(mir::info(ci.op).name);
    if (!ci.src->name.empty()) s += " %" + ci.src->name;
    s += " (id " + std::to_string(ci.src->id) + ")";
    if (!ci.src->loc.empty()) s += " loc " + ci.src->loc;
    if (lane >= 0) s += " lane " + std::to_string(lane);
    return s;
}

struct Entry {
    std::int32_t pc;
    std::uint64_t mask;
    std::int32_t reconv;
};

struct Warp {
    std::vector<Entry> stack;
    std::uint64_t cycles = 0;
    bool waiting = false;
    bool retired = false;
};

struct Stop {
    Status status;
    FaultKind fault;
    std::string where;
};

class Machine {
public:
    Machine(const mir::Program& p, const mir::Function& fn, const Compiled& c, const LaunchConfig& cfg,
            const LaunchArgs& args, std::ostream* trace, ExecutionResult& r)
        : p_(p), fn_(fn), c_(c), cfg_(cfg), args_(args), trace_(trace), r_(r), ws_(cfg.warp_size) {}

    void run() {
        global_.resize(c_.global_size.size());
        for (std::size_t g = 0; g < global_.size(); ++g) {
            global_[g].assign(static_cast<std::size_t>(c_.global_size[g]), 0);
            auto it = args_.inputs.find(c_.global_name[g]);
            if (it != args_.inputs.end()) std::copy(it->second.begin(), it->second.end(), global_[g].begin());
        }
        try {
            for (int b = 0; b < cfg_.blocks; ++b) run_block(b);
        } catch (const Stop& s) {
            r_.status = s.status;
            r_.fault = s.fault;
            r_.fault_location = s.where;
        }
        for (std::size_t g = 0; g < global_.size(); ++g) r_.outputs[c_.global_name[g]] = std::move(global_[g]);
    }

private:
    const mir::Program& p_;
    const mir::Function& fn_;
    const Compiled& c_;
    const LaunchConfig& cfg_;
    const LaunchArgs& args_;
    std::ostream* trace_;
    ExecutionResult& r_;
    const int ws_;

    std::vector<std::vector<std::int32_t>> global_, shared_;
    std::vector<std::int32_t> regs_, locals_;
    std::vector<std::uint64_t> rand_counter_;
    std::vector<std::int32_t> scratch_;
    int block_ = 0;

    void run_block(int block) {
        block_ = block;
        const int nw = cfg_.warps_per_block();
        shared_.resize(c_.shared_size.size());
        for (std::size_t s = 0; s < shared_.size(); ++s) shared_[s].assign(static_cast<std::size_t>(c_.shared_size[s]), 0);
        regs_.assign(static_cast<std::size_t>(nw) * c_.nregs * ws_, 0);
        locals_.assign(static_cast<std::size_t>(nw) * p_.local_slots * ws_, 0);
        rand_counter_.assign(static_cast<std::size_t>(nw) * ws_, 0);
        scratch_.assign(static_cast<std::size_t>(ws_), 0);
        const std::uint64_t full = ws_ == 64 ? ~0ULL : ((1ULL << ws_) - 1);
        std::vector<Warp> warps(static_cast<std::size_t>(nw));
        for (auto& w : warps) w.stack.push_back({0, full, -1});

        while (true) {
            for (int w = 0; w < nw; ++w) {
                auto& wp = warps[static_cast<std::size_t>(w)];
                if (!wp.retired && !wp.waiting) step(wp, w);
            }
            int retired = 0, waiting = 0;
            for (const auto& wp : warps) {
                retired += wp.retired;
                waiting += wp.waiting;
            }
            if (retired == nw) break;
            if (retired + waiting == nw) {
                if (retired > 0) {
                    throw Stop{Status::Fault, FaultKind::Deadlock,
                               "@" + fn_.name + " bar.block reached by " + std::to_string(waiting) + " of " +
                                   std::to_string(nw) + " warps in block " + std::to_string(block)};
                }
                for (auto& wp : warps) wp.waiting = false;
            }
        }
    }

    static void settle(Warp& w) {
        while (!w.stack.empty() && w.stack.back().pc == w.stack.back().reconv) w.stack.pop_back();
    }

    std::int32_t rand_value(int warp, int lane) {
        const auto thread = static_cast<std::uint64_t>(warp) * ws_ + lane;
        auto& counter = rand_counter_[thread];
        return rand_stream(args_.seed, block_, static_cast<int>(thread), counter++);
    }

    void step(Warp& w, int warp) {
        Entry& top = w.stack.back();
        const CInst& ci = c_.code[static_cast<std::size_t>(top.pc)];
        const std::uint64_t mask = top.mask;

        w.cycles += ci.cost;
        r_.cycles += ci.cost;
        r_.max_warp_cycles = std::max(r_.max_warp_cycles, w.cycles);
        ++r_.op_counts[static_cast<std::size_t>(ci.op)];
        ++r_.category_counts[static_cast<std::size_t>(ci.cat)];
        if (trace_) {
            *trace_ << block_ << ' ' << warp << ' ' << std::hex << mask << std::dec << ' ' << ci.src->id << ' '
                    << mir::info(ci.op).name << ' ' << ci.cost << '\n';
        }
        if (w.cycles > args_.cycle_budget) {
            throw Stop{Status::Timeout, FaultKind::None,
                       "warp " + std::to_string(warp) + " of block " + std::to_string(block_) + " exceeded " +
                           std::to_string(args_.cycle_budget) + " cycles at " + describe(fn_, ci, -1)};
        }

        std::int32_t* R = regs_.data() + static_cast<std::size_t>(warp) * c_.nregs * ws_;
        auto val = [&](const Src& s, int lane) -> std::int32_t { return s.reg ? R[s.v * ws_ + lane] : s.v; };
        auto dst = [&](int lane) -> std::int32_t& { return R[ci.dst * ws_ + lane]; };
        auto each = [&](auto&& f) {
            for (std::uint64_t m = mask; m; m &= m - 1) f(std::countr_zero(m));
        };
        auto binop = [&](auto&& f) {
            each([&](int l) {
                dst(l) = static_cast<std::int32_t>(f(static_cast<std::uint32_t>(val(ci.a, l)), static_cast<std::uint32_t>(val(ci.b, l))));
            });
        };
        auto cmp = [&](auto&& f) { each([&](int l) { dst(l) = f(val(ci.a, l), val(ci.b, l)) ? 1 : 0; }); };
        auto bounds = [&](const std::vector<std::int32_t>& mem, std::int32_t idx, int lane) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= mem.size()) {
                throw Stop{Status::Fault, FaultKind::OutOfBounds,
                           describe(fn_, ci, lane) + " index " + std::to_string(idx) + " outside [0, " +
                               std::to_string(mem.size()) + ")"};
            }
            return static_cast<std::size_t>(idx);
        };
        const std::size_t local_base = static_cast<std::size_t>(warp) * p_.local_slots * ws_;

        switch (ci.op) {
            case Opcode::Add: binop([](std::uint32_t x, std::uint32_t y) { return x + y; }); break;
            case Opcode::Sub: binop([](std::uint32_t x, std::uint32_t y) { return x - y; }); break;
            case Opcode::Mul: binop([](std::uint32_t x, std::uint32_t y) { return x * y; }); break;
            case Opcode::Div:
                each([&](int l) {
                    const std::int64_t x = val(ci.a, l), y = val(ci.b, l);
                    if (y == 0) throw Stop{Status::Fault, FaultKind::DivByZero, describe(fn_, ci, l)};
                    dst(l) = static_cast<std::int32_t>(static_cast<std::uint32_t>(x / y));
                });
                break;
            case Opcode::Min: each([&](int l) { dst(l) = std::min(val(ci.a, l), val(ci.b, l)); }); break;
            case Opcode::Max: each([&](int l) { dst(l) = std::max(val(ci.a, l), val(ci.b, l)); }); break;
            case Opcode::And: binop([](std::uint32_t x, std::uint32_t y) { return x & y; }); break;
            case Opcode::Or: binop([](std::uint32_t x, std::uint32_t y) { return x | y; }); break;
            case Opcode::Xor: binop([](std::uint32_t x, std::uint32_t y) { return x ^ y; }); break;
            case Opcode::Shl: binop([](std::uint32_t x, std::uint32_t y) { return x << (y & 31u); }); break;
            case Opcode::IcmpEq: cmp([](std::int32_t x, std::int32_t y) { return x == y; }); break;
            case Opcode::IcmpNe: cmp([](std::int32_t x, std::int32_t y) { return x != y; }); break;
            case Opcode::IcmpSlt: cmp([](std::int32_t x, std::int32_t y) { return x < y; }); break;
            case Opcode::IcmpSle: cmp([](std::int32_t x, std::int32_t y) { return x <= y; }); break;
            case Opcode::IcmpSgt: cmp([](std::int32_t x, std::int32_t y) { return x > y; }); break;
            case Opcode::IcmpSge: cmp([](std::int32_t x, std::int32_t y) { return x >= y; }); break;
            case Opcode::Select: each([&](int l) { dst(l) = val(ci.a, l) ? val(ci.b, l) : val(ci.c, l); }); break;
            case Opcode::LdGlobal: {
                auto& mem = global_[static_cast<std::size_t>(ci.buf)];
                each([&](int l) { dst(l) = mem[bounds(mem, val(ci.a, l), l)]; });
                break;
            }
            case Opcode::StGlobal: {
                auto& mem = global_[static_cast<std::size_t>(ci.buf)];
                each([&](int l) { mem[bounds(mem, val(ci.a, l), l)] = val(ci.b, l); });
                break;
            }
            case Opcode::LdShared: {
                auto& mem = shared_[static_cast<std::size_t>(ci.buf)];
                each([&](int l) { dst(l) = mem[bounds(mem, val(ci.a, l), l)]; });
                break;
            }
            case Opcode::StShared: {
                auto& mem = shared_[static_cast<std::size_t>(ci.buf)];
                each([&](int l) { mem[bounds(mem, val(ci.a, l), l)] = val(ci.b, l); });
                break;
            }
            case Opcode::LdLocal:
                each([&](int l) { dst(l) = locals_[local_base + static_cast<std::size_t>(ci.slot) * ws_ + l]; });
                break;
            case Opcode::StLocal:
                each([&](int l) { locals_[local_base + static_cast<std::size_t>(ci.slot) * ws_ + l] = val(ci.a, l); });
                break;
            case Opcode::TidLane: each([&](int l) { dst(l) = l; }); break;
            case Opcode::TidWarp: each([&](int l) { dst(l) = warp; }); break;
            case Opcode::TidBlock: each([&](int l) { dst(l) = warp * ws_ + l; }); break;
            case Opcode::DimBlock: each([&](int l) { dst(l) = cfg_.threads_per_block; }); break;
            case Opcode::DimGrid: each([&](int l) { dst(l) = cfg_.blocks; }); break;
            case Opcode::Shfl:
                for (int l = 0; l < ws_; ++l) scratch_[static_cast<std::size_t>(l)] = val(ci.a, l);
                each([&](int l) {
                    const int src = ((val(ci.b, l) % ws_) + ws_) % ws_;
                    dst(l) = scratch_[static_cast<std::size_t>(src)];
                });
                break;
            case Opcode::Rand: each([&](int l) { dst(l) = rand_value(warp, l); }); break;
            case Opcode::BarWarp: break;
            case Opcode::BarBlock:
                ++top.pc;
                w.waiting = true;
                return;
            case Opcode::Br:
                top.pc = ci.t1;
                settle(w);
                return;
            case Opcode::CondBr: {
                std::uint64_t taken = 0;
                each([&](int l) {
                    if (val(ci.a, l)) taken |= 1ULL << l;
                });
                const std::uint64_t not_taken = mask & ~taken;
                if (not_taken == 0) {
                    top.pc = ci.t1;
                } else if (taken == 0) {
                    top.pc = ci.t2;
                } else {
                    top.pc = ci.reconv;
                    w.stack.push_back({ci.t2, not_taken, ci.reconv});
                    w.stack.push_back({ci.t1, taken, ci.reconv});
                }
                settle(w);
                return;
            }
            case Opcode::Ret: {
                w.stack.pop_back();
                for (auto& e : w.stack) e.mask &= ~mask;
                std::erase_if(w.stack, [](const Entry& e) { return e.mask == 0; });
                settle(w);
                if (w.stack.empty()) w.retired = true;
                return;
            }
            default: throw Stop{Status::Fault, FaultKind::Malformed, describe(fn_, ci, -1)};
        }
        ++top.pc;
    }
};

}  // namespace

ExecutionResult launch(const mir::Program& program, const LaunchConfig& config, const LaunchArgs& args,
                       const CostModel& costs, std::ostream* trace) {
    config.check();
    const auto& fn = program.kernel();
    if (args.params.size() != fn.params.size()) {
        throw std::invalid_argument("kernel @" + fn.name + " takes " + std::to_string(fn.params.size()) +
                                    " parameters, got " + std::to_string(args.params.size()));
    }
    for (const auto& [name, data] : args.inputs) {
        auto idx = program.buffer_index(name);
        if (!idx || program.buffers[*idx].space != mir::MemSpace::Global) {
            throw std::invalid_argument("input names no global buffer: @" + name);
        }
        if (data.size() > static_cast<std::size_t>(program.buffers[*idx].size)) {
            throw std::invalid_argument("input for @" + name + " exceeds its declared length");
        }
    }
    ExecutionResult r;
    Compiled c;
    try {
        c = compile(program, fn, args.params, costs);
    } catch (const MalformedError& e) {
        r.status = Status::Fault;
        r.fault = FaultKind::Malformed;
        r.fault_location = e.what();
        return r;
    }
    Machine(program, fn, c, config, args, trace, r).run();
    return r;
}

}  // namespace evomir::vm
