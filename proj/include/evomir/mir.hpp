#pragma once

// Minimal SSA-style parallel kernel IR: data model, textual form, verifier
// and the control-flow analyses shared by the VM and the mutation engine.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evomir::mir {

enum class ScalarType : std::uint8_t { I32, Bool };

enum class Opcode : std::uint8_t {
    Add, Sub, Mul, Div, Min, Max, And, Or, Xor, Shl,
    IcmpEq, IcmpNe, IcmpSlt, IcmpSle, IcmpSgt, IcmpSge,
    Select,
    Br, CondBr, Ret,
    LdGlobal, StGlobal, LdShared, StShared, LdLocal, StLocal,
    TidLane, TidWarp, TidBlock, DimBlock, DimGrid,
    Shfl, BarBlock, BarWarp,
    Rand,
    Count_
};

constexpr std::size_t kOpcodeCount = static_cast<std::size_t>(Opcode::Count_);

enum class MemSpace : std::uint8_t { Global, Shared };

// Coarse opcode families used by instruction-mix reports.
enum class Category : std::uint8_t {
    Arith, Compare, MemGlobal, MemShared, MemLocal, Sync, Control, Count_
};
constexpr std::size_t kCategoryCount = static_cast<std::size_t>(Category::Count_);

enum class OperandKind : std::uint8_t { Value, Param, Imm, Buffer, Slot, Label };

using InstId = std::uint32_t;

// Ids handed out to instructions created by edits start here; parsed
// programs number their instructions densely from zero.
constexpr InstId kFreshIdBase = 1u << 24;

struct Operand {
    OperandKind kind = OperandKind::Imm;
    ScalarType imm_type = ScalarType::I32;  // only for Imm
    std::int64_t v = 0;  // inst id | param index | literal | buffer index | slot | block index

    static Operand value(InstId id) { return {OperandKind::Value, ScalarType::I32, id}; }
    static Operand param(std::size_t i) { return {OperandKind::Param, ScalarType::I32, static_cast<std::int64_t>(i)}; }
    static Operand imm_i32(std::int32_t x) { return {OperandKind::Imm, ScalarType::I32, x}; }
    static Operand imm_bool(bool b) { return {OperandKind::Imm, ScalarType::Bool, b ? 1 : 0}; }
    static Operand buffer(std::size_t i) { return {OperandKind::Buffer, ScalarType::I32, static_cast<std::int64_t>(i)}; }
    static Operand slot(std::int32_t s) { return {OperandKind::Slot, ScalarType::I32, s}; }
    static Operand label(std::size_t b) { return {OperandKind::Label, ScalarType::I32, static_cast<std::int64_t>(b)}; }

    bool is_scalar() const {
        return kind == OperandKind::Value || kind == OperandKind::Param || kind == OperandKind::Imm;
    }
    bool is_ref() const { return kind == OperandKind::Value || kind == OperandKind::Param; }

    friend bool operator==(const Operand&, const Operand&) = default;
};

struct Instruction {
    InstId id = 0;
    Opcode op = Opcode::Ret;
    ScalarType type = ScalarType::I32;  // result type when the opcode produces one
    std::array<Operand, 3> ops{};
    std::uint8_t nops = 0;
    std::string name;  // result name without the leading '%'
    std::string loc;   // opaque source location

    std::span<const Operand> operands() const { return {ops.data(), nops}; }
    bool has_result() const;
    bool is_terminator() const;
};

struct Block {
    std::string label;
    std::vector<Instruction> insts;
};

struct Param {
    std::string name;
    ScalarType type = ScalarType::I32;
};

struct Function {
    std::string name;
    std::vector<Param> params;
    std::vector<Block> blocks;  // blocks[0] is the entry block

    std::optional<std::size_t> block_index(std::string_view label) const;
};

struct BufferDecl {
    MemSpace space = MemSpace::Global;
    std::string name;
    std::int32_t size = 0;
};

struct Program {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<BufferDecl> buffers;
    std::int32_t local_slots = 0;
    std::vector<Function> functions;
    std::string entry;
    InstId next_id = 0;  // first id not used by the parser

    const Function& kernel() const;
    Function& kernel();
    std::optional<std::size_t> buffer_index(std::string_view name) const;
    std::optional<std::string> meta(std::string_view key) const;
};

// ---------------------------------------------------------------------------
// Opcode table

enum class ResultRule : std::uint8_t { None, I32, Bool, Generic };

struct OperandSpec {
    enum class Kind : std::uint8_t { I32, Bool, Generic, GlobalBuf, SharedBuf, Slot, Label } kind;
};

struct OpInfo {
    std::string_view name;
    ResultRule result;
    std::uint8_t arity;
    std::array<OperandSpec::Kind, 3> operand_kinds;
    bool terminator;
    Category category;
};

const OpInfo& info(Opcode op);
std::optional<Opcode> opcode_from_name(std::string_view name);
std::string_view category_name(Category c);
std::string_view type_name(ScalarType t);

// Expected scalar type of operand `index` for `inst`, or nullopt when the
// operand is not a scalar (buffer, slot, label).
std::optional<ScalarType> expected_operand_type(const Instruction& inst, std::size_t index);

// ---------------------------------------------------------------------------
// Text form

struct ParseError : std::runtime_error {
    ParseError(std::string msg, int line, int column);
    int line;
    int column;
};

Program parse(std::string_view text);
std::string print(const Program& program);
std::string print_instruction(const Program& program, const Function& fn, const Instruction& inst);

// Equality of everything except instruction ids, which must only correspond
// positionally.
bool structurally_equal(const Program& a, const Program& b);

// ---------------------------------------------------------------------------
// Analyses

struct Cfg {
    std::vector<std::vector<std::size_t>> succs;
    std::vector<std::vector<std::size_t>> preds;
    std::vector<bool> reachable;      // from the entry block
    std::vector<bool> reaches_exit;   // can reach the unique exit block
    std::optional<std::size_t> exit;  // the unique block ending in ret, if any
};

Cfg build_cfg(const Function& fn);

// Immediate dominators; entry maps to itself, unreachable blocks to nullopt.
std::vector<std::optional<std::size_t>> dominators(const Function& fn, const Cfg& cfg);

// Immediate post-dominators; the exit maps to itself. Blocks that cannot
// reach the exit map to nullopt.
std::vector<std::optional<std::size_t>> post_dominators(const Function& fn, const Cfg& cfg);

// Convenience wrapper keyed by block label.
std::map<std::string, std::string> post_dominator_map(const Function& fn);

bool dominates(const std::vector<std::optional<std::size_t>>& idom, std::size_t a, std::size_t b);

// Where an instruction lives inside a function.
struct Position {
    std::size_t block = 0;
    std::size_t index = 0;
};

// Value-level view of one function used by verification, repair and mutation.
class FunctionScope {
public:
    FunctionScope(const Program& program, const Function& fn);

    const Cfg& cfg() const { return cfg_; }
    const std::vector<std::optional<std::size_t>>& idom() const { return idom_; }

    std::optional<Position> position(InstId id) const;
    // Type of a defined value, nullopt when the reference does not resolve.
    std::optional<ScalarType> type_of(const Operand& ref) const;
    // True when `ref` is a parameter or an instruction dominating `use`.
    bool available_at(const Operand& ref, Position use) const;
    // All references of `type` usable at `use`, in program order (parameters
    // first, then instructions by block order and index).
    std::vector<Operand> in_scope(Position use, ScalarType type) const;

private:
    const Function* fn_;
    Cfg cfg_;
    std::vector<std::optional<std::size_t>> idom_;
    std::map<InstId, Position> positions_;
};

// ---------------------------------------------------------------------------
// Verifier

enum class ViolationKind : std::uint8_t {
    NoKernel, DuplicateId, DuplicateName, EmptyFunction, MissingTerminator, TerminatorNotLast,
    MultipleExits, NoExit, UnreachableBlock, CannotReachExit, Arity, OperandKind, TypeMismatch,
    UndefinedValue, Dominance, BadBuffer, BadSlot, BadLabel
};

std::string_view violation_kind_name(ViolationKind k);

struct Violation {
    ViolationKind kind;
    std::string function;
    std::string block;
    std::optional<InstId> inst;
    std::string message;
};

std::vector<Violation> verify(const Program& program);

}  // namespace evomir::mir
