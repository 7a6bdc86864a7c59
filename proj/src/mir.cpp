#include "evomir/mir.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

namespace evomir::mir {

namespace {

using K = OperandSpec::Kind;

constexpr std::array<OpInfo, kOpcodeCount> kOps = {{
    {"add", ResultRule::I32, 2, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"sub", ResultRule::I32, 2, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"mul", ResultRule::I32, 2, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"div", ResultRule::I32, 2, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"min", ResultRule::I32, 2, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"max", ResultRule::I32, 2, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"and", ResultRule::Generic, 2, {K::Generic, K::Generic, K::I32}, false, Category::Compare},
    {"or", ResultRule::Generic, 2, {K::Generic, K::Generic, K::I32}, false, Category::Compare},
    {"xor", ResultRule::Generic, 2, {K::Generic, K::Generic, K::I32}, false, Category::Compare},
    {"shl", ResultRule::I32, 2, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"icmp.eq", ResultRule::Bool, 2, {K::I32, K::I32, K::I32}, false, Category::Compare},
    {"icmp.ne", ResultRule::Bool, 2, {K::I32, K::I32, K::I32}, false, Category::Compare},
    {"icmp.slt", ResultRule::Bool, 2, {K::I32, K::I32, K::I32}, false, Category::Compare},
    {"icmp.sle", ResultRule::Bool, 2, {K::I32, K::I32, K::I32}, false, Category::Compare},
    {"icmp.sgt", ResultRule::Bool, 2, {K::I32, K::I32, K::I32}, false, Category::Compare},
    {"icmp.sge", ResultRule::Bool, 2, {K::I32, K::I32, K::I32}, false, Category::Compare},
    {"select", ResultRule::Generic, 3, {K::Bool, K::Generic, K::Generic}, false, Category::Arith},
    {"br", ResultRule::None, 1, {K::Label, K::I32, K::I32}, true, Category::Control},
    {"condbr", ResultRule::None, 3, {K::Bool, K::Label, K::Label}, true, Category::Control},
    {"ret", ResultRule::None, 0, {K::I32, K::I32, K::I32}, true, Category::Control},
    {"ld.global", ResultRule::I32, 2, {K::GlobalBuf, K::I32, K::I32}, false, Category::MemGlobal},
    {"st.global", ResultRule::None, 3, {K::GlobalBuf, K::I32, K::I32}, false, Category::MemGlobal},
    {"ld.shared", ResultRule::I32, 2, {K::SharedBuf, K::I32, K::I32}, false, Category::MemShared},
    {"st.shared", ResultRule::None, 3, {K::SharedBuf, K::I32, K::I32}, false, Category::MemShared},
    {"ld.local", ResultRule::I32, 1, {K::Slot, K::I32, K::I32}, false, Category::MemLocal},
    {"st.local", ResultRule::None, 2, {K::Slot, K::I32, K::I32}, false, Category::MemLocal},
    {"tid.lane", ResultRule::I32, 0, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"tid.warp", ResultRule::I32, 0, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"tid.block", ResultRule::I32, 0, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"dim.block", ResultRule::I32, 0, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"dim.grid", ResultRule::I32, 0, {K::I32, K::I32, K::I32}, false, Category::Arith},
    {"shfl", ResultRule::I32, 2, {K::I32, K::I32, K::I32}, false, Category::Sync},
    {"bar.block", ResultRule::None, 0, {K::I32, K::I32, K::I32}, false, Category::Sync},
    {"bar.warp", ResultRule::None, 0, {K::I32, K::I32, K::I32}, false, Category::Sync},
    {"rand", ResultRule::I32, 0, {K::I32, K::I32, K::I32}, false, Category::Arith},
}};

}  // namespace

const OpInfo& info(Opcode op) { return kOps[static_cast<std::size_t>(op)]; }

std::optional<Opcode> opcode_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kOps.size(); ++i) {
        if (kOps[i].name == name) return static_cast<Opcode>(i);
    }
    return std::nullopt;
}

std::string_view category_name(Category c) {
    switch (c) {
        case Category::Arith: return "arith";
        case Category::Compare: return "compare";
        case Category::MemGlobal: return "mem.global";
        case Category::MemShared: return "mem.shared";
        case Category::MemLocal: return "mem.local";
        case Category::Sync: return "sync";
        case Category::Control: return "control";
        default: return "?";
    }
}

std::string_view type_name(ScalarType t) { return t == ScalarType::I32 ? "i32" : "bool"; }

bool Instruction::has_result() const { return info(op).result != ResultRule::None; }
bool Instruction::is_terminator() const { return info(op).terminator; }

std::optional<ScalarType> expected_operand_type(const Instruction& inst, std::size_t index) {
    const auto& oi = info(inst.op);
    if (index >= oi.arity) return std::nullopt;
    switch (oi.operand_kinds[index]) {
        case K::I32: return ScalarType::I32;
        case K::Bool: return ScalarType::Bool;
        case K::Generic: return inst.type;
        default: return std::nullopt;
    }
}

std::optional<std::size_t> Function::block_index(std::string_view label) const {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].label == label) return i;
    }
    return std::nullopt;
}

const Function& Program::kernel() const {
    for (const auto& f : functions) {
        if (f.name == entry) return f;
    }
    throw std::logic_error("program has no kernel named @" + entry);
}

Function& Program::kernel() {
    return const_cast<Function&>(static_cast<const Program&>(*this).kernel());
}

std::optional<std::size_t> Program::buffer_index(std::string_view name) const {
    for (std::size_t i = 0; i < buffers.size(); ++i) {
        if (buffers[i].name == name) return i;
    }
    return std::nullopt;
}

std::optional<std::string> Program::meta(std::string_view key) const {
    for (const auto& [k, v] : metadata) {
        if (k == key) return v;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Lexer

ParseError::ParseError(std::string msg, int l, int c)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg), line(l), column(c) {}

namespace {

enum class Tok { Ident, Local, Global, Int, String, Punct, Bang, End };

struct Token {
    Tok kind;
    std::string text;
    int line;
    int col;
};

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == ';') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        const int l = line, cl = col;
        if (c == '%' || c == '@' || c == '!') {
            std::size_t j = i + 1;
            while (j < src.size() && is_name_char(src[j])) ++j;
            if (j == i + 1) throw ParseError(std::string("expected a name after '") + c + "'", l, cl);
            Tok kind = c == '%' ? Tok::Local : c == '@' ? Tok::Global : Tok::Bang;
            out.push_back({kind, std::string(src.substr(i + 1, j - i - 1)), l, cl});
            advance(j - i);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i + 1;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            out.push_back({Tok::Int, std::string(src.substr(i, j - i)), l, cl});
            advance(j - i);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && is_name_char(src[j])) ++j;
            out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), l, cl});
            advance(j - i);
            continue;
        }
        if (c == '"') {
            std::string s;
            advance(1);
            while (true) {
                if (i >= src.size()) throw ParseError("unterminated string", l, cl);
                char d = src[i];
                if (d == '"') {
                    advance(1);
                    break;
                }
                if (d == '\\' && i + 1 < src.size()) {
                    advance(1);
                    d = src[i];
                    if (d == 'n') d = '\n';
                }
                s.push_back(d);
                advance(1);
            }
            out.push_back({Tok::String, std::move(s), l, cl});
            continue;
        }
        if (std::string_view("{}()[],:=").find(c) != std::string_view::npos) {
            out.push_back({Tok::Punct, std::string(1, c), l, cl});
            advance(1);
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", l, cl);
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

// ---------------------------------------------------------------------------
// Parser

struct RawInst {
    Instruction inst;
    std::vector<Token> operand_tokens;
    Token op_token;
};

struct RawBlock {
    std::string label;
    Token at;
    std::vector<RawInst> insts;
};

class Parser {
public:
    explicit Parser(std::string_view text) : toks_(lex(text)) {}

    Program run() {
        Program p;
        std::vector<std::string> marked;
        while (peek().kind != Tok::End) {
            const Token& t = peek();
            if (t.kind != Tok::Ident) fail(t, "expected a declaration or 'fn'");
            if (t.text == "meta") {
                next();
                std::string k = expect(Tok::String, "metadata key").text;
                expect_punct("=");
                std::string v = expect(Tok::String, "metadata value").text;
                p.metadata.emplace_back(std::move(k), std::move(v));
            } else if (t.text == "global" || t.text == "shared") {
                next();
                BufferDecl b;
                b.space = t.text == "global" ? MemSpace::Global : MemSpace::Shared;
                const Token& name = expect(Tok::Global, "buffer name");
                if (p.buffer_index(name.text)) fail(name, "buffer @" + name.text + " redeclared");
                b.name = name.text;
                b.size = parse_shape();
                p.buffers.push_back(std::move(b));
            } else if (t.text == "local") {
                next();
                p.local_slots = parse_shape();
            } else if (t.text == "kernel" || t.text == "fn") {
                bool is_kernel = false;
                if (t.text == "kernel") {
                    is_kernel = true;
                    next();
                }
                const Token& fn_tok = expect(Tok::Ident, "'fn'");
                if (fn_tok.text != "fn") fail(fn_tok, "expected 'fn'");
                p.functions.push_back(parse_function(p));
                if (is_kernel) marked.push_back(p.functions.back().name);
            } else {
                fail(t, "unexpected '" + t.text + "'");
            }
        }
        if (p.functions.empty()) fail(peek(), "program has no functions");
        if (marked.size() > 1) fail(peek(), "more than one function is marked 'kernel'");
        if (marked.size() == 1) {
            p.entry = marked.front();
        } else if (p.functions.size() == 1) {
            p.entry = p.functions.front().name;
        } else {
            fail(peek(), "several functions and none marked 'kernel'");
        }
        p.next_id = next_id_;
        return p;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    InstId next_id_ = 0;

    const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

    [[noreturn]] static void fail(const Token& t, const std::string& msg) {
        throw ParseError(msg, t.line, t.col);
    }

    const Token& expect(Tok kind, const char* what) {
        const Token& t = next();
        if (t.kind != kind) fail(t, std::string("expected ") + what);
        return t;
    }

    void expect_punct(const char* p) {
        const Token& t = next();
        if (t.kind != Tok::Punct || t.text != p) fail(t, std::string("expected '") + p + "'");
    }

    bool at_punct(const char* p) const { return peek().kind == Tok::Punct && peek().text == p; }

    static std::int64_t to_int(const Token& t) {
        try {
            std::int64_t v = std::stoll(t.text);
            if (v < INT32_MIN || v > INT32_MAX) fail(t, "integer literal out of i32 range");
            return v;
        } catch (const std::out_of_range&) {
            fail(t, "integer literal out of i32 range");
        }
    }

    std::int32_t parse_shape() {
        expect_punct("[");
        const Token& ty = expect(Tok::Ident, "'i32'");
        if (ty.text != "i32") fail(ty, "buffers hold i32 only");
        const Token& x = expect(Tok::Ident, "'x'");
        if (x.text != "x") fail(x, "expected 'x'");
        const Token& n = expect(Tok::Int, "buffer length");
        auto v = to_int(n);
        if (v < 0) fail(n, "negative buffer length");
        expect_punct("]");
        return static_cast<std::int32_t>(v);
    }

    ScalarType parse_type() {
        const Token& t = expect(Tok::Ident, "a type");
        if (t.text == "i32") return ScalarType::I32;
        if (t.text == "bool") return ScalarType::Bool;
        fail(t, "unknown type '" + t.text + "'");
    }

    Function parse_function(const Program& p) {
        Function fn;
        fn.name = expect(Tok::Global, "function name").text;
        for (const auto& f : p.functions) {
            if (f.name == fn.name) fail(peek(), "function @" + fn.name + " redefined");
        }
        expect_punct("(");
        std::vector<Token> param_toks;
        if (!at_punct(")")) {
            while (true) {
                const Token& pn = expect(Tok::Local, "parameter name");
                expect_punct(":");
                fn.params.push_back({pn.text, parse_type()});
                param_toks.push_back(pn);
                if (at_punct(",")) {
                    next();
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
        expect_punct("{");

        std::vector<RawBlock> blocks;
        while (!at_punct("}")) {
            const Token& t = peek();
            if (t.kind == Tok::End) fail(t, "unterminated function body");
            if (t.kind == Tok::Ident && peek(1).kind == Tok::Punct && peek(1).text == ":") {
                next();
                next();
                for (const auto& b : blocks) {
                    if (b.label == t.text) fail(t, "block '" + t.text + "' redefined");
                }
                blocks.push_back({t.text, t, {}});
                continue;
            }
            if (blocks.empty()) fail(t, "instruction outside of a block");
            blocks.back().insts.push_back(parse_inst());
        }
        next();  // '}'
        if (blocks.empty()) fail(peek(), "function @" + fn.name + " has no blocks");

        // Definitions first so that uses may textually precede them.
        std::unordered_map<std::string, InstId> defs;
        std::unordered_map<std::string, std::size_t> params;
        for (std::size_t i = 0; i < fn.params.size(); ++i) {
            if (params.count(fn.params[i].name)) fail(param_toks[i], "parameter %" + fn.params[i].name + " repeated");
            params[fn.params[i].name] = i;
        }
        for (auto& b : blocks) {
            for (auto& ri : b.insts) {
                ri.inst.id = next_id_++;
                if (!ri.inst.name.empty()) {
                    if (defs.count(ri.inst.name) || params.count(ri.inst.name)) {
                        fail(ri.op_token, "value %" + ri.inst.name + " defined twice");
                    }
                    defs[ri.inst.name] = ri.inst.id;
                }
            }
        }
        std::unordered_map<std::string, std::size_t> labels;
        for (std::size_t i = 0; i < blocks.size(); ++i) labels[blocks[i].label] = i;

        for (auto& b : blocks) {
            for (auto& ri : b.insts) resolve(p, ri, defs, params, labels);
        }
        for (auto& b : blocks) {
            Block blk;
            blk.label = b.label;
            for (auto& ri : b.insts) blk.insts.push_back(std::move(ri.inst));
            fn.blocks.push_back(std::move(blk));
        }
        infer_generic_types(fn);
        return fn;
    }

    RawInst parse_inst() {
        RawInst ri;
        std::string result;
        if (peek().kind == Tok::Local) {
            result = next().text;
            expect_punct("=");
        }
        ri.op_token = expect(Tok::Ident, "an opcode");
        auto op = opcode_from_name(ri.op_token.text);
        if (!op) fail(ri.op_token, "unknown opcode '" + ri.op_token.text + "'");
        const auto& oi = info(*op);
        if (oi.result == ResultRule::None && !result.empty()) {
            fail(ri.op_token, std::string(oi.name) + " produces no value");
        }
        if (oi.result != ResultRule::None && result.empty()) {
            fail(ri.op_token, std::string(oi.name) + " result must be named");
        }
        ri.inst.op = *op;
        ri.inst.name = result;
        ri.inst.type = oi.result == ResultRule::Bool ? ScalarType::Bool : ScalarType::I32;
        for (std::size_t k = 0; k < oi.arity; ++k) {
            if (k > 0) expect_punct(",");
            const Token& t = next();
            if (t.kind == Tok::Punct || t.kind == Tok::End || t.kind == Tok::String || t.kind == Tok::Bang) {
                fail(t, std::string("missing operand for ") + std::string(oi.name));
            }
            ri.operand_tokens.push_back(t);
        }
        if (peek().kind == Tok::Bang) {
            const Token& b = next();
            if (b.text != "loc") fail(b, "unknown annotation !" + b.text);
            ri.inst.loc = expect(Tok::String, "location string").text;
        }
        return ri;
    }

    void resolve(const Program& p, RawInst& ri, const std::unordered_map<std::string, InstId>& defs,
                 const std::unordered_map<std::string, std::size_t>& params,
                 const std::unordered_map<std::string, std::size_t>& labels) {
        const auto& oi = info(ri.inst.op);
        ri.inst.nops = oi.arity;
        for (std::size_t k = 0; k < oi.arity; ++k) {
            const Token& t = ri.operand_tokens[k];
            Operand& o = ri.inst.ops[k];
            switch (oi.operand_kinds[k]) {
                case K::Label: {
                    if (t.kind != Tok::Ident) fail(t, "expected a block label");
                    auto it = labels.find(t.text);
                    if (it == labels.end()) fail(t, "undefined block '" + t.text + "'");
                    o = Operand::label(it->second);
                    break;
                }
                case K::GlobalBuf:
                case K::SharedBuf: {
                    if (t.kind != Tok::Global) fail(t, "expected a buffer");
                    auto b = p.buffer_index(t.text);
                    if (!b) fail(t, "undefined buffer @" + t.text);
                    o = Operand::buffer(*b);
                    break;
                }
                case K::Slot: {
                    if (t.kind != Tok::Int) fail(t, "expected a local slot index");
                    o = Operand::slot(static_cast<std::int32_t>(to_int(t)));
                    break;
                }
                default: {
                    if (t.kind == Tok::Int) {
                        o = Operand::imm_i32(static_cast<std::int32_t>(to_int(t)));
                    } else if (t.kind == Tok::Ident && (t.text == "true" || t.text == "false")) {
                        o = Operand::imm_bool(t.text == "true");
                    } else if (t.kind == Tok::Local) {
                        if (auto d = defs.find(t.text); d != defs.end()) {
                            o = Operand::value(d->second);
                        } else if (auto pp = params.find(t.text); pp != params.end()) {
                            o = Operand::param(pp->second);
                        } else {
                            fail(t, "undefined value %" + t.text);
                        }
                    } else {
                        fail(t, "expected a value");
                    }
                }
            }
        }
    }

    static void infer_generic_types(Function& fn) {
        std::unordered_map<InstId, Instruction*> by_id;
        for (auto& b : fn.blocks) {
            for (auto& i : b.insts) by_id[i.id] = &i;
        }
        auto ref_type = [&](const Operand& o) -> std::optional<ScalarType> {
            if (o.kind == OperandKind::Imm) return o.imm_type;
            if (o.kind == OperandKind::Param) return fn.params[static_cast<std::size_t>(o.v)].type;
            if (o.kind == OperandKind::Value) {
                auto it = by_id.find(static_cast<InstId>(o.v));
                if (it != by_id.end() && info(it->second->op).result != ResultRule::Generic) return it->second->type;
            }
            return std::nullopt;
        };
        // Generic results may depend on other generic results; iterate to a
        // fixpoint, following definitions through the chain.
        std::unordered_map<InstId, bool> settled;
        bool changed = true;
        while (changed) {
            changed = false;
            for (auto& b : fn.blocks) {
                for (auto& i : b.insts) {
                    if (info(i.op).result != ResultRule::Generic || settled[i.id]) continue;
                    const std::size_t first = i.op == Opcode::Select ? 1 : 0;
                    for (std::size_t k = first; k < i.nops; ++k) {
                        const Operand& o = i.ops[k];
                        std::optional<ScalarType> t = ref_type(o);
                        if (!t && o.kind == OperandKind::Value) {
                            auto it = by_id.find(static_cast<InstId>(o.v));
                            if (it != by_id.end() && settled[it->second->id]) t = it->second->type;
                        }
                        if (t) {
                            i.type = *t;
                            settled[i.id] = true;
                            changed = true;
                            break;
                        }
                    }
                }
            }
        }
    }
};

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string value_name(const Instruction& inst, std::size_t block, std::size_t index) {
    if (!inst.name.empty()) return inst.name;
    return ".b" + std::to_string(block) + "." + std::to_string(index);
}

struct NameTable {
    std::unordered_map<InstId, std::string> names;
    explicit NameTable(const Function& fn) {
        for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
            for (std::size_t i = 0; i < fn.blocks[b].insts.size(); ++i) {
                const auto& inst = fn.blocks[b].insts[i];
                names[inst.id] = value_name(inst, b, i);
            }
        }
    }
};

void print_operand(std::ostream& os, const Program& p, const Function& fn, const NameTable& nt, const Operand& o) {
    switch (o.kind) {
        case OperandKind::Value: {
            auto it = nt.names.find(static_cast<InstId>(o.v));
            os << '%' << (it == nt.names.end() ? "<dangling:" + std::to_string(o.v) + ">" : it->second);
            break;
        }
        case OperandKind::Param:
            os << '%' << fn.params.at(static_cast<std::size_t>(o.v)).name;
            break;
        case OperandKind::Imm:
            if (o.imm_type == ScalarType::Bool) {
                os << (o.v ? "true" : "false");
            } else {
                os << o.v;
            }
            break;
        case OperandKind::Buffer:
            os << '@' << p.buffers.at(static_cast<std::size_t>(o.v)).name;
            break;
        case OperandKind::Slot:
            os << o.v;
            break;
        case OperandKind::Label:
            os << fn.blocks.at(static_cast<std::size_t>(o.v)).label;
            break;
    }
}

void print_inst(std::ostream& os, const Program& p, const Function& fn, const NameTable& nt, const Instruction& inst) {
    if (inst.has_result()) {
        auto it = nt.names.find(inst.id);
        os << '%' << (it == nt.names.end() ? inst.name : it->second) << " = ";
    }
    os << info(inst.op).name;
    for (std::size_t k = 0; k < inst.nops; ++k) {
        os << (k == 0 ? " " : ", ");
        print_operand(os, p, fn, nt, inst.ops[k]);
    }
    if (!inst.loc.empty()) os << " !loc " << quote(inst.loc);
}

}  // namespace

Program parse(std::string_view text) { return Parser(text).run(); }

std::string print_instruction(const Program& program, const Function& fn, const Instruction& inst) {
    NameTable nt(fn);
    std::ostringstream os;
    print_inst(os, program, fn, nt, inst);
    return os.str();
}

std::string print(const Program& p) {
    std::ostringstream os;
    for (const auto& [k, v] : p.metadata) os << "meta " << quote(k) << " = " << quote(v) << '\n';
    for (const auto& b : p.buffers) {
        os << (b.space == MemSpace::Global ? "global" : "shared") << " @" << b.name << "[i32 x " << b.size << "]\n";
    }
    if (p.local_slots > 0) os << "local [i32 x " << p.local_slots << "]\n";
    for (const auto& fn : p.functions) {
        if (!p.metadata.empty() || !p.buffers.empty() || p.local_slots > 0 || &fn != &p.functions.front()) os << '\n';
        if (p.functions.size() > 1 && fn.name == p.entry) os << "kernel ";
        os << "fn @" << fn.name << '(';
        for (std::size_t i = 0; i < fn.params.size(); ++i) {
            if (i) os << ", ";
            os << '%' << fn.params[i].name << ": " << type_name(fn.params[i].type);
        }
        os << ") {\n";
        NameTable nt(fn);
        for (const auto& b : fn.blocks) {
            os << b.label << ":\n";
            for (const auto& inst : b.insts) {
                os << "  ";
                print_inst(os, p, fn, nt, inst);
                os << '\n';
            }
        }
        os << "}\n";
    }
    return os.str();
}

bool structurally_equal(const Program& a, const Program& b) {
    if (a.entry != b.entry) return false;
    return print(a) == print(b);
}

// ---------------------------------------------------------------------------
// Control flow

Cfg build_cfg(const Function& fn) {
    const std::size_t n = fn.blocks.size();
    Cfg cfg;
    cfg.succs.assign(n, {});
    cfg.preds.assign(n, {});
    std::vector<std::size_t> exits;
    for (std::size_t b = 0; b < n; ++b) {
        const auto& insts = fn.blocks[b].insts;
        if (insts.empty() || !insts.back().is_terminator()) continue;
        const auto& t = insts.back();
        if (t.op == Opcode::Ret) exits.push_back(b);
        for (std::size_t k = 0; k < t.nops; ++k) {
            if (t.ops[k].kind != OperandKind::Label) continue;
            auto s = static_cast<std::size_t>(t.ops[k].v);
            if (s >= n) continue;
            if (std::find(cfg.succs[b].begin(), cfg.succs[b].end(), s) == cfg.succs[b].end()) {
                cfg.succs[b].push_back(s);
                cfg.preds[s].push_back(b);
            }
        }
    }
    if (exits.size() == 1) cfg.exit = exits.front();

    auto flood = [n](std::size_t root, const std::vector<std::vector<std::size_t>>& edges) {
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack{root};
        seen[root] = true;
        while (!stack.empty()) {
            auto b = stack.back();
            stack.pop_back();
            for (auto s : edges[b]) {
                if (!seen[s]) {
                    seen[s] = true;
                    stack.push_back(s);
                }
            }
        }
        return seen;
    };
    cfg.reachable = n ? flood(0, cfg.succs) : std::vector<bool>{};
    cfg.reaches_exit = cfg.exit ? flood(*cfg.exit, cfg.preds) : std::vector<bool>(n, false);
    return cfg;
}

namespace {

// Cooper, Harvey & Kennedy iterative dominators over an arbitrary edge set.
std::vector<std::optional<std::size_t>> idoms(std::size_t n, std::size_t root,
                                              const std::vector<std::vector<std::size_t>>& fwd,
                                              const std::vector<std::vector<std::size_t>>& back) {
    std::vector<std::size_t> order;  // postorder
    std::vector<int> state(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    state[root] = 1;
    while (!stack.empty()) {
        auto& [b, k] = stack.back();
        if (k < fwd[b].size()) {
            auto s = fwd[b][k++];
            if (state[s] == 0) {
                state[s] = 1;
                stack.push_back({s, 0});
            }
        } else {
            order.push_back(b);
            stack.pop_back();
        }
    }
    std::vector<std::size_t> po_num(n, SIZE_MAX);
    for (std::size_t i = 0; i < order.size(); ++i) po_num[order[i]] = i;

    std::vector<std::optional<std::size_t>> idom(n);
    idom[root] = root;
    auto intersect = [&](std::size_t a, std::size_t b) {
        while (a != b) {
            while (po_num[a] < po_num[b]) a = *idom[a];
            while (po_num[b] < po_num[a]) b = *idom[b];
        }
        return a;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            auto b = *it;
            if (b == root) continue;
            std::optional<std::size_t> nd;
            for (auto p : back[b]) {
                if (po_num[p] == SIZE_MAX || !idom[p]) continue;
                nd = nd ? intersect(p, *nd) : p;
            }
            if (nd && idom[b] != nd) {
                idom[b] = nd;
                changed = true;
            }
        }
    }
    return idom;
}

}  // namespace

std::vector<std::optional<std::size_t>> dominators(const Function& fn, const Cfg& cfg) {
    if (fn.blocks.empty()) return {};
    return idoms(fn.blocks.size(), 0, cfg.succs, cfg.preds);
}

std::vector<std::optional<std::size_t>> post_dominators(const Function& fn, const Cfg& cfg) {
    if (!cfg.exit) return std::vector<std::optional<std::size_t>>(fn.blocks.size());
    return idoms(fn.blocks.size(), *cfg.exit, cfg.preds, cfg.succs);
}

std::map<std::string, std::string> post_dominator_map(const Function& fn) {
    auto cfg = build_cfg(fn);
    auto pd = post_dominators(fn, cfg);
    std::map<std::string, std::string> out;
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
        if (pd[b]) out[fn.blocks[b].label] = fn.blocks[*pd[b]].label;
    }
    return out;
}

bool dominates(const std::vector<std::optional<std::size_t>>& idom, std::size_t a, std::size_t b) {
    if (!idom[b]) return false;
    while (true) {
        if (a == b) return true;
        auto up = *idom[b];
        if (up == b) return false;
        b = up;
    }
}

// ---------------------------------------------------------------------------
// FunctionScope

FunctionScope::FunctionScope(const Program&, const Function& fn)
    : fn_(&fn), cfg_(build_cfg(fn)), idom_(dominators(fn, cfg_)) {
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
        for (std::size_t i = 0; i < fn.blocks[b].insts.size(); ++i) {
            positions_.emplace(fn.blocks[b].insts[i].id, Position{b, i});
        }
    }
}

std::optional<Position> FunctionScope::position(InstId id) const {
    auto it = positions_.find(id);
    if (it == positions_.end()) return std::nullopt;
    return it->second;
}

std::optional<ScalarType> FunctionScope::type_of(const Operand& ref) const {
    if (ref.kind == OperandKind::Imm) return ref.imm_type;
    if (ref.kind == OperandKind::Param) {
        if (ref.v < 0 || static_cast<std::size_t>(ref.v) >= fn_->params.size()) return std::nullopt;
        return fn_->params[static_cast<std::size_t>(ref.v)].type;
    }
    if (ref.kind != OperandKind::Value) return std::nullopt;
    auto pos = position(static_cast<InstId>(ref.v));
    if (!pos) return std::nullopt;
    const auto& inst = fn_->blocks[pos->block].insts[pos->index];
    if (!inst.has_result()) return std::nullopt;
    return inst.type;
}

bool FunctionScope::available_at(const Operand& ref, Position use) const {
    if (ref.kind == OperandKind::Imm) return true;
    if (ref.kind == OperandKind::Param) return type_of(ref).has_value();
    if (ref.kind != OperandKind::Value) return false;
    auto pos = position(static_cast<InstId>(ref.v));
    if (!pos) return false;
    if (!fn_->blocks[pos->block].insts[pos->index].has_result()) return false;
    if (pos->block == use.block) return pos->index < use.index;
    return dominates(idom_, pos->block, use.block);
}

std::vector<Operand> FunctionScope::in_scope(Position use, ScalarType type) const {
    std::vector<Operand> out;
    for (std::size_t i = 0; i < fn_->params.size(); ++i) {
        if (fn_->params[i].type == type) out.push_back(Operand::param(i));
    }
    if (!idom_.empty() && use.block < idom_.size() && idom_[use.block]) {
        for (std::size_t b = 0; b < fn_->blocks.size(); ++b) {
            const bool same = b == use.block;
            if (!same && !dominates(idom_, b, use.block)) continue;
            const auto& insts = fn_->blocks[b].insts;
            const std::size_t end = same ? std::min(use.index, insts.size()) : insts.size();
            for (std::size_t i = 0; i < end; ++i) {
                if (insts[i].has_result() && insts[i].type == type) out.push_back(Operand::value(insts[i].id));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Verifier

std::string_view violation_kind_name(ViolationKind k) {
    switch (k) {
        case ViolationKind::NoKernel: return "no-kernel";
        case ViolationKind::DuplicateId: return "duplicate-id";
        case ViolationKind::DuplicateName: return "duplicate-name";
        case ViolationKind::EmptyFunction: return "empty-function";
        case ViolationKind::MissingTerminator: return "missing-terminator";
        case ViolationKind::TerminatorNotLast: return "terminator-not-last";
        case ViolationKind::MultipleExits: return "multiple-exits";
        case ViolationKind::NoExit: return "no-exit";
        case ViolationKind::UnreachableBlock: return "unreachable-block";
        case ViolationKind::CannotReachExit: return "cannot-reach-exit";
        case ViolationKind::Arity: return "arity";
        case ViolationKind::OperandKind: return "operand-kind";
        case ViolationKind::TypeMismatch: return "type-mismatch";
        case ViolationKind::UndefinedValue: return "undefined-value";
        case ViolationKind::Dominance: return "dominance";
        case ViolationKind::BadBuffer: return "bad-buffer";
        case ViolationKind::BadSlot: return "bad-slot";
        case ViolationKind::BadLabel: return "bad-label";
    }
    return "?";
}

std::vector<Violation> verify(const Program& p) {
    std::vector<Violation> out;
    bool has_kernel = false;
    for (const auto& f : p.functions) has_kernel |= f.name == p.entry;
    if (!has_kernel) out.push_back({ViolationKind::NoKernel, "", "", std::nullopt, "no kernel function @" + p.entry});

    std::set<InstId> ids;
    for (const auto& fn : p.functions) {
        auto add = [&](ViolationKind k, std::size_t b, std::optional<InstId> id, std::string msg) {
            out.push_back({k, fn.name, b < fn.blocks.size() ? fn.blocks[b].label : "", id, std::move(msg)});
        };
        if (fn.blocks.empty()) {
            add(ViolationKind::EmptyFunction, 0, std::nullopt, "function has no blocks");
            continue;
        }
        std::set<std::string> names;
        for (const auto& prm : fn.params) names.insert(prm.name);
        std::size_t exits = 0;
        for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
            const auto& insts = fn.blocks[b].insts;
            if (insts.empty() || !insts.back().is_terminator()) {
                add(ViolationKind::MissingTerminator, b, std::nullopt, "block does not end in a terminator");
            }
            for (std::size_t i = 0; i < insts.size(); ++i) {
                const auto& inst = insts[i];
                if (!ids.insert(inst.id).second) {
                    add(ViolationKind::DuplicateId, b, inst.id, "instruction id " + std::to_string(inst.id) + " reused");
                }
                if (!inst.name.empty() && !names.insert(inst.name).second) {
                    add(ViolationKind::DuplicateName, b, inst.id, "value %" + inst.name + " defined twice");
                }
                if (inst.is_terminator() && i + 1 != insts.size()) {
                    add(ViolationKind::TerminatorNotLast, b, inst.id, "terminator in the middle of a block");
                }
                if (inst.op == Opcode::Ret) ++exits;
            }
        }
        if (exits == 0) add(ViolationKind::NoExit, 0, std::nullopt, "function has no ret");
        if (exits > 1) add(ViolationKind::MultipleExits, 0, std::nullopt, "function has more than one ret");

        FunctionScope scope(p, fn);
        const auto& cfg = scope.cfg();
        const NameTable value_names(fn);
        for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
            if (!cfg.reachable[b]) add(ViolationKind::UnreachableBlock, b, std::nullopt, "block unreachable from entry");
            else if (cfg.exit && !cfg.reaches_exit[b]) add(ViolationKind::CannotReachExit, b, std::nullopt, "block cannot reach the exit");
        }

        for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
            const auto& insts = fn.blocks[b].insts;
            for (std::size_t i = 0; i < insts.size(); ++i) {
                const auto& inst = insts[i];
                const auto& oi = info(inst.op);
                const std::string where = "%" + (inst.name.empty() ? std::string(oi.name) : inst.name) + " in " +
                                          fn.blocks[b].label;
                if (inst.nops != oi.arity) {
                    add(ViolationKind::Arity, b, inst.id,
                        std::string(oi.name) + " expects " + std::to_string(oi.arity) + " operands at " + where);
                    continue;
                }
                if (oi.result == ResultRule::I32 && inst.type != ScalarType::I32) {
                    add(ViolationKind::TypeMismatch, b, inst.id, "result of " + std::string(oi.name) + " must be i32");
                }
                if (oi.result == ResultRule::Bool && inst.type != ScalarType::Bool) {
                    add(ViolationKind::TypeMismatch, b, inst.id, "result of " + std::string(oi.name) + " must be bool");
                }
                for (std::size_t k = 0; k < inst.nops; ++k) {
                    const Operand& o = inst.ops[k];
                    switch (oi.operand_kinds[k]) {
                        case K::Label:
                            if (o.kind != OperandKind::Label) {
                                add(ViolationKind::OperandKind, b, inst.id, "operand " + std::to_string(k) + " must be a label at " + where);
                            } else if (o.v < 0 || static_cast<std::size_t>(o.v) >= fn.blocks.size()) {
                                add(ViolationKind::BadLabel, b, inst.id, "branch to a missing block at " + where);
                            }
                            break;
                        case K::GlobalBuf:
                        case K::SharedBuf: {
                            const MemSpace want = oi.operand_kinds[k] == K::GlobalBuf ? MemSpace::Global : MemSpace::Shared;
                            if (o.kind != OperandKind::Buffer) {
                                add(ViolationKind::OperandKind, b, inst.id, "operand " + std::to_string(k) + " must be a buffer at " + where);
                            } else if (o.v < 0 || static_cast<std::size_t>(o.v) >= p.buffers.size() ||
                                       p.buffers[static_cast<std::size_t>(o.v)].space != want) {
                                add(ViolationKind::BadBuffer, b, inst.id, "buffer in the wrong memory space at " + where);
                            }
                            break;
                        }
                        case K::Slot:
                            if (o.kind != OperandKind::Slot) {
                                add(ViolationKind::OperandKind, b, inst.id, "operand must be a local slot at " + where);
                            } else if (o.v < 0 || o.v >= p.local_slots) {
                                add(ViolationKind::BadSlot, b, inst.id, "local slot " + std::to_string(o.v) + " not declared at " + where);
                            }
                            break;
                        default: {
                            if (!o.is_scalar()) {
                                add(ViolationKind::OperandKind, b, inst.id, "operand " + std::to_string(k) + " must be a value at " + where);
                                break;
                            }
                            auto want = expected_operand_type(inst, k);
                            auto have = scope.type_of(o);
                            if (!have) {
                                add(ViolationKind::UndefinedValue, b, inst.id,
                                    "operand " + std::to_string(k) + " refers to an undefined value at " + where);
                                break;
                            }
                            if (want && *have != *want) {
                                add(ViolationKind::TypeMismatch, b, inst.id,
                                    "operand " + std::to_string(k) + " of " + std::string(oi.name) + " has type " +
                                        std::string(type_name(*have)) + ", expected " + std::string(type_name(*want)) + " at " + where);
                            }
                            if (cfg.reachable[b] && !scope.available_at(o, {b, i})) {
                                add(ViolationKind::Dominance, b, inst.id,
                                    "operand " + std::to_string(k) + " (%" +
                                        (o.kind == OperandKind::Value && value_names.names.count(static_cast<InstId>(o.v))
                                             ? value_names.names.at(static_cast<InstId>(o.v))
                                             : std::to_string(o.v)) +
                                        ") does not dominate its use at " + where);
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace evomir::mir
