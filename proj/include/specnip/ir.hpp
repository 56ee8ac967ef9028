#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace specnip {

using Value = std::uint32_t;

enum class RegId : std::uint32_t {};
enum class PcId : std::uint32_t {};
enum class VarId : std::uint32_t {};

constexpr std::uint32_t idx(RegId r) { return static_cast<std::uint32_t>(r); }
constexpr std::uint32_t idx(PcId p) { return static_cast<std::uint32_t>(p); }
constexpr std::uint32_t idx(VarId v) { return static_cast<std::uint32_t>(v); }

enum class Level : std::uint8_t { low, high };

struct MemVar {
    std::string name;
    std::uint32_t size = 1;
    Level level = Level::low;
    bool operator==(const MemVar&) const = default;
};

inline constexpr std::string_view stack_var_name = "stk";

enum class BinOp : std::uint8_t { add, sub, mul, lt, eq, band, bor };

std::string_view to_string(BinOp op);
std::optional<BinOp> parse_binop(std::string_view s);
Value apply(BinOp op, Value a, Value b, unsigned width);

// Register-indexed or constant address.
using Address = std::variant<RegId, Value>;

namespace ins {
struct Exit {
    bool operator==(const Exit&) const = default;
};
struct Nop {
    PcId next;
    bool operator==(const Nop&) const = default;
};
struct Asgn {
    RegId dst;
    RegId lhs;
    BinOp op;
    RegId rhs;
    PcId next;
    bool operator==(const Asgn&) const = default;
};
struct Load {
    RegId dst;
    VarId var;
    Address addr;
    PcId next;
    bool operator==(const Load&) const = default;
};
struct Store {
    VarId var;
    Address addr;
    RegId src;
    PcId next;
    bool operator==(const Store&) const = default;
};
struct If {
    RegId cond;
    PcId on_true;
    PcId on_false;
    bool operator==(const If&) const = default;
};
struct Sfence {
    PcId next;
    bool operator==(const Sfence&) const = default;
};
struct Slh {
    RegId reg;
    PcId next;
    bool operator==(const Slh&) const = default;
};
struct Move {
    RegId dst;
    RegId src;
    PcId next;
    bool operator==(const Move&) const = default;
};
struct Fill {
    RegId dst;
    Value slot;
    PcId next;
    bool operator==(const Fill&) const = default;
};
struct Spill {
    Value slot;
    RegId src;
    PcId next;
    bool operator==(const Spill&) const = default;
};
}  // namespace ins

using Instr = std::variant<ins::Exit, ins::Nop, ins::Asgn, ins::Load, ins::Store, ins::If,
                           ins::Sfence, ins::Slh, ins::Move, ins::Fill, ins::Spill>;

// Successors in rule order; If yields {on_true, on_false}.
std::vector<PcId> successors(const Instr& i);
// Replaces the k-th successor.
Instr with_successor(Instr i, std::size_t k, PcId target);

struct UsesDefs {
    std::vector<RegId> uses;
    std::vector<RegId> defs;
};
UsesDefs uses_defs(const Instr& i);

bool is_shuffle(const Instr& i);
bool is_speculation_sensitive(const Instr& i);
std::string_view kind_name(const Instr& i);

class Program {
public:
    PcId entry() const { return entry_; }
    std::size_t pc_count() const { return labels_.size(); }
    const std::string& label(PcId pc) const { return labels_[idx(pc)]; }
    std::optional<PcId> find_pc(std::string_view label) const;
    bool defined(PcId pc) const { return instrs_[idx(pc)].has_value(); }
    const Instr& at(PcId pc) const { return *instrs_[idx(pc)]; }
    std::vector<PcId> pcs() const;

    std::size_t reg_count() const { return regs_.size(); }
    const std::string& reg_name(RegId r) const { return regs_[idx(r)]; }
    std::optional<RegId> find_reg(std::string_view name) const;

    const std::vector<MemVar>& vars() const { return vars_; }
    const MemVar& var(VarId v) const { return vars_[idx(v)]; }
    std::optional<VarId> find_var(std::string_view name) const;
    std::optional<VarId> stack_var() const { return find_var(stack_var_name); }

    unsigned width() const { return width_; }
    Value mask(Value v) const { return v & max_value(); }
    Value max_value() const { return width_ >= 32 ? ~Value{0} : (Value{1} << width_) - 1; }

    // Flat layout of memory cells, variable by variable.
    std::size_t cell_count() const { return cell_count_; }
    std::size_t cell(VarId v, Value offset) const { return cell_base_[idx(v)] + offset; }
    std::pair<VarId, Value> cell_at(std::size_t c) const;

    bool operator==(const Program&) const = default;

private:
    friend class ProgramBuilder;
    unsigned width_ = 8;
    PcId entry_{};
    std::vector<std::string> labels_;
    std::vector<std::optional<Instr>> instrs_;
    std::vector<std::string> regs_;
    std::vector<MemVar> vars_;
    std::vector<std::size_t> cell_base_;
    std::size_t cell_count_ = 0;
};

class ProgramBuilder {
public:
    ProgramBuilder() = default;
    explicit ProgramBuilder(const Program& base);

    ProgramBuilder& width(unsigned w);
    VarId mem(std::string name, std::uint32_t size, Level level);
    RegId reg(std::string_view name);
    PcId label(std::string_view name);
    bool has_label(std::string_view name) const;
    // Returns false if pc already holds an instruction.
    bool set(PcId pc, Instr i);
    void replace(PcId pc, Instr i);
    void entry(PcId pc);
    std::size_t pc_count() const { return p_.labels_.size(); }
    Program build() const;

private:
    Program p_;
    bool has_entry_ = false;
};

struct Diagnostic {
    std::string pc;
    std::string message;
    bool operator==(const Diagnostic&) const = default;
};

std::vector<Diagnostic> validate_program(const Program& p);

// Instruction rendered in the textual program syntax, without label.
std::string format_instr(const Program& p, const Instr& i);

}  // namespace specnip
