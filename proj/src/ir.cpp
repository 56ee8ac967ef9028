#include "specnip/ir.hpp"

#include "overloaded.hpp"

#include <algorithm>
#include <stdexcept>

namespace specnip {

using detail::overloaded;

namespace {

void sort_unique(std::vector<RegId>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::string_view to_string(BinOp op) {
    switch (op) {
    case BinOp::add: return "add";
    case BinOp::sub: return "sub";
    case BinOp::mul: return "mul";
    case BinOp::lt: return "lt";
    case BinOp::eq: return "eq";
    case BinOp::band: return "and";
    case BinOp::bor: return "or";
    }
    return "?";
}

std::optional<BinOp> parse_binop(std::string_view s) {
    for (auto op : {BinOp::add, BinOp::sub, BinOp::mul, BinOp::lt, BinOp::eq, BinOp::band,
                    BinOp::bor})
        if (to_string(op) == s) return op;
    return std::nullopt;
}

Value apply(BinOp op, Value a, Value b, unsigned width) {
    const Value m = width >= 32 ? ~Value{0} : (Value{1} << width) - 1;
    switch (op) {
    case BinOp::add: return (a + b) & m;
    case BinOp::sub: return (a - b) & m;
    case BinOp::mul: return (a * b) & m;
    case BinOp::lt: return a < b ? 1 : 0;
    case BinOp::eq: return a == b ? 1 : 0;
    case BinOp::band: return a & b & m;
    case BinOp::bor: return (a | b) & m;
    }
    return 0;
}

std::vector<PcId> successors(const Instr& i) {
    return std::visit(overloaded{
                          [](const ins::Exit&) { return std::vector<PcId>{}; },
                          [](const ins::If& x) { return std::vector<PcId>{x.on_true, x.on_false}; },
                          [](const auto& x) { return std::vector<PcId>{x.next}; },
                      },
                      i);
}

Instr with_successor(Instr i, std::size_t k, PcId target) {
    std::visit(overloaded{
                   [](ins::Exit&) { throw std::logic_error("exit has no successor"); },
                   [&](ins::If& x) { (k == 0 ? x.on_true : x.on_false) = target; },
                   [&](auto& x) { x.next = target; },
               },
               i);
    return i;
}

UsesDefs uses_defs(const Instr& i) {
    UsesDefs ud;
    auto addr_use = [&](const Address& a) {
        if (auto r = std::get_if<RegId>(&a)) ud.uses.push_back(*r);
    };
    std::visit(overloaded{
                   [](const ins::Exit&) {},
                   [](const ins::Nop&) {},
                   [](const ins::Sfence&) {},
                   [&](const ins::Asgn& x) {
                       ud.uses = {x.lhs, x.rhs};
                       ud.defs = {x.dst};
                   },
                   [&](const ins::Load& x) {
                       addr_use(x.addr);
                       ud.defs = {x.dst};
                   },
                   [&](const ins::Store& x) {
                       addr_use(x.addr);
                       ud.uses.push_back(x.src);
                   },
                   [&](const ins::If& x) { ud.uses = {x.cond}; },
                   [&](const ins::Slh& x) {
                       ud.uses = {x.reg};
                       ud.defs = {x.reg};
                   },
                   [&](const ins::Move& x) {
                       ud.uses = {x.src};
                       ud.defs = {x.dst};
                   },
                   [&](const ins::Fill& x) { ud.defs = {x.dst}; },
                   [&](const ins::Spill& x) { ud.uses = {x.src}; },
               },
               i);
    sort_unique(ud.uses);
    sort_unique(ud.defs);
    return ud;
}

bool is_shuffle(const Instr& i) {
    return std::holds_alternative<ins::Move>(i) || std::holds_alternative<ins::Fill>(i) ||
           std::holds_alternative<ins::Spill>(i) || std::holds_alternative<ins::Slh>(i) ||
           std::holds_alternative<ins::Sfence>(i);
}

bool is_speculation_sensitive(const Instr& i) {
    return std::holds_alternative<ins::Slh>(i) || std::holds_alternative<ins::Sfence>(i);
}

std::string_view kind_name(const Instr& i) {
    static constexpr std::string_view names[] = {"ret",   "nop",    "asgn", "load",
                                                 "store", "if",     "sfence", "slh",
                                                 "move",  "fill",   "spill"};
    return names[i.index()];
}

std::optional<PcId> Program::find_pc(std::string_view label) const {
    for (std::size_t k = 0; k < labels_.size(); ++k)
        if (labels_[k] == label) return PcId(k);
    return std::nullopt;
}

std::vector<PcId> Program::pcs() const {
    std::vector<PcId> out;
    for (std::size_t k = 0; k < labels_.size(); ++k) out.push_back(PcId(k));
    return out;
}

std::optional<RegId> Program::find_reg(std::string_view name) const {
    for (std::size_t k = 0; k < regs_.size(); ++k)
        if (regs_[k] == name) return RegId(k);
    return std::nullopt;
}

std::optional<VarId> Program::find_var(std::string_view name) const {
    for (std::size_t k = 0; k < vars_.size(); ++k)
        if (vars_[k].name == name) return VarId(k);
    return std::nullopt;
}

std::pair<VarId, Value> Program::cell_at(std::size_t c) const {
    std::size_t v = vars_.size();
    while (v > 0 && cell_base_[v - 1] > c) --v;
    return {VarId(v - 1), static_cast<Value>(c - cell_base_[v - 1])};
}

ProgramBuilder::ProgramBuilder(const Program& base) : p_(base), has_entry_(true) {}

ProgramBuilder& ProgramBuilder::width(unsigned w) {
    if (w < 1 || w > 16) throw std::invalid_argument("width must be between 1 and 16");
    p_.width_ = w;
    return *this;
}

VarId ProgramBuilder::mem(std::string name, std::uint32_t size, Level level) {
    if (p_.find_var(name)) throw std::invalid_argument("duplicate memory variable " + name);
    if (size == 0) throw std::invalid_argument("memory variable " + name + " has size 0");
    p_.vars_.push_back(MemVar{std::move(name), size, level});
    return VarId(p_.vars_.size() - 1);
}

RegId ProgramBuilder::reg(std::string_view name) {
    if (auto r = p_.find_reg(name)) return *r;
    p_.regs_.emplace_back(name);
    return RegId(p_.regs_.size() - 1);
}

PcId ProgramBuilder::label(std::string_view name) {
    if (auto pc = p_.find_pc(name)) return *pc;
    p_.labels_.emplace_back(name);
    p_.instrs_.emplace_back();
    return PcId(p_.labels_.size() - 1);
}

bool ProgramBuilder::has_label(std::string_view name) const { return p_.find_pc(name).has_value(); }

bool ProgramBuilder::set(PcId pc, Instr i) {
    auto& slot = p_.instrs_[idx(pc)];
    if (slot) return false;
    slot = std::move(i);
    return true;
}

void ProgramBuilder::replace(PcId pc, Instr i) { p_.instrs_[idx(pc)] = std::move(i); }

void ProgramBuilder::entry(PcId pc) {
    p_.entry_ = pc;
    has_entry_ = true;
}

Program ProgramBuilder::build() const {
    if (!has_entry_) throw std::invalid_argument("program has no entry");
    Program p = p_;
    p.cell_base_.clear();
    std::size_t base = 0;
    for (const auto& v : p.vars_) {
        p.cell_base_.push_back(base);
        base += v.size;
    }
    p.cell_count_ = base;
    return p;
}

std::vector<Diagnostic> validate_program(const Program& p) {
    std::vector<Diagnostic> out;
    auto stk = p.stack_var();
    if (stk && p.var(*stk).level != Level::low)
        out.push_back({"", "stk must be a low variable"});
    if (!p.defined(p.entry())) out.push_back({p.label(p.entry()), "entry has no instruction"});
    for (PcId pc : p.pcs()) {
        if (!p.defined(pc)) continue;
        const Instr& i = p.at(pc);
        for (PcId s : successors(i))
            if (!p.defined(s))
                out.push_back({p.label(pc), "successor " + p.label(s) + " is not defined"});
        auto check_const = [&](VarId v, const Address& a) {
            if (auto c = std::get_if<Value>(&a); c && *c >= p.var(v).size)
                out.push_back({p.label(pc), "const address out of bounds"});
        };
        auto check_slot = [&](Value slot) {
            if (!stk)
                out.push_back({p.label(pc), "stack slot used but stk is not declared"});
            else if (slot >= p.var(*stk).size)
                out.push_back({p.label(pc), "stack slot " + std::to_string(slot) +
                                                " out of bounds of stk"});
        };
        if (auto x = std::get_if<ins::Load>(&i)) check_const(x->var, x->addr);
        if (auto x = std::get_if<ins::Store>(&i)) check_const(x->var, x->addr);
        if (auto x = std::get_if<ins::Fill>(&i)) check_slot(x->slot);
        if (auto x = std::get_if<ins::Spill>(&i)) check_slot(x->slot);
    }
    return out;
}

std::string format_instr(const Program& p, const Instr& i) {
    auto r = [&](RegId x) { return p.reg_name(x); };
    auto l = [&](PcId x) { return p.label(x); };
    auto addr = [&](const Address& a) {
        if (auto c = std::get_if<Value>(&a)) return "#" + std::to_string(*c);
        return r(std::get<RegId>(a));
    };
    return std::visit(
        overloaded{
            [](const ins::Exit&) { return std::string("ret"); },
            [&](const ins::Nop& x) { return "nop -> " + l(x.next); },
            [&](const ins::Asgn& x) {
                return r(x.dst) + " = " + r(x.lhs) + " " + std::string(to_string(x.op)) + " " +
                       r(x.rhs) + " -> " + l(x.next);
            },
            [&](const ins::Load& x) {
                return "load " + r(x.dst) + " <- " + p.var(x.var).name + "[" + addr(x.addr) +
                       "] -> " + l(x.next);
            },
            [&](const ins::Store& x) {
                return "store " + p.var(x.var).name + "[" + addr(x.addr) + "] <- " + r(x.src) +
                       " -> " + l(x.next);
            },
            [&](const ins::If& x) {
                return "if " + r(x.cond) + " ? " + l(x.on_true) + " : " + l(x.on_false);
            },
            [&](const ins::Sfence& x) { return "sfence -> " + l(x.next); },
            [&](const ins::Slh& x) { return "slh " + r(x.reg) + " -> " + l(x.next); },
            [&](const ins::Move& x) {
                return "move " + r(x.dst) + " <- " + r(x.src) + " -> " + l(x.next);
            },
            [&](const ins::Fill& x) {
                return "fill " + r(x.dst) + " <- stk#" + std::to_string(x.slot) + " -> " +
                       l(x.next);
            },
            [&](const ins::Spill& x) {
                return "spill stk#" + std::to_string(x.slot) + " <- " + r(x.src) + " -> " +
                       l(x.next);
            },
        },
        i);
}

}  // namespace specnip
