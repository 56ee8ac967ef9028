#include "specnip/text.hpp"

#include <map>

#include "lexer.hpp"

namespace specnip {

using detail::Cursor;

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

struct Line {
    std::size_t no;
    std::size_t len;
    std::vector<detail::Token> toks;
};

class ProgramParser {
public:
    Program run(std::string_view text) {
        std::vector<Line> lines;
        auto raw = detail::split_lines(text);
        for (std::size_t k = 0; k < raw.size(); ++k) {
            auto toks = detail::tokenize(raw[k], k + 1);
            if (!toks.empty()) lines.push_back({k + 1, raw[k].size(), std::move(toks)});
        }
        // Pass 1: declarations and label definitions, so pcs are numbered in line order.
        for (const auto& l : lines) {
            Cursor c(l.toks, l.no, l.len);
            const std::string head = c.peek();
            if (l.toks.size() >= 2 && l.toks[1].text == ":") {
                std::string name = c.word("label");
                if (defined_.count(name)) c.fail_at(l.toks[0].col, "duplicate label " + name);
                defined_[name] = b_.label(name);
            } else if (head == "mem") {
                c.expect("mem");
                std::size_t at = c.col();
                std::string name = c.ident("variable name");
                auto size = c.number("size");
                std::size_t lc = c.col();
                std::string lvl = c.word("level");
                c.finish();
                if (lvl != "low" && lvl != "high") c.fail_at(lc, "level must be low or high");
                if (size == 0 || size > (1u << 20)) c.fail_at(at, "bad size for " + name);
                if (name == stack_var_name && lvl != "low") c.fail_at(lc, "stk must be low");
                if (vars_.count(name)) c.fail_at(at, "duplicate memory variable " + name);
                VarId v = b_.mem(name, static_cast<std::uint32_t>(size),
                                 lvl == "low" ? Level::low : Level::high);
                vars_[name] = {v, static_cast<std::uint32_t>(size)};
            } else if (head == "width") {
                c.expect("width");
                std::size_t at = c.col();
                auto w = c.number("width");
                c.finish();
                if (w < 1 || w > 16) c.fail_at(at, "width must be between 1 and 16");
                b_.width(static_cast<unsigned>(w));
            } else if (head == "entry") {
                // resolved in pass 2
            } else {
                c.fail("expected declaration or labelled instruction");
            }
        }
        bool have_entry = false;
        for (const auto& l : lines) {
            Cursor c(l.toks, l.no, l.len);
            if (c.peek() == "entry" && !(l.toks.size() >= 2 && l.toks[1].text == ":")) {
                c.expect("entry");
                if (have_entry) c.fail_at(l.toks[0].col, "duplicate entry");
                b_.entry(succ(c));
                c.finish();
                have_entry = true;
            } else if (l.toks.size() >= 2 && l.toks[1].text == ":") {
                PcId pc = defined_.at(c.word("label"));
                c.expect(":");
                b_.set(pc, instr(c));
                c.finish();
            }
        }
        if (!have_entry) throw ParseError(lines.empty() ? 1 : lines.back().no, 1, "missing entry");
        return b_.build();
    }

private:
    PcId succ(Cursor& c) {
        std::size_t at = c.col();
        std::string name = c.word("label");
        auto it = defined_.find(name);
        if (it == defined_.end()) c.fail_at(at, "unknown successor " + name);
        return it->second;
    }
    PcId arrow(Cursor& c) {
        c.expect("->");
        return succ(c);
    }
    RegId reg(Cursor& c) { return b_.reg(c.ident("register")); }
    VarId var(Cursor& c, std::string& name) {
        std::size_t at = c.col();
        name = c.ident("memory variable");
        auto it = vars_.find(name);
        if (it == vars_.end()) c.fail_at(at, "unknown memory variable " + name);
        return it->second.first;
    }
    Address address(Cursor& c, const std::string& var) {
        c.expect("[");
        Address a;
        if (c.accept("#")) {
            std::size_t at = c.col();
            auto n = c.number("constant address");
            if (n >= vars_.at(var).second) c.fail_at(at, "const address out of bounds");
            a = static_cast<Value>(n);
        } else {
            a = reg(c);
        }
        c.expect("]");
        return a;
    }
    Value slot(Cursor& c) {
        std::size_t at = c.col();
        if (c.ident("stk") != stack_var_name) c.fail_at(at, "expected stk");
        c.expect("#");
        std::size_t nat = c.col();
        auto n = c.number("stack slot");
        auto it = vars_.find(std::string(stack_var_name));
        if (it == vars_.end()) c.fail_at(at, "stk is not declared");
        if (n >= it->second.second) c.fail_at(nat, "stack slot out of bounds");
        return static_cast<Value>(n);
    }

    Instr instr(Cursor& c) {
        std::size_t at = c.col();
        std::string kw = c.word("instruction");
        if (kw == "ret") return ins::Exit{};
        if (kw == "nop") return ins::Nop{arrow(c)};
        if (kw == "sfence") return ins::Sfence{arrow(c)};
        if (kw == "slh") {
            RegId r = reg(c);
            return ins::Slh{r, arrow(c)};
        }
        if (kw == "if") {
            RegId r = reg(c);
            c.expect("?");
            PcId t = succ(c);
            c.expect(":");
            PcId f = succ(c);
            return ins::If{r, t, f};
        }
        if (kw == "load") {
            RegId d = reg(c);
            c.expect("<-");
            std::string name;
            VarId v = var(c, name);
            Address a = address(c, name);
            return ins::Load{d, v, a, arrow(c)};
        }
        if (kw == "store") {
            std::string name;
            VarId v = var(c, name);
            Address a = address(c, name);
            c.expect("<-");
            RegId s = reg(c);
            return ins::Store{v, a, s, arrow(c)};
        }
        if (kw == "move") {
            RegId d = reg(c);
            c.expect("<-");
            RegId s = reg(c);
            return ins::Move{d, s, arrow(c)};
        }
        if (kw == "fill") {
            RegId d = reg(c);
            c.expect("<-");
            Value s = slot(c);
            return ins::Fill{d, s, arrow(c)};
        }
        if (kw == "spill") {
            Value s = slot(c);
            c.expect("<-");
            RegId r = reg(c);
            return ins::Spill{s, r, arrow(c)};
        }
        // Assignment: the keyword is the destination register.
        if (c.peek() != "=") c.fail_at(at, "unknown instruction " + kw);
        if (!detail::word_char(kw[0]) || (kw[0] >= '0' && kw[0] <= '9'))
            c.fail_at(at, "expected register");
        RegId d = b_.reg(kw);
        c.expect("=");
        RegId l = reg(c);
        std::size_t opat = c.col();
        auto op = parse_binop(c.word("operator"));
        if (!op) c.fail_at(opat, "unknown operator");
        RegId r = reg(c);
        return ins::Asgn{d, l, *op, r, arrow(c)};
    }

    ProgramBuilder b_;
    std::map<std::string, PcId> defined_;
    std::map<std::string, std::pair<VarId, std::uint32_t>> vars_;
};

}  // namespace

Program parse_program(std::string_view text) { return ProgramParser().run(text); }

std::string print_program(const Program& p) {
    std::string out;
    if (p.width() != 8) out += "width " + std::to_string(p.width()) + "\n";
    for (const auto& v : p.vars())
        out += "mem " + v.name + " " + std::to_string(v.size) + " " +
               (v.level == Level::low ? "low" : "high") + "\n";
    out += "entry " + p.label(p.entry()) + "\n";
    for (PcId pc : p.pcs())
        if (p.defined(pc)) out += p.label(pc) + ": " + format_instr(p, p.at(pc)) + "\n";
    return out;
}

bool structurally_equal(const Program& a, const Program& b) {
    if (a.width() != b.width() || a.vars() != b.vars()) return false;
    if (a.label(a.entry()) != b.label(b.entry())) return false;
    std::map<std::string, std::string> ia, ib;
    for (PcId pc : a.pcs())
        if (a.defined(pc)) ia[a.label(pc)] = format_instr(a, a.at(pc));
    for (PcId pc : b.pcs())
        if (b.defined(pc)) ib[b.label(pc)] = format_instr(b, b.at(pc));
    return ia == ib;
}

}  // namespace specnip
