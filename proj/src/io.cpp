#include "specnip/io.hpp"

#include "lexer.hpp"

namespace specnip {

using detail::Cursor;

std::string format_directive(const Program& p, const Directive& d) {
    switch (d.kind) {
    case DirKind::step: return "step";
    case DirKind::branch: return "if";
    case DirKind::spec: return "spec";
    case DirKind::rollback: return "rb";
    case DirKind::load: return "load " + p.var(d.var).name + " " + std::to_string(d.offset);
    case DirKind::store: return "store " + p.var(d.var).name + " " + std::to_string(d.offset);
    }
    return "?";
}

std::string format_leak(const Leakage& l) {
    switch (l.kind) {
    case LeakKind::none: return "none";
    case LeakKind::branch: return l.value ? "if true" : "if false";
    case LeakKind::load: return "load " + std::to_string(l.value);
    case LeakKind::store: return "store " + std::to_string(l.value);
    case LeakKind::rollback: return "rb";
    }
    return "?";
}

std::string format_pc_stack(const Program& p, const SpecState& v) {
    std::string out = "[";
    for (std::size_t k = 0; k < v.depth(); ++k) {
        if (k) out += " ";
        out += p.label(v.frames[k].pc);
    }
    return out + "]";
}

std::string format_trace(const Program& p, const Trace& t) {
    std::string out;
    for (std::size_t k = 0; k < t.directives.size(); ++k) {
        if (k) out += " . ";
        out += format_directive(p, t.directives[k]) + "/" + format_leak(t.leaks[k]);
    }
    return out.empty() ? "(empty)" : out;
}

std::vector<Directive> parse_directives(const Program& p, std::string_view text) {
    std::vector<Directive> out;
    auto lines = detail::split_lines(text);
    for (std::size_t k = 0; k < lines.size(); ++k) {
        auto toks = detail::tokenize(lines[k], k + 1);
        if (toks.empty()) continue;
        Cursor c(std::move(toks), k + 1, lines[k].size());
        std::size_t at = c.col();
        std::string kw = c.word("directive");
        if (kw == "step")
            out.push_back(Directive::step());
        else if (kw == "if")
            out.push_back(Directive::branch());
        else if (kw == "spec")
            out.push_back(Directive::spec());
        else if (kw == "rb")
            out.push_back(Directive::rollback());
        else if (kw == "load" || kw == "store") {
            std::size_t vat = c.col();
            auto v = p.find_var(c.ident("memory variable"));
            if (!v) c.fail_at(vat, "unknown memory variable");
            std::size_t oat = c.col();
            auto off = c.number("offset");
            if (off >= p.var(*v).size) c.fail_at(oat, "offset out of bounds");
            out.push_back(kw == "load" ? Directive::load(*v, static_cast<Value>(off))
                                       : Directive::store(*v, static_cast<Value>(off)));
        } else {
            c.fail_at(at, "unknown directive " + kw);
        }
        c.finish();
    }
    return out;
}

std::string print_directives(const Program& p, const std::vector<Directive>& ds) {
    std::string out;
    for (const auto& d : ds) out += format_directive(p, d) + "\n";
    return out;
}

State parse_initial_state(const Program& p, std::string_view text) {
    State s = initial_state(p);
    auto lines = detail::split_lines(text);
    for (std::size_t k = 0; k < lines.size(); ++k) {
        auto toks = detail::tokenize(lines[k], k + 1);
        if (toks.empty()) continue;
        Cursor c(std::move(toks), k + 1, lines[k].size());
        std::size_t at = c.col();
        std::string kw = c.word("reg or cell");
        auto value = [&] {
            std::size_t vat = c.col();
            auto n = c.number("value");
            if (n > p.max_value()) c.fail_at(vat, "value exceeds the value width");
            return static_cast<Value>(n);
        };
        if (kw == "reg") {
            std::size_t rat = c.col();
            auto r = p.find_reg(c.ident("register"));
            if (!r) c.fail_at(rat, "register not used by the program");
            s.regs[idx(*r)] = value();
        } else if (kw == "cell") {
            std::size_t vat = c.col();
            auto v = p.find_var(c.ident("memory variable"));
            if (!v) c.fail_at(vat, "unknown memory variable");
            std::size_t oat = c.col();
            auto off = c.number("offset");
            if (off >= p.var(*v).size) c.fail_at(oat, "offset out of bounds");
            s.mem[p.cell(*v, static_cast<Value>(off))] = value();
        } else {
            c.fail_at(at, "expected reg or cell");
        }
        c.finish();
    }
    return s;
}

std::string print_initial_state(const Program& p, const State& s) {
    std::string out;
    for (std::size_t r = 0; r < p.reg_count(); ++r)
        if (s.regs[r]) out += "reg " + p.reg_name(RegId(r)) + " " + std::to_string(s.regs[r]) + "\n";
    for (std::size_t c = 0; c < p.cell_count(); ++c)
        if (s.mem[c]) {
            auto [v, off] = p.cell_at(c);
            out += "cell " + p.var(v).name + " " + std::to_string(off) + " " +
                   std::to_string(s.mem[c]) + "\n";
        }
    return out;
}

std::string format_execution(const Program& p, const Execution& e) {
    std::string out;
    for (const auto& st : e.steps)
        out += format_directive(p, st.directive) + " | " + format_leak(st.leak) + " | " +
               format_pc_stack(p, st.after) + "\n";
    return out;
}

}  // namespace specnip
