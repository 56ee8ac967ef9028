#include "helpers.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "specnip/regalloc.hpp"
#include "specnip/security.hpp"

namespace testing_support {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string corpus_text(const std::string& name) { return read_text(std::string(CORPUS_DIR) + "/" + name); }

Program corpus_program(const std::string& name) { return parse_program(corpus_text(name)); }

State corpus_state(const Program& p, const std::string& name) {
    return parse_initial_state(p, corpus_text(name));
}

Program with_width(const Program& p, unsigned w) { return ProgramBuilder(p).width(w).build(); }

RAWitness ra_witness() {
    return parse_ra_witness(corpus_program("ra_source.sp"), corpus_program("ra_target.sp"),
                            corpus_text("ra.witness"));
}

RAWitness ra_witness_w2() {
    return parse_ra_witness(with_width(corpus_program("ra_w2_source.sp"), 2),
                            with_width(corpus_program("ra_w2_target.sp"), 2),
                            corpus_text("ra.witness"));
}

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

std::string random_program_text(std::mt19937_64& rng, const GenOptions& o) {
    static const char* ops[] = {"add", "sub", "mul", "lt", "eq", "and", "or"};
    std::ostringstream t;
    t << "width " << o.width << "\nmem sec 1 high\nmem buf 2 low\n";
    if (o.shuffles) t << "mem stk 2 low\n";
    t << "entry L0\n";
    auto reg = [&] { return "r" + std::to_string(pick(rng, o.regs)); };
    auto lbl = [](std::size_t k) { return "L" + std::to_string(k); };
    const std::size_t n = o.pcs;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        // Forward successor; an occasional backward edge when loops are allowed.
        auto succ = [&] {
            if (o.loops && pick(rng, 6) == 0) return lbl(pick(rng, i + 1));
            return lbl(i + 1 + pick(rng, std::min<std::size_t>(2, n - 1 - i)));
        };
        auto addr = [&](const char* var, unsigned size) {
            if (pick(rng, 3) == 0) return std::string(var) + "[#" + std::to_string(pick(rng, size)) + "]";
            return std::string(var) + "[" + reg() + "]";
        };
        auto var = [&]() -> std::pair<const char*, unsigned> {
            return pick(rng, 3) == 0 ? std::pair{"sec", 1u} : std::pair{"buf", 2u};
        };
        t << lbl(i) << ": ";
        const std::size_t kinds = o.shuffles ? 10 : 5;
        switch (pick(rng, kinds)) {
        case 0: t << "nop -> " << succ(); break;
        case 1: t << reg() << " = " << reg() << " " << ops[pick(rng, 7)] << " " << reg() << " -> " << succ(); break;
        case 2: {
            auto [v, s] = var();
            t << "load " << reg() << " <- " << addr(v, s) << " -> " << succ();
            break;
        }
        case 3: {
            auto [v, s] = var();
            t << "store " << addr(v, s) << " <- " << reg() << " -> " << succ();
            break;
        }
        case 4: t << "if " << reg() << " ? " << succ() << " : " << succ(); break;
        case 5: t << "move " << reg() << " <- " << reg() << " -> " << succ(); break;
        case 6: t << "fill " << reg() << " <- stk#" << pick(rng, 2) << " -> " << succ(); break;
        case 7: t << "spill stk#" << pick(rng, 2) << " <- " << reg() << " -> " << succ(); break;
        case 8: t << "slh " << reg() << " -> " << succ(); break;
        default: t << "sfence -> " << succ(); break;
        }
        t << "\n";
    }
    t << lbl(n - 1) << ": ret\n";
    return t.str();
}

Program random_program(std::mt19937_64& rng, const GenOptions& o) {
    return parse_program(random_program_text(rng, o));
}

State random_state(const Program& p, std::mt19937_64& rng) {
    State s = initial_state(p);
    std::uniform_int_distribution<Value> d(0, p.max_value());
    for (auto& r : s.regs) r = d(rng);
    for (auto& m : s.mem) m = d(rng);
    return s;
}

std::vector<Directive> random_walk(const Program& p, const SpecState& v0, std::mt19937_64& rng,
                                   std::size_t n, unsigned max_depth) {
    std::vector<Directive> out;
    SpecState v = v0;
    while (out.size() < n) {
        auto en = enabled_directives(p, v);
        if (v.depth() >= max_depth)
            std::erase_if(en, [](const Directive& d) { return d.kind == DirKind::spec; });
        if (en.empty()) break;
        const Directive d = en[pick(rng, en.size())];
        auto r = step_spec(p, v, d);
        if (!r) break;
        out.push_back(d);
        v = std::move(r->first);
    }
    return out;
}

SafeDraw random_safe(std::mt19937_64& rng, const GenOptions& o) {
    for (;;) {
        Program p = random_program(rng, o);
        for (int k = 0; k < 4; ++k) {
            State s = random_state(p, rng);
            if (check_safety(p, s, 64).kind == SafetyResult::Kind::safe) return {std::move(p), std::move(s)};
        }
    }
}

bool effective(const Program& p, PcId pc, const LiveSet& after) {
    const Instr& i = p.at(pc);
    if (auto x = std::get_if<ins::Store>(&i))
        if (auto c = std::get_if<Value>(&x->addr)) return after.cell(p.cell(x->var, *c));
    if (auto x = std::get_if<ins::Spill>(&i)) return after.cell(p.cell(*p.stack_var(), x->slot));
    for (RegId d : uses_defs(i).defs)
        if (!after.reg(d)) return false;
    return true;
}

unsigned min_registers(const Program& p) {
    const Liveness l = ra_liveness(p);
    unsigned need = 2;
    for (PcId pc : p.pcs()) {
        if (!p.defined(pc)) continue;
        auto u = uses_defs(p.at(pc));
        std::set<RegId> uses(u.uses.begin(), u.uses.end());
        bool extra = !u.defs.empty();
        for (RegId r : uses)
            if (!l[idx(pc)].reg(r) || std::find(u.defs.begin(), u.defs.end(), r) != u.defs.end()) extra = false;
        need = std::max(need, static_cast<unsigned>(uses.size()) + (extra ? 1u : 0u));
    }
    return need;
}

}  // namespace testing_support
