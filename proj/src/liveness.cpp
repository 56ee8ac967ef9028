#include "specnip/liveness.hpp"

#include "overloaded.hpp"

namespace specnip {

using detail::overloaded;

LiveSet LiveSet::join(const LiveSet& o) const {
    LiveSet out = *this;
    for (std::size_t k = 0; k < regs.size(); ++k) out.regs[k] = regs[k] || o.regs[k];
    for (std::size_t k = 0; k < cells.size(); ++k) out.cells[k] = cells[k] || o.cells[k];
    return out;
}

bool LiveSet::leq(const LiveSet& o) const {
    for (std::size_t k = 0; k < regs.size(); ++k)
        if (regs[k] && !o.regs[k]) return false;
    for (std::size_t k = 0; k < cells.size(); ++k)
        if (cells[k] && !o.cells[k]) return false;
    return true;
}

LiveSet empty_live(const Program& p) {
    return {std::vector<bool>(p.reg_count(), false), std::vector<bool>(p.cell_count(), false)};
}

LiveSet full_live(const Program& p) {
    return {std::vector<bool>(p.reg_count(), true), std::vector<bool>(p.cell_count(), true)};
}

LiveSet mems_live(const Program& p) {
    return {std::vector<bool>(p.reg_count(), false), std::vector<bool>(p.cell_count(), true)};
}

LiveSet live_in(const Program& p, PcId pc, const LiveSet& after, DeadDefs mode) {
    LiveSet l = after;
    const bool all = mode == DeadDefs::use_operands;
    auto use = [&](RegId r) { l.regs[idx(r)] = true; };
    auto kill = [&](RegId r) { l.regs[idx(r)] = false; };
    std::visit(overloaded{
                   [](const ins::Exit&) {},
                   [](const ins::Nop&) {},
                   [](const ins::Sfence&) {},
                   [&](const ins::Asgn& x) {
                       if (!all && !after.reg(x.dst)) return;
                       kill(x.dst);
                       use(x.lhs);
                       use(x.rhs);
                   },
                   [&](const ins::Load& x) {
                       if (!all && !after.reg(x.dst)) return;
                       kill(x.dst);
                       if (auto c = std::get_if<Value>(&x.addr)) {
                           l.cells[p.cell(x.var, *c)] = true;
                       } else {
                           // An unsafe load may read any cell.
                           l.cells.assign(l.cells.size(), true);
                           use(std::get<RegId>(x.addr));
                       }
                   },
                   [&](const ins::Store& x) {
                       if (auto c = std::get_if<Value>(&x.addr)) {
                           const std::size_t cell = p.cell(x.var, *c);
                           if (!all && !after.cell(cell)) return;
                           l.cells[cell] = false;
                           use(x.src);
                       } else {
                           use(std::get<RegId>(x.addr));
                           use(x.src);
                       }
                   },
                   [&](const ins::If& x) { use(x.cond); },
                   [&](const ins::Slh& x) { use(x.reg); },
                   [&](const ins::Move& x) {
                       if (!all && !after.reg(x.dst)) return;
                       kill(x.dst);
                       use(x.src);
                   },
                   [&](const ins::Fill& x) {
                       if (!all && !after.reg(x.dst)) return;
                       kill(x.dst);
                       l.cells[p.cell(*p.stack_var(), x.slot)] = true;
                   },
                   [&](const ins::Spill& x) {
                       const std::size_t cell = p.cell(*p.stack_var(), x.slot);
                       if (!all && !after.cell(cell)) return;
                       l.cells[cell] = false;
                       use(x.src);
                   },
               },
               p.at(pc));
    return l;
}

Liveness liveness(const Program& p, const LiveSet& exit_fact, DeadDefs mode) {
    FlowProblem<LiveSet> prob;
    prob.nodes = p.pc_count();
    prob.direction = Direction::backward;
    for (PcId pc : p.pcs()) {
        if (!p.defined(pc)) continue;
        for (PcId s : successors(p.at(pc))) prob.edges.emplace_back(idx(pc), idx(s));
        if (std::holds_alternative<ins::Exit>(p.at(pc))) prob.init_nodes.push_back(idx(pc));
    }
    prob.transfer = [&p, mode](std::size_t n, const LiveSet& after) {
        return live_in(p, PcId(n), after, mode);
    };
    prob.bottom = empty_live(p);
    prob.init = exit_fact;
    prob.height = p.reg_count() + p.cell_count();
    return solve(prob);
}

DceResult dce_transform(const Program& p, const Liveness& live) {
    ProgramBuilder b(p);
    std::vector<bool> replaced(p.pc_count(), false);
    for (PcId pc : p.pcs()) {
        const LiveSet& after = live[idx(pc)];
        const Instr& i = p.at(pc);
        std::optional<PcId> nop;
        if (auto x = std::get_if<ins::Asgn>(&i); x && !after.reg(x->dst)) nop = x->next;
        if (auto x = std::get_if<ins::Load>(&i); x && !after.reg(x->dst)) nop = x->next;
        if (auto x = std::get_if<ins::Store>(&i)) {
            auto c = std::get_if<Value>(&x->addr);
            if (c && !after.cell(p.cell(x->var, *c))) nop = x->next;
        }
        if (nop) {
            b.replace(pc, ins::Nop{*nop});
            replaced[idx(pc)] = true;
        }
    }
    return {b.build(), std::move(replaced), live};
}

}  // namespace specnip
