#include "specnip/semantics.hpp"

#include <algorithm>

#include "overloaded.hpp"

namespace specnip {

using detail::overloaded;

State initial_state(const Program& p) {
    return State{p.entry(), std::vector<Value>(p.reg_count(), 0),
                 std::vector<Value>(p.cell_count(), 0)};
}

SpecState single(State s) { return SpecState{{std::move(s)}}; }

bool is_final(const Program& p, const SpecState& v) {
    return v.depth() == 1 && std::holds_alternative<ins::Exit>(p.at(v.top().pc));
}

namespace {

Value address_value(const State& s, const Address& a) {
    if (auto c = std::get_if<Value>(&a)) return *c;
    return s.regs[idx(std::get<RegId>(a))];
}

bool valid_cell(const Program& p, const Directive& d) {
    return idx(d.var) < p.vars().size() && d.offset < p.var(d.var).size;
}

}  // namespace

std::optional<std::pair<State, Leakage>> step_spec_free(const Program& p, const State& s,
                                                        const Directive& d) {
    using R = std::optional<std::pair<State, Leakage>>;
    const Instr& i = p.at(s.pc);
    const bool step = d.kind == DirKind::step;
    auto next = [&](PcId pc) {
        State t = s;
        t.pc = pc;
        return t;
    };
    return std::visit(
        overloaded{
            [&](const ins::Exit&) -> R { return std::nullopt; },
            [&](const ins::Nop& x) -> R {
                if (!step) return std::nullopt;
                return std::pair{next(x.next), Leakage::none()};
            },
            [&](const ins::Asgn& x) -> R {
                if (!step) return std::nullopt;
                State t = next(x.next);
                t.regs[idx(x.dst)] =
                    apply(x.op, s.regs[idx(x.lhs)], s.regs[idx(x.rhs)], p.width());
                return std::pair{std::move(t), Leakage::none()};
            },
            [&](const ins::If& x) -> R {
                if (d.kind != DirKind::branch) return std::nullopt;
                const bool b = s.regs[idx(x.cond)] == 0;
                return std::pair{next(b ? x.on_true : x.on_false), Leakage::branch(b)};
            },
            [&](const ins::Load& x) -> R {
                const Value n = address_value(s, x.addr);
                State t = next(x.next);
                if (n < p.var(x.var).size) {
                    if (!step) return std::nullopt;
                    t.regs[idx(x.dst)] = s.mem[p.cell(x.var, n)];
                } else {
                    if (d.kind != DirKind::load || !valid_cell(p, d)) return std::nullopt;
                    t.regs[idx(x.dst)] = s.mem[p.cell(d.var, d.offset)];
                }
                return std::pair{std::move(t), Leakage::load(n)};
            },
            [&](const ins::Store& x) -> R {
                const Value n = address_value(s, x.addr);
                State t = next(x.next);
                const Value v = s.regs[idx(x.src)];
                if (n < p.var(x.var).size) {
                    if (!step) return std::nullopt;
                    t.mem[p.cell(x.var, n)] = v;
                } else {
                    if (d.kind != DirKind::store || !valid_cell(p, d)) return std::nullopt;
                    t.mem[p.cell(d.var, d.offset)] = v;
                }
                return std::pair{std::move(t), Leakage::store(n)};
            },
            // Outside a speculation these behave as at depth one.
            [&](const ins::Sfence& x) -> R {
                if (!step) return std::nullopt;
                return std::pair{next(x.next), Leakage::none()};
            },
            [&](const ins::Slh& x) -> R {
                if (!step) return std::nullopt;
                return std::pair{next(x.next), Leakage::none()};
            },
            [&](const ins::Move& x) -> R {
                if (!step) return std::nullopt;
                State t = next(x.next);
                t.regs[idx(x.dst)] = s.regs[idx(x.src)];
                return std::pair{std::move(t), Leakage::none()};
            },
            [&](const ins::Fill& x) -> R {
                if (!step) return std::nullopt;
                State t = next(x.next);
                t.regs[idx(x.dst)] = s.mem[p.cell(*p.stack_var(), x.slot)];
                return std::pair{std::move(t), Leakage::load(x.slot)};
            },
            [&](const ins::Spill& x) -> R {
                if (!step) return std::nullopt;
                State t = next(x.next);
                t.mem[p.cell(*p.stack_var(), x.slot)] = s.regs[idx(x.src)];
                return std::pair{std::move(t), Leakage::store(x.slot)};
            },
        },
        i);
}

std::optional<std::pair<SpecState, Leakage>> step_spec(const Program& p, const SpecState& v,
                                                       const Directive& d) {
    if (v.frames.empty()) return std::nullopt;
    if (d.kind == DirKind::rollback) {
        if (!v.speculating()) return std::nullopt;
        SpecState w = v;
        w.frames.pop_back();
        return std::pair{std::move(w), Leakage::rollback()};
    }
    const State& top = v.top();
    const Instr& i = p.at(top.pc);
    if (d.kind == DirKind::spec) {
        auto x = std::get_if<ins::If>(&i);
        if (!x) return std::nullopt;
        const bool b = top.regs[idx(x->cond)] == 0;
        SpecState w = v;
        State wrong = top;
        wrong.pc = b ? x->on_false : x->on_true;
        w.frames.push_back(std::move(wrong));
        return std::pair{std::move(w), Leakage::branch(!b)};
    }
    if (auto x = std::get_if<ins::Sfence>(&i)) {
        if (d.kind != DirKind::step || v.speculating()) return std::nullopt;
        SpecState w = v;
        w.top().pc = x->next;
        return std::pair{std::move(w), Leakage::none()};
    }
    if (auto x = std::get_if<ins::Slh>(&i)) {
        if (d.kind != DirKind::step) return std::nullopt;
        SpecState w = v;
        if (v.speculating()) w.top().regs[idx(x->reg)] = 0;
        w.top().pc = x->next;
        return std::pair{std::move(w), Leakage::none()};
    }
    auto r = step_spec_free(p, top, d);
    if (!r) return std::nullopt;
    SpecState w = v;
    w.top() = std::move(r->first);
    return std::pair{std::move(w), r->second};
}

std::vector<Directive> directive_universe(const Program& p) {
    std::vector<Directive> out{Directive::step(), Directive::branch(), Directive::spec(),
                               Directive::rollback()};
    for (std::size_t v = 0; v < p.vars().size(); ++v)
        for (Value o = 0; o < p.vars()[v].size; ++o) out.push_back(Directive::load(VarId(v), o));
    for (std::size_t v = 0; v < p.vars().size(); ++v)
        for (Value o = 0; o < p.vars()[v].size; ++o) out.push_back(Directive::store(VarId(v), o));
    return out;
}

std::vector<Directive> enabled_directives(const Program& p, const SpecState& v) {
    std::vector<Directive> out;
    if (v.speculating()) out.push_back(Directive::rollback());
    const State& top = v.top();
    const Instr& i = p.at(top.pc);
    auto all_cells = [&](DirKind k) {
        for (std::size_t var = 0; var < p.vars().size(); ++var)
            for (Value o = 0; o < p.vars()[var].size; ++o)
                out.push_back(Directive{k, VarId(var), o});
    };
    std::visit(overloaded{
                   [](const ins::Exit&) {},
                   [&](const ins::If&) {
                       out.push_back(Directive::branch());
                       out.push_back(Directive::spec());
                   },
                   [&](const ins::Sfence&) {
                       if (!v.speculating()) out.push_back(Directive::step());
                   },
                   [&](const ins::Load& x) {
                       const Value n = address_value(top, x.addr);
                       if (n < p.var(x.var).size)
                           out.push_back(Directive::step());
                       else
                           all_cells(DirKind::load);
                   },
                   [&](const ins::Store& x) {
                       const Value n = address_value(top, x.addr);
                       if (n < p.var(x.var).size)
                           out.push_back(Directive::step());
                       else
                           all_cells(DirKind::store);
                   },
                   [&](const auto&) { out.push_back(Directive::step()); },
               },
               i);
    std::sort(out.begin(), out.end());
    return out;
}

Trace Execution::trace() const {
    Trace t;
    for (const auto& s : steps) {
        t.leaks.push_back(s.leak);
        t.directives.push_back(s.directive);
    }
    return t;
}

Execution run_directives(const Program& p, const SpecState& v0, std::span<const Directive> ds) {
    Execution e;
    e.initial = v0;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        auto r = step_spec(p, e.last(), ds[k]);
        if (!r) {
            e.status = Execution::Status::stuck;
            e.stuck_index = k;
            return e;
        }
        e.steps.push_back({ds[k], r->second, std::move(r->first)});
    }
    e.status = is_final(p, e.last()) ? Execution::Status::final : Execution::Status::completed;
    return e;
}

namespace {

void explore(const Program& p, const SpecState& v, const Bounds& b, Trace& prefix,
             BehaviorSet& out) {
    if (is_final(p, v)) {
        out.terminated.insert(prefix);
        return;
    }
    if (prefix.directives.size() >= b.max_steps) {
        out.truncated.insert(prefix);
        return;
    }
    bool pruned = false;
    for (const Directive& d : enabled_directives(p, v)) {
        if (d.kind == DirKind::spec && v.depth() >= b.max_depth) {
            pruned = true;
            continue;
        }
        auto r = step_spec(p, v, d);
        prefix.leaks.push_back(r->second);
        prefix.directives.push_back(d);
        explore(p, r->first, b, prefix, out);
        prefix.leaks.pop_back();
        prefix.directives.pop_back();
    }
    if (pruned) out.truncated.insert(prefix);
}

}  // namespace

BehaviorSet explore_behaviors(const Program& p, const SpecState& v0, const Bounds& b) {
    BehaviorSet out;
    Trace prefix;
    explore(p, v0, b, prefix, out);
    return out;
}

bool same_point(const SpecState& a, const SpecState& b) {
    if (a.depth() != b.depth()) return false;
    for (std::size_t k = 0; k < a.depth(); ++k)
        if (a.frames[k].pc != b.frames[k].pc) return false;
    return true;
}

}  // namespace specnip
