#include "specnip/poison.hpp"

#include <algorithm>
#include <stdexcept>

#include "overloaded.hpp"

namespace specnip {

using detail::overloaded;

Poison join(Poison a, Poison b) {
    if (a == b || b == Poison::bot) return a;
    if (a == Poison::bot) return b;
    return Poison::P;
}

bool leq(Poison a, Poison b) { return join(a, b) == b; }

char to_char(Poison v) {
    switch (v) {
        case Poison::bot: return '_';
        case Poison::H: return 'H';
        case Poison::W: return 'W';
        case Poison::P: return 'P';
    }
    return '?';
}

PoisonType PoisonType::join(const PoisonType& o) const {
    PoisonType out = *this;
    for (std::size_t k = 0; k < regs.size(); ++k) out.regs[k] = specnip::join(regs[k], o.regs[k]);
    for (std::size_t k = 0; k < cells.size(); ++k)
        out.cells[k] = specnip::join(cells[k], o.cells[k]);
    return out;
}

bool PoisonType::leq(const PoisonType& o) const {
    for (std::size_t k = 0; k < regs.size(); ++k)
        if (!specnip::leq(regs[k], o.regs[k])) return false;
    for (std::size_t k = 0; k < cells.size(); ++k)
        if (!specnip::leq(cells[k], o.cells[k])) return false;
    return true;
}

bool PoisonType::all_bottom() const {
    auto bot = [](Poison v) { return v == Poison::bot; };
    return std::all_of(regs.begin(), regs.end(), bot) && std::all_of(cells.begin(), cells.end(), bot);
}

PoisonType uniform_poison(const Program& source, Poison v) {
    return {std::vector<Poison>(source.reg_count(), v), std::vector<Poison>(source.cell_count(), v)};
}

namespace {

std::vector<std::optional<PcId>> inverse_phi(const RAWitness& w) {
    std::vector<std::optional<PcId>> inv(w.target.pc_count());
    for (std::size_t s = 0; s < w.phi.size(); ++s) inv[idx(w.phi[s])] = PcId(s);
    return inv;
}

// Source pc paired with each target pc: the matched pc, or the one ending the shuffle sequence.
std::vector<std::optional<PcId>> product_sources(const RAWitness& w,
                                                 const std::vector<std::optional<PcId>>& inv) {
    std::vector<std::optional<PcId>> out(w.target.pc_count());
    for (PcId t : w.target.pcs()) {
        PcId cur = t;
        for (std::size_t guard = 0; guard <= w.target.pc_count(); ++guard) {
            if (inv[idx(cur)]) {
                out[idx(t)] = inv[idx(cur)];
                break;
            }
            if (!is_shuffle(w.target.at(cur))) break;
            auto s = successors(w.target.at(cur));
            if (s.size() != 1) break;
            cur = s[0];
        }
    }
    return out;
}

Value read_loc(const Program& t, const State& s, const Location& l) {
    if (auto r = std::get_if<RegId>(&l)) return s.regs[idx(*r)];
    return s.mem[t.cell(*t.stack_var(), std::get<Slot>(l).n)];
}

}  // namespace

PoisonProduct::PoisonProduct(RAWitness w) : w_(std::move(w)) {
    live_ = ra_liveness(w_.source);
    tlive_ = specnip::target_live(w_, live_);
    inv_ = inverse_phi(w_);
    for (const MemVar& v : w_.target.vars()) src_var_of_tgt_.push_back(w_.source.find_var(v.name));
}

ProductState PoisonProduct::initial(const State& tgt_init) const {
    return {single(source_initial(w_, tgt_init)), single(tgt_init),
            {uniform_poison(w_.source, Poison::H)}};
}

bool PoisonProduct::related(const ProductState& s) const {
    if (s.src.depth() != s.tgt.depth() || s.pi.size() != s.src.depth()) return false;
    const Program& P = w_.source;
    const Program& T = w_.target;
    for (std::size_t k = 0; k < s.pi.size(); ++k) {
        const State& a = s.src.frames[k];
        const State& b = s.tgt.frames[k];
        const PoisonType& pi = s.pi[k];
        const Relocation& rho = w_.rho_at(b.pc);
        for (std::size_t r = 0; r < P.reg_count(); ++r) {
            if (!tlive_[idx(b.pc)][r] || !rho[r]) continue;
            const Value tv = read_loc(T, b, *rho[r]);
            if (pi.regs[r] == Poison::H && tv != a.regs[r]) return false;
            if (pi.regs[r] == Poison::W && tv != 0) return false;
        }
        for (std::size_t c = 0; c < P.cell_count(); ++c) {
            auto [v, o] = P.cell_at(c);
            const Value tv = b.mem[T.cell(*T.find_var(P.var(v).name), o)];
            if (pi.cells[c] == Poison::H && tv != a.mem[c]) return false;
            if (pi.cells[c] == Poison::W && tv != 0) return false;
        }
    }
    return true;
}

std::vector<ProductTransition> PoisonProduct::transitions(const ProductState& s) const {
    std::vector<ProductTransition> out;
    for (const Directive& d : enabled_directives(w_.target, s.tgt))
        if (auto t = replay(s, d)) out.push_back(std::move(*t));
    return out;
}

std::optional<ProductTransition> PoisonProduct::replay(const ProductState& s, const Directive& d,
                                                       bool unguarded) const {
    if (d.kind == DirKind::rollback) {
        if (!s.tgt.speculating() || !s.src.speculating()) return std::nullopt;
        ProductTransition t;
        t.src_dir = d;
        t.src_leak = t.tgt_leak = Leakage::rollback();
        t.tgt_dir = d;
        t.rule = "poison-rollback";
        t.after = s;
        t.after.src.frames.pop_back();
        t.after.tgt.frames.pop_back();
        t.after.pi.pop_back();
        return t;
    }
    if (inv_[idx(s.tgt.top().pc)]) return matched(s, d, unguarded);
    return shuffling(s, d);
}

std::optional<ProductTransition> PoisonProduct::shuffling(const ProductState& s,
                                                          const Directive& d) const {
    const PcId tpc = s.tgt.top().pc;
    const Instr& i = w_.target.at(tpc);
    if (!is_shuffle(i)) return std::nullopt;
    auto step = step_spec(w_.target, s.tgt, d);
    if (!step) return std::nullopt;
    ProductTransition t;
    t.tgt_dir = d;
    t.tgt_leak = step->second;
    t.after = {s.src, std::move(step->first), s.pi};
    t.rule = std::visit(overloaded{
                            [](const ins::Move&) { return "poison-move"; },
                            [](const ins::Fill&) { return "poison-fill"; },
                            [](const ins::Spill&) { return "poison-spill"; },
                            [](const ins::Sfence&) { return "poison-shuffle-sfence"; },
                            [](const auto&) { return "poison-shuffle-slh"; },
                        },
                        i);
    if (auto x = std::get_if<ins::Slh>(&i); x && s.tgt.speculating()) {
        const Relocation& rho = w_.rho_at(tpc);
        PoisonType& pi = t.after.pi.back();
        for (std::size_t r = 0; r < rho.size(); ++r)
            if (rho[r] == std::optional<Location>(Location(x->reg))) pi.regs[r] = Poison::W;
    }
    return t;
}

std::optional<ProductTransition> PoisonProduct::matched(const ProductState& s, const Directive& d,
                                                        bool unguarded) const {
    const Program& P = w_.source;
    const Program& T = w_.target;
    const PcId spc = s.src.top().pc;
    if (inv_[idx(s.tgt.top().pc)] != spc) return std::nullopt;
    const State& src = s.src.top();
    PoisonType pi = s.pi.back();
    Directive sd = d;
    std::string rule;
    bool guarded = true;

    // Source variable named like target variable v; nullopt for stk.
    auto src_var = [&](VarId v) { return src_var_of_tgt_[idx(v)]; };
    auto reg_addr = [&](const Address& a) { return std::get_if<RegId>(&a); };
    auto stuck = [&]() -> bool {
        if (!unguarded) return true;
        guarded = false;
        return false;
    };
    // Unguarded memory replay: same access where possible, canonical otherwise.
    auto unguarded_access = [&](VarId var, Value addr, DirKind k) {
        if (addr < P.var(var).size) return Directive::step();
        if (d.kind == k)
            if (auto v = src_var(d.var)) return Directive{k, *v, d.offset};
        return Directive{k, var, 0};
    };

    const bool ok = std::visit(
        overloaded{
            [&](const ins::Exit&) { return false; },
            [&](const ins::Nop&) {
                rule = "poison-nop";
                return true;
            },
            [&](const ins::Sfence&) {
                rule = "poison-sfence";
                return true;
            },
            [&](const ins::Asgn& x) {
                rule = "poison-asgn";
                const bool h = pi.regs[idx(x.lhs)] == Poison::H && pi.regs[idx(x.rhs)] == Poison::H;
                pi.regs[idx(x.dst)] = h ? Poison::H : Poison::P;
                return true;
            },
            [&](const ins::Move& x) {
                rule = "poison-move-matched";
                pi.regs[idx(x.dst)] = pi.regs[idx(x.src)];
                return true;
            },
            [&](const ins::Slh& x) {
                rule = "poison-slh";
                if (s.src.speculating()) pi.regs[idx(x.reg)] = Poison::H;
                return true;
            },
            [&](const ins::If& x) {
                rule = d.kind == DirKind::spec ? "healthy-spec" : "healthy-branch";
                if (pi.regs[idx(x.cond)] != Poison::H) {
                    if (stuck()) return false;
                    pi = uniform_poison(P, Poison::P);
                }
                return true;
            },
            [&](const ins::Load& x) {
                const RegId* b = reg_addr(x.addr);
                if (!b) {
                    rule = "healthy-load-safe";
                    pi.regs[idx(x.dst)] = pi.cells[P.cell(x.var, std::get<Value>(x.addr))];
                    return true;
                }
                const Value a = src.regs[idx(*b)];
                switch (pi.regs[idx(*b)]) {
                    case Poison::H:
                        if (d.kind == DirKind::step) {
                            rule = "healthy-load-safe";
                            pi.regs[idx(x.dst)] = pi.cells[P.cell(x.var, a)];
                        } else if (auto v = src_var(d.var)) {
                            rule = "healthy-load-unsafe";
                            sd = Directive::load(*v, d.offset);
                            pi.regs[idx(x.dst)] = pi.cells[P.cell(*v, d.offset)];
                        } else {
                            rule = "poison-load-stkunsafe";
                            sd = Directive::load(x.var, 0);
                            pi.regs[idx(x.dst)] = Poison::P;
                        }
                        return true;
                    case Poison::W:
                        sd = a < P.var(x.var).size ? Directive::step() : Directive::load(x.var, 0);
                        rule = sd.kind == DirKind::step ? "poison-load-safe" : "poison-load-unsafe";
                        pi.regs[idx(x.dst)] = Poison::P;
                        return true;
                    default:
                        if (stuck()) return false;
                        rule = "unguarded-load";
                        sd = unguarded_access(x.var, a, DirKind::load);
                        pi = uniform_poison(P, Poison::P);
                        return true;
                }
            },
            [&](const ins::Store& x) {
                const Poison pc = pi.regs[idx(x.src)];
                const RegId* b = reg_addr(x.addr);
                if (!b) {
                    rule = "healthy-store-safe";
                    pi.cells[P.cell(x.var, std::get<Value>(x.addr))] = pc;
                    return true;
                }
                const Value a = src.regs[idx(*b)];
                switch (pi.regs[idx(*b)]) {
                    case Poison::H:
                        if (d.kind == DirKind::step) {
                            rule = "healthy-store-safe";
                            pi.cells[P.cell(x.var, a)] = pc;
                        } else if (auto v = src_var(d.var)) {
                            rule = "healthy-store-unsafe";
                            sd = Directive::store(*v, d.offset);
                            pi.cells[P.cell(*v, d.offset)] = pc;
                        } else {
                            rule = "poison-store-stkunsafe";
                            sd = Directive::store(x.var, 0);
                            pi.cells[P.cell(x.var, 0)] = Poison::P;
                            // Registers spilled to the overwritten slot, per ρ after the store.
                            auto next = step_spec(T, s.tgt, d);
                            if (!next) return false;
                            const Relocation& rho = w_.rho_at(next->first.top().pc);
                            for (std::size_t r = 0; r < rho.size(); ++r)
                                if (rho[r] == std::optional<Location>(Location(Slot{d.offset})))
                                    pi.regs[r] = Poison::P;
                        }
                        return true;
                    case Poison::W:
                        if (a < P.var(x.var).size) {
                            rule = "poison-store-safe";
                            sd = Directive::step();
                            pi.cells[P.cell(x.var, a)] = Poison::P;
                            pi.cells[P.cell(x.var, 0)] = Poison::P;
                        } else {
                            rule = "poison-store-unsafe";
                            sd = Directive::store(x.var, 0);
                            pi.cells[P.cell(x.var, 0)] = pc;
                        }
                        return true;
                    default:
                        if (stuck()) return false;
                        rule = "unguarded-store";
                        sd = unguarded_access(x.var, a, DirKind::store);
                        pi = uniform_poison(P, Poison::P);
                        return true;
                }
            },
            [&](const auto&) { return false; },
        },
        P.at(spc));
    if (!ok) return std::nullopt;

    auto ts = step_spec(T, s.tgt, d);
    auto ss = step_spec(P, s.src, sd);
    if (!ts || !ss) return std::nullopt;
    ProductTransition t;
    t.src_dir = sd;
    t.src_leak = ss->second;
    t.tgt_dir = d;
    t.tgt_leak = ts->second;
    t.rule = guarded ? rule : "unguarded";
    t.guarded = guarded;
    t.after = {std::move(ss->first), std::move(ts->first), s.pi};
    t.after.pi.back() = pi;
    if (d.kind == DirKind::spec) t.after.pi.push_back(pi);
    return t;
}

// ---------------------------------------------------------------------------------------------
// Static analysis

namespace {

PoisonType transfer(const RAWitness& w, PcId t, bool matched, const PoisonType& in) {
    if (in.all_bottom()) return in;
    const Program& P = w.source;
    PoisonType pi = in;
    auto healthy = [&] { return uniform_poison(P, Poison::H); };
    if (!matched) {
        const Instr& i = w.target.at(t);
        if (std::holds_alternative<ins::Sfence>(i)) return healthy();
        if (auto x = std::get_if<ins::Slh>(&i)) {
            const Relocation& rho = w.rho_at(t);
            for (std::size_t r = 0; r < rho.size(); ++r)
                if (rho[r] == std::optional<Location>(Location(x->reg))) pi.regs[r] = Poison::W;
        }
        return pi;
    }
    auto le_h = [](Poison v) { return leq(v, Poison::H); };
    const PcId s = *w.matched_source(t);
    return std::visit(
        overloaded{
            [&](const ins::Sfence&) { return healthy(); },
            [&](const ins::Asgn& x) {
                pi.regs[idx(x.dst)] =
                    le_h(pi.regs[idx(x.lhs)]) && le_h(pi.regs[idx(x.rhs)]) ? Poison::H : Poison::P;
                return pi;
            },
            [&](const ins::Move& x) {
                pi.regs[idx(x.dst)] = pi.regs[idx(x.src)];
                return pi;
            },
            [&](const ins::Slh& x) {
                pi.regs[idx(x.reg)] = Poison::H;
                return pi;
            },
            [&](const ins::If& x) {
                return le_h(pi.regs[idx(x.cond)]) ? pi : uniform_poison(P, Poison::P);
            },
            [&](const ins::Load& x) {
                if (auto c = std::get_if<Value>(&x.addr))
                    pi.regs[idx(x.dst)] = pi.cells[P.cell(x.var, *c)];
                else
                    pi.regs[idx(x.dst)] = Poison::P;
                return pi;
            },
            [&](const ins::Store& x) {
                const Poison c = pi.regs[idx(x.src)];
                if (auto a = std::get_if<Value>(&x.addr)) {
                    const std::size_t cell = P.cell(x.var, *a);
                    pi.cells[cell] = join(pi.cells[cell], c);
                    return pi;
                }
                for (auto& v : pi.cells) v = join(v, c);
                for (auto& v : pi.regs) v = Poison::P;
                for (Value o = 0; o < P.var(x.var).size; ++o) pi.cells[P.cell(x.var, o)] = Poison::P;
                return pi;
            },
            [&](const auto&) { return pi; },
        },
        P.at(s));
}

}  // namespace

StaticPoison poison_analysis(const RAWitness& w) {
    const auto inv = inverse_phi(w);
    StaticPoison out;
    out.source_of = product_sources(w, inv);
    FlowProblem<PoisonType> prob;
    prob.nodes = w.target.pc_count();
    prob.direction = Direction::forward;
    for (PcId t : w.target.pcs())
        for (PcId n : successors(w.target.at(t))) prob.edges.emplace_back(idx(t), idx(n));
    prob.transfer = [&](std::size_t n, const PoisonType& in) {
        return transfer(w, PcId(n), inv[n].has_value(), in);
    };
    prob.bottom = uniform_poison(w.source, Poison::bot);
    prob.init = uniform_poison(w.source, Poison::H);
    prob.init_nodes = {idx(w.target.entry())};
    prob.height = 2 * (w.source.reg_count() + w.source.cell_count());
    auto sol = solve(prob);
    out.values = std::move(sol.values);
    out.iterations = sol.iterations;
    return out;
}

std::string_view to_string(TypabilityViolation::Kind k) {
    return k == TypabilityViolation::Kind::address ? "address" : "branch";
}

std::vector<TypabilityViolation> check_poison_typable(const RAWitness& w, const StaticPoison& pi) {
    using K = TypabilityViolation::Kind;
    std::vector<TypabilityViolation> out;
    for (PcId s : w.source.pcs()) {
        const PcId t = w.phi[idx(s)];
        const PoisonType& v = pi.values[idx(t)];
        const Instr& i = w.source.at(s);
        auto check = [&](RegId r, K k) {
            const Poison p = v.regs[idx(r)];
            const bool fine = k == K::branch ? leq(p, Poison::H) : p != Poison::P;
            if (!fine) out.push_back({k, s, t, r, p});
        };
        if (auto x = std::get_if<ins::Load>(&i))
            if (auto b = std::get_if<RegId>(&x->addr)) check(*b, K::address);
        if (auto x = std::get_if<ins::Store>(&i))
            if (auto b = std::get_if<RegId>(&x->addr)) check(*b, K::address);
        if (auto x = std::get_if<ins::If>(&i)) check(x->cond, K::branch);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::pair(idx(a.target_pc), idx(a.reg)) < std::pair(idx(b.target_pc), idx(b.reg));
    });
    return out;
}

std::pair<RAWitness, FixReport> fix_ra(const RAWitness& w0) {
    RAWitness w = w0;
    FixReport rep;
    const std::size_t cap = w0.target.pc_count() * w0.source.reg_count() + 1;
    const Liveness live = ra_liveness(w.source);
    if (!validate_ra(w, live).empty()) throw std::invalid_argument("witness does not validate");
    for (;;) {
        auto viol = check_poison_typable(w, poison_analysis(w));
        if (viol.empty()) {
            rep.typable = true;
            break;
        }
        if (rep.iterations == cap) {
            rep.cap_exceeded = true;
            break;
        }
        ++rep.iterations;
        const TypabilityViolation& v = viol.front();
        const PcId at = v.target_pc;
        const Relocation rho = w.rho_at(at);
        Instr fix = ins::Sfence{at};
        std::string kind = "sfence";
        if (v.kind == TypabilityViolation::Kind::address)
            if (auto r = std::get_if<RegId>(&*rho[idx(v.reg)])) {
                fix = ins::Slh{*r, at};
                kind = "slh";
            }
        ProgramBuilder b(w.target);
        std::string label;
        for (unsigned k = 1;; ++k) {
            label = w.target.label(at) + "_fix" + std::to_string(k);
            if (!b.has_label(label)) break;
        }
        const PcId n = b.label(label);
        b.set(n, fix);
        for (PcId q : w.target.pcs()) {
            Instr i = w.target.at(q);
            auto ss = successors(i);
            bool changed = false;
            for (std::size_t k = 0; k < ss.size(); ++k)
                if (ss[k] == at) {
                    i = with_successor(i, k, n);
                    changed = true;
                }
            if (changed) b.replace(q, i);
        }
        w.target = b.build();
        w.rho.push_back(rho);
        rep.inserted.push_back({label, w.target.label(at), kind, w.source.reg_name(v.reg)});
        if (auto d = validate_ra(w, live); !d.empty())
            throw std::logic_error("fix produced an invalid witness: " + d.front().message);
    }
    return {std::move(w), std::move(rep)};
}

}  // namespace specnip
