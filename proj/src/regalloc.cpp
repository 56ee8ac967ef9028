#include "specnip/regalloc.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "lexer.hpp"
#include "overloaded.hpp"

namespace specnip {

using detail::overloaded;

std::optional<PcId> RAWitness::matched_source(PcId tgt) const {
    for (std::size_t s = 0; s < phi.size(); ++s)
        if (phi[s] == tgt) return PcId(s);
    return std::nullopt;
}

std::string_view to_string(RADiagnostic::Kind k) {
    switch (k) {
        case RADiagnostic::Kind::instruction_matching: return "instruction-matching";
        case RADiagnostic::Kind::shuffle_conformity: return "shuffle-conformity";
        case RADiagnostic::Kind::obeying_liveness: return "obeying-liveness";
    }
    return "?";
}

Liveness ra_liveness(const Program& source) {
    return liveness(source, mems_live(source), DeadDefs::use_operands);
}

std::string format_location(const Program& target, const std::optional<Location>& l) {
    if (!l) return "_";
    if (auto r = std::get_if<RegId>(&*l)) return target.reg_name(*r);
    return std::string(stack_var_name) + "#" + std::to_string(std::get<Slot>(*l).n);
}

namespace {

using Kind = RADiagnostic::Kind;

std::optional<PcId> single_successor(const Instr& i) {
    auto s = successors(i);
    if (s.size() == 1) return s[0];
    return std::nullopt;
}

// Follows non-matched target pcs until the image of a source pc; nullopt on a cycle or a
// non-shuffle pc.
std::optional<PcId> chain_end(const RAWitness& w, const std::vector<std::optional<PcId>>& inv,
                              PcId start) {
    PcId cur = start;
    for (std::size_t guard = 0; guard <= w.target.pc_count(); ++guard) {
        if (inv[idx(cur)]) return *inv[idx(cur)];
        if (!w.target.defined(cur) || !is_shuffle(w.target.at(cur))) return std::nullopt;
        auto n = single_successor(w.target.at(cur));
        if (!n) return std::nullopt;
        cur = *n;
    }
    return std::nullopt;
}

std::vector<std::optional<PcId>> phi_inverse(const RAWitness& w) {
    std::vector<std::optional<PcId>> inv(w.target.pc_count());
    for (std::size_t s = 0; s < w.phi.size(); ++s)
        if (idx(w.phi[s]) < inv.size() && !inv[idx(w.phi[s])]) inv[idx(w.phi[s])] = PcId(s);
    return inv;
}

struct Checker {
    const RAWitness& w;
    const Liveness& live;
    std::vector<std::optional<PcId>> inv;
    std::vector<std::vector<bool>> tlive;
    std::vector<RADiagnostic> out;

    void diag(Kind k, PcId tpc, std::string msg) {
        out.push_back({k, w.target.label(tpc), std::move(msg)});
    }
    const std::string& sreg(RegId r) const { return w.source.reg_name(r); }
    std::string loc(const std::optional<Location>& l) const { return format_location(w.target, l); }

    bool at_reg(const Relocation& rho, RegId src, RegId tgt) const {
        return rho[idx(src)] == std::optional<Location>(Location(tgt));
    }

    void structure() {
        std::set<PcId> seen;
        for (std::size_t s = 0; s < w.phi.size(); ++s) {
            const PcId t = w.phi[s];
            if (!seen.insert(t).second)
                diag(Kind::instruction_matching, t, "phi is not injective");
        }
        if (w.phi[idx(w.source.entry())] != w.target.entry())
            diag(Kind::instruction_matching, w.target.entry(),
                 "target entry is not the image of the source entry");
        for (PcId t : w.target.pcs())
            if (!inv[idx(t)] && !is_shuffle(w.target.at(t)))
                diag(Kind::instruction_matching, t,
                     "unmatched pc holds " + std::string(kind_name(w.target.at(t))) +
                         ", not a shuffle instruction");
    }

    void use(PcId tpc, const Relocation& rho, RegId s, RegId t) {
        if (!at_reg(rho, s, t))
            diag(Kind::instruction_matching, tpc,
                 "use of " + sreg(s) + " reads " + w.target.reg_name(t) + " but rho maps it to " +
                     loc(rho[idx(s)]));
    }

    // dst may stay unmapped after the definition when it is dead, as long as the written
    // register does not hold a live value there.
    void def(PcId spc, PcId tpc, PcId succ, RegId s, RegId t) {
        const Relocation& rho = w.rho_at(succ);
        if (at_reg(rho, s, t)) return;
        if (!live[idx(spc)].reg(s) && !rho[idx(s)]) {
            for (std::size_t r = 0; r < rho.size(); ++r)
                if (tlive[idx(succ)][r] && rho[r] == std::optional<Location>(Location(t))) {
                    diag(Kind::instruction_matching, tpc,
                         "dead definition of " + sreg(s) + " clobbers live " + sreg(RegId(r)));
                    return;
                }
            return;
        }
        diag(Kind::instruction_matching, tpc,
             "definition of " + sreg(s) + " writes " + w.target.reg_name(t) +
                 " but rho at successor maps it to " + loc(rho[idx(s)]));
    }

    bool same_addr(const Relocation& rho, const Address& a, const Address& b) const {
        if (a.index() != b.index()) return false;
        if (auto c = std::get_if<Value>(&a)) return *c == std::get<Value>(b);
        return at_reg(rho, std::get<RegId>(a), std::get<RegId>(b));
    }

    void matched(PcId spc) {
        const PcId tpc = w.phi[idx(spc)];
        const Instr& i = w.source.at(spc);
        const Instr& t = w.target.at(tpc);
        if (i.index() != t.index()) {
            diag(Kind::instruction_matching, tpc,
                 "source " + std::string(kind_name(i)) + " matched with " +
                     std::string(kind_name(t)));
            return;
        }
        const Relocation& rho = w.rho_at(tpc);
        auto ss = successors(i);
        auto ts = successors(t);
        for (std::size_t k = 0; k < ss.size(); ++k) {
            auto end = chain_end(w, inv, ts[k]);
            if (!end || *end != ss[k])
                diag(Kind::instruction_matching, tpc,
                     "successor " + std::to_string(k) + " does not reach the image of " +
                         w.source.label(ss[k]));
        }
        auto var_same = [&](VarId a, VarId b) {
            if (w.source.var(a).name != w.target.var(b).name)
                diag(Kind::instruction_matching, tpc, "memory variables differ");
        };
        auto addr = [&](const Address& a, const Address& b) {
            if (!same_addr(rho, a, b))
                diag(Kind::instruction_matching, tpc, "addresses differ up to relocation");
        };
        std::visit(overloaded{
                       [&](const ins::Asgn& x) {
                           auto& y = std::get<ins::Asgn>(t);
                           if (x.op != y.op)
                               diag(Kind::instruction_matching, tpc, "operators differ");
                           use(tpc, rho, x.lhs, y.lhs);
                           use(tpc, rho, x.rhs, y.rhs);
                           def(spc, tpc, y.next, x.dst, y.dst);
                       },
                       [&](const ins::Load& x) {
                           auto& y = std::get<ins::Load>(t);
                           var_same(x.var, y.var);
                           addr(x.addr, y.addr);
                           def(spc, tpc, y.next, x.dst, y.dst);
                       },
                       [&](const ins::Store& x) {
                           auto& y = std::get<ins::Store>(t);
                           var_same(x.var, y.var);
                           addr(x.addr, y.addr);
                           use(tpc, rho, x.src, y.src);
                       },
                       [&](const ins::If& x) { use(tpc, rho, x.cond, std::get<ins::If>(t).cond); },
                       [&](const ins::Slh& x) {
                           auto& y = std::get<ins::Slh>(t);
                           use(tpc, rho, x.reg, y.reg);
                           def(spc, tpc, y.next, x.reg, y.reg);
                       },
                       [&](const ins::Move& x) {
                           auto& y = std::get<ins::Move>(t);
                           use(tpc, rho, x.src, y.src);
                           def(spc, tpc, y.next, x.dst, y.dst);
                       },
                       [&](const ins::Fill& x) {
                           auto& y = std::get<ins::Fill>(t);
                           if (x.slot != y.slot)
                               diag(Kind::instruction_matching, tpc, "slots differ");
                           def(spc, tpc, y.next, x.dst, y.dst);
                       },
                       [&](const ins::Spill& x) {
                           auto& y = std::get<ins::Spill>(t);
                           if (x.slot != y.slot)
                               diag(Kind::instruction_matching, tpc, "slots differ");
                           use(tpc, rho, x.src, y.src);
                       },
                       [](const auto&) {},
                   },
                   i);
    }

    // Locations read and written by a target instruction.
    std::pair<std::vector<Location>, std::vector<Location>> touched(const Instr& t) const {
        auto ud = uses_defs(t);
        std::vector<Location> u(ud.uses.begin(), ud.uses.end());
        std::vector<Location> d(ud.defs.begin(), ud.defs.end());
        if (auto f = std::get_if<ins::Fill>(&t)) u.push_back(Slot{f->slot});
        if (auto s = std::get_if<ins::Spill>(&t)) d.push_back(Slot{s->slot});
        return {u, d};
    }

    bool free_at(PcId tpc, const Location& l) const {
        const Relocation& rho = w.rho_at(tpc);
        for (std::size_t r = 0; r < rho.size(); ++r)
            if (tlive[idx(tpc)][r] && rho[r] == std::optional<Location>(l)) return false;
        return true;
    }

    void frame(PcId tpc, PcId succ) {
        const Instr& t = w.target.at(tpc);
        auto [u, d] = touched(t);
        auto in = [](const std::vector<Location>& v, const Location& l) {
            return std::find(v.begin(), v.end(), l) != v.end();
        };
        const Relocation& r1 = w.rho_at(tpc);
        const Relocation& r2 = w.rho_at(succ);
        for (std::size_t r = 0; r < r1.size(); ++r) {
            const auto& l1 = r1[r];
            const auto& l2 = r2[r];
            if (l1 == l2 || !l2) continue;
            if ((l1 && in(u, *l1)) || in(d, *l2)) continue;
            diag(Kind::shuffle_conformity, tpc,
                 "location of " + sreg(RegId(r)) + " changes from " + loc(l1) + " to " + loc(l2) +
                     " across an instruction that does not touch it");
        }
    }

    // One source register moves from `from` to a free `to`.
    void moves(PcId tpc, PcId succ, const Location& from, const Location& to, bool need_free) {
        const Relocation& r1 = w.rho_at(tpc);
        const Relocation& r2 = w.rho_at(succ);
        bool found = false;
        for (std::size_t r = 0; r < r1.size() && !found; ++r)
            found = r1[r] == std::optional<Location>(from) && r2[r] == std::optional<Location>(to);
        if (!found)
            diag(Kind::shuffle_conformity, tpc,
                 "no source register moves from " + loc(from) + " to " + loc(to));
        if (need_free && !free_at(tpc, to))
            diag(Kind::shuffle_conformity, tpc, loc(to) + " is not free");
    }

    void shuffle(PcId tpc, PcId succ) {
        std::visit(overloaded{
                       [&](const ins::Move& x) { moves(tpc, succ, x.src, x.dst, true); },
                       [&](const ins::Fill& x) { moves(tpc, succ, Slot{x.slot}, x.dst, true); },
                       [&](const ins::Spill& x) { moves(tpc, succ, x.src, Slot{x.slot}, true); },
                       [&](const ins::Slh& x) { moves(tpc, succ, x.reg, x.reg, false); },
                       [](const auto&) {},
                   },
                   w.target.at(tpc));
    }

    void liveness_check(PcId tpc) {
        const Relocation& rho = w.rho_at(tpc);
        std::map<Location, RegId> owner;
        for (std::size_t r = 0; r < rho.size(); ++r) {
            if (!tlive[idx(tpc)][r]) continue;
            if (!rho[r]) {
                diag(Kind::obeying_liveness, tpc, sreg(RegId(r)) + " is live but unmapped");
                continue;
            }
            auto [it, fresh] = owner.emplace(*rho[r], RegId(r));
            if (!fresh)
                diag(Kind::obeying_liveness, tpc,
                     loc(rho[r]) + " holds both " + sreg(it->second) + " and " + sreg(RegId(r)));
        }
    }
};

}  // namespace

std::vector<std::vector<bool>> target_live(const RAWitness& w, const Liveness& live) {
    auto inv = phi_inverse(w);
    std::vector<std::vector<bool>> out(w.target.pc_count(),
                                       std::vector<bool>(w.source.reg_count(), false));
    for (PcId t : w.target.pcs()) {
        auto s = chain_end(w, inv, t);
        if (!s || !w.source.defined(*s)) continue;
        out[idx(t)] = live_in(w.source, *s, live[idx(*s)], DeadDefs::use_operands).regs;
    }
    return out;
}

std::vector<RADiagnostic> validate_ra(const RAWitness& w, const Liveness& live) {
    Checker c{w, live, phi_inverse(w), target_live(w, live), {}};
    c.structure();
    for (PcId s : w.source.pcs()) c.matched(s);
    for (PcId t : w.target.pcs()) {
        for (PcId n : successors(w.target.at(t))) {
            c.frame(t, n);
            if (!c.inv[idx(t)]) c.shuffle(t, n);
        }
        c.liveness_check(t);
    }
    return c.out;
}

// ---------------------------------------------------------------------------------------------
// Allocation

namespace {

struct Loc {
    bool slot = false;
    unsigned n = 0;
    auto operator<=>(const Loc&) const = default;
};
using Map = std::vector<std::optional<Loc>>;

struct Shuf {
    RegId reg;
    Loc from;
    Loc to;
};

constexpr unsigned far = std::numeric_limits<unsigned>::max();

struct Node {
    std::string label;
    std::optional<PcId> source;  // matched source pc
    std::map<RegId, unsigned> uses, defs;  // source reg -> hw index
    std::optional<Shuf> shuf;
    std::vector<std::size_t> succ;  // node indices
    Map rho;
};

class Allocator {
public:
    Allocator(const Program& p, unsigned k) : p_(p), k_(k) {}

    RAWitness run();

private:
    const Program& p_;
    unsigned k_;
    Liveness live_;
    std::vector<std::vector<bool>> in_;
    std::vector<std::vector<unsigned>> nu_;
    std::vector<std::optional<Map>> min_;
    std::vector<std::size_t> node_of_;  // source pc -> node
    std::vector<Node> nodes_;
    std::vector<std::vector<std::size_t>> owned_;  // chain nodes created by source pc
    std::map<std::pair<PcId, Map>, std::size_t> memo_;
    std::set<std::string> labels_;
    unsigned max_slot_ = 0;

    UsesDefs ud(PcId pc) const { return uses_defs(p_.at(pc)); }
    static bool has(const std::vector<RegId>& v, RegId r) {
        return std::find(v.begin(), v.end(), r) != v.end();
    }

    void next_use() {
        nu_.assign(p_.pc_count(), std::vector<unsigned>(p_.reg_count(), far));
        for (bool changed = true; changed;) {
            changed = false;
            for (PcId pc : p_.pcs()) {
                auto u = ud(pc);
                for (std::size_t r = 0; r < p_.reg_count(); ++r) {
                    unsigned v = far;
                    if (has(u.uses, RegId(r))) v = 0;
                    else if (!has(u.defs, RegId(r)))
                        for (PcId s : successors(p_.at(pc)))
                            if (nu_[idx(s)][r] != far) v = std::min(v, nu_[idx(s)][r] + 1);
                    if (v < nu_[idx(pc)][r]) {
                        nu_[idx(pc)][r] = v;
                        changed = true;
                    }
                }
            }
        }
    }

    std::optional<unsigned> free_hw(const Map& m, const std::vector<bool>& keep) const {
        for (unsigned h = 0; h < k_; ++h) {
            bool used = false;
            for (std::size_t r = 0; r < m.size(); ++r)
                if (keep[r] && m[r] == Loc{false, h}) used = true;
            if (!used) return h;
        }
        return std::nullopt;
    }

    // Register spilled to make room: hw-resident, kept, not used at pc, furthest next use.
    std::optional<RegId> victim(PcId pc, const Map& m, const std::vector<bool>& keep) const {
        auto u = ud(pc);
        std::optional<RegId> best;
        for (std::size_t r = 0; r < m.size(); ++r) {
            if (!keep[r] || !m[r] || m[r]->slot || has(u.uses, RegId(r))) continue;
            if (!best || nu_[idx(pc)][r] >= nu_[idx(pc)][idx(*best)]) best = RegId(r);
        }
        return best;
    }

    void spill(std::vector<Shuf>& out, Map& m, RegId r) {
        out.push_back({r, *m[idx(r)], Loc{true, idx(r)}});
        m[idx(r)] = Loc{true, idx(r)};
        max_slot_ = std::max(max_slot_, idx(r));
    }

    std::vector<bool> after_keep(PcId pc) const {
        std::vector<bool> keep = live_[idx(pc)].regs;
        for (RegId d : ud(pc).defs) keep[idx(d)] = false;
        return keep;
    }

    // Brings the uses of pc into hardware registers and frees one for its definition.
    std::vector<Shuf> prepare(PcId pc, Map& m) {
        std::vector<Shuf> out;
        auto u = ud(pc);
        std::vector<bool> all(m.size());
        for (std::size_t r = 0; r < m.size(); ++r) all[r] = m[r].has_value();
        for (RegId r : u.uses) {
            if (!m[idx(r)]->slot) continue;
            auto h = free_hw(m, all);
            if (!h) {
                auto v = victim(pc, m, all);
                if (!v) throw AllocationError("too few registers at " + p_.label(pc));
                const unsigned freed = m[idx(*v)]->n;
                spill(out, m, *v);
                h = freed;
            }
            out.push_back({r, *m[idx(r)], Loc{false, *h}});
            m[idx(r)] = Loc{false, *h};
        }
        if (!u.defs.empty()) {
            auto keep = after_keep(pc);
            if (!free_hw(m, keep)) {
                auto v = victim(pc, m, keep);
                if (!v) throw AllocationError("no register for the definition at " + p_.label(pc));
                spill(out, m, *v);
            }
        }
        return out;
    }

    unsigned def_reg(PcId pc, const Map& m, RegId d) const {
        auto keep = after_keep(pc);
        if (m[idx(d)] && !m[idx(d)]->slot) {
            bool taken = false;
            for (std::size_t r = 0; r < m.size(); ++r)
                if (keep[r] && m[r] == m[idx(d)]) taken = true;
            if (!taken) return m[idx(d)]->n;
        }
        return *free_hw(m, keep);
    }

    Map restrict(Map m, const std::vector<bool>& keep) const {
        for (std::size_t r = 0; r < m.size(); ++r)
            if (!keep[r]) m[r].reset();
        return m;
    }

    // Parallel move from cur to goal; a cycle is broken through the home slot.
    std::vector<Shuf> resolve(Map cur, const Map& goal) {
        std::vector<Shuf> out;
        for (;;) {
            std::vector<RegId> pending;
            for (std::size_t r = 0; r < cur.size(); ++r)
                if (cur[r] != goal[r]) pending.push_back(RegId(r));
            if (pending.empty()) return out;
            bool progress = false;
            for (RegId r : pending) {
                const Loc to = *goal[idx(r)];
                bool occupied = false;
                for (std::size_t x = 0; x < cur.size(); ++x)
                    if (x != idx(r) && cur[x] == to) occupied = true;
                if (occupied) continue;
                out.push_back({r, *cur[idx(r)], to});
                if (to.slot) max_slot_ = std::max(max_slot_, to.n);
                cur[idx(r)] = to;
                progress = true;
                break;
            }
            if (!progress) spill(out, cur, pending.front());
        }
    }

    std::string fresh(const std::string& base) {
        for (unsigned n = 1;; ++n) {
            std::string l = base + "." + std::to_string(n);
            if (labels_.insert(l).second) return l;
        }
    }

    // Node reached from `from` on the edge to s with locations `start`.
    std::size_t edge(PcId from, PcId s, const Map& start) {
        if (auto it = memo_.find({s, start}); it != memo_.end()) return it->second;
        std::vector<Shuf> chain;
        if (!min_[idx(s)]) {
            Map m = start;
            chain = prepare(s, m);
            min_[idx(s)] = m;
        } else {
            chain = resolve(start, *min_[idx(s)]);
        }
        std::size_t target = node_of_[idx(s)];
        Map m = start;
        std::vector<std::size_t> made;
        for (const Shuf& sh : chain) {
            Node n;
            n.label = fresh(p_.label(from));
            n.shuf = sh;
            n.rho = m;
            m[idx(sh.reg)] = sh.to;
            made.push_back(nodes_.size());
            nodes_.push_back(std::move(n));
        }
        for (std::size_t j = 0; j < made.size(); ++j)
            nodes_[made[j]].succ = {j + 1 < made.size() ? made[j + 1] : target};
        owned_[idx(from)].insert(owned_[idx(from)].end(), made.begin(), made.end());
        const std::size_t head = made.empty() ? target : made.front();
        memo_[{s, start}] = head;
        return head;
    }

    std::vector<PcId> order() const {
        std::vector<PcId> post;
        std::vector<bool> seen(p_.pc_count(), false);
        auto dfs = [&](PcId root) {
            std::vector<std::pair<PcId, std::size_t>> st{{root, 0}};
            seen[idx(root)] = true;
            while (!st.empty()) {
                auto& [pc, k] = st.back();
                auto ss = successors(p_.at(pc));
                if (k < ss.size()) {
                    PcId s = ss[k++];
                    if (!seen[idx(s)]) {
                        seen[idx(s)] = true;
                        st.push_back({s, 0});
                    }
                } else {
                    post.push_back(pc);
                    st.pop_back();
                }
            }
        };
        dfs(p_.entry());
        std::vector<PcId> out(post.rbegin(), post.rend());
        for (PcId pc : p_.pcs())
            if (!seen[idx(pc)]) {
                post.clear();
                dfs(pc);
                out.insert(out.end(), post.rbegin(), post.rend());
            }
        return out;
    }

    Map root_map(PcId pc) {
        std::vector<RegId> regs;
        for (std::size_t r = 0; r < in_[idx(pc)].size(); ++r)
            if (in_[idx(pc)][r]) regs.push_back(RegId(r));
        std::stable_sort(regs.begin(), regs.end(), [&](RegId a, RegId b) {
            return nu_[idx(pc)][idx(a)] < nu_[idx(pc)][idx(b)];
        });
        Map m(p_.reg_count());
        unsigned h = 0;
        for (RegId r : regs) {
            if (h + 1 < k_) m[idx(r)] = Loc{false, h++};
            else {
                m[idx(r)] = Loc{true, idx(r)};
                max_slot_ = std::max(max_slot_, idx(r));
            }
        }
        prepare(pc, m);  // at a root the shuffles are absorbed into the initial placement
        return m;
    }

    RAWitness identity();
    RAWitness build();
};

RAWitness Allocator::identity() {
    ProgramBuilder b(p_);
    b.mem(std::string(stack_var_name), 1, Level::low);
    RAWitness w{p_, b.build(), {}, {}};
    for (PcId pc : p_.pcs()) w.phi.push_back(pc);
    Relocation id(p_.reg_count());
    for (std::size_t r = 0; r < id.size(); ++r) id[r] = Location(RegId(r));
    w.rho.assign(w.target.pc_count(), id);
    return w;
}

RAWitness Allocator::run() {
    if (p_.stack_var()) throw AllocationError("source program already declares stk");
    if (k_ < 2) throw AllocationError("need at least two registers");
    if (p_.reg_count() <= k_) return identity();
    live_ = ra_liveness(p_);
    for (PcId pc : p_.pcs()) in_.push_back(live_in(p_, pc, live_[idx(pc)], DeadDefs::use_operands).regs);
    next_use();
    min_.assign(p_.pc_count(), std::nullopt);
    owned_.assign(p_.pc_count(), {});
    for (PcId pc : p_.pcs()) labels_.insert(p_.label(pc));
    for (PcId pc : p_.pcs()) {
        node_of_.push_back(nodes_.size());
        Node n;
        n.label = p_.label(pc);
        n.source = pc;
        nodes_.push_back(std::move(n));
    }
    for (PcId pc : order()) {
        if (!min_[idx(pc)]) min_[idx(pc)] = root_map(pc);
        const Map& m = *min_[idx(pc)];
        Node& n = nodes_[node_of_[idx(pc)]];
        n.rho = m;
        auto u = ud(pc);
        for (RegId r : u.uses) n.uses[r] = m[idx(r)]->n;
        Map out = restrict(m, after_keep(pc));
        for (RegId d : u.defs) {
            const unsigned h = def_reg(pc, m, d);
            n.defs[d] = h;
            if (live_[idx(pc)].reg(d)) out[idx(d)] = Loc{false, h};
        }
        std::vector<std::size_t> succ;
        for (PcId s : successors(p_.at(pc))) succ.push_back(edge(pc, s, restrict(out, in_[idx(s)])));
        nodes_[node_of_[idx(pc)]].succ = std::move(succ);
    }
    return build();
}

RAWitness Allocator::build() {
    std::vector<std::size_t> layout;
    for (PcId pc : p_.pcs()) {
        layout.push_back(node_of_[idx(pc)]);
        for (std::size_t c : owned_[idx(pc)]) layout.push_back(c);
    }
    ProgramBuilder b;
    b.width(p_.width());
    for (const MemVar& v : p_.vars()) b.mem(v.name, v.size, v.level);
    const VarId stk = b.mem(std::string(stack_var_name), max_slot_ + 1, Level::low);
    std::vector<RegId> hw;
    for (unsigned h = 0; h < k_; ++h) hw.push_back(b.reg("r" + std::to_string(h)));
    std::vector<PcId> pc_of(nodes_.size());
    for (std::size_t n : layout) pc_of[n] = b.label(nodes_[n].label);
    (void)stk;

    auto to_loc = [&](const Loc& l) -> Location {
        if (l.slot) return Slot{l.n};
        return hw[l.n];
    };
    for (std::size_t n : layout) {
        const Node& nd = nodes_[n];
        auto succ = [&](std::size_t k) { return pc_of[nd.succ[k]]; };
        Instr t = ins::Exit{};
        if (nd.shuf) {
            const Shuf& s = *nd.shuf;
            if (!s.from.slot && !s.to.slot) t = ins::Move{hw[s.to.n], hw[s.from.n], succ(0)};
            else if (s.from.slot) t = ins::Fill{hw[s.to.n], s.from.n, succ(0)};
            else t = ins::Spill{s.to.n, hw[s.from.n], succ(0)};
        } else {
            auto U = [&](RegId r) { return hw[nd.uses.at(r)]; };
            auto D = [&](RegId r) { return hw[nd.defs.at(r)]; };
            auto A = [&](const Address& a) -> Address {
                if (auto r = std::get_if<RegId>(&a)) return U(*r);
                return a;
            };
            t = std::visit(
                overloaded{
                    [&](const ins::Exit&) -> Instr { return ins::Exit{}; },
                    [&](const ins::Nop&) -> Instr { return ins::Nop{succ(0)}; },
                    [&](const ins::Asgn& x) -> Instr {
                        return ins::Asgn{D(x.dst), U(x.lhs), x.op, U(x.rhs), succ(0)};
                    },
                    [&](const ins::Load& x) -> Instr {
                        return ins::Load{D(x.dst), x.var, A(x.addr), succ(0)};
                    },
                    [&](const ins::Store& x) -> Instr {
                        return ins::Store{x.var, A(x.addr), U(x.src), succ(0)};
                    },
                    [&](const ins::If& x) -> Instr { return ins::If{U(x.cond), succ(0), succ(1)}; },
                    [&](const ins::Sfence&) -> Instr { return ins::Sfence{succ(0)}; },
                    [&](const ins::Slh& x) -> Instr { return ins::Slh{D(x.reg), succ(0)}; },
                    [&](const ins::Move& x) -> Instr { return ins::Move{D(x.dst), U(x.src), succ(0)}; },
                    [&](const auto&) -> Instr { throw AllocationError("stack instruction in source"); },
                },
                p_.at(*nd.source));
        }
        b.set(pc_of[n], t);
    }
    b.entry(pc_of[node_of_[idx(p_.entry())]]);

    RAWitness w{p_, b.build(), {}, {}};
    for (PcId pc : p_.pcs()) w.phi.push_back(pc_of[node_of_[idx(pc)]]);
    w.rho.assign(w.target.pc_count(), Relocation(p_.reg_count()));
    for (std::size_t n : layout)
        for (std::size_t r = 0; r < p_.reg_count(); ++r)
            if (nodes_[n].rho[r]) w.rho[idx(pc_of[n])][r] = to_loc(*nodes_[n].rho[r]);
    return w;
}

}  // namespace

RAWitness allocate(const Program& p, unsigned k) { return Allocator(p, k).run(); }

// ---------------------------------------------------------------------------------------------
// Witness text

namespace {

Relocation identity_relocation(const Program& s, const Program& t) {
    Relocation r(s.reg_count());
    for (std::size_t k = 0; k < r.size(); ++k)
        if (auto tr = t.find_reg(s.reg_name(RegId(k)))) r[k] = Location(*tr);
    return r;
}

}  // namespace

RAWitness parse_ra_witness(const Program& source, const Program& target, std::string_view text) {
    using detail::Cursor;
    RAWitness w{source, target, {}, {}};
    std::vector<std::optional<PcId>> phi(source.pc_count());
    std::vector<std::vector<std::pair<RegId, std::optional<Location>>>> changes(target.pc_count());
    std::size_t lineno = 0;
    for (auto line : detail::split_lines(text)) {
        ++lineno;
        Cursor c(detail::tokenize(line, lineno), lineno, line.size());
        if (c.done()) continue;
        const std::size_t col0 = c.col();
        const std::string kw = c.word("'phi' or 'rho'");
        auto tpc = [&](const std::string& l, std::size_t col) {
            auto p = target.find_pc(l);
            if (!p) c.fail_at(col, "unknown target pc '" + l + "'");
            return *p;
        };
        if (kw == "phi") {
            c.expect(":");
            std::size_t sc = c.col();
            std::string s = c.word("source pc");
            auto sp = source.find_pc(s);
            if (!sp) c.fail_at(sc, "unknown source pc '" + s + "'");
            c.expect("->");
            std::size_t tc = c.col();
            PcId t = tpc(c.word("target pc"), tc);
            c.finish();
            if (phi[idx(*sp)]) c.fail_at(sc, "duplicate phi entry for '" + s + "'");
            phi[idx(*sp)] = t;
        } else if (kw == "rho") {
            std::size_t tc = c.col();
            PcId t = tpc(c.word("target pc"), tc);
            c.expect(":");
            std::size_t rc = c.col();
            std::string r = c.ident("source register");
            auto sr = source.find_reg(r);
            if (!sr) c.fail_at(rc, "unknown source register '" + r + "'");
            c.expect("->");
            std::optional<Location> l;
            std::size_t lc = c.col();
            std::string v = c.word("location");
            if (v == "_") {
            } else if (v == stack_var_name) {
                c.expect("#");
                std::size_t nc = c.col();
                auto n = c.number("slot");
                auto stk = target.stack_var();
                if (!stk) c.fail_at(lc, "target does not declare stk");
                if (n >= target.var(*stk).size) c.fail_at(nc, "stack slot out of bounds");
                l = Slot{static_cast<Value>(n)};
            } else {
                auto tr = target.find_reg(v);
                if (!tr) c.fail_at(lc, "unknown target register '" + v + "'");
                l = Location(*tr);
            }
            c.finish();
            changes[idx(t)].emplace_back(*sr, l);
        } else {
            c.fail_at(col0, "expected 'phi' or 'rho'");
        }
    }
    for (std::size_t s = 0; s < phi.size(); ++s) {
        if (!phi[s]) throw ParseError(lineno + 1, 1, "missing phi entry for '" + source.label(PcId(s)) + "'");
        w.phi.push_back(*phi[s]);
    }
    Relocation cur = identity_relocation(source, target);
    for (PcId t : target.pcs()) {
        for (auto& [r, l] : changes[idx(t)]) cur[idx(r)] = l;
        w.rho.push_back(cur);
    }
    return w;
}

std::string serialize_ra_witness(const RAWitness& w) {
    std::ostringstream os;
    for (std::size_t s = 0; s < w.phi.size(); ++s)
        os << "phi: " << w.source.label(PcId(s)) << " -> " << w.target.label(w.phi[s]) << "\n";
    Relocation prev = identity_relocation(w.source, w.target);
    for (PcId t : w.target.pcs()) {
        const Relocation& cur = w.rho_at(t);
        for (std::size_t r = 0; r < cur.size(); ++r)
            if (cur[r] != prev[r])
                os << "rho " << w.target.label(t) << ": " << w.source.reg_name(RegId(r)) << " -> "
                   << format_location(w.target, cur[r]) << "\n";
        prev = cur;
    }
    return os.str();
}

State source_initial(const RAWitness& w, const State& t) {
    State s = initial_state(w.source);
    const Relocation& rho = w.rho_at(w.target.entry());
    const auto stk = w.target.stack_var();
    for (std::size_t r = 0; r < rho.size(); ++r) {
        if (!rho[r]) continue;
        if (auto reg = std::get_if<RegId>(&*rho[r])) s.regs[r] = t.regs[idx(*reg)];
        else s.regs[r] = t.mem[w.target.cell(*stk, std::get<Slot>(*rho[r]).n)];
    }
    for (std::size_t v = 0; v < w.source.vars().size(); ++v) {
        auto tv = *w.target.find_var(w.source.vars()[v].name);
        for (Value o = 0; o < w.source.vars()[v].size; ++o)
            s.mem[w.source.cell(VarId(v), o)] = t.mem[w.target.cell(tv, o)];
    }
    return s;
}

State lift_initial(const RAWitness& w, const State& s) {
    State t = initial_state(w.target);
    const Relocation& rho = w.rho_at(w.target.entry());
    const auto stk = w.target.stack_var();
    for (std::size_t v = 0; v < w.source.vars().size(); ++v) {
        auto tv = *w.target.find_var(w.source.vars()[v].name);
        for (Value o = 0; o < w.source.vars()[v].size; ++o)
            t.mem[w.target.cell(tv, o)] = s.mem[w.source.cell(VarId(v), o)];
    }
    for (std::size_t r = 0; r < rho.size(); ++r) {
        if (!rho[r]) continue;
        if (auto reg = std::get_if<RegId>(&*rho[r])) t.regs[idx(*reg)] = s.regs[r];
        else t.mem[w.target.cell(*stk, std::get<Slot>(*rho[r]).n)] = s.regs[r];
    }
    return t;
}

}  // namespace specnip
