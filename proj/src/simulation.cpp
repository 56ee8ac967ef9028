#include "specnip/simulation.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace specnip {

namespace {

bool is_exit(const Program& p, PcId pc) { return std::holds_alternative<ins::Exit>(p.at(pc)); }

bool starts_with(const std::vector<Directive>& seq, const std::vector<Directive>& prefix) {
    return seq.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), seq.begin());
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Dead code elimination

DceWitness::DceWitness(Program source, Program target, bool sync_points)
    : src_(std::move(source)), tgt_(std::move(target)), sync_(sync_points) {
    auto live = liveness(src_, full_live(src_));
    for (PcId pc : src_.pcs()) live_in_.push_back(live_in(src_, pc, live[idx(pc)]));
}

State DceWitness::source_initial(const State& tgt) const { return tgt; }

SimNode DceWitness::initial(const State& tgt) const { return {single(tgt), single(tgt), {}}; }

bool DceWitness::related(const SimNode& n) const {
    if (n.src.depth() != n.tgt.depth()) return false;
    for (std::size_t k = 0; k < n.src.depth(); ++k) {
        const State& a = n.src.frames[k];
        const State& b = n.tgt.frames[k];
        if (a.pc != b.pc) return false;
        const LiveSet& l = live_in_[idx(a.pc)];
        for (std::size_t r = 0; r < l.regs.size(); ++r)
            if (l.regs[r] && a.regs[r] != b.regs[r]) return false;
        for (std::size_t c = 0; c < l.cells.size(); ++c)
            if (l.cells[c] && a.mem[c] != b.mem[c]) return false;
    }
    return true;
}

std::optional<Directive> DceWitness::transform(const SimNode& n, const Directive& d) const {
    if (step_spec(src_, n.src, d)) return d;
    const Instr& i = src_.at(n.src.top().pc);
    const bool nop = std::holds_alternative<ins::Nop>(tgt_.at(n.tgt.top().pc));
    if (d.kind != DirKind::step || !nop || src_.vars().empty()) return std::nullopt;
    if (std::holds_alternative<ins::Load>(i)) return Directive::load(VarId(0), 0);
    if (std::holds_alternative<ins::Store>(i)) return Directive::store(VarId(0), 0);
    return std::nullopt;
}

IntervalSet DceWitness::intervals(const SimNode& n, const Bounds& b) const {
    IntervalSet out;
    struct Frame {
        SimNode cur;
        Trace tgt, src;
    };
    std::vector<Frame> stack{{n, {}, {}}};
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        for (const Directive& d : enabled_directives(tgt_, f.cur.tgt)) {
            // A sync-point interval rolls back only as its first step.
            if (sync_ && d.kind == DirKind::rollback && !f.tgt.directives.empty()) continue;
            auto tdirs = f.tgt.directives;
            tdirs.push_back(d);
            if ((d.kind == DirKind::spec && f.cur.tgt.depth() >= b.max_depth) ||
                tdirs.size() > b.max_steps) {
                out.truncated.push_back(std::move(tdirs));
                continue;
            }
            auto sd = transform(f.cur, d);
            if (!sd) continue;
            auto ts = step_spec(tgt_, f.cur.tgt, d);
            auto ss = step_spec(src_, f.cur.src, *sd);
            Frame g{{std::move(ss->first), std::move(ts->first), {}}, f.tgt, f.src};
            g.tgt.directives.push_back(d);
            g.tgt.leaks.push_back(ts->second);
            g.src.directives.push_back(*sd);
            g.src.leaks.push_back(ss->second);
            const PcId top = g.cur.tgt.top().pc;
            const bool done = !sync_ || d.kind == DirKind::rollback || top == tgt_.entry() ||
                              is_exit(tgt_, top);
            if (done)
                out.intervals.push_back({n, std::move(g.tgt), std::move(g.src), std::move(g.cur)});
            else
                stack.push_back(std::move(g));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Register allocation

RaWitness::RaWitness(RAWitness w) : prod_(std::move(w)) {}

State RaWitness::source_initial(const State& tgt) const {
    return specnip::source_initial(prod_.witness(), tgt);
}

SimNode RaWitness::initial(const State& tgt) const {
    ProductState s = prod_.initial(tgt);
    return {std::move(s.src), std::move(s.tgt), std::move(s.pi)};
}

bool RaWitness::related(const SimNode& n) const {
    const RAWitness& w = prod_.witness();
    if (n.src.depth() != n.tgt.depth()) return false;
    // Every level is matched or shuffling towards the image of its source pc.
    for (std::size_t k = 0; k < n.src.depth(); ++k) {
        PcId cur = n.tgt.frames[k].pc;
        for (std::size_t g = 0; !prod_.matched_source(cur); ++g) {
            auto ss = successors(w.target.at(cur));
            if (g > w.target.pc_count() || !is_shuffle(w.target.at(cur)) || ss.size() != 1)
                return false;
            cur = ss[0];
        }
        if (*prod_.matched_source(cur) != n.src.frames[k].pc) return false;
    }
    return prod_.related({n.src, n.tgt, n.pi});
}

IntervalSet RaWitness::intervals(const SimNode& n, const Bounds& b) const {
    IntervalSet out;
    const Program& T = target();
    struct Frame {
        ProductState cur;
        Trace tgt, src;
        bool guarded = true;
    };
    std::vector<Frame> stack{{{n.src, n.tgt, n.pi}, {}, {}, true}};
    while (!stack.empty()) {
        Frame f = std::move(stack.back());
        stack.pop_back();
        for (const Directive& d : enabled_directives(T, f.cur.tgt)) {
            auto tdirs = f.tgt.directives;
            tdirs.push_back(d);
            if ((d.kind == DirKind::spec && f.cur.tgt.depth() >= b.max_depth) ||
                tdirs.size() > b.max_steps) {
                out.truncated.push_back(std::move(tdirs));
                continue;
            }
            auto t = prod_.replay(f.cur, d);
            if (!t) t = prod_.replay(f.cur, d, true);
            if (!t) continue;
            Frame g{std::move(t->after), f.tgt, f.src, f.guarded && t->guarded};
            g.tgt.directives.push_back(d);
            g.tgt.leaks.push_back(t->tgt_leak);
            if (t->src_dir) {
                g.src.directives.push_back(*t->src_dir);
                g.src.leaks.push_back(t->src_leak);
            }
            const bool done = d.kind == DirKind::rollback ||
                              prod_.matched_source(g.cur.tgt.top().pc).has_value();
            if (done) {
                SimNode end{std::move(g.cur.src), std::move(g.cur.tgt), std::move(g.cur.pi)};
                out.intervals.push_back({n, std::move(g.tgt), std::move(g.src), std::move(end),
                                         g.guarded});
            } else {
                stack.push_back(std::move(g));
            }
        }
    }
    return out;
}

IntervalSet extract_intervals(const SimWitness& w, const SimNode& n, const Bounds& b) {
    return w.intervals(n, b);
}

// ---------------------------------------------------------------------------------------------
// Checks

namespace {

// Every target directive enabled at a point an interval passes through extends some interval
// or truncated prefix.
std::optional<std::string> coverage_gap(const SimWitness& w, const SimNode& n,
                                        const IntervalSet& ivs) {
    std::vector<const std::vector<Directive>*> seqs;
    for (const auto& i : ivs.intervals) seqs.push_back(&i.tgt.directives);
    for (const auto& t : ivs.truncated) seqs.push_back(&t);
    auto covered = [&](const std::vector<Directive>& prefix) {
        return std::any_of(seqs.begin(), seqs.end(),
                           [&](const auto* s) { return starts_with(*s, prefix); });
    };
    std::set<std::vector<Directive>> prefixes{{}};
    for (const auto& i : ivs.intervals)
        for (std::size_t k = 1; k < i.tgt.directives.size(); ++k)
            prefixes.insert({i.tgt.directives.begin(), i.tgt.directives.begin() + k});
    for (const auto& prefix : prefixes) {
        auto e = run_directives(w.target(), n.tgt, prefix);
        for (const Directive& d : enabled_directives(w.target(), e.last())) {
            auto ext = prefix;
            ext.push_back(d);
            if (!covered(ext))
                return "target continuation " + std::to_string(ext.size()) +
                       " directives deep has no interval";
        }
    }
    return std::nullopt;
}

bool replays(const Program& p, const SpecState& from, const Trace& t, const SpecState& to) {
    auto e = run_directives(p, from, t.directives);
    return e.status != Execution::Status::stuck && e.trace().leaks == t.leaks && e.last() == to;
}

bool same_traces(const SimInterval& a, const SimInterval& b) {
    return a.tgt == b.tgt && a.src == b.src;
}

}  // namespace

SimVerdict check_simulation(const SimWitness& w, const std::vector<State>& target_inits,
                            const Bounds& b) {
    SimVerdict v;
    std::set<SimNode> seen;
    std::deque<std::pair<SimNode, std::size_t>> work;
    for (const State& s : target_inits) {
        SimNode n = w.initial(s);
        if (seen.insert(n).second) work.emplace_back(std::move(n), 0);
    }
    auto fail = [&](std::string why, const SimNode& n, std::optional<SimInterval> i) {
        v.pass = false;
        v.reason = std::move(why);
        v.at = n;
        v.interval = std::move(i);
        return v;
    };
    while (!work.empty()) {
        auto [n, used] = std::move(work.front());
        work.pop_front();
        ++v.nodes;
        if (!w.related(n)) return fail("pair is not related", n, std::nullopt);
        IntervalSet ivs = w.intervals(n, b);
        v.truncated += ivs.truncated.size();
        if (auto gap = coverage_gap(w, n, ivs)) return fail(*gap, n, std::nullopt);
        for (auto& i : ivs.intervals) {
            ++v.intervals;
            if (!i.guarded) return fail("product is stuck on a poisoned guard", n, i);
            if (!replays(w.target(), n.tgt, i.tgt, i.end.tgt) ||
                !replays(w.source(), n.src, i.src, i.end.src))
                return fail("interval does not replay", n, i);
            if (!w.related(i.end)) return fail("interval end is not related", n, i);
            const std::size_t next = used + i.tgt.directives.size();
            if (is_final(w.target(), i.end.tgt)) continue;
            if (next >= b.max_steps) {
                ++v.truncated;
                continue;
            }
            if (seen.insert(i.end).second) work.emplace_back(i.end, next);
        }
    }
    return v;
}

CubeVerdict check_snippy_cube(const SimWitness& w,
                              const std::vector<std::pair<State, State>>& pairs, const Bounds& b) {
    CubeVerdict v;
    struct Quad {
        SimNode a, b;
        auto operator<=>(const Quad&) const = default;
    };
    std::set<Quad> seen;
    std::deque<std::pair<Quad, std::size_t>> work;
    for (const auto& [s1, s2] : pairs) {
        Quad q{w.initial(s1), w.initial(s2)};
        if (seen.insert(q).second) work.emplace_back(std::move(q), 0);
    }
    while (!work.empty()) {
        auto [q, used] = std::move(work.front());
        work.pop_front();
        if (!same_point(q.a.tgt, q.b.tgt) || !same_point(q.a.src, q.b.src)) continue;
        ++v.quadruples;
        IntervalSet ia = w.intervals(q.a, b);
        IntervalSet ib = w.intervals(q.b, b);
        v.truncated += ia.truncated.size() + ib.truncated.size();
        v.intervals += ia.intervals.size() + ib.intervals.size();
        // Pair 2 must reproduce every interval of pair 1 whose source side it can replay.
        auto mimic = [&](const SimNode& n1, const IntervalSet& i1, const SimNode& n2,
                         const IntervalSet& i2, bool swapped) -> bool {
            for (const auto& i : i1.intervals) {
                auto e = run_directives(w.source(), n2.src, i.src.directives);
                if (e.status == Execution::Status::stuck || e.trace().leaks != i.src.leaks) continue;
                const bool found = std::any_of(i2.intervals.begin(), i2.intervals.end(),
                                               [&](const auto& j) { return same_traces(i, j); });
                if (!found) {
                    v.pass = false;
                    v.reason = "no matching interval for the second pair";
                    v.first = swapped ? n2 : n1;
                    v.second = swapped ? n1 : n2;
                    v.interval = i;
                    return false;
                }
            }
            return true;
        };
        if (!mimic(q.a, ia, q.b, ib, false) || !mimic(q.b, ib, q.a, ia, true)) return v;
        for (const auto& i : ia.intervals)
            for (const auto& j : ib.intervals) {
                if (!same_traces(i, j)) continue;
                const std::size_t next = used + i.tgt.directives.size();
                if (is_final(w.target(), i.end.tgt)) continue;
                if (next >= b.max_steps) {
                    ++v.truncated;
                    continue;
                }
                Quad n{i.end, j.end};
                if (seen.insert(n).second) work.emplace_back(std::move(n), next);
            }
    }
    return v;
}

}  // namespace specnip
