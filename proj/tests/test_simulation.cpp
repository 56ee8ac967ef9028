#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "helpers.hpp"
#include "specnip/security.hpp"
#include "specnip/simulation.hpp"

using namespace specnip;
using namespace testing_support;

namespace {

std::string render(const Program& p, const Trace& t) { return format_trace(p, t); }

// Drops every interval that rolls back.
class NoRollback : public SimWitness {
public:
    explicit NoRollback(const SimWitness& inner) : w_(inner) {}
    std::string name() const override { return "no-rb"; }
    const Program& source() const override { return w_.source(); }
    const Program& target() const override { return w_.target(); }
    State source_initial(const State& t) const override { return w_.source_initial(t); }
    SimNode initial(const State& t) const override { return w_.initial(t); }
    bool related(const SimNode& n) const override { return w_.related(n); }
    IntervalSet intervals(const SimNode& n, const Bounds& b) const override {
        IntervalSet s = w_.intervals(n, b);
        std::erase_if(s.intervals, [](const SimInterval& i) {
            return std::find(i.tgt.directives.begin(), i.tgt.directives.end(), Directive::rollback()) !=
                   i.tgt.directives.end();
        });
        return s;
    }

private:
    const SimWitness& w_;
};

bool replays(const Program& p, const SpecState& from, const Trace& t, const SpecState& to) {
    Execution e = run_directives(p, from, t.directives);
    return e.status != Execution::Status::stuck && e.trace() == t && e.last() == to;
}

}  // namespace

TEST_CASE("sync-point intervals of the dce example") {
    Program src = corpus_program("dce_source.sp"), tgt = corpus_program("dce_target.sp");
    DceWitness w(src, tgt, true);
    IntervalSet s = extract_intervals(w, w.initial(corpus_state(tgt, "dce_initial.init")), {32, 3});
    REQUIRE(s.intervals.size() == 2);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& i : s.intervals) got.insert({render(src, i.src), render(tgt, i.tgt)});
    CHECK(got == std::set<std::pair<std::string, std::string>>{
                     {"spec/if false . load secret 0/load 3 . step/none",
                      "spec/if false . step/none . step/none"},
                     {"if/if true", "if/if true"}});
}

TEST_CASE("final pairs have no intervals") {
    Program p = parse_program("entry L0\nL0: ret\n");
    DceWitness w(p, p);
    CHECK(extract_intervals(w, w.initial(initial_state(p)), {}).intervals.empty());
}

TEST_CASE("matched assignment interval includes the spill") {
    RAWitness ra = ra_witness();
    RaWitness w(ra);
    SimNode n = w.initial(corpus_state(ra.target, "ra_initial.init"));
    IntervalSet first = extract_intervals(w, n, {32, 3});
    REQUIRE(first.intervals.size() == 1);
    SimNode at_a = first.intervals[0].end;
    CHECK(format_pc_stack(ra.target, at_a.tgt) == "[a]");
    CHECK(format_pc_stack(ra.source, at_a.src) == "[1]");
    IntervalSet next = extract_intervals(w, at_a, {32, 3});
    REQUIRE(next.intervals.size() == 1);
    const SimInterval& i = next.intervals[0];
    CHECK(i.tgt.directives == std::vector{Directive::step(), Directive::step()});
    CHECK(i.src.directives == std::vector{Directive::step()});
    CHECK(format_pc_stack(ra.target, i.end.tgt) == "[c]");
    CHECK(format_pc_stack(ra.source, i.end.src) == "[2]");
}

TEST_CASE("simulation checks") {
    Program src = corpus_program("dce_source.sp"), tgt = corpus_program("dce_target.sp");
    State d0 = corpus_state(tgt, "dce_initial.init");
    SimVerdict dce = check_simulation(DceWitness(src, tgt), {d0}, {16, 2});
    CHECK(dce.pass);
    CHECK(dce.nodes > 1);
    // Sync points skip mid-interval rollbacks, which the coverage check notices.
    CHECK_FALSE(check_simulation(DceWitness(src, tgt, true), {d0}, {16, 2}).pass);

    RAWitness ra = ra_witness_w2();
    State r0 = corpus_state(ra.target, "ra_w2.init");
    SimVerdict unfixed = check_simulation(RaWitness(ra), {r0}, {24, 2});
    CHECK_FALSE(unfixed.pass);
    CHECK(unfixed.reason == "product is stuck on a poisoned guard");

    auto [fw, rep] = fix_ra(ra);
    RaWitness fixed(fw);
    State f0 = lift_initial(fw, source_initial(ra, r0));
    CHECK(check_simulation(fixed, {f0}, {24, 2}).pass);

    SimVerdict mutated = check_simulation(NoRollback(fixed), {f0}, {24, 2});
    CHECK_FALSE(mutated.pass);
    CHECK(mutated.reason.find("has no interval") != std::string::npos);
}

TEST_CASE("snippy cube") {
    const Bounds b{24, 2};
    RAWitness ra = ra_witness_w2();
    State r0 = corpus_state(ra.target, "ra_w2.init");
    CubeVerdict unfixed = check_snippy_cube(RaWitness(ra), enumerate_pairs(ra.target, r0, PairSource::exhaustive()), b);
    REQUIRE_FALSE(unfixed.pass);
    REQUIRE(unfixed.interval);
    CHECK(unfixed.interval->tgt.leaks.back().kind == LeakKind::branch);
    CHECK(format_pc_stack(ra.target, unfixed.first->tgt).find('f') != std::string::npos);

    auto [fw, rep] = fix_ra(ra);
    State f0 = lift_initial(fw, source_initial(ra, r0));
    CHECK(check_snippy_cube(RaWitness(fw), enumerate_pairs(fw.target, f0, PairSource::exhaustive()), b).pass);

    Program ds = with_width(corpus_program("dce_source.sp"), 2), dt = with_width(corpus_program("dce_target.sp"), 2);
    State d0 = corpus_state(dt, "dce_initial.init");
    CHECK(check_snippy_cube(DceWitness(ds, dt), enumerate_pairs(dt, d0, PairSource::exhaustive()), b).pass);
}

// Properties on random allocations: replay, matched ends and coverage of behaviours.
TEST_CASE("ra intervals replay, end matched and cover behaviours") {
    std::mt19937_64 rng(97);
    GenOptions o;
    o.regs = 4;
    o.pcs = 6;
    // Register-addressed loads fan out over every cell; past 14 steps the behaviour sets explode.
    const Bounds b{14, 2};
    for (int n = 0; n < 1000; ++n) {
        auto [p, s0] = random_safe(rng, o);
        RAWitness ra = allocate(p, min_registers(p) + n % 2);
        RaWitness w(ra);
        State t0 = lift_initial(ra, s0);
        std::map<SimNode, IntervalSet> memo;
        auto ivs = [&](const SimNode& x) -> const IntervalSet& {
            auto it = memo.find(x);
            if (it == memo.end()) it = memo.emplace(x, extract_intervals(w, x, b)).first;
            return it->second;
        };
        // Every terminated target behaviour is a concatenation of intervals.
        std::function<bool(const SimNode&, const Trace&, std::size_t)> covers =
            [&](const SimNode& x, const Trace& t, std::size_t pos) {
                if (pos == t.directives.size()) return true;
                for (const auto& i : ivs(x).intervals) {
                    const std::size_t len = i.tgt.directives.size();
                    if (pos + len > t.directives.size()) continue;
                    if (!std::equal(i.tgt.directives.begin(), i.tgt.directives.end(), t.directives.begin() + pos) ||
                        !std::equal(i.tgt.leaks.begin(), i.tgt.leaks.end(), t.leaks.begin() + pos))
                        continue;
                    if (covers(i.end, t, pos + len)) return true;
                }
                return false;
            };
        const SimNode start = w.initial(t0);
        BehaviorSet bs = explore_behaviors(ra.target, start.tgt, b);
        for (const auto& t : bs.terminated) REQUIRE(covers(start, t, 0));
        for (const auto& [x, set] : memo)
            for (const auto& i : set.intervals) {
                REQUIRE(replays(ra.target, x.tgt, i.tgt, i.end.tgt));
                REQUIRE(replays(ra.source, x.src, i.src, i.end.src));
                if (!i.guarded) continue;
                REQUIRE(w.related(i.end));
                const bool rolled = i.tgt.directives.back() == Directive::rollback();
                if (!rolled && !is_final(ra.target, i.end.tgt))
                    REQUIRE(w.product().matched_source(i.end.tgt.top().pc));
            }
    }
}

TEST_CASE("initial mapping respects low equivalence") {
    std::mt19937_64 rng(101);
    RAWitness ra = ra_witness_w2();
    RaWitness w(ra);
    for (int n = 0; n < 1000; ++n) {
        State a = random_state(ra.target, rng), c = random_state(ra.target, rng);
        // Half the cases share the low part.
        State b = n % 2 ? a : c;
        if (n % 2)
            for (std::size_t k = 0; k < ra.target.cell_count(); ++k)
                if (ra.target.var(ra.target.cell_at(k).first).level == Level::high) b.mem[k] = c.mem[k];
        // The stack is target-only; make it agree so the relation is about program state.
        const VarId stk = *ra.target.stack_var();
        b.mem[ra.target.cell(stk, 0)] = a.mem[ra.target.cell(stk, 0)];
        const bool tgt_eq = low_equivalent(ra.target, a, b);
        const bool src_eq = low_equivalent(ra.source, w.source_initial(a), w.source_initial(b));
        REQUIRE(tgt_eq == src_eq);
    }
}
