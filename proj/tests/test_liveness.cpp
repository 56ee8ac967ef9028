#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "specnip/liveness.hpp"
#include "specnip/security.hpp"
#include "specnip/simulation.hpp"

using namespace specnip;
using namespace testing_support;

namespace {

std::vector<std::string> live_regs(const Program& p, const LiveSet& l) {
    std::vector<std::string> out;
    for (std::size_t r = 0; r < p.reg_count(); ++r)
        if (l.regs[r]) out.push_back(p.reg_name(RegId(r)));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("exit-only program keeps the exit fact") {
    Program p = parse_program("mem buf 2 low\nentry L0\nL0: ret\n");
    CHECK(liveness(p, full_live(p))[0] == full_live(p));
    CHECK(liveness(p, mems_live(p))[0] == mems_live(p));
}

TEST_CASE("dce source: the load's destination is dead") {
    Program p = corpus_program("dce_source.sp");
    Liveness l = liveness(p, full_live(p));
    const RegId a = *p.find_reg("a");
    CHECK_FALSE(l[idx(*p.find_pc("2"))].reg(a));
    CHECK(l[idx(*p.find_pc("3"))].reg(a));
}

TEST_CASE("straight-line chain, by hand") {
    Program p = parse_program(
        "entry L0\nL0: a = x add y -> L1\nL1: b = a add x -> L2\nL2: c = b add b -> L3\nL3: ret\n");
    // c is dead at exit, so the whole chain is faint.
    Liveness faint = liveness(p, mems_live(p));
    for (PcId n : p.pcs()) CHECK(live_regs(p, live_in(p, n, faint[idx(n)])).empty());

    Liveness l = liveness(p, mems_live(p), DeadDefs::use_operands);
    auto in = [&](const char* pc) {
        PcId n = *p.find_pc(pc);
        return live_regs(p, live_in(p, n, l[idx(n)], DeadDefs::use_operands));
    };
    CHECK(in("L3").empty());
    CHECK(in("L2") == std::vector<std::string>{"b"});
    CHECK(in("L1") == std::vector<std::string>{"a", "x"});
    CHECK(in("L0") == std::vector<std::string>{"x", "y"});
}

TEST_CASE("dce produces the listed target") {
    Program src = corpus_program("dce_source.sp");
    DceResult r = dce_transform(src, liveness(src, full_live(src)));
    CHECK(structurally_equal(r.target, corpus_program("dce_target.sp")));
    CHECK(r.replaced[idx(*src.find_pc("2"))]);
    CHECK(std::count(r.replaced.begin(), r.replaced.end(), true) == 1);
}

TEST_CASE("dce leaves fully live programs unchanged") {
    Program p = parse_program("mem buf 2 low\nentry L0\nL0: load a <- buf[i] -> L1\nL1: store buf[#1] <- a -> L2\nL2: ret\n");
    DceResult r = dce_transform(p, liveness(p, full_live(p)));
    CHECK(r.target == p);
}

TEST_CASE("dce removes a constant store that is overwritten") {
    Program p = parse_program(
        "mem buf 2 low\nentry L0\nL0: store buf[#0] <- x -> L1\nL1: store buf[#0] <- y -> L2\nL2: ret\n");
    DceResult r = dce_transform(p, liveness(p, full_live(p)));
    CHECK(std::holds_alternative<ins::Nop>(r.target.at(*r.target.find_pc("L0"))));
    CHECK(std::holds_alternative<ins::Store>(r.target.at(*r.target.find_pc("L1"))));
}

TEST_CASE("dce witness relates the initial states and transforms directives") {
    Program src = corpus_program("dce_source.sp"), tgt = corpus_program("dce_target.sp");
    DceWitness w(src, tgt);
    State s = corpus_state(tgt, "dce_initial.init");
    SimNode n = w.initial(s);
    CHECK(w.related(n));
    CHECK(w.transform(n, Directive::branch()) == Directive::branch());
    CHECK(w.transform(n, Directive::spec()) == Directive::spec());

    // Mispredict into the eliminated out-of-bounds load.
    SimNode m{step_spec(src, n.src, Directive::spec())->first, step_spec(tgt, n.tgt, Directive::spec())->first, {}};
    REQUIRE(w.related(m));
    CHECK(w.transform(m, Directive::step()) == Directive::load(*src.find_var("secret"), 0));
    // Any unsafe location relates to the target's step.
    for (const auto& d : enabled_directives(src, m.src)) {
        if (d.kind != DirKind::load) continue;
        SimNode after{step_spec(src, m.src, d)->first, step_spec(tgt, m.tgt, Directive::step())->first, {}};
        CHECK(w.related(after));
    }
}

// Property: every register an effective instruction uses is live-in at that pc along random runs.
TEST_CASE("liveness guarantee along random executions") {
    std::mt19937_64 rng(43);
    GenOptions o;
    o.shuffles = true;
    o.loops = true;
    for (int k = 0; k < 1000; ++k) {
        Program p = random_program(rng, o);
        Liveness l = liveness(p, full_live(p));
        SpecState v = single(random_state(p, rng));
        for (const auto& d : random_walk(p, v, rng, 16)) {
            const PcId pc = v.top().pc;
            LiveSet in = live_in(p, pc, l[idx(pc)]);
            if (effective(p, pc, l[idx(pc)]))
                for (RegId r : uses_defs(p.at(pc)).uses) REQUIRE(in.reg(r));
            v = step_spec(p, v, d)->first;
        }
    }
}

// Property: lockstep replay of random target runs through the dce witness.
TEST_CASE("dce lockstep replay on random runs") {
    std::mt19937_64 rng(47);
    GenOptions o;
    o.loops = true;
    for (int k = 0; k < 1000; ++k) {
        Program src = random_program(rng, o);
        Program tgt = dce_transform(src, liveness(src, full_live(src))).target;
        DceWitness w(src, tgt);
        SimNode n = w.initial(random_state(tgt, rng));
        for (const auto& d : random_walk(tgt, n.tgt, rng, 16)) {
            REQUIRE(w.related(n));
            auto sd = w.transform(n, d);
            REQUIRE(sd);
            auto s = step_spec(src, n.src, *sd);
            auto t = step_spec(tgt, n.tgt, d);
            REQUIRE(s);
            n = {s->first, t->first, {}};
        }
        REQUIRE(w.related(n));
    }
}

// Property: source and target SNI verdicts agree per pair at width 2.
TEST_CASE("dce preserves SNI verdicts") {
    std::mt19937_64 rng(53);
    GenOptions o;
    o.pcs = 5;
    int cases = 0;
    const Bounds b{12, 2};
    while (cases < 1000) {
        Program src = random_program(rng, o);
        Program tgt = dce_transform(src, liveness(src, full_live(src))).target;
        State base = random_state(src, rng);
        for (const auto& [x, y] : enumerate_pairs(src, base, PairSource::exhaustive())) {
            if (cases >= 1000) break;
            const bool ss = check_sni_pair(src, x, y, b).secure();
            const bool ts = check_sni_pair(tgt, x, y, b).secure();
            // Source security implies target security.
            if (ss) REQUIRE(ts);
            ++cases;
        }
    }
}
