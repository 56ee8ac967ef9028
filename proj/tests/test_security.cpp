#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "specnip/security.hpp"

using namespace specnip;
using namespace testing_support;

TEST_CASE("low equivalence") {
    Program p = corpus_program("ra_target.sp");
    State a = corpus_state(p, "ra_initial.init");
    CHECK(low_equivalent(p, a, a));
    State b = corpus_state(p, "ra_initial_alt.init");
    CHECK(low_equivalent(p, a, b));
    State c = a;
    c.regs[idx(*p.find_reg("b"))] = 3;
    CHECK_FALSE(low_equivalent(p, a, c));
    State d = a;
    d.mem[p.cell(*p.find_var("buf"), 1)] = 9;
    CHECK_FALSE(low_equivalent(p, a, d));
}

TEST_CASE("speculation-free safety") {
    Program src = corpus_program("ra_source.sp");
    State s = initial_state(src);
    s.regs[idx(*src.find_reg("b"))] = 2;
    s.regs[idx(*src.find_reg("size"))] = 8;
    CHECK(check_safety(src, s, 32).kind == SafetyResult::Kind::safe);

    Program st = parse_program("mem buf 2 low\nentry L0\nL0: store buf[b] <- x -> L1\nL1: ret\n");
    State u = initial_state(st);
    u.regs[idx(*st.find_reg("b"))] = 5;
    auto r = check_safety(st, u, 32);
    CHECK(r.kind == SafetyResult::Kind::unsafe);
    CHECK(r.step == 0);

    Program loop = parse_program("entry L0\nL0: nop -> L0\n");
    CHECK(check_safety(loop, initial_state(loop), 50).kind == SafetyResult::Kind::bound_exhausted);
}

TEST_CASE("allocated example leaks through the spilled register") {
    Program tgt = corpus_program("ra_target.sp");
    State a = corpus_state(tgt, "ra_initial.init"), b = corpus_state(tgt, "ra_initial_alt.init");
    SniVerdict v = check_sni_pair(tgt, a, b, {32, 3});
    REQUIRE_FALSE(v.secure());
    auto spec = std::find(v.directives.begin(), v.directives.end(), Directive::spec());
    REQUIRE(spec != v.directives.end());
    CHECK(std::find(spec, v.directives.end(), Directive::store(*tgt.stack_var(), 0)) != v.directives.end());
    CHECK(v.divergence.kind == Divergence::Kind::different_leak);
    CHECK(v.divergence.leak1.kind == LeakKind::branch);

    // The witness replays: both runs agree up to the last step, whose leaks differ.
    Execution e1 = run_directives(tgt, single(a), v.directives);
    Execution e2 = run_directives(tgt, single(b), v.directives);
    REQUIRE(e1.steps.size() == v.directives.size());
    REQUIRE(e2.steps.size() == v.directives.size());
    for (std::size_t k = 0; k + 1 < v.directives.size(); ++k) CHECK(e1.steps[k].leak == e2.steps[k].leak);
    CHECK(e1.steps.back().leak == v.divergence.leak1);
    CHECK(e2.steps.back().leak == v.divergence.leak2);

    // Mirrored verdict for swapped arguments.
    SniVerdict m = check_sni_pair(tgt, b, a, {32, 3});
    REQUIRE_FALSE(m.secure());
    CHECK(m.directives == v.directives);
    CHECK(m.divergence.leak1 == v.divergence.leak2);
}

TEST_CASE("the source of the example is secure on the same pair") {
    RAWitness w = ra_witness();
    State a = corpus_state(w.target, "ra_initial.init"), b = corpus_state(w.target, "ra_initial_alt.init");
    CHECK(check_sni_pair(w.source, source_initial(w, a), source_initial(w, b), {32, 3}).secure());
}

TEST_CASE("identical states are secure") {
    Program tgt = corpus_program("ra_target.sp");
    State a = corpus_state(tgt, "ra_initial.init");
    CHECK(check_sni_pair(tgt, a, a, {32, 3}).secure());
}

TEST_CASE("constructed branch leak and a program without high reads") {
    Program leak = parse_program("width 2\nmem h 1 high\nentry L0\nL0: load x <- h[#0] -> L1\nL1: if x ? L2 : L2\nL2: ret\n");
    CHECK_FALSE(check_sni(leak, initial_state(leak), PairSource::exhaustive(), {}).secure());

    Program quiet = parse_program("width 2\nmem h 1 high\nmem l 2 low\nentry L0\nL0: load x <- l[i] -> L1\nL1: if x ? L2 : L2\nL2: ret\n");
    SniVerdict v = check_sni(quiet, initial_state(quiet), PairSource::exhaustive(), {});
    CHECK(v.secure());
    // The three other values of h, each against the first.
    CHECK(v.pairs == 3);
}

TEST_CASE("dce source is secure exhaustively at width 2") {
    Program p = with_width(corpus_program("dce_source.sp"), 2);
    State s = corpus_state(p, "dce_initial.init");
    CHECK(check_sni(p, s, PairSource::exhaustive(), {16, 2}).secure());
}

TEST_CASE("pair enumeration") {
    Program p = parse_program("width 2\nmem h 2 high\nmem l 1 low\nentry L0\nL0: ret\n");
    State base = initial_state(p);
    base.mem[p.cell(*p.find_var("l"), 0)] = 3;
    auto vs = high_variants(p, base);
    REQUIRE(vs.size() == 16);
    // First high cell most significant.
    CHECK(vs[1].mem[p.cell(*p.find_var("h"), 1)] == 1);
    CHECK(vs[4].mem[p.cell(*p.find_var("h"), 0)] == 1);
    for (const auto& v : vs) CHECK(low_equivalent(p, base, v));
    CHECK(enumerate_pairs(p, base, PairSource::exhaustive()).size() == 256);
    auto s1 = sample_pairs(p, base, 20, 7), s2 = sample_pairs(p, base, 20, 7);
    CHECK(s1 == s2);
    CHECK_THROWS_AS(high_variants(p, base, 3), std::invalid_argument);
}

// Oracle: the synchronised search agrees with comparing explored behaviour sets.
TEST_CASE("synchronised search agrees with behaviour sets") {
    std::mt19937_64 rng(31);
    GenOptions o;
    o.pcs = 5;
    o.regs = 2;
    const Bounds b{10, 2};
    int cases = 0;
    while (cases < 1000) {
        Program p = random_program(rng, o);
        State base = random_state(p, rng);
        for (const auto& [x, y] : enumerate_pairs(p, base, PairSource::sampled(1, rng()))) {
            BehaviorSet bx = explore_behaviors(p, single(x), b), by = explore_behaviors(p, single(y), b);
            SniVerdict v = check_sni_pair(p, x, y, b);
            // Truncated prefixes differ only when behaviours differ before the cut.
            const bool same = bx.terminated == by.terminated && bx.truncated == by.truncated;
            INFO(print_program(p));
            REQUIRE(v.secure() == same);
            ++cases;
        }
    }
}
