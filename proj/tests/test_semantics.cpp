#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace specnip;
using namespace testing_support;

namespace {

SpecState at(const Program& p, State s, const char* label) {
    s.pc = *p.find_pc(label);
    return single(std::move(s));
}

std::size_t count_kind(const std::vector<Directive>& ds, DirKind k) {
    return std::count_if(ds.begin(), ds.end(), [&](const Directive& d) { return d.kind == k; });
}

}  // namespace

TEST_CASE("out-of-bounds store redirected to the stack slot") {
    Program p = corpus_program("simplerv1.sp");
    State s = corpus_state(p, "simplerv1.init");
    s.pc = *p.find_pc("3");
    VarId stk = *p.stack_var();
    auto r = step_spec_free(p, s, Directive::store(stk, 0));
    REQUIRE(r);
    CHECK(r->second == Leakage::store(8));
    CHECK(r->first.mem[p.cell(stk, 0)] == 1516);
    CHECK(p.label(r->first.pc) == "4");
    // Only the chosen location may be written.
    CHECK_FALSE(step_spec_free(p, s, Directive::step()));
}

TEST_CASE("exit has no successor") {
    Program p = parse_program("entry L0\nL0: ret\n");
    for (const auto& d : directive_universe(p)) CHECK_FALSE(step_spec_free(p, initial_state(p), d));
    CHECK(enabled_directives(p, single(initial_state(p))).empty());
}

// Table-driven oracle: dst gets the addressed cell, the leak is the address.
TEST_CASE("in-bounds register-addressed loads") {
    std::mt19937_64 rng(3);
    Program p = parse_program("width 3\nmem buf 5 low\nentry L0\nL0: load d <- buf[i] -> L1\nL1: ret\n");
    const RegId d = *p.find_reg("d"), i = *p.find_reg("i");
    const VarId buf = *p.find_var("buf");
    for (int k = 0; k < 1000; ++k) {
        State s = random_state(p, rng);
        s.regs[idx(i)] = k % 5;
        std::vector<Value> table(s.mem.begin() + p.cell(buf, 0), s.mem.begin() + p.cell(buf, 0) + 5);
        auto r = step_spec_free(p, s, Directive::step());
        REQUIRE(r);
        CHECK(r->first.regs[idx(d)] == table[k % 5]);
        CHECK(r->second == Leakage::load(k % 5));
    }
}

TEST_CASE("spec pushes the mispredicted copy and rollback pops it") {
    Program p = corpus_program("simplerv1.sp");
    State s = corpus_state(p, "simplerv1.init");
    auto v = run_directives(p, single(s), std::vector{Directive::step()}).last();
    CHECK(format_pc_stack(p, v) == "[2]");
    auto sp = step_spec(p, v, Directive::spec());
    REQUIRE(sp);
    CHECK(sp->second == Leakage::branch(false));
    CHECK(format_pc_stack(p, sp->first) == "[2 3]");
    CHECK(sp->first.frames[0] == v.frames[0]);
    auto rb = step_spec(p, sp->first, Directive::rollback());
    REQUIRE(rb);
    CHECK(rb->second == Leakage::rollback());
    CHECK(format_pc_stack(p, rb->first) == "[2]");
}

TEST_CASE("sfence while speculating only allows rollback") {
    Program p = parse_program("mem buf 2 low\nentry L0\nL0: if c ? L1 : L1\nL1: sfence -> L2\nL2: ret\n");
    auto v = step_spec(p, single(initial_state(p)), Directive::spec());
    REQUIRE(v);
    REQUIRE(v->first.depth() == 2);
    CHECK_FALSE(step_spec(p, v->first, Directive::step()));
    CHECK(enabled_directives(p, v->first) == std::vector{Directive::rollback()});
}

TEST_CASE("enabled directives") {
    Program p = parse_program("mem buf 2 low\nentry L0\nL0: if c ? L1 : L1\nL1: ret\n");
    CHECK(enabled_directives(p, single(initial_state(p))) ==
          std::vector{Directive::branch(), Directive::spec()});

    Program q = parse_program(
        "mem buf 8 low\nmem stk 4 low\nentry L0\nL0: if c ? L1 : L1\nL1: load a <- buf[i] -> L2\nL2: ret\n");
    State s = initial_state(q);
    s.regs[idx(*q.find_reg("i"))] = 200;
    auto v = step_spec(q, single(s), Directive::spec());
    REQUIRE(v);
    auto en = enabled_directives(q, v->first);
    CHECK(en.size() == 13);
    CHECK(count_kind(en, DirKind::load) == 12);
    CHECK(count_kind(en, DirKind::rollback) == 1);
}

TEST_CASE("the streaming attack script runs to completion") {
    Program p = corpus_program("specv1.sp");
    State s = corpus_state(p, "specv1.init");
    auto ds = parse_directives(p, corpus_text("specv1.directives"));
    Execution e = run_directives(p, single(s), ds);
    REQUIRE(e.status == Execution::Status::completed);
    CHECK(e.steps.back().leak == Leakage::branch(true));
    CHECK(count_kind(ds, DirKind::spec) == 1);
}

TEST_CASE("empty script and lone rollback") {
    Program p = corpus_program("simplerv1.sp");
    SpecState v = single(corpus_state(p, "simplerv1.init"));
    Execution e = run_directives(p, v, {});
    CHECK(e.steps.empty());
    CHECK(e.status == Execution::Status::completed);
    Execution r = run_directives(p, v, std::vector{Directive::rollback()});
    CHECK(r.status == Execution::Status::stuck);
    CHECK(r.stuck_index == 0);
}

TEST_CASE("explore_behaviors") {
    Program ret = parse_program("entry L0\nL0: ret\n");
    BehaviorSet b = explore_behaviors(ret, single(initial_state(ret)), {});
    CHECK(b.terminated == std::set<Trace>{Trace{}});
    CHECK(b.truncated.empty());

    Program line = parse_program("entry L0\nL0: a = b add c -> L1\nL1: nop -> L2\nL2: c = a sub b -> L3\nL3: ret\n");
    BehaviorSet l = explore_behaviors(line, single(initial_state(line)), {});
    CHECK(l.terminated.size() == 1);
    CHECK(l.terminated.begin()->directives.size() == 3);

    Program dce = corpus_program("dce_target.sp");
    BehaviorSet d = explore_behaviors(dce, single(corpus_state(dce, "dce_initial.init")), {8, 3});
    const std::vector spec3{Directive::spec(), Directive::step(), Directive::step()};
    bool has_spec = false, has_if = false;
    for (const auto* set : {&d.terminated, &d.truncated})
        for (const auto& t : *set) {
            if (t.directives.size() >= 3 && std::equal(spec3.begin(), spec3.end(), t.directives.begin()))
                has_spec = true;
            if (!t.directives.empty() && t.directives[0] == Directive::branch()) has_if = true;
        }
    CHECK(has_spec);
    CHECK(has_if);
}

TEST_CASE("loops exhaust the step bound visibly") {
    Program p = parse_program("entry L0\nL0: nop -> L0\n");
    BehaviorSet b = explore_behaviors(p, single(initial_state(p)), {10, 2});
    CHECK(b.terminated.empty());
    CHECK(b.truncated.size() == 1);
}

// Property: Directive-Determinism, rollback erasure and top-frame locality on random states.
TEST_CASE("determinism and frame locality on random runs") {
    std::mt19937_64 rng(17);
    GenOptions o;
    o.shuffles = true;
    o.loops = true;
    o.pcs = 7;
    for (int k = 0; k < 1000; ++k) {
        Program p = random_program(rng, o);
        SpecState v = single(random_state(p, rng));
        auto ds = random_walk(p, v, rng, 12);
        for (const auto& d : ds) {
            auto a = step_spec(p, v, d), b = step_spec(p, v, d);
            REQUIRE(a);
            REQUIRE(*a == *b);
            // Every universe directive yields at most one successor, consistent with enabledness.
            auto en = enabled_directives(p, v);
            for (const auto& u : directive_universe(p))
                REQUIRE(step_spec(p, v, u).has_value() ==
                        std::binary_search(en.begin(), en.end(), u));
            if (d.kind != DirKind::spec && d.kind != DirKind::rollback)
                for (std::size_t f = 0; f + 1 < v.depth(); ++f) REQUIRE(a->first.frames[f] == v.frames[f]);
            v = a->first;
        }
    }
}

TEST_CASE("rollback erases a speculation that never pops") {
    std::mt19937_64 rng(23);
    GenOptions o;
    o.pcs = 8;
    int done = 0;
    while (done < 1000) {
        Program p = random_program(rng, o);
        SpecState v = single(random_state(p, rng));
        auto pre = random_walk(p, v, rng, 4, 1);
        v = run_directives(p, v, pre).last();
        auto sp = step_spec(p, v, Directive::spec());
        if (!sp) {
            ++done;
            continue;
        }
        SpecState w = sp->first;
        std::uniform_int_distribution<int> len(0, 4);
        for (int n = len(rng); n > 0; --n) {
            auto en = enabled_directives(p, w);
            std::erase_if(en, [](const Directive& d) {
                return d.kind == DirKind::rollback || d.kind == DirKind::spec;
            });
            if (en.empty()) break;
            w = step_spec(p, w, en[rng() % en.size()])->first;
        }
        auto rb = step_spec(p, w, Directive::rollback());
        REQUIRE(rb);
        REQUIRE(rb->first == v);
        ++done;
    }
}

// Property: Program-Counter-Leakage over same-point pairs.
TEST_CASE("same-point states stay same-point under equal directives and leaks") {
    std::mt19937_64 rng(29);
    GenOptions o;
    o.shuffles = true;
    o.loops = true;
    for (int k = 0; k < 1000; ++k) {
        Program p = random_program(rng, o);
        SpecState v1 = single(random_state(p, rng));
        SpecState v2 = single(random_state(p, rng));
        for (const auto& d : random_walk(p, v1, rng, 12)) {
            REQUIRE(same_point(v1, v2));
            auto a = step_spec(p, v1, d), b = step_spec(p, v2, d);
            if (!a || !b || a->second != b->second) break;
            v1 = a->first;
            v2 = b->first;
        }
        REQUIRE(same_point(v1, v2));
    }
}
