#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "helpers.hpp"

using namespace specnip;
using namespace testing_support;

TEST_CASE("simplified listing parses with entry 1 and a two-way branch at 2") {
    Program p = corpus_program("simplerv1.sp");
    CHECK(p.label(p.entry()) == "1");
    CHECK(p.width() == 16);
    const auto& i = p.at(*p.find_pc("2"));
    REQUIRE(std::holds_alternative<ins::If>(i));
    const auto& br = std::get<ins::If>(i);
    CHECK(p.label(br.on_true) == "4");
    CHECK(p.label(br.on_false) == "3");
    CHECK(p.pc_count() == 6);
}

TEST_CASE("minimal program") {
    Program p = parse_program("entry L0\nL0: ret\n");
    CHECK(p.label(p.entry()) == "L0");
    CHECK(p.pc_count() == 1);
    CHECK(std::holds_alternative<ins::Exit>(p.at(p.entry())));
    CHECK(print_program(p) == "entry L0\nL0: ret\n");
}

TEST_CASE("constant address out of bounds is a parse error") {
    const char* text = "mem buf 8 low\nentry L0\nL0: load a <- buf[#9] -> L1\nL1: ret\n";
    try {
        parse_program(text);
        FAIL("accepted");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("const address out of bounds") != std::string::npos);
        CHECK(e.line() == 3);
    }
}

TEST_CASE("other parse errors carry positions") {
    CHECK_THROWS_AS(parse_program("entry L0\nL0: nop -> L9\n"), ParseError);
    CHECK_THROWS_AS(parse_program("entry L0\nL0: ret\nL0: ret\n"), ParseError);
    CHECK_THROWS_AS(parse_program("entry L0\nL0: a = b pow c -> L0\n"), ParseError);
    CHECK_THROWS_AS(parse_program("mem stk 1 high\nentry L0\nL0: ret\n"), ParseError);
    CHECK_THROWS_AS(parse_program("entry L0\nL0: fill a <- stk#0 -> L0\n"), ParseError);
}

TEST_CASE("dce source prints four instruction lines") {
    std::string t = print_program(corpus_program("dce_source.sp"));
    std::istringstream in(t);
    std::size_t lines = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#' && line.find(": ") != std::string::npos && line.rfind("mem", 0) != 0) ++lines;
    CHECK(lines == 4);
    CHECK(t.find("load a <- buf[i]") != std::string::npos);
}

TEST_CASE("print then parse is the identity on random programs") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 1000; ++k) {
        GenOptions o;
        o.shuffles = k % 2;
        o.loops = k % 3 == 0;
        o.pcs = 2 + k % 8;
        Program p = random_program(rng, o);
        Program q = parse_program(print_program(p));
        REQUIRE(p == q);
    }
}

TEST_CASE("validate_program") {
    CHECK(validate_program(corpus_program("ra_target.sp")).empty());

    ProgramBuilder b;
    PcId l0 = b.label("L0");
    PcId l1 = b.label("L1");
    b.set(l0, ins::Nop{l1});
    b.entry(l0);
    CHECK(validate_program(b.build()).size() == 1);

    ProgramBuilder f;
    f.mem("stk", 2, Level::low);
    PcId m0 = f.label("L0"), m1 = f.label("L1");
    f.set(m0, ins::Fill{f.reg("a"), 2, m1});
    f.set(m1, ins::Exit{});
    f.entry(m0);
    auto ds = validate_program(f.build());
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].pc == "L0");
}

TEST_CASE("uses and defs") {
    ProgramBuilder b;
    VarId buf = b.mem("buf", 8, Level::low);
    RegId a = b.reg("a"), rb = b.reg("b"), c = b.reg("c");
    PcId s = b.label("s");
    UsesDefs ld = uses_defs(ins::Load{a, buf, rb, s});
    CHECK(ld.uses == std::vector{rb});
    CHECK(ld.defs == std::vector{a});
    UsesDefs n = uses_defs(ins::Nop{s});
    CHECK(n.uses.empty());
    CHECK(n.defs.empty());
    UsesDefs as = uses_defs(ins::Asgn{a, rb, BinOp::add, c, s});
    CHECK(as.uses == std::vector{rb, c});
    CHECK(as.defs == std::vector{a});
}

TEST_CASE("binary operators wrap at the width and compare to 0/1") {
    CHECK(apply(BinOp::add, 3, 2, 2) == 1);
    CHECK(apply(BinOp::sub, 0, 1, 8) == 255);
    CHECK(apply(BinOp::mul, 7, 3, 4) == 5);
    CHECK(apply(BinOp::lt, 1, 2, 8) == 1);
    CHECK(apply(BinOp::lt, 2, 2, 8) == 0);
    CHECK(apply(BinOp::eq, 2, 2, 8) == 1);
    CHECK(apply(BinOp::band, 6, 3, 8) == 2);
    CHECK(apply(BinOp::bor, 6, 3, 8) == 7);
}

// Perturbing a register outside uses(i) leaves leak and enabledness alone; the step writes defs only.
TEST_CASE("uses and defs agree with the semantics") {
    std::mt19937_64 rng(5);
    int checked = 0;
    while (checked < 1000) {
        GenOptions o;
        o.shuffles = true;
        Program p = random_program(rng, o);
        if (p.reg_count() == 0) continue;
        State s = random_state(p, rng);
        s.pc = PcId(std::uniform_int_distribution<std::uint32_t>(0, p.pc_count() - 1)(rng));
        const Instr& i = p.at(s.pc);
        UsesDefs ud = uses_defs(i);
        auto in = [](const std::vector<RegId>& v, RegId r) {
            return std::find(v.begin(), v.end(), r) != v.end();
        };
        const RegId r{std::uniform_int_distribution<std::uint32_t>(0, p.reg_count() - 1)(rng)};
        State t = s;
        t.regs[idx(r)] = p.mask(t.regs[idx(r)] + 1);
        const bool used = in(ud.uses, r);
        for (const Directive& d : directive_universe(p)) {
            auto a = step_spec_free(p, s, d);
            auto b = step_spec_free(p, t, d);
            if (!used) {
                REQUIRE(a.has_value() == b.has_value());
                if (a) REQUIRE(a->second == b->second);
            }
            if (a) {
                for (std::size_t k = 0; k < p.reg_count(); ++k)
                    if (!in(ud.defs, RegId(k))) REQUIRE(a->first.regs[k] == s.regs[k]);
            }
        }
        ++checked;
    }
}
