#pragma once

#include <random>
#include <string>
#include <vector>

#include "specnip/io.hpp"
#include "specnip/liveness.hpp"
#include "specnip/regalloc.hpp"
#include "specnip/semantics.hpp"
#include "specnip/text.hpp"

namespace testing_support {

using namespace specnip;

std::string read_text(const std::string& path);
std::string corpus_text(const std::string& name);
Program corpus_program(const std::string& name);
State corpus_state(const Program& p, const std::string& name);
Program with_width(const Program& p, unsigned w);

// The allocated example and its width-2 variant.
RAWitness ra_witness();
RAWitness ra_witness_w2();

struct GenOptions {
    unsigned regs = 3;
    unsigned pcs = 6;
    unsigned width = 2;
    bool shuffles = false;  // declare stk and emit move/fill/spill/slh/sfence
    bool loops = false;     // allow backward edges
};

// Text of a random valid program: regs r0.., low buf[2], high sec[1], labels L0.. with entry L0.
std::string random_program_text(std::mt19937_64& rng, const GenOptions& o);
Program random_program(std::mt19937_64& rng, const GenOptions& o);
State random_state(const Program& p, std::mt19937_64& rng);

// A random program with an initial state from which it runs memory safe without speculation.
// Allocation results only promise anything for such sources.
struct SafeDraw {
    Program p;
    State init;
};
SafeDraw random_safe(std::mt19937_64& rng, const GenOptions& o);

// Uniform choice among enabled directives until final, stuck or n steps.
std::vector<Directive> random_walk(const Program& p, const SpecState& v0, std::mt19937_64& rng,
                                   std::size_t n, unsigned max_depth = 3);

// False for instructions whose only effect is a dead write; liveness ignores their operands.
bool effective(const Program& p, PcId pc, const LiveSet& after);

// Smallest k the allocator accepts for p: every instruction needs its uses in registers, plus
// one more for a definition when all uses stay live past it.
unsigned min_registers(const Program& p);

}  // namespace testing_support
