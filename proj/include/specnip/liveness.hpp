#pragma once

#include <vector>

#include "specnip/dataflow.hpp"
#include "specnip/ir.hpp"

namespace specnip {

struct LiveSet {
    std::vector<bool> regs;
    std::vector<bool> cells;

    bool reg(RegId r) const { return regs[idx(r)]; }
    bool cell(std::size_t c) const { return cells[c]; }
    LiveSet join(const LiveSet& o) const;
    bool leq(const LiveSet& o) const;
    bool operator==(const LiveSet&) const = default;
};

LiveSet empty_live(const Program& p);
// Regs and Mems: the default exit fact, used for all security-facing runs.
LiveSet full_live(const Program& p);
// Mems only; register allocation treats registers as dead at exit.
LiveSet mems_live(const Program& p);

// How an instruction whose definition is dead treats its operands. Transparent is the transfer
// DCE relies on; register allocation still emits such instructions and needs their operands.
enum class DeadDefs { transparent, use_operands };

// Live-in of pc given the facts live after it.
LiveSet live_in(const Program& p, PcId pc, const LiveSet& after,
                DeadDefs mode = DeadDefs::transparent);

// values[pc] is the set live right after pc.
using Liveness = FlowSolution<LiveSet>;

Liveness liveness(const Program& p, const LiveSet& exit_fact,
                  DeadDefs mode = DeadDefs::transparent);

struct DceResult {
    Program target;
    std::vector<bool> replaced;  // by pc index
    Liveness live;
};

DceResult dce_transform(const Program& p, const Liveness& live);

}  // namespace specnip
