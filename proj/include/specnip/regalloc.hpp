#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "specnip/liveness.hpp"
#include "specnip/semantics.hpp"

namespace specnip {

struct Slot {
    Value n = 0;
    auto operator<=>(const Slot&) const = default;
};

// A hardware register of the target program or a stack slot.
using Location = std::variant<RegId, Slot>;
// Indexed by source register; nullopt is an unmapped register.
using Relocation = std::vector<std::optional<Location>>;

struct RAWitness {
    Program source;
    Program target;
    std::vector<PcId> phi;         // by source pc index
    std::vector<Relocation> rho;   // by target pc index

    // Source pc matched with tgt, if any.
    std::optional<PcId> matched_source(PcId tgt) const;
    const Relocation& rho_at(PcId tgt) const { return rho[idx(tgt)]; }
};

struct RADiagnostic {
    enum class Kind { instruction_matching, shuffle_conformity, obeying_liveness };
    Kind kind;
    std::string pc;
    std::string message;
};

std::string_view to_string(RADiagnostic::Kind k);

// Register allocation uses Mems as exit fact (no register is live after the program) and counts
// the operands of dead instructions as used, since the target still executes them.
Liveness ra_liveness(const Program& source);

// Source registers live at each target pc: live-in of the matched source pc, or for shuffle
// pcs the live-in of the source pc whose image ends the shuffle sequence.
std::vector<std::vector<bool>> target_live(const RAWitness& w, const Liveness& live);

std::vector<RADiagnostic> validate_ra(const RAWitness& w, const Liveness& live);

class AllocationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Linear greedy allocation in reverse postorder, evicting the value with the furthest next use.
RAWitness allocate(const Program& p, unsigned k);

RAWitness parse_ra_witness(const Program& source, const Program& target, std::string_view text);
std::string serialize_ra_witness(const RAWitness& w);

std::string format_location(const Program& target, const std::optional<Location>& l);

// Source state (entry, ρ∘relocation, μ without stk) for a target initial state.
State source_initial(const RAWitness& w, const State& target_init);
// A target initial state that source_initial maps back to src (stk holds spilled values).
State lift_initial(const RAWitness& w, const State& src);

}  // namespace specnip
