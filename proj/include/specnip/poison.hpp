#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "specnip/regalloc.hpp"

namespace specnip {

// ⊥ < H < P and ⊥ < W < P; H and W are incomparable.
enum class Poison : std::uint8_t { bot, H, W, P };

Poison join(Poison a, Poison b);
bool leq(Poison a, Poison b);
char to_char(Poison v);

// Over source registers and source memory cells (the source declares no stk).
struct PoisonType {
    std::vector<Poison> regs;
    std::vector<Poison> cells;

    PoisonType join(const PoisonType& o) const;
    bool leq(const PoisonType& o) const;
    bool all_bottom() const;
    auto operator<=>(const PoisonType&) const = default;
};

PoisonType uniform_poison(const Program& source, Poison v);

struct ProductState {
    SpecState src;
    SpecState tgt;
    std::vector<PoisonType> pi;  // one per speculation level
    auto operator<=>(const ProductState&) const = default;
};

struct ProductTransition {
    std::optional<Directive> src_dir;  // empty while the source stutters on shuffles
    Leakage src_leak;
    Directive tgt_dir;
    Leakage tgt_leak;
    std::string rule;
    // False when a poison guard failed and the source replay ignores it.
    bool guarded = true;
    ProductState after;
};

class PoisonProduct {
public:
    explicit PoisonProduct(RAWitness w);

    const RAWitness& witness() const { return w_; }
    const std::vector<std::vector<bool>>& target_live() const { return tlive_; }
    std::optional<PcId> matched_source(PcId tgt) const { return inv_[idx(tgt)]; }

    ProductState initial(const State& tgt_init) const;
    // Value agreement up to relocation and poison at every level, over live registers.
    bool related(const ProductState& s) const;

    // One transition per enabled target directive with a guarded replay.
    std::vector<ProductTransition> transitions(const ProductState& s) const;
    // Canonical replay of a target directive; nullopt when stuck and unguarded is false.
    std::optional<ProductTransition> replay(const ProductState& s, const Directive& d,
                                            bool unguarded = false) const;

private:
    RAWitness w_;
    Liveness live_;
    std::vector<std::vector<bool>> tlive_;
    std::vector<std::optional<PcId>> inv_;
    std::vector<std::optional<VarId>> src_var_of_tgt_;

    std::optional<ProductTransition> matched(const ProductState& s, const Directive& d,
                                             bool unguarded) const;
    std::optional<ProductTransition> shuffling(const ProductState& s, const Directive& d) const;
};

// Π indexed by target pc: each target pc is one product pc, paired with its matched source pc
// or with the source pc that ends its shuffle sequence.
struct StaticPoison {
    std::vector<std::optional<PcId>> source_of;  // by target pc; nullopt if unreachable
    std::vector<PoisonType> values;              // by target pc
    std::size_t iterations = 0;
};

StaticPoison poison_analysis(const RAWitness& w);

struct TypabilityViolation {
    enum class Kind { address, branch };
    Kind kind;
    PcId source_pc;
    PcId target_pc;
    RegId reg;  // source register
    Poison value;
};

std::vector<TypabilityViolation> check_poison_typable(const RAWitness& w, const StaticPoison& pi);

struct FixStep {
    std::string label;     // inserted target pc
    std::string before;    // target pc it precedes
    std::string kind;      // "sfence" or "slh"
    std::string reg;       // source register of the violation
};

struct FixReport {
    std::vector<FixStep> inserted;
    std::size_t iterations = 0;
    bool typable = false;
    bool cap_exceeded = false;
};

std::pair<RAWitness, FixReport> fix_ra(const RAWitness& w);

std::string_view to_string(TypabilityViolation::Kind k);

}  // namespace specnip
