#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "specnip/liveness.hpp"
#include "specnip/poison.hpp"
#include "specnip/security.hpp"

namespace specnip {

// A related pair of source and target states; pi is empty for witnesses without poison.
struct SimNode {
    SpecState src;
    SpecState tgt;
    std::vector<PoisonType> pi;
    auto operator<=>(const SimNode&) const = default;
};

struct SimInterval {
    SimNode start;
    Trace tgt;
    Trace src;
    SimNode end;
    bool guarded = true;
};

struct IntervalSet {
    std::vector<SimInterval> intervals;
    // Target directive prefixes cut by the bounds.
    std::vector<std::vector<Directive>> truncated;
};

class SimWitness {
public:
    virtual ~SimWitness() = default;
    virtual std::string name() const = 0;
    virtual const Program& source() const = 0;
    virtual const Program& target() const = 0;
    virtual State source_initial(const State& tgt) const = 0;
    virtual SimNode initial(const State& tgt) const = 0;
    virtual bool related(const SimNode& n) const = 0;
    virtual IntervalSet intervals(const SimNode& n, const Bounds& b) const = 0;
};

// Lockstep by default. With sync_points, intervals run until the target reaches the entry pc or
// an exit instruction; a rollback forms an interval of its own. Sync-point intervals do not
// cover mid-interval rollbacks, so check_simulation needs the lockstep mode.
class DceWitness : public SimWitness {
public:
    DceWitness(Program source, Program target, bool sync_points = false);
    std::string name() const override { return "dce"; }
    const Program& source() const override { return src_; }
    const Program& target() const override { return tgt_; }
    State source_initial(const State& tgt) const override;
    SimNode initial(const State& tgt) const override;
    bool related(const SimNode& n) const override;
    IntervalSet intervals(const SimNode& n, const Bounds& b) const override;

    // Source directive replaying target directive d; canonical for eliminated unsafe loads.
    std::optional<Directive> transform(const SimNode& n, const Directive& d) const;

private:
    Program src_, tgt_;
    std::vector<LiveSet> live_in_;
    bool sync_;
};

// φ-intervals: a matched step followed by shuffle steps until matched again, cut by a rollback.
class RaWitness : public SimWitness {
public:
    explicit RaWitness(RAWitness w);
    std::string name() const override { return "ra"; }
    const Program& source() const override { return prod_.witness().source; }
    const Program& target() const override { return prod_.witness().target; }
    State source_initial(const State& tgt) const override;
    SimNode initial(const State& tgt) const override;
    bool related(const SimNode& n) const override;
    IntervalSet intervals(const SimNode& n, const Bounds& b) const override;
    const PoisonProduct& product() const { return prod_; }

private:
    PoisonProduct prod_;
};

IntervalSet extract_intervals(const SimWitness& w, const SimNode& n, const Bounds& b);

struct SimVerdict {
    bool pass = true;
    std::size_t nodes = 0;
    std::size_t intervals = 0;
    std::size_t truncated = 0;
    std::string reason;
    std::optional<SimNode> at;
    std::optional<SimInterval> interval;
};

SimVerdict check_simulation(const SimWitness& w, const std::vector<State>& target_inits,
                            const Bounds& b);

struct CubeVerdict {
    bool pass = true;
    std::size_t quadruples = 0;
    std::size_t intervals = 0;
    std::size_t truncated = 0;
    std::string reason;
    std::optional<SimNode> first, second;
    std::optional<SimInterval> interval;
};

// pairs are low-equivalent target initial states.
CubeVerdict check_snippy_cube(const SimWitness& w,
                              const std::vector<std::pair<State, State>>& pairs, const Bounds& b);

}  // namespace specnip
