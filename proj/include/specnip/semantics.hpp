#pragma once

#include <compare>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "specnip/ir.hpp"

namespace specnip {

struct State {
    PcId pc{};
    std::vector<Value> regs;  // indexed by RegId
    std::vector<Value> mem;   // indexed by Program::cell
    auto operator<=>(const State&) const = default;
};

// Stack of states; back() is the executing frame.
struct SpecState {
    std::vector<State> frames;
    State& top() { return frames.back(); }
    const State& top() const { return frames.back(); }
    std::size_t depth() const { return frames.size(); }
    bool speculating() const { return frames.size() >= 2; }
    auto operator<=>(const SpecState&) const = default;
};

enum class DirKind : std::uint8_t { step, branch, spec, rollback, load, store };

struct Directive {
    DirKind kind = DirKind::step;
    VarId var{};
    Value offset = 0;

    static Directive step() { return {DirKind::step}; }
    static Directive branch() { return {DirKind::branch}; }
    static Directive spec() { return {DirKind::spec}; }
    static Directive rollback() { return {DirKind::rollback}; }
    static Directive load(VarId v, Value off) { return {DirKind::load, v, off}; }
    static Directive store(VarId v, Value off) { return {DirKind::store, v, off}; }
    auto operator<=>(const Directive&) const = default;
};

enum class LeakKind : std::uint8_t { none, branch, load, store, rollback };

struct Leakage {
    LeakKind kind = LeakKind::none;
    Value value = 0;  // address, or 0/1 for branch outcomes

    static Leakage none() { return {}; }
    static Leakage branch(bool b) { return {LeakKind::branch, b ? 1u : 0u}; }
    static Leakage load(Value a) { return {LeakKind::load, a}; }
    static Leakage store(Value a) { return {LeakKind::store, a}; }
    static Leakage rollback() { return {LeakKind::rollback}; }
    auto operator<=>(const Leakage&) const = default;
};

struct Trace {
    std::vector<Leakage> leaks;
    std::vector<Directive> directives;
    auto operator<=>(const Trace&) const = default;
};

State initial_state(const Program& p);
SpecState single(State s);

bool is_final(const Program& p, const SpecState& v);

std::optional<std::pair<State, Leakage>> step_spec_free(const Program& p, const State& s,
                                                        const Directive& d);
std::optional<std::pair<SpecState, Leakage>> step_spec(const Program& p, const SpecState& v,
                                                       const Directive& d);

// Every directive meaningful for p, in canonical order.
std::vector<Directive> directive_universe(const Program& p);
// Sorted by Directive ordering.
std::vector<Directive> enabled_directives(const Program& p, const SpecState& v);

struct ExecStep {
    Directive directive;
    Leakage leak;
    SpecState after;
};

struct Execution {
    enum class Status { completed, stuck, final };
    SpecState initial;
    std::vector<ExecStep> steps;
    Status status = Status::completed;
    std::size_t stuck_index = 0;

    Trace trace() const;
    const SpecState& last() const { return steps.empty() ? initial : steps.back().after; }
};

Execution run_directives(const Program& p, const SpecState& v0, std::span<const Directive> ds);

struct Bounds {
    unsigned max_steps = 32;
    unsigned max_depth = 3;
};

struct BehaviorSet {
    std::set<Trace> terminated;
    std::set<Trace> truncated;
    bool operator==(const BehaviorSet&) const = default;
};

BehaviorSet explore_behaviors(const Program& p, const SpecState& v0, const Bounds& b);

bool same_point(const SpecState& a, const SpecState& b);

}  // namespace specnip
