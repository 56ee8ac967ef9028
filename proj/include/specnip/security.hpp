#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "specnip/semantics.hpp"

namespace specnip {

bool low_equivalent(const Program& p, const State& a, const State& b);

struct SafetyResult {
    enum class Kind { safe, unsafe, bound_exhausted };
    Kind kind = Kind::safe;
    std::size_t step = 0;  // index of the unsafe step
};

SafetyResult check_safety(const Program& p, const State& s0, unsigned max_steps);

struct Divergence {
    enum class Kind { different_leak, different_enabled };
    Kind kind = Kind::different_leak;
    Leakage leak1, leak2;
    std::vector<Directive> enabled1, enabled2;
};

struct SniVerdict {
    enum class Kind { secure, violation };
    Kind kind = Kind::secure;
    Bounds bounds;
    std::size_t truncated = 0;
    std::size_t states = 0;
    std::size_t pairs = 0;
    // Set for violations.
    State first, second;
    std::vector<Directive> directives;
    Divergence divergence;

    bool secure() const { return kind == Kind::secure; }
};

// Synchronised breadth-first search over joint states; exact up to the bounds.
SniVerdict check_sni_pair(const Program& p, const State& a, const State& b, const Bounds& bounds);

// All assignments of the high cells of base, lexicographic with the first high cell most
// significant. Throws std::invalid_argument when |high cells| * width exceeds budget_bits.
std::vector<State> high_variants(const Program& p, const State& base, unsigned budget_bits = 16);

std::vector<std::pair<State, State>> sample_pairs(const Program& p, const State& base,
                                                  std::size_t n, std::uint64_t seed);

struct PairSource {
    enum class Mode { exhaustive, sampled, given };
    Mode mode = Mode::exhaustive;
    std::size_t samples = 100;
    std::uint64_t seed = 1;
    unsigned budget_bits = 16;
    std::vector<std::pair<State, State>> pairs;

    static PairSource exhaustive() { return {}; }
    static PairSource sampled(std::size_t n, std::uint64_t seed) {
        return {Mode::sampled, n, seed, 16, {}};
    }
    static PairSource given(std::vector<std::pair<State, State>> ps) {
        return {Mode::given, 0, 1, 16, std::move(ps)};
    }
};

// Low-equivalent pairs described by the source, with low parts taken from base. Exhaustive mode
// yields every ordered pair.
std::vector<std::pair<State, State>> enumerate_pairs(const Program& p, const State& base,
                                                     const PairSource& src);

// First violation found, else Secure with aggregated statistics. Exhaustive mode compares every
// variant against the first one: bounded behaviour equality is an equivalence.
SniVerdict check_sni(const Program& p, const State& base, const PairSource& src,
                     const Bounds& bounds);

}  // namespace specnip
