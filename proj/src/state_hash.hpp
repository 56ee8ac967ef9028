#pragma once

#include <cstddef>
#include <functional>

#include "specnip/semantics.hpp"

namespace specnip::detail {

inline void mix(std::size_t& h, std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); }

inline void hash_into(std::size_t& h, const State& s) {
    mix(h, idx(s.pc));
    for (Value v : s.regs) mix(h, v);
    for (Value v : s.mem) mix(h, v);
}

inline void hash_into(std::size_t& h, const SpecState& v) {
    mix(h, v.depth());
    for (const auto& s : v.frames) hash_into(h, s);
}

}  // namespace specnip::detail
