#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "specnip/semantics.hpp"
#include "specnip/text.hpp"

namespace specnip {

std::string format_directive(const Program& p, const Directive& d);
std::string format_leak(const Leakage& l);
std::string format_pc_stack(const Program& p, const SpecState& v);
std::string format_trace(const Program& p, const Trace& t);

// Directive script: one of step | if | spec | rb | load <var> <off> | store <var> <off> per line.
std::vector<Directive> parse_directives(const Program& p, std::string_view text);
std::string print_directives(const Program& p, const std::vector<Directive>& ds);

// Initial-state file: `reg <name> <int>` and `cell <var> <off> <int>`; unspecified values are 0.
State parse_initial_state(const Program& p, std::string_view text);
std::string print_initial_state(const Program& p, const State& s);

// `<directive> | <leakage> | <pc-stack>` per step.
std::string format_execution(const Program& p, const Execution& e);

}  // namespace specnip
