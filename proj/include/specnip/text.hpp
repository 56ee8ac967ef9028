#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "specnip/ir.hpp"

namespace specnip {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Accepts an optional `width <bits>` header line besides the documented grammar.
Program parse_program(std::string_view text);
std::string print_program(const Program& p);

// Equality by names rather than internal ids.
bool structurally_equal(const Program& a, const Program& b);

}  // namespace specnip
