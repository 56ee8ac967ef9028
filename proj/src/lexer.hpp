#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "specnip/text.hpp"

namespace specnip::detail {

struct Token {
    std::string text;
    std::size_t col;  // 1-based
};

inline bool word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '.';
}

// '#' starts a comment when it opens the line or follows whitespace.
inline std::vector<Token> tokenize(std::string_view line, std::size_t lineno) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) break;
        if (word_char(c)) {
            std::size_t j = i;
            while (j < line.size() && word_char(line[j])) ++j;
            out.push_back({std::string(line.substr(i, j - i)), i + 1});
            i = j;
            continue;
        }
        if ((c == '-' && i + 1 < line.size() && line[i + 1] == '>') ||
            (c == '<' && i + 1 < line.size() && line[i + 1] == '-')) {
            out.push_back({std::string(line.substr(i, 2)), i + 1});
            i += 2;
            continue;
        }
        if (std::string_view("[]#:?=,|").find(c) != std::string_view::npos) {
            out.push_back({std::string(1, c), i + 1});
            ++i;
            continue;
        }
        throw ParseError(lineno, i + 1, std::string("unexpected character '") + c + "'");
    }
    return out;
}

class Cursor {
public:
    Cursor(std::vector<Token> toks, std::size_t lineno, std::size_t line_len)
        : toks_(std::move(toks)), line_(lineno), end_col_(line_len + 1) {}

    bool done() const { return pos_ == toks_.size(); }
    std::size_t line() const { return line_; }
    std::size_t col() const { return done() ? end_col_ : toks_[pos_].col; }
    const std::string& peek() const {
        static const std::string empty;
        return done() ? empty : toks_[pos_].text;
    }
    bool accept(std::string_view t) {
        if (!done() && toks_[pos_].text == t) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(std::string_view t) {
        if (!accept(t)) fail("expected '" + std::string(t) + "'");
    }
    std::string word(std::string_view what) {
        if (done() || !word_char(toks_[pos_].text[0]))
            fail("expected " + std::string(what));
        return toks_[pos_++].text;
    }
    std::string ident(std::string_view what) {
        if (done() || !word_char(toks_[pos_].text[0]) ||
            (toks_[pos_].text[0] >= '0' && toks_[pos_].text[0] <= '9') ||
            toks_[pos_].text.find('.') != std::string::npos)
            fail("expected " + std::string(what));
        return toks_[pos_++].text;
    }
    unsigned long long number(std::string_view what) {
        std::size_t c = col();
        std::string w = word(what);
        unsigned long long v = 0;
        auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
        if (ec != std::errc() || p != w.data() + w.size())
            throw ParseError(line_, c, "expected " + std::string(what));
        return v;
    }
    void finish() {
        if (!done()) fail("unexpected trailing '" + peek() + "'");
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, col(), msg); }
    [[noreturn]] void fail_at(std::size_t c, const std::string& msg) const {
        throw ParseError(line_, c, msg);
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::size_t line_;
    std::size_t end_col_;
};

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

}  // namespace specnip::detail
