#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "qpragma/diagnostics.hpp"

namespace qpragma {

enum class TokKind {
    keyword,
    identifier,
    int_literal,
    float_literal,
    op,
    punct,
    pragma_intro,  // the `#pragma` introducer; the directive ends at end-of-line
    eof,
};

struct Token {
    TokKind kind = TokKind::eof;
    std::string text;
    SourceLoc loc;

    bool is(TokKind k) const { return kind == k; }
    bool is(TokKind k, std::string_view t) const { return kind == k && text == t; }
    bool is_kw(std::string_view t) const { return is(TokKind::keyword, t); }
    bool is_op(std::string_view t) const { return is(TokKind::op, t); }
    bool is_punct(std::string_view t) const { return is(TokKind::punct, t); }
};

namespace detail {
inline const std::unordered_set<std::string>& keywords() {
    static const std::unordered_set<std::string> kws = {
        // types
        "void", "bool", "int64", "uint64", "double",
        "qbool", "quint", "qint", "qarray", "qvector",
        // control flow
        "for", "do", "while", "if", "else", "constexpr", "return",
        // literals / operators with names
        "true", "false", "not",
        // directive vocabulary
        "quantum", "scope", "with", "move", "toDevice", "toHost",
        "ctrl", "routine", "compute", "typed", "dynamic",
        // library constructs with dedicated syntax
        "wall",
    };
    return kws;
}
}  // namespace detail

/// Tokenize a QPC source string. Pure function; throws CompileError on the
/// first unrecognized character.
inline std::vector<Token> tokenize(std::string_view source) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    const size_t n = source.size();

    auto peek = [&](size_t k = 0) -> char { return i + k < n ? source[i + k] : '\0'; };
    auto advance = [&]() {
        if (source[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++i;
    };
    auto push = [&](TokKind k, std::string text, SourceLoc loc) {
        out.push_back({k, std::move(text), loc});
    };

    while (i < n) {
        char c = peek();
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance();
            continue;
        }
        // comments
        if (c == '/' && peek(1) == '/') {
            while (i < n && peek() != '\n') advance();
            continue;
        }
        if (c == '/' && peek(1) == '*') {
            SourceLoc start{line, col};
            advance();
            advance();
            while (i < n && !(peek() == '*' && peek(1) == '/')) advance();
            if (i >= n) throw CompileError(start, "unterminated block comment");
            advance();
            advance();
            continue;
        }
        SourceLoc loc{line, col};
        // pragma introducer
        if (c == '#') {
            size_t j = i + 1;
            while (j < n && (source[j] == ' ' || source[j] == '\t')) ++j;
            if (source.compare(j, 6, "pragma") == 0) {
                std::string text(source.substr(i, j + 6 - i));
                while (i < j + 6) advance();
                push(TokKind::pragma_intro, std::move(text), loc);
                continue;
            }
            throw CompileError(loc, "stray '#' (only '#pragma' directives are supported)");
        }
        // identifiers / keywords
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string text;
            while (i < n && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
                text += peek();
                advance();
            }
            const TokKind kind =
                detail::keywords().count(text) ? TokKind::keyword : TokKind::identifier;
            push(kind, std::move(text), loc);
            continue;
        }
        // numbers
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string text;
            bool is_float = false;
            while (i < n && std::isdigit(static_cast<unsigned char>(peek()))) {
                text += peek();
                advance();
            }
            if (peek() == 'x' && text == "0") {  // hex
                text += peek();
                advance();
                while (i < n && std::isxdigit(static_cast<unsigned char>(peek()))) {
                    text += peek();
                    advance();
                }
            } else {
                if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
                    is_float = true;
                    text += peek();
                    advance();
                    while (i < n && std::isdigit(static_cast<unsigned char>(peek()))) {
                        text += peek();
                        advance();
                    }
                }
                if (peek() == 'e' || peek() == 'E') {
                    size_t save = i;
                    std::string exp;
                    exp += peek();
                    advance();
                    if (peek() == '+' || peek() == '-') {
                        exp += peek();
                        advance();
                    }
                    if (std::isdigit(static_cast<unsigned char>(peek()))) {
                        is_float = true;
                        while (i < n && std::isdigit(static_cast<unsigned char>(peek()))) {
                            exp += peek();
                            advance();
                        }
                        text += exp;
                    } else {
                        // not an exponent; rewind is not needed since we only
                        // consumed [eE][+-]? and identifiers cannot start here
                        throw CompileError({line, col}, "malformed numeric literal");
                        (void)save;
                    }
                }
            }
            // integer suffixes (0UL, 1u, 3ll, ...) are accepted and dropped
            if (!is_float) {
                while (peek() == 'u' || peek() == 'U' || peek() == 'l' || peek() == 'L') advance();
            }
            push(is_float ? TokKind::float_literal : TokKind::int_literal, std::move(text), loc);
            continue;
        }
        // operators (longest match first)
        static const std::array<const char*, 22> ops2plus = {
            "<<=", ">>=", "::", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
            "+=", "-=", "^=", "|=", "&=", "*=", "/=", "%=", "++", "--", "->"};
        bool matched = false;
        for (const char* op : ops2plus) {
            size_t len = std::char_traits<char>::length(op);
            if (source.compare(i, len, op) == 0) {
                for (size_t k = 0; k < len; ++k) advance();
                push(TokKind::op, op, loc);
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string_view("+-*/%<>=!&|^~.").find(c) != std::string_view::npos) {
            advance();
            push(TokKind::op, std::string(1, c), loc);
            continue;
        }
        if (std::string_view("(){}[],;").find(c) != std::string_view::npos) {
            advance();
            push(TokKind::punct, std::string(1, c), loc);
            continue;
        }
        throw CompileError(loc, std::string("unrecognized character '") + c + "'");
    }
    out.push_back({TokKind::eof, "", {line, col}});
    return out;
}

}  // namespace qpragma
