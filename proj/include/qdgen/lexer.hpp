#pragma once

#include <string>
#include <vector>

namespace qdgen {

struct Token {
    enum class Kind { Ident, Number, String, Symbol, End };
    Kind kind;
    std::string text;   // idents uppercased for keyword checks; raw in `raw`
    std::string raw;
    size_t pos = 0;
};

/// SQL-ish tokenizer: identifiers, numeric literals, 'quoted strings'
/// (with '' escapes), and symbols (multi-char comparison ops recognized).
/// Comments: -- to end of line.
std::vector<Token> lex_sql(const std::string& text);

class TokenStream {
public:
    explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}

    const Token& peek(int ahead = 0) const;
    Token next();
    bool at_end() const { return peek().kind == Token::Kind::End; }

    /// Keyword test against the uppercased text of an identifier token.
    bool is_kw(const std::string& kw, int ahead = 0) const;
    bool accept_kw(const std::string& kw);
    void expect_kw(const std::string& kw);
    bool is_sym(const std::string& s, int ahead = 0) const;
    bool accept_sym(const std::string& s);
    void expect_sym(const std::string& s);
    std::string expect_ident(const std::string& what);

    [[noreturn]] void fail(const std::string& msg) const;

private:
    std::vector<Token> toks_;
    size_t i_ = 0;
    static const Token end_token_;
};

}  // namespace qdgen
