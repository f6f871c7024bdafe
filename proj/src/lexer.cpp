#include "qdgen/lexer.hpp"

#include <cctype>

#include "qdgen/errors.hpp"

namespace qdgen {

std::vector<Token> lex_sql(const std::string& text) {
    std::vector<Token> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && text[i + 1] == '-') {
            while (i < n && text[i] != '\n') ++i;
            continue;
        }
        Token t;
        t.pos = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < n && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            t.kind = Token::Kind::Ident;
            t.raw = text.substr(i, j - i);
            t.text = t.raw;
            for (auto& ch : t.text) ch = std::toupper(static_cast<unsigned char>(ch));
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            size_t j = i;
            bool dot = false;
            while (j < n && (std::isdigit(static_cast<unsigned char>(text[j])) ||
                             (text[j] == '.' && !dot))) {
                if (text[j] == '.') dot = true;
                ++j;
            }
            t.kind = Token::Kind::Number;
            t.raw = text.substr(i, j - i);
            t.text = t.raw;
            i = j;
        } else if (c == '\'') {
            std::string s;
            size_t j = i + 1;
            while (true) {
                if (j >= n) throw ParseError("unterminated string literal");
                if (text[j] == '\'') {
                    if (j + 1 < n && text[j + 1] == '\'') {
                        s += '\'';
                        j += 2;
                        continue;
                    }
                    ++j;
                    break;
                }
                s += text[j];
                ++j;
            }
            t.kind = Token::Kind::String;
            t.raw = s;
            t.text = s;
            i = j;
        } else {
            t.kind = Token::Kind::Symbol;
            if (i + 1 < n) {
                std::string two = text.substr(i, 2);
                if (two == "<=" || two == ">=" || two == "<>" || two == "!=") {
                    t.raw = two == "!=" ? "<>" : two;
                    t.text = t.raw;
                    out.push_back(t);
                    i += 2;
                    continue;
                }
            }
            t.raw = std::string(1, c);
            t.text = t.raw;
            ++i;
        }
        out.push_back(t);
    }
    Token end;
    end.kind = Token::Kind::End;
    end.pos = n;
    out.push_back(end);
    return out;
}

const Token TokenStream::end_token_{Token::Kind::End, "", "", 0};

const Token& TokenStream::peek(int ahead) const {
    size_t k = i_ + static_cast<size_t>(ahead);
    if (k >= toks_.size()) return end_token_;
    return toks_[k];
}

Token TokenStream::next() {
    Token t = peek();
    if (i_ < toks_.size()) ++i_;
    return t;
}

bool TokenStream::is_kw(const std::string& kw, int ahead) const {
    const Token& t = peek(ahead);
    return t.kind == Token::Kind::Ident && t.text == kw;
}

bool TokenStream::accept_kw(const std::string& kw) {
    if (is_kw(kw)) {
        next();
        return true;
    }
    return false;
}

void TokenStream::expect_kw(const std::string& kw) {
    if (!accept_kw(kw)) fail("expected " + kw);
}

bool TokenStream::is_sym(const std::string& s, int ahead) const {
    const Token& t = peek(ahead);
    return t.kind == Token::Kind::Symbol && t.text == s;
}

bool TokenStream::accept_sym(const std::string& s) {
    if (is_sym(s)) {
        next();
        return true;
    }
    return false;
}

void TokenStream::expect_sym(const std::string& s) {
    if (!accept_sym(s)) fail("expected '" + s + "'");
}

std::string TokenStream::expect_ident(const std::string& what) {
    if (peek().kind != Token::Kind::Ident) fail("expected " + what);
    return next().raw;
}

void TokenStream::fail(const std::string& msg) const {
    const Token& t = peek();
    std::string got = t.kind == Token::Kind::End ? "<end>" : t.raw;
    throw ParseError(msg + " (at '" + got + "', offset " + std::to_string(t.pos) + ")");
}

}  // namespace qdgen
