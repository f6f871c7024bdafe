#include "qdgen/value.hpp"

#include <numeric>
#include <stdexcept>

namespace qdgen {

Rational::Rational(long long n, long long d) : num_(n), den_(d) {
    if (d == 0) throw std::invalid_argument("rational with zero denominator");
    normalize();
}

void Rational::normalize() {
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
        num_ /= g;
        den_ /= g;
    }
    if (num_ == 0) den_ = 1;
}

Rational Rational::from_string(const std::string& text) {
    std::string s = text;
    bool neg = false;
    size_t pos = 0;
    if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) {
        neg = s[pos] == '-';
        ++pos;
    }
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        long long n = std::stoll(s.substr(pos, slash - pos));
        long long d = std::stoll(s.substr(slash + 1));
        Rational r(n, d);
        return neg ? -r : r;
    }
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        long long n = std::stoll(s.substr(pos));
        return Rational(neg ? -n : n);
    }
    std::string ip = s.substr(pos, dot - pos);
    std::string fp = s.substr(dot + 1);
    long long n = ip.empty() ? 0 : std::stoll(ip);
    long long den = 1;
    for (char c : fp) {
        if (c < '0' || c > '9') throw std::invalid_argument("bad numeric literal: " + text);
        n = n * 10 + (c - '0');
        den *= 10;
    }
    Rational r(n, den);
    return neg ? -r : r;
}

Rational Rational::operator+(const Rational& o) const {
    return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}
Rational Rational::operator-(const Rational& o) const {
    return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}
Rational Rational::operator*(const Rational& o) const {
    return Rational(num_ * o.num_, den_ * o.den_);
}
Rational Rational::operator/(const Rational& o) const {
    if (o.num_ == 0) throw std::domain_error("rational division by zero");
    return Rational(num_ * o.den_, den_ * o.num_);
}
bool Rational::operator<(const Rational& o) const {
    return num_ * o.den_ < o.num_ * den_;
}

long long Rational::floor() const {
    long long q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return q;
}
long long Rational::ceil() const {
    long long q = num_ / den_;
    if (num_ % den_ != 0 && num_ > 0) ++q;
    return q;
}

std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    // Terminating decimal expansion exists iff den = 2^a * 5^b.
    long long d = den_;
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
    long long n = num_ < 0 ? -num_ : num_;
    long long ip = n / den_;
    long long rem = n % den_;
    std::string frac;
    while (rem != 0) {
        rem *= 10;
        frac += char('0' + rem / den_);
        rem %= den_;
    }
    std::string out = (num_ < 0 ? "-" : "") + std::to_string(ip);
    if (!frac.empty()) out += "." + frac;
    return out;
}

std::string to_string(SemanticType t) {
    switch (t) {
        case SemanticType::Integer: return "integer";
        case SemanticType::Real: return "real";
        case SemanticType::String: return "string";
    }
    return "?";
}

Value Value::integer(long long v) {
    Value x;
    x.kind_ = Kind::Int;
    x.i_ = v;
    return x;
}
Value Value::real(Rational v) {
    Value x;
    x.kind_ = Kind::Real;
    x.r_ = v;
    return x;
}
Value Value::string(std::string v) {
    Value x;
    x.kind_ = Kind::Str;
    x.s_ = std::move(v);
    return x;
}

Rational Value::numeric() const {
    if (kind_ == Kind::Int) return Rational(i_);
    if (kind_ == Kind::Real) return r_;
    throw std::logic_error("numeric() on non-numeric value");
}

bool Value::operator==(const Value& o) const {
    if (kind_ == Kind::Null || o.kind_ == Kind::Null) return kind_ == o.kind_;
    if (kind_ == Kind::Str || o.kind_ == Kind::Str) {
        return kind_ == o.kind_ && s_ == o.s_;
    }
    return numeric() == o.numeric();
}

bool Value::operator<(const Value& o) const {
    if (kind_ == Kind::Null) return o.kind_ != Kind::Null;
    if (o.kind_ == Kind::Null) return false;
    bool lstr = kind_ == Kind::Str;
    bool rstr = o.kind_ == Kind::Str;
    if (lstr != rstr) return !lstr;  // numerics before strings
    if (lstr) return s_ < o.s_;
    return numeric() < o.numeric();
}

std::string Value::to_string() const {
    switch (kind_) {
        case Kind::Null: return "NULL";
        case Kind::Int: return std::to_string(i_);
        case Kind::Real: return r_.to_string();
        case Kind::Str: return s_;
    }
    return "?";
}

CompareOp negate(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return CompareOp::Ne;
        case CompareOp::Ne: return CompareOp::Eq;
        case CompareOp::Lt: return CompareOp::Ge;
        case CompareOp::Le: return CompareOp::Gt;
        case CompareOp::Gt: return CompareOp::Le;
        case CompareOp::Ge: return CompareOp::Lt;
    }
    return op;
}

CompareOp flip(CompareOp op) {
    switch (op) {
        case CompareOp::Lt: return CompareOp::Gt;
        case CompareOp::Le: return CompareOp::Ge;
        case CompareOp::Gt: return CompareOp::Lt;
        case CompareOp::Ge: return CompareOp::Le;
        default: return op;
    }
}

std::string to_string(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Ne: return "<>";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
    }
    return "?";
}

std::optional<CompareOp> compare_op_from_string(const std::string& s) {
    if (s == "=") return CompareOp::Eq;
    if (s == "<>" || s == "!=") return CompareOp::Ne;
    if (s == "<") return CompareOp::Lt;
    if (s == "<=") return CompareOp::Le;
    if (s == ">") return CompareOp::Gt;
    if (s == ">=") return CompareOp::Ge;
    return std::nullopt;
}

bool apply_compare(CompareOp op, const Value& a, const Value& b) {
    if (a.kind() == Value::Kind::Str) {
        const std::string& x = a.as_str();
        const std::string& y = b.as_str();
        switch (op) {
            case CompareOp::Eq: return x == y;
            case CompareOp::Ne: return x != y;
            case CompareOp::Lt: return x < y;
            case CompareOp::Le: return x <= y;
            case CompareOp::Gt: return x > y;
            case CompareOp::Ge: return x >= y;
        }
    }
    Rational x = a.numeric();
    Rational y = b.numeric();
    switch (op) {
        case CompareOp::Eq: return x == y;
        case CompareOp::Ne: return x != y;
        case CompareOp::Lt: return x < y;
        case CompareOp::Le: return x <= y;
        case CompareOp::Gt: return x > y;
        case CompareOp::Ge: return x >= y;
    }
    return false;
}

}  // namespace qdgen
