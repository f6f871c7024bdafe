#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace qdgen {

/// Exact rational number used for REAL-typed data and AVG results, so the
/// oracle and the constraint encoding agree bit-for-bit instead of drifting
/// through floating point.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(long long n, long long d);

    static Rational from_string(const std::string& text);  // "12", "-3.25", "7/2"

    long long num() const { return num_; }
    long long den() const { return den_; }

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    Rational operator-() const { return Rational(-num_, den_); }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const;
    bool operator<=(const Rational& o) const { return *this < o || *this == o; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    bool is_integer() const { return den_ == 1; }
    long long floor() const;
    long long ceil() const;

    /// Decimal rendering; exact when the expansion terminates, otherwise
    /// "num/den".
    std::string to_string() const;

private:
    void normalize();
    long long num_;
    long long den_;
};

enum class SemanticType { Integer, Real, String };

std::string to_string(SemanticType t);

/// A single SQL value: NULL, integer, exact real, or string.
class Value {
public:
    enum class Kind { Null, Int, Real, Str };

    Value() : kind_(Kind::Null) {}
    static Value null() { return Value(); }
    static Value integer(long long v);
    static Value real(Rational v);
    static Value string(std::string v);

    Kind kind() const { return kind_; }
    bool is_null() const { return kind_ == Kind::Null; }
    long long as_int() const { return i_; }
    const Rational& as_real() const { return r_; }
    const std::string& as_str() const { return s_; }

    /// Numeric view (Int or Real); callers must check is_null first.
    Rational numeric() const;

    /// Structural equality (null == null here; SQL comparison semantics live
    /// in the oracle, not in this type).
    bool operator==(const Value& o) const;
    bool operator!=(const Value& o) const { return !(*this == o); }

    /// Total order used for canonical sorting of rows: null first, then
    /// numerics by value, then strings lexicographically.
    bool operator<(const Value& o) const;

    std::string to_string() const;  // SQL-literal-ish rendering, NULL for null

private:
    Kind kind_;
    long long i_ = 0;
    Rational r_;
    std::string s_;
};

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

CompareOp negate(CompareOp op);
CompareOp flip(CompareOp op);  // swap operand sides
std::string to_string(CompareOp op);
std::optional<CompareOp> compare_op_from_string(const std::string& s);

/// Three-way result of applying `op` to two non-null values of the same
/// semantic type.
bool apply_compare(CompareOp op, const Value& a, const Value& b);

}  // namespace qdgen
