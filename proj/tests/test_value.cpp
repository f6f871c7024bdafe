#include "doctest.h"
#include "qdgen/value.hpp"

using namespace qdgen;

TEST_CASE("rational arithmetic stays exact") {
    Rational a(1, 3);
    Rational b(1, 6);
    CHECK(a + b == Rational(1, 2));
    CHECK(a - b == Rational(1, 6));
    CHECK(a * b == Rational(1, 18));
    CHECK(a / b == Rational(2));
    CHECK(Rational(-4, 8) == Rational(-1, 2));
    CHECK(Rational(3, -9) == Rational(-1, 3));
}

TEST_CASE("rational parsing") {
    CHECK(Rational::from_string("12") == Rational(12));
    CHECK(Rational::from_string("-3.25") == Rational(-13, 4));
    CHECK(Rational::from_string("7/2") == Rational(7, 2));
    CHECK(Rational::from_string("0.5") == Rational(1, 2));
}

TEST_CASE("rational floor and ceil") {
    CHECK(Rational(7, 2).floor() == 3);
    CHECK(Rational(7, 2).ceil() == 4);
    CHECK(Rational(-7, 2).floor() == -4);
    CHECK(Rational(-7, 2).ceil() == -3);
    CHECK(Rational(4).floor() == 4);
    CHECK(Rational(4).ceil() == 4);
}

TEST_CASE("rational decimal rendering") {
    CHECK(Rational(1, 2).to_string() == "0.5");
    CHECK(Rational(-13, 4).to_string() == "-3.25");
    CHECK(Rational(1, 3).to_string() == "1/3");
    CHECK(Rational(5).to_string() == "5");
}

TEST_CASE("value ordering puts null first, numerics before strings") {
    Value n = Value::null();
    Value i = Value::integer(3);
    Value r = Value::real(Rational(7, 2));
    Value s = Value::string("abc");
    CHECK(n < i);
    CHECK(i < r);
    CHECK(r < s);
    CHECK(!(s < r));
    CHECK(Value::integer(3) == Value::real(Rational(3)));
}

TEST_CASE("comparison operators") {
    CHECK(apply_compare(CompareOp::Lt, Value::integer(1), Value::integer(2)));
    CHECK(apply_compare(CompareOp::Ge, Value::real(Rational(5, 2)), Value::integer(2)));
    CHECK(apply_compare(CompareOp::Lt, Value::string("Bio"), Value::string("Bx")));
    CHECK(negate(CompareOp::Lt) == CompareOp::Ge);
    CHECK(negate(CompareOp::Eq) == CompareOp::Ne);
    CHECK(flip(CompareOp::Lt) == CompareOp::Gt);
}
