#include <algorithm>
#include <random>

#include "doctest.h"
#include "qdgen/catalog.hpp"
#include "qdgen/errors.hpp"
#include "qdgen/parser.hpp"
#include "test_util.hpp"

using namespace qdgen;

TEST_CASE("load_schema transcribes declared constraints") {
    SchemaCatalog cat = load_schema(
        "CREATE TABLE department(dept_name varchar PRIMARY KEY, building varchar, "
        "budget real);");
    const TableDef& t = cat.table("department");
    REQUIRE(t.columns.size() == 3);
    CHECK(t.primary_key == std::vector<std::string>{"dept_name"});
    CHECK(t.columns[0].type == SemanticType::String);
    CHECK(t.columns[2].type == SemanticType::Real);
    CHECK_FALSE(t.columns[0].nullable);  // primary key columns are not-null
}

TEST_CASE("foreign key resolves to the referenced primary key") {
    SchemaCatalog cat = load_schema(
        "CREATE TABLE department(dept_name varchar PRIMARY KEY);"
        "CREATE TABLE student(id int PRIMARY KEY, dept_name varchar, "
        " FOREIGN KEY(dept_name) REFERENCES department);");
    const TableDef& s = cat.table("student");
    REQUIRE(s.foreign_keys.size() == 1);
    CHECK(s.foreign_keys[0].ref_table == "department");
    CHECK(s.foreign_keys[0].ref_columns == std::vector<std::string>{"dept_name"});
    // FK columns share a comparison domain
    CHECK(cat.class_of("student", "dept_name") == cat.class_of("department", "dept_name"));
}

TEST_CASE("check constraints parse to the equivalent predicate") {
    SchemaCatalog cat = load_schema(
        "CREATE TABLE student(id int PRIMARY KEY, tot_cred int, "
        " CHECK (tot_cred >= 0 AND tot_cred <= 1000));");
    const TableDef& s = cat.table("student");
    REQUIRE(s.check_constraints.size() == 1);
    ExprPtr e = parse_check_expr(s.check_constraints[0].text, s);
    REQUIRE(e->kind == Expr::Kind::And);
    CHECK(e->children.size() == 2);
    CHECK(e->children[0]->op == CompareOp::Ge);
    CHECK(e->children[1]->op == CompareOp::Le);
}

TEST_CASE("unsupported DDL is rejected, not dropped") {
    CHECK_THROWS_AS(load_schema("CREATE TABLE x(a date);"), UnsupportedFeature);
    CHECK_THROWS_AS(load_schema("CREATE TABLE x(a int UNIQUE);"), UnsupportedFeature);
    CHECK_THROWS_AS(
        load_schema("CREATE TABLE x(a int, FOREIGN KEY(a) REFERENCES nowhere);"),
        DanglingReference);
    CHECK_THROWS_AS(load_schema("CREATE TABLE x(a int"), ParseError);
}

TEST_CASE("sample loading builds enumerated string domains") {
    SchemaCatalog cat = test::corpus_catalog();
    const ValueDomain& d = cat.domain("department", "dept_name");
    // five sample values, sorted lexicographically
    REQUIRE(d.values.size() == 5);
    CHECK(std::is_sorted(d.values.begin(), d.values.end()));
    CHECK(d.contains_string("Finance"));
    CHECK(d.contains_string("Biology"));
    // null sentinel is reserved after synthesis
    std::map<std::string, int> bounds;
    synthesize_missing_domains(cat, bounds);
    const ValueDomain& d2 = cat.domain("department", "dept_name");
    CHECK(!d2.string_null_sentinel.empty());
    CHECK_FALSE(d2.contains_string(d2.string_null_sentinel));
}

TEST_CASE("missing sample files synthesize fallback values sized to the bound") {
    SchemaCatalog cat = load_schema("CREATE TABLE x(name varchar);");
    std::vector<std::string> warnings;
    load_sample_values(cat, test::scratch_dir() + "/no_samples_here", &warnings);
    REQUIRE(warnings.size() == 1);
    std::map<std::string, int> bounds{{"x", 4}};
    synthesize_missing_domains(cat, bounds);
    const ValueDomain& d = cat.domain("x", "name");
    REQUIRE(d.values.size() == 4);
    CHECK(d.values[0] == "v_name_1");
    CHECK(d.contains_string("v_name_4"));
}

TEST_CASE("numeric bounds widen beyond the samples") {
    SchemaCatalog cat = test::corpus_catalog();
    const ValueDomain& d = cat.domain("student", "tot_cred");
    CHECK(d.lo < Rational(0));
    CHECK(Rational(120) < d.hi);
    // numeric null sentinel sits strictly below the minimum
    CHECK(d.numeric_null_sentinel < d.lo);
}

TEST_CASE("int_map is strictly monotone over lexicographic order") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        ValueDomain d;
        d.type = SemanticType::String;
        int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) {
            std::string s;
            int len = 1 + static_cast<int>(rng() % 4);
            for (int k = 0; k < len; ++k) s += static_cast<char>('a' + rng() % 6);
            d.add_string(s);
        }
        for (size_t i = 0; i + 1 < d.values.size(); ++i) {
            CHECK(d.values[i] < d.values[i + 1]);
            CHECK(d.int_map(d.values[i]) < d.int_map(d.values[i + 1]));
        }
    }
}

TEST_CASE("equivalence classes close transitively over comparisons") {
    SchemaCatalog cat = test::rst_catalog();
    QueryTree q = parse_query(
        "SELECT r.a FROM r, s, t WHERE r.a = s.b AND s.b = t.c", cat);
    compute_equivalence_classes(cat, q);
    int ca = cat.class_of("r", "a");
    CHECK(ca == cat.class_of("s", "b"));
    CHECK(ca == cat.class_of("t", "c"));
}

TEST_CASE("ordering comparisons also unify domains") {
    SchemaCatalog cat = test::rst_catalog();
    QueryTree q = parse_query(
        "SELECT r.a FROM r, s, t WHERE r.a = s.b AND s.b < t.c", cat);
    compute_equivalence_classes(cat, q);
    int ca = cat.class_of("r", "a");
    CHECK(ca == cat.class_of("s", "b"));
    CHECK(ca == cat.class_of("t", "c"));
}

TEST_CASE("no cross-column comparisons leaves singleton classes") {
    SchemaCatalog cat = test::rst_catalog();
    QueryTree q = parse_query("SELECT r.a FROM r WHERE r.a > 3", cat);
    compute_equivalence_classes(cat, q);
    CHECK(cat.class_of("r", "a") != cat.class_of("r", "b"));
    CHECK(cat.class_of("r", "a") != cat.class_of("s", "a"));
}

TEST_CASE("equivalence class computation is idempotent") {
    SchemaCatalog cat = test::rst_catalog();
    QueryTree q = parse_query("SELECT r.a FROM r, s WHERE r.a = s.b AND r.b = s.c", cat);
    compute_equivalence_classes(cat, q);
    auto snapshot = cat.to_json();
    compute_equivalence_classes(cat, q);
    CHECK(cat.to_json() == snapshot);
}

TEST_CASE("comparing string with numeric is a type clash") {
    SchemaCatalog cat = load_schema(
        "CREATE TABLE a(x varchar);"
        "CREATE TABLE b(y int);");
    CHECK_THROWS_AS(parse_query("SELECT a.x FROM a, b WHERE a.x = b.y", cat), TypeClash);
}

TEST_CASE("catalog round-trips through its DDL rendering") {
    SchemaCatalog cat = test::corpus_catalog();
    std::string ddl = cat.to_ddl();
    SchemaCatalog reloaded = load_schema(ddl);
    CHECK(reloaded.to_ddl() == ddl);
    REQUIRE(reloaded.tables.size() == cat.tables.size());
    for (size_t i = 0; i < cat.tables.size(); ++i) {
        CHECK(reloaded.tables[i].name == cat.tables[i].name);
        CHECK(reloaded.tables[i].primary_key == cat.tables[i].primary_key);
        CHECK(reloaded.tables[i].foreign_keys.size() == cat.tables[i].foreign_keys.size());
        CHECK(reloaded.tables[i].check_constraints.size() ==
              cat.tables[i].check_constraints.size());
        CHECK(reloaded.tables[i].columns.size() == cat.tables[i].columns.size());
    }
}
