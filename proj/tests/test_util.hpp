#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "qdgen/catalog.hpp"
#include "qdgen/dataset.hpp"
#include "qdgen/parser.hpp"

namespace qdgen::test {

inline std::string corpus_dir() { return QDGEN_CORPUS_DIR; }

inline std::string scratch_dir() {
    std::filesystem::create_directories(QDGEN_SCRATCH_DIR);
    return QDGEN_SCRATCH_DIR;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline SchemaCatalog corpus_catalog() {
    SchemaCatalog cat = load_schema(read_file(corpus_dir() + "/schema.sql"));
    load_sample_values(cat, corpus_dir() + "/samples");
    return cat;
}

/// Minimal catalog with the paper's r(a,b,c), s(a,b,c), t(a,b) scratch
/// tables (keyless integer columns).
inline SchemaCatalog rst_catalog() {
    SchemaCatalog cat = load_schema(
        "CREATE TABLE r (a int, b int, c int);"
        "CREATE TABLE s (a int, b int, c int);"
        "CREATE TABLE t (a int, b int);");
    for (auto& t : cat.tables)
        for (auto& c : t.columns) {
            ValueDomain& d = cat.domain_mut(t.name, c.name);
            d.lo = Rational(0);
            d.hi = Rational(10);
        }
    return cat;
}

/// Random small dataset over the rst tables: up to `max_rows` rows each,
/// values drawn from [0, domain_size), occasional nulls.
inline Dataset random_rst_dataset(std::mt19937& rng, int max_rows = 3, int domain_size = 4,
                                  double null_prob = 0.15) {
    Dataset d;
    std::uniform_int_distribution<int> nrows(0, max_rows);
    std::uniform_int_distribution<int> val(0, domain_size - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto fill = [&](const std::string& table, int cols) {
        int n = nrows(rng);
        for (int i = 0; i < n; ++i) {
            std::vector<Value> row;
            for (int c = 0; c < cols; ++c) {
                if (unit(rng) < null_prob)
                    row.push_back(Value::null());
                else
                    row.push_back(Value::integer(val(rng)));
            }
            d.tables[table].push_back(row);
        }
    };
    fill("r", 3);
    fill("s", 3);
    fill("t", 2);
    return d;
}

}  // namespace qdgen::test
