#pragma once

#include <map>
#include <string>
#include <vector>

#include "qdgen/catalog.hpp"
#include "qdgen/value.hpp"

namespace qdgen {

/// Concrete per-table tuple multisets, multiplicities expanded to physical
/// rows. Column order follows the catalog.
struct Dataset {
    std::map<std::string, std::vector<std::vector<Value>>> tables;

    // provenance
    std::string query_name;
    std::string kind;  // "non-empty" or the mutation description

    std::vector<std::vector<Value>>& rows(const std::string& table) { return tables[table]; }

    /// INSERT statements for every table (catalog order; NULL spelled out).
    std::string to_insert_sql(const SchemaCatalog& catalog) const;
    /// One CSV per table, written under dir/<table>.csv with a header row;
    /// nulls render as empty fields.
    void write_csv_dir(const SchemaCatalog& catalog, const std::string& dir) const;

    /// Canonical text (sorted rows) used for deduplication in reports.
    std::string canonical_text(const SchemaCatalog& catalog) const;
};

/// Loads a dataset from INSERT statements (the format to_insert_sql emits).
Dataset load_dataset_sql(const std::string& text, const SchemaCatalog& catalog);

/// Loads a dataset from a directory of <table>.csv files.
Dataset load_dataset_csv_dir(const std::string& dir, const SchemaCatalog& catalog);

}  // namespace qdgen
