#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qdgen/value.hpp"

namespace qdgen {

struct QueryTree;  // forward; equivalence classes are computed against a query

/// Value domain of one equivalence class of columns.
///
/// Numeric domains carry inclusive bounds plus a null sentinel strictly below
/// the minimum. String domains are enumerations of the sample values plus one
/// sentinel constant; their order-preserving integer map is the 1-based index
/// in lexicographic order.
struct ValueDomain {
    SemanticType type = SemanticType::Integer;

    // numeric
    Rational lo{0};
    Rational hi{100};
    Rational numeric_null_sentinel{-99999};

    // string
    std::vector<std::string> values;  // user-visible constants, sorted lexicographically
    std::string string_null_sentinel; // reserved constant, not in `values`

    bool contains_string(const std::string& v) const;
    /// Adds a constant (keeps sort order); returns false if already present.
    bool add_string(const std::string& v);
    /// Widens numeric bounds to cover v.
    void cover_numeric(const Rational& v);
    /// 1-based lexicographic rank; strictly monotone over `values`.
    int int_map(const std::string& v) const;

    Value null_value() const;
    bool is_null_value(const Value& v) const;
};

struct ColumnDef {
    std::string name;
    SemanticType type = SemanticType::Integer;
    bool nullable = true;
    int class_id = -1;  // equivalence class; assigned by the catalog
};

struct ForeignKeyDef {
    std::vector<std::string> local_columns;
    std::string ref_table;
    std::vector<std::string> ref_columns;
};

/// Check constraints are boolean expressions over one tuple's columns; the
/// expression grammar is shared with query conditions and stored as raw text
/// here plus a parsed form owned by the catalog.
struct CheckDef {
    std::string text;
};

struct TableDef {
    std::string name;
    std::vector<ColumnDef> columns;
    std::vector<std::string> primary_key;
    std::vector<ForeignKeyDef> foreign_keys;
    std::vector<CheckDef> check_constraints;

    const ColumnDef* find_column(const std::string& name) const;
    int column_index(const std::string& name) const;  // -1 if absent
    bool is_pk_column(const std::string& name) const;
};

struct ColumnId {
    std::string table;
    std::string column;
    bool operator<(const ColumnId& o) const {
        return table < o.table || (table == o.table && column < o.column);
    }
    bool operator==(const ColumnId& o) const { return table == o.table && column == o.column; }
};

class SchemaCatalog {
public:
    std::vector<TableDef> tables;

    const TableDef* find_table(const std::string& name) const;
    const TableDef& table(const std::string& name) const;  // throws DanglingReference

    /// Domain of a column (via its equivalence class).
    const ValueDomain& domain(const std::string& table, const std::string& column) const;
    ValueDomain& domain_mut(const std::string& table, const std::string& column);
    const ValueDomain& class_domain(int class_id) const { return class_domains_.at(class_id); }
    int class_count() const { return static_cast<int>(class_domains_.size()); }
    int class_of(const std::string& table, const std::string& column) const;
    std::vector<ColumnId> class_members(int class_id) const;

    /// Initializes one singleton class per column. Called by load_schema.
    void init_singleton_classes();
    /// Merges the classes of two columns (used by equivalence-class
    /// computation); domains are unioned.
    void merge_classes(const ColumnId& a, const ColumnId& b);

    /// Columns that had no sample file and need a synthesized string domain
    /// sized to the table's tuple bound.
    std::set<ColumnId> pending_string_synthesis;

    /// Widening fraction applied to numeric sample bounds (see docs).
    Rational numeric_widening{1, 10};

    std::string to_ddl() const;   // canonical DDL round-trip form
    std::string to_json() const;  // --dump-catalog

private:
    std::vector<ValueDomain> class_domains_;
    std::map<ColumnId, int> class_of_;
    static ValueDomain merged_domain(const ValueDomain& a, const ValueDomain& b);
};

/// Parses the supported DDL subset. Unknown syntax is rejected, never
/// dropped.
SchemaCatalog load_schema(const std::string& ddl_text);

/// Loads per-attribute sample files (<dir>/<table>.<column>.txt, one value
/// per line). String columns without samples are marked for synthesis and a
/// warning is recorded in `warnings` when non-null.
void load_sample_values(SchemaCatalog& catalog, const std::string& sample_dir,
                        std::vector<std::string>* warnings = nullptr);

/// Unifies the domains of all columns compared anywhere in q (joins,
/// selections, correlations, set-operation column alignment). Idempotent.
void compute_equivalence_classes(SchemaCatalog& catalog, const QueryTree& q);

/// Materializes synthesized string domains ("v_<column>_<i>") for columns
/// without samples, sized to max(4, table bound).
void synthesize_missing_domains(SchemaCatalog& catalog,
                                const std::map<std::string, int>& table_bounds);

}  // namespace qdgen
