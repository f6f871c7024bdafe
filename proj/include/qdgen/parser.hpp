#pragma once

#include <string>

#include "qdgen/catalog.hpp"
#include "qdgen/query.hpp"

namespace qdgen {

/// Parses one SELECT statement of the supported subset into a query tree
/// with resolved column references. NATURAL JOIN is rewritten to an inner
/// join with explicit equality conditions; ORDER BY / LIMIT are accepted but
/// inert (a warning is recorded on the tree).
QueryTree parse_query(const std::string& sql_text, const SchemaCatalog& catalog);

/// Labels every WHERE conjunct as join / selection / string-like /
/// correlated. Total; re-runnable.
void classify_conditions(QueryTree& q, const SchemaCatalog& catalog);

/// Parses a CHECK constraint body against a single table's columns.
/// Column refs are bound with item_alias = table name and block_id = -1.
ExprPtr parse_check_expr(const std::string& text, const TableDef& table);

}  // namespace qdgen
