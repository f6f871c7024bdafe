#pragma once

#include <string>
#include <vector>

#include "qdgen/catalog.hpp"
#include "qdgen/dataset.hpp"
#include "qdgen/query.hpp"

namespace qdgen {

/// A materialized multiset relation: physical rows, one per multiplicity.
struct EvalRelation {
    std::vector<std::string> col_names;
    std::vector<SemanticType> col_types;
    std::vector<std::vector<Value>> rows;

    bool empty() const { return rows.empty(); }
    /// Rows sorted with the canonical Value order; used for multiset compare.
    std::vector<std::vector<Value>> sorted_rows() const;
    /// Sorted CSV with a trailing count column (the `eval` CLI output).
    std::string to_csv_with_counts() const;
};

struct IntegrityViolation {
    std::string table;
    std::string detail;
};

/// Direct-interpretation multiset evaluator. Semantics deliberately match
/// the constraint encoding rather than full SQL three-valued logic:
/// comparisons with a null operand are false, aggregates skip nulls, a
/// global aggregate over an empty input yields an empty result, and scalar
/// COUNT subqueries compare against 0 when their input group is empty.
class Oracle {
public:
    explicit Oracle(const SchemaCatalog& catalog) : cat_(catalog) {}

    EvalRelation evaluate(const QueryTree& q, const Dataset& d) const;

    std::vector<IntegrityViolation> check_integrity(const Dataset& d) const;

    /// True iff the two queries produce different multisets on d.
    /// Throws SchemaMismatch when the result schemas do not align.
    bool distinguishes(const QueryTree& q1, const QueryTree& q2, const Dataset& d) const;

private:
    const SchemaCatalog& cat_;
};

/// Multiset equality of two relations (order-insensitive,
/// multiplicity-sensitive).
bool same_multiset(const EvalRelation& a, const EvalRelation& b);

}  // namespace qdgen
