#pragma once

#include "qdgen/catalog.hpp"
#include "qdgen/query.hpp"

namespace qdgen {

struct DecorrelateOptions {
    /// Appendix-style optimization: an EXISTS with pure equality correlation
    /// becomes an inner join against a DISTINCT projection instead of a
    /// semijoin. Off by default; the semijoin form is uniformly applicable.
    bool equality_join_optimization = false;
};

/// Rewrites every WHERE-clause subquery (all connectives, any nesting depth)
/// into a FROM-clause subquery joined by semijoin / anti-semijoin / join /
/// left outer join. The result has no connective children and no correlated
/// conditions; the input tree is not modified.
QueryTree decorrelate(const QueryTree& q, const SchemaCatalog& catalog,
                      const DecorrelateOptions& opts = {});

/// True when no block in the tree contains a correlated condition or a
/// connective child (the decorrelator's postcondition).
bool is_decorrelated(const QueryTree& q);

}  // namespace qdgen
