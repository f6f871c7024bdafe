#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdgen/catalog.hpp"
#include "qdgen/plan.hpp"
#include "qdgen/query.hpp"

namespace qdgen {

struct SizePlan {
    std::map<std::string, int> base_sizes;    // table → tuples
    std::map<std::string, int> result_sizes;  // result-table name → tuples
    int cap = 16;

    std::string to_json() const;  // --dump-sizes
};

struct SizerOptions {
    int cap = 16;                         // --max-result-tuples
    std::optional<int> base_override;     // equivalence checking: fixed base size
    int base_bump = 0;                    // extra tuples per base table
};

/// Occurrence counting + foreign-key rule + aggregate lower bounds.
/// The returned map covers every table referenced by the plan.
std::map<std::string, int> base_table_sizes(const QueryTree& q, const BuildPlan& plan,
                                            const SchemaCatalog& catalog,
                                            const SizerOptions& opts = {});

/// Minimal tuple count needed so `func(attr) op bound` can hold, given the
/// attribute's domain. Returns 1 when the condition imposes nothing.
int aggregate_lower_bound(AggFunc func, const ValueDomain& domain, CompareOp op,
                          const Rational& bound);

struct JoinSizeInput {
    std::string alias;                  // visible alias ("" for structured inputs)
    int size = 1;
    std::vector<std::string> key_cols;  // primary/unique key (slot-unique columns)
};

/// Listing-style join size rules: per-relation factors, key-aware reductions,
/// the nonkey clamp heuristic, and the final cap.
int max_join_size(const std::vector<JoinSizeInput>& inputs,
                  const std::vector<ExprPtr>& conditions, int cap);

/// Fills plan.node(*).max_tuples and plan.base_sizes; returns the overall
/// size plan. Throws UnsatisfiableBound when an aggregate demand exceeds cap.
SizePlan size_plan(const QueryTree& q, BuildPlan& plan, const SchemaCatalog& catalog,
                   const SizerOptions& opts = {});

}  // namespace qdgen
