#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdgen/catalog.hpp"
#include "qdgen/query.hpp"

namespace qdgen {

enum class MutationType {
    SelectionComparison,
    JoinType,
    JoinConditionMissing,
    NonEquiJoinRelop,
    StringLikeClass,
    GroupByExtra,
    GroupByMissing,
    AggregateFunction,
    AggregateDistinct,
    SelectDistinct,
    HavingComparison,
    SubqueryConnective,
    SubqueryMissing,
    NullCondition,
    SetOpKindMutation,
};

std::string to_string(MutationType t);

/// Region of the value space a comparison splits: below / at / above.
enum class Region { Lt, Eq, Gt };

/// Location of a mutable node inside the (decorrelated) query tree.
struct NodePath {
    enum class Target {
        WhereCondition,
        HavingCondition,
        JoinNode,       // steps into the from tree
        JoinCondition,  // join node + condition index
        Aggregate,
        GroupBy,
        SelectDistinct,
        SetOp,
    };
    int block_id = -1;
    Target target = Target::WhereCondition;
    std::vector<int> steps;  // from-tree descent (0 = left, 1 = right)
    int index = -1;          // condition / aggregate / group-by index

    std::string to_string() const;
};

struct MutationStruct {
    MutationType type;
    NodePath location;
    int query_block = -1;
    bool expired = false;

    // replacement payloads (by type)
    CompareOp new_op = CompareOp::Eq;  // relop mutants (verification target)
    Region region = Region::Eq;        // dataset region to force
    JoinType new_join_type = JoinType::Inner;
    int unmatched_side = 0;  // join-type datasets: which side loses its match
    AggFunc new_func = AggFunc::Count;
    bool new_distinct = false;
    SetOpKind new_setop = SetOpKind::Union;
    ColumnRef extra_column;  // groupby-extra

    std::string describe() const;
};

/// Enumerates mutation structures over a decorrelated tree. Deterministic
/// and complete with respect to the supported type list.
std::vector<MutationStruct> collect_mutation_structs(const QueryTree& q,
                                                     const SchemaCatalog& catalog);

/// Structurally mutated copy of the tree; the original is untouched.
/// Throws InvalidLocation when the path does not resolve.
QueryTree mutate(const QueryTree& q, const MutationStruct& ms);

/// Resolves a path to the from-node it names (shared by mutate and the
/// generation pipeline).
FromPtr resolve_join_node(QueryTree& q, const NodePath& path);

}  // namespace qdgen
