#pragma once

#include <map>
#include <string>
#include <vector>

#include "qdgen/catalog.hpp"
#include "qdgen/query.hpp"

namespace qdgen {

/// One relation in the result-table pipeline: a base-table instance or one
/// operator's result table. The planner lowers a decorrelated query tree
/// into a list of these; the sizer assigns max_tuples and the constraint
/// builder emits declarations and mappings per node.
struct PlanNode {
    enum class Kind { Base, Join, Semi, Anti, Outer, Agg, Project, SetOp };

    Kind kind = Kind::Base;
    int id = -1;
    std::string name;  // template name: instance alias for bases, JRT0/ART1/... otherwise
    int block_id = -1;

    // Base
    std::string table;
    std::string alias;

    // Join/Semi/Anti/Outer: input node ids; alias per input ("" for
    // structured inputs that keep their own field sources)
    std::vector<int> inputs;
    std::vector<std::string> input_aliases;
    std::vector<ExprPtr> conditions;
    JoinType join_type = JoinType::Inner;  // Outer: which outer flavor
    JoinOrigin origin = JoinOrigin::Plain;

    // Agg
    std::vector<ColumnRef> group_by;
    std::vector<AggExpr> aggs;
    std::vector<ExprPtr> having;

    // Project
    std::vector<SelectItem> items;
    bool distinct = false;

    // SetOp
    SetOpKind setop = SetOpKind::Union;

    int max_tuples = 0;
};

struct BuildPlan {
    std::vector<PlanNode> nodes;
    int root = -1;
    std::map<std::string, int> base_sizes;  // table name → array size

    const PlanNode& node(int id) const { return nodes.at(id); }
    PlanNode& node(int id) { return nodes.at(id); }
    /// Base node ids feeding `id`, transitively.
    std::vector<int> base_inputs(int id) const;
};

/// Lowers a decorrelated tree into the result-table pipeline. Sizes are not
/// assigned yet (see sizer.hpp). Throws UnsupportedFeature for shapes the
/// generator cannot encode (mixed DISTINCT and plain aggregates).
BuildPlan lower_to_plan(const QueryTree& q, const SchemaCatalog& catalog);

}  // namespace qdgen
