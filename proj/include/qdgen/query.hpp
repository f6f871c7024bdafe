#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qdgen/catalog.hpp"
#include "qdgen/value.hpp"

namespace qdgen {

struct QueryTree;

/// A column reference resolved to the from-item that produces it.
struct ColumnRef {
    int block_id = -1;       // block whose scope defines item_alias
    std::string item_alias;  // from-item instance alias
    std::string column;      // output column name of that item
    SemanticType type = SemanticType::Integer;

    bool operator==(const ColumnRef& o) const {
        return block_id == o.block_id && item_alias == o.item_alias && column == o.column;
    }
    std::string to_string() const { return item_alias + "." + column; }
};

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

/// Condition/expression node. Compare children are [lhs, rhs]; And/Or hold
/// two or more children; Not/IsNull/Like/NullDefaultZero hold one.
struct Expr {
    enum class Kind {
        Column,
        Literal,
        Compare,
        And,
        Or,
        Not,
        IsNull,          // negated => IS NOT NULL
        Like,            // negated => NOT LIKE; children[0] is the column
        AggRef,          // reference to owning block's aggregates[agg_index]
        NullDefaultZero  // ifnull(children[0], 0); introduced by decorrelation
    };

    Kind kind;
    ColumnRef col;          // Column
    Value lit;              // Literal
    CompareOp op;           // Compare
    bool negated = false;   // IsNull / Like
    std::string pattern;    // Like
    int agg_index = -1;     // AggRef
    std::vector<ExprPtr> children;

    static ExprPtr column(ColumnRef c);
    static ExprPtr literal(Value v);
    static ExprPtr compare(CompareOp op, ExprPtr l, ExprPtr r);
    static ExprPtr make_and(std::vector<ExprPtr> cs);
    static ExprPtr make_or(std::vector<ExprPtr> cs);
    static ExprPtr make_not(ExprPtr c);
    static ExprPtr is_null(ExprPtr c, bool negated);
    static ExprPtr like(ExprPtr column, std::string pattern, bool negated);
    static ExprPtr agg_ref(int index);
    static ExprPtr null_default_zero(ExprPtr c);
};

ExprPtr clone(const ExprPtr& e);
/// All column refs in the expression, in visit order.
void collect_columns(const ExprPtr& e, std::vector<ColumnRef>& out);
std::string to_string(const ExprPtr& e);

enum class ConditionKind { Join, Selection, StringLike, Correlated };

struct Condition {
    ConditionKind kind = ConditionKind::Selection;
    ExprPtr expr;
    int correlation_level = -1;  // enclosing block id when kind == Correlated
};

enum class AggFunc { Count, CountStar, Sum, Avg, Min, Max };

std::string to_string(AggFunc f);

struct AggExpr {
    AggFunc func = AggFunc::Count;
    bool distinct = false;
    ColumnRef arg;  // unused for CountStar
    bool operator==(const AggExpr& o) const {
        return func == o.func && distinct == o.distinct && arg == o.arg;
    }
    std::string to_string() const;
    SemanticType result_type() const;
    bool result_nullable() const { return func != AggFunc::Count && func != AggFunc::CountStar; }
};

struct SelectItem {
    bool is_aggregate = false;
    int agg_index = -1;  // into the block's aggregates
    ColumnRef col;       // when !is_aggregate
    std::string alias;   // output column name
};

enum class JoinType { Inner, LeftOuter, RightOuter, FullOuter, Semi, AntiSemi, Cross };

std::string to_string(JoinType t);

/// Which WHERE-clause connective a decorrelated join node came from; lets
/// the mutation engine produce faithful connective mutants.
enum class JoinOrigin { Plain, Exists, NotExists, In, NotIn, AnyCmp, AllCmp, ScalarCmp, ScalarCount };

struct FromNode;
using FromPtr = std::shared_ptr<FromNode>;

struct FromNode {
    enum class Kind { BaseTable, Subquery, Join };

    Kind kind;
    // BaseTable / Subquery
    std::string table;
    std::string alias;
    int subquery_block = -1;
    // Join
    JoinType join_type = JoinType::Inner;
    FromPtr left;
    FromPtr right;
    std::vector<ExprPtr> conditions;  // ON conjuncts; empty means TRUE
    JoinOrigin origin = JoinOrigin::Plain;

    static FromPtr base(std::string table, std::string alias);
    static FromPtr subquery(int block, std::string alias);
    static FromPtr join(JoinType t, FromPtr l, FromPtr r, std::vector<ExprPtr> conds);
};

FromPtr clone(const FromPtr& f);

enum class Connective { Exists, NotExists, In, NotIn, ScalarCmp, AnyCmp, AllCmp };

std::string to_string(Connective c);

struct ConnectiveChild {
    Connective conn;
    int subquery_block = -1;
    ExprPtr probe;  // outer operand for In/NotIn/ScalarCmp/Any/All
    CompareOp op = CompareOp::Eq;
};

enum class SetOpKind { Union, UnionAll, Intersect, IntersectAll, Except, ExceptAll, SymDiff };

std::string to_string(SetOpKind k);

struct SetOpNode {
    SetOpKind kind;
    int left_block = -1;
    int right_block = -1;
};

struct OutputCol {
    std::string name;
    SemanticType type = SemanticType::Integer;
    bool nullable = true;
    int class_id = -1;  // equivalence class of the underlying column, when known
};

struct QueryBlock {
    int id = -1;
    std::optional<SetOpNode> setop;  // exclusive with from
    FromPtr from;                    // single tree; comma lists become cross joins
    std::vector<Condition> where;
    std::vector<ConnectiveChild> connectives;
    bool distinct = false;
    std::vector<ColumnRef> group_by;
    std::vector<AggExpr> aggregates;
    std::vector<Condition> having;
    std::vector<SelectItem> select_list;
    bool order_by_present = false;  // parsed, semantically inert
    bool synthetic = false;         // introduced by decorrelation (pushdown block)

    bool has_aggregation() const { return !aggregates.empty() || !group_by.empty(); }
};

struct QueryTree {
    int root = -1;
    std::map<int, QueryBlock> blocks;
    int next_id = 0;
    std::vector<std::string> warnings;

    QueryBlock& block(int id) { return blocks.at(id); }
    const QueryBlock& block(int id) const { return blocks.at(id); }
    int new_block();

    QueryTree deep_copy() const;
    /// Deep copy with every block id shifted by `offset` (column refs and
    /// nested references rebound); used to merge two trees into one.
    QueryTree deep_copy_with_offset(int offset) const;
};

/// Output schema of a block (select-list names and types).
std::vector<OutputCol> output_schema(const QueryTree& q, int block_id,
                                     const SchemaCatalog& catalog);

/// Schema of one from-node as seen from above (semi/anti joins expose only
/// their left side; outer joins mark null-extended sides nullable).
/// Returns pairs of (alias, columns).
std::vector<std::pair<std::string, std::vector<OutputCol>>> from_visible_schema(
    const QueryTree& q, const FromPtr& f, const SchemaCatalog& catalog);

/// Traces a resolved column reference down to the base-table column it
/// descends from, when one exists (COUNT/AVG outputs do not trace).
std::optional<ColumnId> trace_to_base(const QueryTree& q, const SchemaCatalog& cat,
                                      const ColumnRef& ref);

/// Canonical SQL rendering (SEMI JOIN / ANTI SEMI JOIN spelled out). Used
/// for dumps and for the parse(print(parse(s))) == parse(s) property.
std::string to_sql(const QueryTree& q);
std::string to_sql(const QueryTree& q, int block_id);

/// Structural equality via canonical rendering.
bool trees_equal(const QueryTree& a, const QueryTree& b);

}  // namespace qdgen
