#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdgen/catalog.hpp"
#include "qdgen/plan.hpp"
#include "qdgen/query.hpp"
#include "qdgen/relation_template.hpp"
#include "qdgen/smt_ir.hpp"

namespace qdgen {

/// Emitted equivalence-class information: SMT sort, enum constant symbols,
/// null representation.
struct EmittedClass {
    smt::Sort sort;
    std::map<std::string, std::string> const_syms;  // string value → symbol
    std::string null_sym;                           // enum null constant
    std::string isnull_fn;                          // "" when inlined
    std::string map_fn;                             // lexicographic order map ("" for numerics)
    Rational sentinel{-99999};
    Rational lo{0}, hi{0};
};

struct BuildResult {
    smt::ConstraintProgram program;
    std::deque<RelationTemplate> templates;  // stable refs; emission order
    std::map<std::string, int> template_by_name;
    std::map<int, int> node_template;  // plan node id → template index
    int root_template = -1;
    std::map<int, EmittedClass> classes;
    std::map<std::string, std::string> enum_sym_to_value;

    struct ValueSlot {
        int tmpl;
        int slot;   // 1-based
        int field;
    };
    std::vector<ValueSlot> value_slots;  // parallel to program.get_values

    const RelationTemplate& tmpl(const std::string& name) const {
        return templates.at(template_by_name.at(name));
    }
    const RelationTemplate& tmpl_of_node(int plan_node) const {
        return templates.at(node_template.at(plan_node));
    }
};

struct BuilderOptions {
    int cnt_max = 16;            // multiplicity upper bound per tuple slot
    bool assert_nonempty = true; // final result table must have a valid tuple
};

/// Generates the bounded constraint program for a sized plan: relation
/// declarations, integrity constraints, null machinery, and the
/// forward/backward result-table mappings for every operator.
class ConstraintBuilder {
public:
    ConstraintBuilder(const SchemaCatalog& catalog, const QueryTree& q, const BuildPlan& plan,
                      BuilderOptions opts = {});

    BuildResult build();

    // ---- extra assertions for mutation-targeted datasets (valid on the
    // result of build(); they reference emitted templates) ----

    /// Some valid tuple on `side` (0 = left, 1 = right) of a binary join
    /// node has no condition-satisfying valid partner.
    smt::NodePtr unmatched_tuple(const BuildResult& r, int plan_node, int side) const;

    /// Same, but for one condition of an n-ary inner join; the condition
    /// must compare exactly two atoms.
    smt::NodePtr unmatched_on_condition(const BuildResult& r, int plan_node, int cond_index,
                                        bool left_side) const;

    /// Two valid input tuples of an Agg node agreeing on `same` columns and
    /// differing on `differ` (used by group-by mutation datasets).
    smt::NodePtr group_split(const BuildResult& r, int agg_node,
                             const std::vector<ColumnRef>& same, const ColumnRef& differ) const;

    /// A group with two valid tuples whose aggregate argument values are
    /// distinct, non-null, and greater than 2 (distinguishes MIN, MAX, SUM,
    /// AVG, COUNT pairwise).
    smt::NodePtr agg_value_split(const BuildResult& r, int agg_node, const AggExpr& agg) const;

    /// A group with two valid tuples carrying the same non-null argument
    /// value (positive when `positive`); kills DISTINCT-aggregate mutants.
    smt::NodePtr agg_duplicate_arg(const BuildResult& r, int agg_node, const AggExpr& agg,
                                   bool positive, bool need_third_distinct) const;

    /// Some valid result tuple of a projection has group multiplicity ≥ 2.
    smt::NodePtr result_count_at_least(const BuildResult& r, int project_node, int n) const;

    /// Some occupied set-operation slot where the original and mutated CNT
    /// formulas disagree.
    smt::NodePtr setop_diff(const BuildResult& r, int setop_node, SetOpKind mutated) const;

    smt::NodePtr nonempty(const BuildResult& r) const;

    /// Pins one field of one slot to a concrete value (testing helper).
    smt::NodePtr pin_field(const BuildResult& r, const std::string& tmpl, int slot,
                           const std::string& field, const Value& v) const;

private:
    friend class BuilderImpl;
    const SchemaCatalog& cat_;
    const QueryTree& q_;
    const BuildPlan& plan_;
    BuilderOptions opts_;
};

/// Produces a string matching the LIKE pattern (wildcards % and _).
std::string like_expand_match(const std::string& pattern);
/// Produces a string NOT matching the pattern; throws UnsatisfiablePattern
/// when none exists.
std::string like_expand_nonmatch(const std::string& pattern);
bool like_matches(const std::string& value, const std::string& pattern);

/// Pre-solving string pass over a decorrelated tree: LIKE conditions become
/// equalities with satisfying values, and every string constant compared
/// against a column is injected into that column's domain. Mutates the
/// catalog copy and the tree in place.
void compile_string_conditions(SchemaCatalog& catalog, QueryTree& q);

/// Widens numeric domains to cover constants appearing in conditions so
/// strict comparisons stay satisfiable.
void cover_numeric_literals(SchemaCatalog& catalog, QueryTree& q);

}  // namespace qdgen
