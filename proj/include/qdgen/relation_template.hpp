#pragma once

#include <map>
#include <string>
#include <vector>

#include "qdgen/smt_ir.hpp"
#include "qdgen/value.hpp"

namespace qdgen {

/// One field of a symbolic relation. `src_alias`/`src_col` give the logical
/// provenance used to resolve conditions against higher-level result tables.
struct TField {
    std::string name;      // unique within the template
    std::string accessor;  // globally-unique SMT accessor symbol
    std::string src_alias;
    std::string src_col;
    SemanticType type = SemanticType::Integer;
    int class_id = -1;
    bool nullable = true;
    bool is_aux = false;  // input CNT copies, setop side counts, hidden aggregates
    Rational num_sentinel{-99999};  // null encoding for numeric fields
};

/// A symbolic count-annotated tuple array. The CNT field is always present
/// and last.
struct RelationTemplate {
    std::string name;       // "student", "JRT0", ...
    std::string sort_name;  // tuple sort
    std::string ctor;
    std::string array_sym;  // the Array Int <sort> symbol
    std::vector<TField> fields;
    int cnt_index = -1;
    int max_tuples = 0;
    int plan_node = -1;
    std::map<int, int> agg_fields;  // aggregate index (plan node order) → field index

    const TField& cnt() const { return fields.at(cnt_index); }
    int field_by_name(const std::string& n) const;
    int field_by_src(const std::string& alias, const std::string& col) const;

    /// accessor(select(array, idx))
    smt::NodePtr field_term(int field, const smt::NodePtr& idx) const;
    smt::NodePtr cnt_term(const smt::NodePtr& idx) const;
    smt::NodePtr valid(const smt::NodePtr& idx) const;  // CNT > 0
};

/// Deterministic, collision-checked symbol mangling.
class NameRegistry {
public:
    /// Returns a symbol based on `base` (sanitized), unique across the run.
    std::string fresh(const std::string& base);

private:
    std::map<std::string, int> used_;
};

std::string sanitize_symbol(const std::string& s);

}  // namespace qdgen
