#include "qdgen/sizer.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "qdgen/errors.hpp"
#include "qdgen/vendor_json.hpp"

namespace qdgen {

std::string SizePlan::to_json() const {
    nlohmann::json j;
    j["cap"] = cap;
    for (const auto& [t, n] : base_sizes) j["base"][t] = n;
    for (const auto& [t, n] : result_sizes) j["result"][t] = n;
    return j.dump(2);
}

int aggregate_lower_bound(AggFunc func, const ValueDomain& domain, CompareOp op,
                          const Rational& bound) {
    if (op != CompareOp::Ge && op != CompareOp::Gt && op != CompareOp::Eq) return 1;
    if (func == AggFunc::Count || func == AggFunc::CountStar) {
        long long n = bound.ceil();
        if (op == CompareOp::Gt) n = bound.floor() + 1;
        return static_cast<int>(std::max(1LL, n));
    }
    if (func == AggFunc::Sum) {
        if (!(Rational(0) < bound)) return 1;
        Rational max_a = domain.hi;
        if (!(Rational(0) < max_a))
            throw UnsatisfiableBound("sum bound " + bound.to_string() +
                                     " unreachable: attribute maximum is not positive");
        Rational q = bound / max_a;
        long long n = q.ceil();
        if (op == CompareOp::Gt && q.is_integer()) n += 1;
        return static_cast<int>(std::max(1LL, n));
    }
    return 1;
}

namespace {

struct EqPair {
    std::string a_alias, a_col, b_alias, b_col;
};

}  // namespace

int max_join_size(const std::vector<JoinSizeInput>& inputs,
                  const std::vector<ExprPtr>& conditions, int cap) {
    std::map<std::string, int> M;           // alias → factor
    std::map<std::string, int> sizes;
    std::map<std::string, std::vector<std::string>> keys;
    for (const auto& in : inputs) {
        if (in.alias.empty()) continue;  // structured inputs get no reductions
        M[in.alias] = in.size;
        sizes[in.alias] = in.size;
        keys[in.alias] = in.key_cols;
    }
    long long anon_product = 1;
    for (const auto& in : inputs)
        if (in.alias.empty()) anon_product *= std::max(1, in.size);

    // collect per-alias constant-equated columns and alias-alias equalities
    std::map<std::string, std::set<std::string>> const_eq;
    std::vector<EqPair> col_eqs;
    std::function<void(const ExprPtr&)> scan = [&](const ExprPtr& e) {
        if (!e) return;
        if (e->kind == Expr::Kind::And) {
            for (const auto& c : e->children) scan(c);
            return;
        }
        if (e->kind == Expr::Kind::Compare && e->op == CompareOp::Eq) {
            const ExprPtr& l = e->children[0];
            const ExprPtr& r = e->children[1];
            if (l->kind == Expr::Kind::Column && r->kind == Expr::Kind::Literal)
                const_eq[l->col.item_alias].insert(l->col.column);
            else if (r->kind == Expr::Kind::Column && l->kind == Expr::Kind::Literal)
                const_eq[r->col.item_alias].insert(r->col.column);
            else if (l->kind == Expr::Kind::Column && r->kind == Expr::Kind::Column &&
                     l->col.item_alias != r->col.item_alias)
                col_eqs.push_back({l->col.item_alias, l->col.column, r->col.item_alias,
                                   r->col.column});
        }
    };
    for (const auto& c : conditions) scan(c);

    auto covers_key = [&](const std::string& alias, const std::set<std::string>& cols) {
        auto it = keys.find(alias);
        if (it == keys.end() || it->second.empty()) return false;
        for (const auto& k : it->second)
            if (!cols.count(k)) return false;
        return true;
    };

    // selection: key equated to constants
    for (const auto& [alias, cols] : const_eq)
        if (M.count(alias) && covers_key(alias, cols)) M[alias] = 1;

    // join conditions, grouped per alias pair
    std::map<std::pair<std::string, std::string>, std::pair<std::set<std::string>,
                                                            std::set<std::string>>>
        pair_cols;
    for (const auto& eq : col_eqs) {
        if (!M.count(eq.a_alias) || !M.count(eq.b_alias)) continue;
        auto key = std::minmax(eq.a_alias, eq.b_alias);
        auto& entry = pair_cols[{key.first, key.second}];
        if (eq.a_alias == key.first) {
            entry.first.insert(eq.a_col);
            entry.second.insert(eq.b_col);
        } else {
            entry.first.insert(eq.b_col);
            entry.second.insert(eq.a_col);
        }
    }
    for (const auto& [aliases, cols] : pair_cols) {
        const std::string& a = aliases.first;
        const std::string& b = aliases.second;
        bool a_key = covers_key(a, cols.first);
        bool b_key = covers_key(b, cols.second);
        if (a_key && b_key) {
            // result no larger than the smaller side
            if (sizes[a] >= sizes[b])
                M[a] = 1;
            else
                M[b] = 1;
        } else if (a_key) {
            M[a] = 1;
        } else if (b_key) {
            M[b] = 1;
        } else {
            // nonkey-to-nonkey heuristic
            std::string small = M[a] <= M[b] ? a : b;
            std::string big = small == a ? b : a;
            if (M[small] > 2 && M[big] > 2) M[small] = 2;
        }
    }

    long long product = anon_product;
    for (const auto& [alias, m] : M) product *= std::max(1, m);
    product = std::max(1LL, product);
    return static_cast<int>(std::min<long long>(product, cap));
}

namespace {

/// Key columns (slot-unique column names) of a plan node's output.
std::vector<std::string> node_key_cols(const BuildPlan& plan, const SchemaCatalog& cat,
                                       int id) {
    const PlanNode& n = plan.node(id);
    switch (n.kind) {
        case PlanNode::Kind::Base: return cat.table(n.table).primary_key;
        case PlanNode::Kind::Agg: {
            std::vector<std::string> cols;
            for (const auto& g : n.group_by) cols.push_back(g.column);
            return cols;
        }
        case PlanNode::Kind::Project: {
            std::vector<std::string> cols;
            for (const auto& it : n.items) cols.push_back(it.alias);
            return cols;
        }
        default: return {};
    }
}

void bump_block_bases(BuildPlan& plan, int node_id, int need,
                      std::map<std::string, int>& base_sizes) {
    for (int b : plan.base_inputs(node_id)) {
        const std::string& t = plan.node(b).table;
        base_sizes[t] = std::max(base_sizes[t], need);
    }
}

}  // namespace

std::map<std::string, int> base_table_sizes(const QueryTree& q, const BuildPlan& plan,
                                            const SchemaCatalog& catalog,
                                            const SizerOptions& opts) {
    std::map<std::string, int> sizes;
    if (opts.base_override) {
        for (const auto& n : plan.nodes)
            if (n.kind == PlanNode::Kind::Base) sizes[n.table] = *opts.base_override;
    } else {
        for (const auto& n : plan.nodes)
            if (n.kind == PlanNode::Kind::Base) sizes[n.table] += 1;
    }

    // aggregate lower bounds from HAVING conditions: AGG(attr) op constant
    BuildPlan& mplan = const_cast<BuildPlan&>(plan);
    for (const auto& n : plan.nodes) {
        if (n.kind != PlanNode::Kind::Agg) continue;
        for (const auto& h : n.having) {
            if (!h || h->kind != Expr::Kind::Compare) continue;
            const ExprPtr& l = h->children[0];
            const ExprPtr& r = h->children[1];
            const Expr* agg = nullptr;
            const Expr* lit = nullptr;
            CompareOp op = h->op;
            if (l->kind == Expr::Kind::AggRef && r->kind == Expr::Kind::Literal) {
                agg = l.get();
                lit = r.get();
            } else if (r->kind == Expr::Kind::AggRef && l->kind == Expr::Kind::Literal) {
                agg = r.get();
                lit = l.get();
                op = flip(op);
            }
            if (!agg || lit->lit.is_null()) continue;
            const AggExpr& ax = n.aggs.at(agg->agg_index);
            ValueDomain dom;
            if (ax.func != AggFunc::CountStar && ax.func != AggFunc::Count) {
                auto base = trace_to_base(q, catalog, ax.arg);
                if (!base) continue;
                dom = catalog.domain(base->table, base->column);
            }
            int need = aggregate_lower_bound(ax.func, dom, op, lit->lit.numeric());
            if (need > 1) bump_block_bases(mplan, n.id, need, sizes);
        }
    }

    // foreign-key rule to fixpoint: referenced ≥ max(referencing)
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& t : catalog.tables) {
            auto it = sizes.find(t.name);
            if (it == sizes.end()) continue;
            for (const auto& fk : t.foreign_keys) {
                int& ref = sizes[fk.ref_table];  // creates entry when absent
                if (ref < it->second) {
                    ref = it->second;
                    changed = true;
                }
            }
        }
    }
    for (auto& [t, n] : sizes) n = std::max(1, n + opts.base_bump);
    return sizes;
}

SizePlan size_plan(const QueryTree& q, BuildPlan& plan, const SchemaCatalog& catalog,
                   const SizerOptions& opts) {
    SizePlan sp;
    sp.cap = opts.cap;
    sp.base_sizes = base_table_sizes(q, plan, catalog, opts);
    plan.base_sizes = sp.base_sizes;

    for (auto& n : plan.nodes) {
        switch (n.kind) {
            case PlanNode::Kind::Base:
                n.max_tuples = sp.base_sizes.at(n.table);
                break;
            case PlanNode::Kind::Join: {
                std::vector<JoinSizeInput> ins;
                for (size_t i = 0; i < n.inputs.size(); ++i) {
                    JoinSizeInput in;
                    in.alias = n.input_aliases[i];
                    in.size = plan.node(n.inputs[i]).max_tuples;
                    in.key_cols = node_key_cols(plan, catalog, n.inputs[i]);
                    ins.push_back(in);
                }
                n.max_tuples = max_join_size(ins, n.conditions, sp.cap);
                break;
            }
            case PlanNode::Kind::Outer: {
                std::vector<JoinSizeInput> ins;
                for (size_t i = 0; i < n.inputs.size(); ++i) {
                    JoinSizeInput in;
                    in.alias = n.input_aliases[i];
                    in.size = plan.node(n.inputs[i]).max_tuples;
                    in.key_cols = node_key_cols(plan, catalog, n.inputs[i]);
                    ins.push_back(in);
                }
                int bound = max_join_size(ins, n.conditions, sp.cap);
                // unmatched side tuples must fit too
                int l = plan.node(n.inputs[0]).max_tuples;
                int r = plan.node(n.inputs[1]).max_tuples;
                if (n.join_type == JoinType::LeftOuter) bound = std::max(bound, l);
                if (n.join_type == JoinType::RightOuter) bound = std::max(bound, r);
                if (n.join_type == JoinType::FullOuter) bound = std::max(bound, l + r);
                n.max_tuples = std::min(bound, sp.cap);
                break;
            }
            case PlanNode::Kind::Semi:
            case PlanNode::Kind::Anti:
                n.max_tuples = std::min(plan.node(n.inputs[0]).max_tuples, sp.cap);
                break;
            case PlanNode::Kind::Agg:
            case PlanNode::Kind::Project:
                n.max_tuples = std::min(plan.node(n.inputs[0]).max_tuples, sp.cap);
                break;
            case PlanNode::Kind::SetOp: {
                int l = plan.node(n.inputs[0]).max_tuples;
                int r = plan.node(n.inputs[1]).max_tuples;
                int v = l + r;
                if (n.setop == SetOpKind::Intersect || n.setop == SetOpKind::IntersectAll)
                    v = std::min(l, r);
                else if (n.setop == SetOpKind::Except || n.setop == SetOpKind::ExceptAll)
                    v = l;
                n.max_tuples = std::min(v, sp.cap);
                break;
            }
        }
        if (n.kind != PlanNode::Kind::Base) sp.result_sizes[n.name] = n.max_tuples;
    }

    // aggregate demands that exceed what capped inputs can deliver
    for (const auto& n : plan.nodes) {
        if (n.kind != PlanNode::Kind::Agg) continue;
        for (const auto& h : n.having) {
            if (!h || h->kind != Expr::Kind::Compare) continue;
            const ExprPtr& l = h->children[0];
            const ExprPtr& r = h->children[1];
            const Expr* agg = nullptr;
            const Expr* lit = nullptr;
            CompareOp op = h->op;
            if (l->kind == Expr::Kind::AggRef && r->kind == Expr::Kind::Literal) {
                agg = l.get();
                lit = r.get();
            } else if (r->kind == Expr::Kind::AggRef && l->kind == Expr::Kind::Literal) {
                agg = r.get();
                lit = l.get();
                op = flip(op);
            }
            if (!agg || lit->lit.is_null()) continue;
            const AggExpr& ax = n.aggs.at(agg->agg_index);
            ValueDomain dom;
            if (ax.func != AggFunc::CountStar && ax.func != AggFunc::Count) {
                auto base = trace_to_base(q, catalog, ax.arg);
                if (!base) continue;
                dom = catalog.domain(base->table, base->column);
            }
            int need = aggregate_lower_bound(ax.func, dom, op, lit->lit.numeric());
            if (need > plan.node(n.inputs[0]).max_tuples)
                throw UnsatisfiableBound("aggregate condition needs " + std::to_string(need) +
                                         " tuples but the input table is capped at " +
                                         std::to_string(plan.node(n.inputs[0]).max_tuples));
        }
    }
    return sp;
}

}  // namespace qdgen
