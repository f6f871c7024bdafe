#include "qdgen/plan.hpp"

#include <functional>
#include <set>

#include "qdgen/errors.hpp"

namespace qdgen {

std::vector<int> BuildPlan::base_inputs(int id) const {
    std::vector<int> out;
    std::set<int> seen;
    std::function<void(int)> walk = [&](int n) {
        if (!seen.insert(n).second) return;
        const PlanNode& p = node(n);
        if (p.kind == PlanNode::Kind::Base) out.push_back(n);
        for (int i : p.inputs) walk(i);
    };
    walk(id);
    return out;
}

namespace {

class Planner {
public:
    Planner(const QueryTree& q, const SchemaCatalog& cat) : q_(q), cat_(cat) {}

    BuildPlan run() {
        plan_.root = plan_block(q_.root);
        return std::move(plan_);
    }

private:
    const QueryTree& q_;
    const SchemaCatalog& cat_;
    BuildPlan plan_;
    int jrt_ = 0, art_ = 0, prt_ = 0, drt_ = 0, srt_ = 0;

    int add_node(PlanNode n) {
        n.id = static_cast<int>(plan_.nodes.size());
        plan_.nodes.push_back(std::move(n));
        return plan_.nodes.back().id;
    }

    struct Atom {
        int node;
        std::string alias;  // "" for structured join results
    };

    // Flattens inner/cross join trees into n-ary atom lists; structured
    // joins (outer/semi/anti) become their own nodes.
    void flatten(const FromPtr& f, int block_id, std::vector<Atom>& atoms,
                 std::vector<ExprPtr>& conds) {
        switch (f->kind) {
            case FromNode::Kind::BaseTable: {
                PlanNode n;
                n.kind = PlanNode::Kind::Base;
                n.name = f->alias;
                n.block_id = block_id;
                n.table = f->table;
                n.alias = f->alias;
                atoms.push_back({add_node(std::move(n)), f->alias});
                break;
            }
            case FromNode::Kind::Subquery: {
                int sub = plan_block(f->subquery_block);
                atoms.push_back({sub, f->alias});
                break;
            }
            case FromNode::Kind::Join:
                if (f->join_type == JoinType::Inner || f->join_type == JoinType::Cross) {
                    flatten(f->left, block_id, atoms, conds);
                    flatten(f->right, block_id, atoms, conds);
                    for (const auto& c : f->conditions) conds.push_back(c);
                } else {
                    atoms.push_back({plan_structured_join(f, block_id), ""});
                }
                break;
        }
    }

    int plan_join_side(const FromPtr& f, int block_id, std::string* alias_out) {
        // A side of a structured join: flatten and wrap in a JRT when it is
        // more than a single plain atom.
        std::vector<Atom> atoms;
        std::vector<ExprPtr> conds;
        flatten(f, block_id, atoms, conds);
        if (atoms.size() == 1 && conds.empty()) {
            *alias_out = atoms[0].alias;
            return atoms[0].node;
        }
        *alias_out = "";
        return make_join(atoms, conds, block_id);
    }

    int make_join(const std::vector<Atom>& atoms, std::vector<ExprPtr> conds, int block_id) {
        PlanNode n;
        n.kind = PlanNode::Kind::Join;
        n.join_type = JoinType::Inner;
        n.name = "JRT" + std::to_string(jrt_++);
        n.block_id = block_id;
        for (const auto& a : atoms) {
            n.inputs.push_back(a.node);
            n.input_aliases.push_back(a.alias);
        }
        n.conditions = std::move(conds);
        return add_node(std::move(n));
    }

    int plan_structured_join(const FromPtr& f, int block_id) {
        std::string la, ra;
        int l = plan_join_side(f->left, block_id, &la);
        int r = plan_join_side(f->right, block_id, &ra);
        PlanNode n;
        n.block_id = block_id;
        n.join_type = f->join_type;
        n.origin = f->origin;
        n.inputs = {l, r};
        n.input_aliases = {la, ra};
        n.conditions = f->conditions;
        switch (f->join_type) {
            case JoinType::Semi:
                n.kind = PlanNode::Kind::Semi;
                break;
            case JoinType::AntiSemi:
                n.kind = PlanNode::Kind::Anti;
                break;
            default:
                n.kind = PlanNode::Kind::Outer;
                break;
        }
        n.name = "JRT" + std::to_string(jrt_++);
        return add_node(std::move(n));
    }

    int plan_block(int bid) {
        const QueryBlock& b = q_.block(bid);
        if (b.setop) {
            int l = plan_block(b.setop->left_block);
            int r = plan_block(b.setop->right_block);
            PlanNode n;
            n.kind = PlanNode::Kind::SetOp;
            n.setop = b.setop->kind;
            n.name = "SRT" + std::to_string(srt_++);
            n.block_id = bid;
            n.inputs = {l, r};
            n.input_aliases = {"", ""};
            return add_node(std::move(n));
        }

        std::vector<Atom> atoms;
        std::vector<ExprPtr> conds;
        flatten(b.from, bid, atoms, conds);
        for (const auto& w : b.where) {
            if (w.kind == ConditionKind::Correlated)
                throw std::logic_error("plan over a tree that still has correlation");
            conds.push_back(w.expr);
        }
        int current = make_join(atoms, std::move(conds), bid);

        if (b.has_aggregation()) {
            // Normalize MIN/MAX DISTINCT (same value) and route remaining
            // DISTINCT aggregates through a duplicate-removing projection.
            std::vector<AggExpr> aggs = b.aggregates;
            for (auto& a : aggs)
                if (a.distinct && (a.func == AggFunc::Min || a.func == AggFunc::Max))
                    a.distinct = false;
            bool any_distinct = false, any_plain = false;
            std::set<std::string> distinct_args;
            for (const auto& a : aggs) {
                if (a.distinct) {
                    any_distinct = true;
                    distinct_args.insert(a.arg.to_string());
                } else {
                    any_plain = true;
                }
            }
            if (any_distinct) {
                if (any_plain)
                    throw UnsupportedFeature(
                        "mixing DISTINCT and plain aggregates in one block");
                if (distinct_args.size() > 1)
                    throw UnsupportedFeature("multiple DISTINCT aggregate columns in one block");
                // dup-removing projection on group-by cols + the argument
                PlanNode d;
                d.kind = PlanNode::Kind::Project;
                d.distinct = true;
                d.name = "DRT" + std::to_string(drt_++);
                d.block_id = bid;
                d.inputs = {current};
                d.input_aliases = {""};
                std::set<std::string> added;
                for (const auto& g : b.group_by) {
                    SelectItem si;
                    si.col = g;
                    si.alias = g.column;
                    while (!added.insert(si.alias).second) si.alias += "_";
                    d.items.push_back(si);
                }
                for (const auto& a : aggs) {
                    if (a.func == AggFunc::CountStar) continue;
                    SelectItem si;
                    si.col = a.arg;
                    si.alias = a.arg.column;
                    bool dup = false;
                    for (const auto& it : d.items)
                        if (!it.is_aggregate && it.col == a.arg) dup = true;
                    if (dup) continue;
                    while (!added.insert(si.alias).second) si.alias += "_";
                    d.items.push_back(si);
                }
                current = add_node(std::move(d));
                for (auto& a : aggs) a.distinct = false;  // input is already distinct
            }
            PlanNode art;
            art.kind = PlanNode::Kind::Agg;
            art.name = "ART" + std::to_string(art_++);
            art.block_id = bid;
            art.inputs = {current};
            art.input_aliases = {""};
            art.group_by = b.group_by;
            art.aggs = aggs;
            for (const auto& h : b.having) art.having.push_back(h.expr);
            current = add_node(std::move(art));
        }

        PlanNode proj;
        proj.kind = PlanNode::Kind::Project;
        proj.distinct = b.distinct;
        proj.name = (b.distinct ? "DRT" + std::to_string(drt_++)
                                : "PRT" + std::to_string(prt_++));
        proj.block_id = bid;
        proj.inputs = {current};
        proj.input_aliases = {""};
        proj.items = b.select_list;
        return add_node(std::move(proj));
    }
};

}  // namespace

BuildPlan lower_to_plan(const QueryTree& q, const SchemaCatalog& catalog) {
    Planner p(q, catalog);
    return p.run();
}

}  // namespace qdgen
