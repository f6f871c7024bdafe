#include "qdgen/mutation.hpp"

#include <functional>
#include <set>

#include "qdgen/errors.hpp"

namespace qdgen {

std::string to_string(MutationType t) {
    switch (t) {
        case MutationType::SelectionComparison: return "selection-comparison";
        case MutationType::JoinType: return "join-type";
        case MutationType::JoinConditionMissing: return "join-condition-missing";
        case MutationType::NonEquiJoinRelop: return "non-equi-join-relop";
        case MutationType::StringLikeClass: return "string-like-class";
        case MutationType::GroupByExtra: return "groupby-extra";
        case MutationType::GroupByMissing: return "groupby-missing";
        case MutationType::AggregateFunction: return "aggregate-function";
        case MutationType::AggregateDistinct: return "aggregate-distinct";
        case MutationType::SelectDistinct: return "select-distinct";
        case MutationType::HavingComparison: return "having-comparison";
        case MutationType::SubqueryConnective: return "subquery-connective";
        case MutationType::SubqueryMissing: return "subquery-missing";
        case MutationType::NullCondition: return "null-condition";
        case MutationType::SetOpKindMutation: return "setop-kind";
    }
    return "?";
}

std::string NodePath::to_string() const {
    std::string s = "b" + std::to_string(block_id);
    switch (target) {
        case Target::WhereCondition: s += ".where[" + std::to_string(index) + "]"; break;
        case Target::HavingCondition: s += ".having[" + std::to_string(index) + "]"; break;
        case Target::JoinNode:
        case Target::JoinCondition: {
            s += ".from";
            for (int d : steps) s += d == 0 ? ".L" : ".R";
            if (target == Target::JoinCondition) s += ".on[" + std::to_string(index) + "]";
            break;
        }
        case Target::Aggregate: s += ".agg[" + std::to_string(index) + "]"; break;
        case Target::GroupBy: s += ".groupby[" + std::to_string(index) + "]"; break;
        case Target::SelectDistinct: s += ".distinct"; break;
        case Target::SetOp: s += ".setop"; break;
    }
    return s;
}

std::string MutationStruct::describe() const {
    std::string s = to_string(type) + "@" + location.to_string();
    switch (type) {
        case MutationType::SelectionComparison:
        case MutationType::HavingComparison:
        case MutationType::NonEquiJoinRelop:
            s += region == Region::Lt ? ":lt" : region == Region::Eq ? ":eq" : ":gt";
            break;
        case MutationType::JoinType:
            s += ":" + to_string(new_join_type) +
                 (unmatched_side == 0 ? ":left" : ":right");
            break;
        case MutationType::AggregateFunction: s += ":" + to_string(new_func); break;
        case MutationType::AggregateDistinct: s += new_distinct ? ":distinct" : ":plain"; break;
        case MutationType::SetOpKindMutation: s += ":" + to_string(new_setop); break;
        case MutationType::GroupByExtra: s += ":" + extra_column.to_string(); break;
        default: break;
    }
    // path components are slash-unsafe as filenames; keep them plain
    for (auto& c : s)
        if (c == ' ') c = '_';
    return s;
}

FromPtr resolve_join_node(QueryTree& q, const NodePath& path) {
    QueryBlock& b = q.block(path.block_id);
    FromPtr node = b.from;
    for (int d : path.steps) {
        if (!node || node->kind != FromNode::Kind::Join)
            throw InvalidLocation(path.to_string());
        node = d == 0 ? node->left : node->right;
    }
    if (!node || node->kind != FromNode::Kind::Join) throw InvalidLocation(path.to_string());
    return node;
}

namespace {

bool is_col_lit_compare(const ExprPtr& e) {
    return e->kind == Expr::Kind::Compare &&
           ((e->children[0]->kind == Expr::Kind::Column &&
             e->children[1]->kind == Expr::Kind::Literal) ||
            (e->children[1]->kind == Expr::Kind::Column &&
             e->children[0]->kind == Expr::Kind::Literal));
}

bool is_col_col_compare(const ExprPtr& e) {
    return e->kind == Expr::Kind::Compare &&
           e->children[0]->kind == Expr::Kind::Column &&
           e->children[1]->kind == Expr::Kind::Column;
}

/// Truth table of an op over the three regions (lt, eq, gt).
std::array<bool, 3> op_truth(CompareOp op) {
    switch (op) {
        case CompareOp::Lt: return {true, false, false};
        case CompareOp::Le: return {true, true, false};
        case CompareOp::Eq: return {false, true, false};
        case CompareOp::Ne: return {true, false, true};
        case CompareOp::Ge: return {false, true, true};
        case CompareOp::Gt: return {false, false, true};
    }
    return {false, false, false};
}

int region_index(Region r) { return r == Region::Lt ? 0 : r == Region::Eq ? 1 : 2; }

/// The minimal-edit operator that disagrees with `orig` exactly at `region`.
CompareOp mutant_for_region(CompareOp orig, Region region) {
    auto ot = op_truth(orig);
    int ri = region_index(region);
    CompareOp best = orig;
    int best_dist = 4;
    for (CompareOp cand : {CompareOp::Lt, CompareOp::Le, CompareOp::Eq, CompareOp::Ne,
                           CompareOp::Ge, CompareOp::Gt}) {
        if (cand == orig) continue;
        auto ct = op_truth(cand);
        if (ct[ri] == ot[ri]) continue;
        int dist = 0;
        for (int i = 0; i < 3; ++i) dist += ct[i] != ot[i];
        if (dist < best_dist) {
            best_dist = dist;
            best = cand;
        }
    }
    return best;
}

class Collector {
public:
    Collector(const QueryTree& q, const SchemaCatalog& cat) : q_(q), cat_(cat) {}

    std::vector<MutationStruct> run() {
        for (const auto& [id, b] : q_.blocks)
            if (!b.synthetic) collect_block(b);
        return std::move(out_);
    }

private:
    const QueryTree& q_;
    const SchemaCatalog& cat_;
    std::vector<MutationStruct> out_;

    void add_region_structs(MutationType type, const NodePath& path, CompareOp orig,
                            int block) {
        for (Region r : {Region::Lt, Region::Eq, Region::Gt}) {
            // skip regions where the original and every mutant agree (no kill)
            MutationStruct ms;
            ms.type = type;
            ms.location = path;
            ms.query_block = block;
            ms.region = r;
            ms.new_op = mutant_for_region(orig, r);
            if (ms.new_op == orig) continue;  // no operator disagrees here
            out_.push_back(ms);
        }
    }

    void collect_block(const QueryBlock& b) {
        // WHERE conditions
        for (size_t wi = 0; wi < b.where.size(); ++wi) {
            const ExprPtr& e = b.where[wi].expr;
            NodePath p;
            p.block_id = b.id;
            p.target = NodePath::Target::WhereCondition;
            p.index = static_cast<int>(wi);
            collect_condition(e, p, b.id, /*join_cond=*/false);
        }
        // HAVING conditions
        for (size_t hi = 0; hi < b.having.size(); ++hi) {
            const ExprPtr& e = b.having[hi].expr;
            if (e->kind == Expr::Kind::Compare &&
                (e->children[0]->kind == Expr::Kind::AggRef ||
                 e->children[1]->kind == Expr::Kind::AggRef)) {
                NodePath p;
                p.block_id = b.id;
                p.target = NodePath::Target::HavingCondition;
                p.index = static_cast<int>(hi);
                add_region_structs(MutationType::HavingComparison, p, e->op, b.id);
            }
        }
        // from tree: join nodes
        if (b.from) collect_from(b.from, {}, b.id);
        // group by
        if (!b.group_by.empty()) {
            std::set<std::string> select_cols;
            for (const auto& si : b.select_list)
                if (!si.is_aggregate) select_cols.insert(si.col.to_string());
            for (size_t gi = 0; gi < b.group_by.size(); ++gi) {
                if (select_cols.count(b.group_by[gi].to_string())) continue;
                MutationStruct ms;
                ms.type = MutationType::GroupByMissing;
                ms.location.block_id = b.id;
                ms.location.target = NodePath::Target::GroupBy;
                ms.location.index = static_cast<int>(gi);
                ms.query_block = b.id;
                out_.push_back(ms);
            }
            // extra group-by candidates: aggregate argument columns not
            // already grouped (adding them keeps the query well-formed)
            std::set<std::string> gb;
            for (const auto& g : b.group_by) gb.insert(g.to_string());
            std::set<std::string> cands;
            for (const auto& a : b.aggregates) {
                if (a.func == AggFunc::CountStar) continue;
                if (gb.count(a.arg.to_string())) continue;
                if (!cands.insert(a.arg.to_string()).second) continue;
                MutationStruct ms;
                ms.type = MutationType::GroupByExtra;
                ms.location.block_id = b.id;
                ms.location.target = NodePath::Target::GroupBy;
                ms.location.index = -1;
                ms.extra_column = a.arg;
                ms.query_block = b.id;
                out_.push_back(ms);
            }
        }
        // aggregates
        for (size_t ai = 0; ai < b.aggregates.size(); ++ai) {
            const AggExpr& a = b.aggregates[ai];
            NodePath p;
            p.block_id = b.id;
            p.target = NodePath::Target::Aggregate;
            p.index = static_cast<int>(ai);
            bool is_string_arg =
                a.func != AggFunc::CountStar && a.arg.type == SemanticType::String;
            std::vector<AggFunc> alts;
            if (a.func == AggFunc::CountStar) {
                alts = {};  // COUNT(*) has no same-shape alternatives here
            } else if (is_string_arg) {
                if (a.func == AggFunc::Min) alts = {AggFunc::Max};
                if (a.func == AggFunc::Max) alts = {AggFunc::Min};
            } else {
                for (AggFunc f : {AggFunc::Count, AggFunc::Sum, AggFunc::Avg, AggFunc::Min,
                                  AggFunc::Max})
                    if (f != a.func) alts.push_back(f);
            }
            for (AggFunc f : alts) {
                MutationStruct ms;
                ms.type = MutationType::AggregateFunction;
                ms.location = p;
                ms.query_block = b.id;
                ms.new_func = f;
                ms.new_distinct = a.distinct;
                out_.push_back(ms);
            }
            // distinct flag flip (MIN/MAX are insensitive)
            if (a.func == AggFunc::Count || a.func == AggFunc::Sum || a.func == AggFunc::Avg) {
                MutationStruct ms;
                ms.type = MutationType::AggregateDistinct;
                ms.location = p;
                ms.query_block = b.id;
                ms.new_func = a.func;
                ms.new_distinct = !a.distinct;
                out_.push_back(ms);
            }
        }
        // select distinct
        if (b.distinct) {
            MutationStruct ms;
            ms.type = MutationType::SelectDistinct;
            ms.location.block_id = b.id;
            ms.location.target = NodePath::Target::SelectDistinct;
            ms.query_block = b.id;
            out_.push_back(ms);
        }
        // set operator
        if (b.setop) {
            for (SetOpKind k :
                 {SetOpKind::Union, SetOpKind::UnionAll, SetOpKind::Intersect,
                  SetOpKind::IntersectAll, SetOpKind::Except, SetOpKind::ExceptAll}) {
                if (k == b.setop->kind) continue;
                MutationStruct ms;
                ms.type = MutationType::SetOpKindMutation;
                ms.location.block_id = b.id;
                ms.location.target = NodePath::Target::SetOp;
                ms.query_block = b.id;
                ms.new_setop = k;
                out_.push_back(ms);
            }
        }
    }

    void collect_condition(const ExprPtr& e, const NodePath& p, int block, bool join_cond) {
        if (is_col_lit_compare(e)) {
            add_region_structs(join_cond ? MutationType::NonEquiJoinRelop
                                         : MutationType::SelectionComparison,
                               p, e->op, block);
            return;
        }
        if (is_col_col_compare(e) && join_cond && e->op != CompareOp::Eq) {
            // non-equi join: mutate the relation operator regions
            add_region_structs(MutationType::NonEquiJoinRelop, p, e->op, block);
            return;
        }
        if (!join_cond && is_col_col_compare(e) && e->op != CompareOp::Eq) {
            add_region_structs(MutationType::SelectionComparison, p, e->op, block);
            return;
        }
        if (e->kind == Expr::Kind::Like) {
            MutationStruct ms;
            ms.type = MutationType::StringLikeClass;
            ms.location = p;
            ms.query_block = block;
            out_.push_back(ms);
            return;
        }
        if (e->kind == Expr::Kind::IsNull) {
            MutationStruct ms;
            ms.type = MutationType::NullCondition;
            ms.location = p;
            ms.query_block = block;
            out_.push_back(ms);
            return;
        }
    }

    void collect_from(const FromPtr& f, std::vector<int> steps, int block) {
        if (f->kind != FromNode::Kind::Join) return;
        NodePath p;
        p.block_id = block;
        p.target = NodePath::Target::JoinNode;
        p.steps = steps;

        if (f->origin != JoinOrigin::Plain) {
            // decorrelated WHERE-clause connective
            bool paired = f->origin == JoinOrigin::Exists || f->origin == JoinOrigin::NotExists ||
                          f->origin == JoinOrigin::In || f->origin == JoinOrigin::NotIn;
            if (paired) {
                MutationStruct ms;
                ms.type = MutationType::SubqueryConnective;
                ms.location = p;
                ms.query_block = block;
                out_.push_back(ms);
            }
            // a removed scalar COUNT subquery leaves its comparison dangling,
            // so no missing-subquery mutant exists for that shape
            if (f->origin != JoinOrigin::ScalarCount) {
                MutationStruct miss;
                miss.type = MutationType::SubqueryMissing;
                miss.location = p;
                miss.query_block = block;
                out_.push_back(miss);
            }
        } else if (f->join_type == JoinType::Inner || f->join_type == JoinType::LeftOuter ||
                   f->join_type == JoinType::RightOuter ||
                   f->join_type == JoinType::FullOuter) {
            // join-type mutants within the inner/outer family
            for (JoinType jt : {JoinType::Inner, JoinType::LeftOuter, JoinType::RightOuter,
                                JoinType::FullOuter}) {
                if (jt == f->join_type) continue;
                if (f->conditions.empty()) continue;  // cross products have no match split
                MutationStruct ms;
                ms.type = MutationType::JoinType;
                ms.location = p;
                ms.query_block = block;
                ms.new_join_type = jt;
                // which side must lose its partner for the pair to differ
                auto extends_left = [](JoinType t) {
                    return t == JoinType::LeftOuter || t == JoinType::FullOuter;
                };
                auto extends_right = [](JoinType t) {
                    return t == JoinType::RightOuter || t == JoinType::FullOuter;
                };
                if (extends_left(jt) != extends_left(f->join_type))
                    ms.unmatched_side = 0;
                else if (extends_right(jt) != extends_right(f->join_type))
                    ms.unmatched_side = 1;
                else
                    continue;  // same null-extension behavior (cannot happen here)
                out_.push_back(ms);
            }
            // missing-condition mutants per binary column condition
            for (size_t ci = 0; ci < f->conditions.size(); ++ci) {
                if (!is_col_col_compare(f->conditions[ci])) continue;
                NodePath pc = p;
                pc.target = NodePath::Target::JoinCondition;
                pc.index = static_cast<int>(ci);
                MutationStruct ms;
                ms.type = MutationType::JoinConditionMissing;
                ms.location = pc;
                ms.query_block = block;
                out_.push_back(ms);
                // non-equi relop structs on the join condition
                if (f->conditions[ci]->op != CompareOp::Eq)
                    add_region_structs(MutationType::NonEquiJoinRelop, pc,
                                       f->conditions[ci]->op, block);
            }
        }
        std::vector<int> ls = steps;
        ls.push_back(0);
        collect_from(f->left, ls, block);
        std::vector<int> rs = steps;
        rs.push_back(1);
        collect_from(f->right, rs, block);
    }
};

}  // namespace

std::vector<MutationStruct> collect_mutation_structs(const QueryTree& q,
                                                     const SchemaCatalog& catalog) {
    Collector c(q, catalog);
    return c.run();
}

QueryTree mutate(const QueryTree& q, const MutationStruct& ms) {
    QueryTree out = q.deep_copy();
    QueryBlock& b = out.block(ms.location.block_id);
    switch (ms.type) {
        case MutationType::SelectionComparison: {
            ExprPtr& e = b.where.at(ms.location.index).expr;
            if (e->kind != Expr::Kind::Compare) throw InvalidLocation(ms.location.to_string());
            auto c = clone(e);
            const_cast<Expr&>(*c).op = ms.new_op;
            e = c;
            break;
        }
        case MutationType::HavingComparison: {
            ExprPtr& e = b.having.at(ms.location.index).expr;
            if (e->kind != Expr::Kind::Compare) throw InvalidLocation(ms.location.to_string());
            auto c = clone(e);
            const_cast<Expr&>(*c).op = ms.new_op;
            e = c;
            break;
        }
        case MutationType::NonEquiJoinRelop: {
            if (ms.location.target == NodePath::Target::JoinCondition) {
                FromPtr j = resolve_join_node(out, ms.location);
                ExprPtr& e = j->conditions.at(ms.location.index);
                auto c = clone(e);
                const_cast<Expr&>(*c).op = ms.new_op;
                e = c;
            } else {
                ExprPtr& e = b.where.at(ms.location.index).expr;
                auto c = clone(e);
                const_cast<Expr&>(*c).op = ms.new_op;
                e = c;
            }
            break;
        }
        case MutationType::StringLikeClass: {
            ExprPtr& e = b.where.at(ms.location.index).expr;
            if (e->kind != Expr::Kind::Like) throw InvalidLocation(ms.location.to_string());
            auto c = clone(e);
            const_cast<Expr&>(*c).negated = !e->negated;
            e = c;
            break;
        }
        case MutationType::NullCondition: {
            ExprPtr& e = b.where.at(ms.location.index).expr;
            if (e->kind != Expr::Kind::IsNull) throw InvalidLocation(ms.location.to_string());
            auto c = clone(e);
            const_cast<Expr&>(*c).negated = !e->negated;
            e = c;
            break;
        }
        case MutationType::JoinType: {
            FromPtr j = resolve_join_node(out, ms.location);
            j->join_type = ms.new_join_type;
            break;
        }
        case MutationType::JoinConditionMissing: {
            FromPtr j = resolve_join_node(out, ms.location);
            if (ms.location.index < 0 ||
                ms.location.index >= static_cast<int>(j->conditions.size()))
                throw InvalidLocation(ms.location.to_string());
            j->conditions.erase(j->conditions.begin() + ms.location.index);
            break;
        }
        case MutationType::GroupByMissing:
            b.group_by.erase(b.group_by.begin() + ms.location.index);
            break;
        case MutationType::GroupByExtra:
            b.group_by.push_back(ms.extra_column);
            break;
        case MutationType::AggregateFunction:
            b.aggregates.at(ms.location.index).func = ms.new_func;
            break;
        case MutationType::AggregateDistinct:
            b.aggregates.at(ms.location.index).distinct = ms.new_distinct;
            break;
        case MutationType::SelectDistinct:
            b.distinct = !b.distinct;
            break;
        case MutationType::SetOpKindMutation:
            if (!b.setop) throw InvalidLocation(ms.location.to_string());
            b.setop->kind = ms.new_setop;
            break;
        case MutationType::SubqueryConnective: {
            FromPtr j = resolve_join_node(out, ms.location);
            switch (j->origin) {
                case JoinOrigin::Exists:
                    j->join_type = JoinType::AntiSemi;
                    j->origin = JoinOrigin::NotExists;
                    break;
                case JoinOrigin::NotExists:
                    j->join_type = JoinType::Semi;
                    j->origin = JoinOrigin::Exists;
                    break;
                case JoinOrigin::In: {
                    // IN → NOT IN: anti-semijoin with the null disjuncts
                    j->join_type = JoinType::AntiSemi;
                    j->origin = JoinOrigin::NotIn;
                    if (j->conditions.size() == 1 &&
                        j->conditions[0]->kind == Expr::Kind::Compare) {
                        ExprPtr eqc = j->conditions[0];
                        std::vector<ExprPtr> ors{clone(eqc)};
                        ors.push_back(Expr::is_null(clone(eqc->children[0]), false));
                        ors.push_back(Expr::is_null(clone(eqc->children[1]), false));
                        j->conditions = {Expr::make_or(std::move(ors))};
                    }
                    break;
                }
                case JoinOrigin::NotIn: {
                    // NOT IN → IN: strip the null disjuncts
                    j->join_type = JoinType::Semi;
                    j->origin = JoinOrigin::In;
                    if (j->conditions.size() == 1 &&
                        j->conditions[0]->kind == Expr::Kind::Or &&
                        !j->conditions[0]->children.empty()) {
                        j->conditions = {clone(j->conditions[0]->children[0])};
                    }
                    break;
                }
                default: throw InvalidLocation("connective mutation on plain join");
            }
            break;
        }
        case MutationType::SubqueryMissing: {
            // replace the join node by its left input
            QueryBlock& blk = out.block(ms.location.block_id);
            if (ms.location.steps.empty()) {
                FromPtr j = blk.from;
                if (!j || j->kind != FromNode::Kind::Join)
                    throw InvalidLocation(ms.location.to_string());
                blk.from = j->left;
            } else {
                NodePath parent = ms.location;
                int last = parent.steps.back();
                parent.steps.pop_back();
                FromPtr pj = resolve_join_node(out, parent);
                FromPtr j = last == 0 ? pj->left : pj->right;
                if (!j || j->kind != FromNode::Kind::Join)
                    throw InvalidLocation(ms.location.to_string());
                (last == 0 ? pj->left : pj->right) = j->left;
            }
            break;
        }
    }
    return out;
}

}  // namespace qdgen
