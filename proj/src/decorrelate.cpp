#include "qdgen/decorrelate.hpp"

#include <functional>
#include <map>
#include <set>

#include "qdgen/errors.hpp"
#include "qdgen/parser.hpp"

namespace qdgen {

namespace {

void substitute_column(ExprPtr& e, const ColumnRef& from, const ColumnRef& to) {
    if (!e) return;
    if (e->kind == Expr::Kind::Column && e->col == from) {
        e->col = to;
        return;
    }
    for (auto& c : e->children) substitute_column(c, from, to);
}

class Decorrelator {
public:
    Decorrelator(QueryTree& q, const SchemaCatalog& cat, const DecorrelateOptions& opts)
        : q_(q), cat_(cat), opts_(opts) {}

    void run() {
        process_block(q_.root);
        classify_conditions(q_, cat_);
        verify_clean();
    }

private:
    QueryTree& q_;
    const SchemaCatalog& cat_;
    const DecorrelateOptions& opts_;
    int fresh_ = 0;

    std::string fresh_alias(const std::string& base) {
        return base + std::to_string(fresh_++);
    }

    void process_block(int bid) {
        QueryBlock& b = q_.block(bid);
        if (b.setop) {
            process_block(b.setop->left_block);
            process_block(b.setop->right_block);
            reject_correlation_under(b.setop->left_block);
            reject_correlation_under(b.setop->right_block);
            return;
        }
        process_from(b.from);
        // Bottom-up: each child subquery is fully rewritten before its
        // connective is turned into a join.
        std::vector<ConnectiveChild> children = std::move(b.connectives);
        q_.block(bid).connectives.clear();
        for (auto& cc : children) {
            process_block(cc.subquery_block);
            rewrite_connective(bid, cc);
        }
    }

    void process_from(const FromPtr& f) {
        if (!f) return;
        if (f->kind == FromNode::Kind::Subquery) {
            process_block(f->subquery_block);
            reject_correlation_under(f->subquery_block);
        } else if (f->kind == FromNode::Kind::Join) {
            process_from(f->left);
            process_from(f->right);
        }
    }

    /// From-clause and set-operation subqueries cannot use correlation
    /// variables (no LATERAL support).
    void reject_correlation_under(int bid) {
        const QueryBlock& b = q_.block(bid);
        if (b.setop) {
            reject_correlation_under(b.setop->left_block);
            reject_correlation_under(b.setop->right_block);
            return;
        }
        for (const auto& c : b.where)
            if (c.kind == ConditionKind::Correlated)
                throw UnsupportedCorrelation(
                    "correlation crossing a from-clause or set-operation boundary: " +
                    to_string(c.expr));
        std::function<void(const FromPtr&)> walk = [&](const FromPtr& f) {
            if (!f) return;
            if (f->kind == FromNode::Kind::Subquery) reject_correlation_under(f->subquery_block);
            if (f->kind == FromNode::Kind::Join) {
                walk(f->left);
                walk(f->right);
            }
        };
        walk(b.from);
    }

    /// Deep-copies the from-item with the given alias in block `owner_bid`
    /// (base table or subquery subtree) for use in a pushdown block.
    FromPtr copy_item(int owner_bid, const std::string& alias) {
        const QueryBlock& b = q_.block(owner_bid);
        FromPtr found;
        std::function<void(const FromPtr&)> walk = [&](const FromPtr& f) {
            if (!f || found) return;
            if (f->kind == FromNode::Kind::Join) {
                walk(f->left);
                walk(f->right);
            } else if (f->alias == alias) {
                found = f;
            }
        };
        walk(b.from);
        if (!found) throw UnsupportedCorrelation("cannot locate correlated item " + alias);
        if (found->kind == FromNode::Kind::BaseTable)
            return FromNode::base(found->table, found->alias);
        int copied = copy_block_subtree(found->subquery_block);
        return FromNode::subquery(copied, found->alias);
    }

    int copy_block_subtree(int bid) {
        const QueryBlock src = q_.block(bid);  // copy before inserting new blocks
        int nid = q_.new_block();
        QueryBlock& dst = q_.block(nid);
        int delta_root = nid;
        std::map<int, int> remap;
        remap[bid] = nid;
        // copy nested blocks first
        std::function<FromPtr(const FromPtr&)> copy_from = [&](const FromPtr& f) -> FromPtr {
            if (!f) return nullptr;
            auto c = std::make_shared<FromNode>(*f);
            c->left = copy_from(f->left);
            c->right = copy_from(f->right);
            c->conditions.clear();
            for (const auto& e : f->conditions) c->conditions.push_back(clone(e));
            if (f->kind == FromNode::Kind::Subquery)
                c->subquery_block = copy_block_subtree(f->subquery_block);
            return c;
        };
        dst = src;
        dst.id = nid;
        dst.from = copy_from(src.from);
        if (src.setop) {
            dst.setop = SetOpNode{src.setop->kind, copy_block_subtree(src.setop->left_block),
                                  copy_block_subtree(src.setop->right_block)};
        }
        dst.where.clear();
        for (const auto& w : src.where) dst.where.push_back({w.kind, clone(w.expr), w.correlation_level});
        dst.having.clear();
        for (const auto& h : src.having) dst.having.push_back({h.kind, clone(h.expr), h.correlation_level});
        if (!src.connectives.empty())
            throw std::logic_error("copying a block before its subqueries were rewritten");
        // rebind block ids of column refs owned by the copied block
        rebind_block_ids(dst, bid, nid);
        return delta_root;
    }

    static void rebind_expr(ExprPtr& e, int from, int to) {
        if (!e) return;
        if (e->kind == Expr::Kind::Column && e->col.block_id == from) e->col.block_id = to;
        for (auto& c : e->children) rebind_expr(c, from, to);
    }

    static void rebind_block_ids(QueryBlock& b, int from, int to) {
        for (auto& w : b.where) rebind_expr(w.expr, from, to);
        for (auto& h : b.having) rebind_expr(h.expr, from, to);
        for (auto& g : b.group_by)
            if (g.block_id == from) g.block_id = to;
        for (auto& a : b.aggregates)
            if (a.arg.block_id == from) a.arg.block_id = to;
        for (auto& s : b.select_list)
            if (!s.is_aggregate && s.col.block_id == from) s.col.block_id = to;
        std::function<void(const FromPtr&)> walk = [&](const FromPtr& f) {
            if (!f) return;
            for (auto& e : const_cast<FromNode&>(*f).conditions) rebind_expr(e, from, to);
            if (f->kind == FromNode::Kind::Join) {
                walk(f->left);
                walk(f->right);
            }
        };
        walk(b.from);
    }

    /// Ensures `col` (a column of some item inside block `sub`) appears in
    /// sub's select list; returns the output alias.
    std::string ensure_output(QueryBlock& sub, const ColumnRef& col) {
        for (const auto& it : sub.select_list)
            if (!it.is_aggregate && it.col == col) return it.alias;
        std::set<std::string> used;
        for (const auto& it : sub.select_list) used.insert(it.alias);
        std::string alias = col.column;
        int n = 2;
        while (used.count(alias)) alias = col.column + "_" + std::to_string(n++);
        SelectItem si;
        si.col = col;
        si.alias = alias;
        sub.select_list.push_back(si);
        return alias;
    }

    void ensure_group_by(QueryBlock& sub, const ColumnRef& col) {
        for (const auto& g : sub.group_by)
            if (g == col) return;
        sub.group_by.push_back(col);
    }

    struct CorrParts {
        ColumnRef outer;                // the single enclosing-block column
        std::vector<ColumnRef> locals;  // sub-side columns
        bool is_simple_equality = false;  // outer = subcol
        ColumnRef eq_subcol;
    };

    CorrParts analyze(const ExprPtr& e, int sub_id) {
        CorrParts p;
        std::vector<ColumnRef> cols;
        collect_columns(e, cols);
        bool outer_found = false;
        for (const auto& c : cols) {
            if (c.block_id != sub_id) {
                p.outer = c;
                outer_found = true;
            } else {
                p.locals.push_back(c);
            }
        }
        if (!outer_found) throw std::logic_error("correlated condition without outer column");
        if (e->kind == Expr::Kind::Compare && e->op == CompareOp::Eq) {
            const ExprPtr& l = e->children[0];
            const ExprPtr& r = e->children[1];
            if (l->kind == Expr::Kind::Column && r->kind == Expr::Kind::Column) {
                if (l->col.block_id != sub_id && r->col.block_id == sub_id) {
                    p.is_simple_equality = true;
                    p.eq_subcol = r->col;
                } else if (r->col.block_id != sub_id && l->col.block_id == sub_id) {
                    p.is_simple_equality = true;
                    p.eq_subcol = l->col;
                }
            }
        }
        return p;
    }

    void rewrite_connective(int bid, const ConnectiveChild& cc) {
        QueryBlock& sub = q_.block(cc.subquery_block);
        if (sub.setop) {
            // Uncorrelated set-operation subquery: fine as a plain relation;
            // correlation below was already rejected in process_block.
            attach_join(bid, cc, {});
            return;
        }

        // Detect the scalar COUNT(*) shape before correlation columns are
        // added to GROUP BY.
        bool scalar_count = false;
        if (cc.conn == Connective::ScalarCmp && !sub.select_list.empty() &&
            sub.select_list[0].is_aggregate && sub.group_by.empty()) {
            AggFunc f = sub.aggregates[sub.select_list[0].agg_index].func;
            scalar_count = (f == AggFunc::Count || f == AggFunc::CountStar);
        }

        // Step A: correlations that skip past the immediate parent get
        // threaded through `bid` with a DISTINCT cross join.
        std::map<std::string, std::pair<std::string, ColumnRef>> pushdowns;  // key: A#alias.col
        for (auto& cond : sub.where) {
            if (cond.kind != ConditionKind::Correlated) continue;
            if (cond.correlation_level == bid) continue;
            int ancestor = cond.correlation_level;
            CorrParts p = analyze(cond.expr, sub.id);
            std::string key = std::to_string(ancestor) + "#" + p.outer.item_alias + "." +
                              p.outer.column;
            if (!pushdowns.count(key)) {
                std::string dalias = fresh_alias("dq");
                int dblock = make_distinct_block(ancestor, p.outer);
                QueryBlock& host = q_.block(bid);
                host.from = FromNode::join(JoinType::Cross, host.from,
                                           FromNode::subquery(dblock, dalias), {});
                ColumnRef dref{bid, dalias, p.outer.column, p.outer.type};
                // lifted correlation: host must re-equate with the ancestor
                Condition lifted;
                lifted.kind = ConditionKind::Correlated;
                lifted.correlation_level = ancestor;
                lifted.expr = Expr::compare(CompareOp::Eq, Expr::column(dref),
                                            Expr::column(p.outer));
                host.where.push_back(lifted);
                pushdowns[key] = {dalias, dref};
            }
            substitute_column(cond.expr, p.outer, pushdowns[key].second);
            cond.correlation_level = bid;
        }

        // Step B: immediate correlations become join conditions.
        std::vector<ExprPtr> join_conds;
        std::vector<Condition> kept;
        std::string out_alias =
            fresh_alias(cc.conn == Connective::NotExists || cc.conn == Connective::NotIn ||
                                cc.conn == Connective::AllCmp
                            ? "asq"
                            : "sq");
        for (auto& cond : sub.where) {
            if (cond.kind != ConditionKind::Correlated) {
                kept.push_back(cond);
                continue;
            }
            CorrParts p = analyze(cond.expr, sub.id);
            if (p.locals.empty()) {
                // outer-only condition: lifts to the join unchanged
                join_conds.push_back(cond.expr);
                continue;
            }
            if (sub.has_aggregation()) {
                if (p.is_simple_equality) {
                    ensure_group_by(sub, p.eq_subcol);
                    std::string out = ensure_output(sub, p.eq_subcol);
                    ColumnRef outref{bid, out_alias, out, p.eq_subcol.type};
                    join_conds.push_back(
                        Expr::compare(CompareOp::Eq, Expr::column(outref), Expr::column(p.outer)));
                } else {
                    // simulate invocations with a DISTINCT copy of the outer
                    // values, grouped by them
                    std::string dalias = fresh_alias("dq");
                    int dblock = make_distinct_block(bid, p.outer);
                    sub.from = FromNode::join(JoinType::Cross, sub.from,
                                              FromNode::subquery(dblock, dalias), {});
                    ColumnRef dref{sub.id, dalias, p.outer.column, p.outer.type};
                    substitute_column(cond.expr, p.outer, dref);
                    Condition local;
                    local.kind = ConditionKind::Selection;
                    local.expr = cond.expr;
                    kept.push_back(local);
                    ensure_group_by(sub, dref);
                    std::string out = ensure_output(sub, dref);
                    ColumnRef outref{bid, out_alias, out, p.outer.type};
                    join_conds.push_back(
                        Expr::compare(CompareOp::Eq, Expr::column(outref), Expr::column(p.outer)));
                }
            } else {
                // plain subquery: rename sub-side columns to subquery outputs
                ExprPtr e = cond.expr;
                std::set<std::string> done;
                for (const auto& lc : p.locals) {
                    std::string k = lc.item_alias + "." + lc.column;
                    if (!done.insert(k).second) continue;
                    std::string out = ensure_output(sub, lc);
                    ColumnRef outref{bid, out_alias, out, lc.type};
                    substitute_column(e, lc, outref);
                }
                join_conds.push_back(e);
            }
        }
        sub.where = std::move(kept);

        attach_join(bid, cc, std::move(join_conds), out_alias, scalar_count);
    }

    int make_distinct_block(int owner_bid, const ColumnRef& outer) {
        FromPtr item = copy_item(owner_bid, outer.item_alias);
        int did = q_.new_block();
        QueryBlock& d = q_.block(did);
        d.from = item;
        d.distinct = true;
        d.synthetic = true;
        SelectItem si;
        si.col = ColumnRef{did, outer.item_alias, outer.column, outer.type};
        si.alias = outer.column;
        d.select_list.push_back(si);
        return did;
    }

    void attach_join(int bid, const ConnectiveChild& cc, std::vector<ExprPtr> join_conds,
                     std::string out_alias = "", bool scalar_count = false) {
        QueryBlock& b = q_.block(bid);
        QueryBlock& sub = q_.block(cc.subquery_block);
        if (out_alias.empty()) out_alias = fresh_alias("sq");
        auto subref = [&](int i) -> ExprPtr {
            const SelectItem& it = sub.select_list.at(i);
            SemanticType ty = it.is_aggregate ? sub.aggregates[it.agg_index].result_type()
                                              : it.col.type;
            return Expr::column(ColumnRef{bid, out_alias, it.alias, ty});
        };

        JoinType jt = JoinType::Semi;
        JoinOrigin origin = JoinOrigin::Plain;
        switch (cc.conn) {
            case Connective::Exists:
                jt = JoinType::Semi;
                origin = JoinOrigin::Exists;
                break;
            case Connective::NotExists:
                jt = JoinType::AntiSemi;
                origin = JoinOrigin::NotExists;
                break;
            case Connective::In:
                jt = JoinType::Semi;
                origin = JoinOrigin::In;
                join_conds.push_back(Expr::compare(CompareOp::Eq, clone(cc.probe), subref(0)));
                break;
            case Connective::NotIn: {
                jt = JoinType::AntiSemi;
                origin = JoinOrigin::NotIn;
                std::vector<ExprPtr> ors;
                ors.push_back(Expr::compare(CompareOp::Eq, clone(cc.probe), subref(0)));
                ors.push_back(Expr::is_null(clone(cc.probe), false));
                ors.push_back(Expr::is_null(subref(0), false));
                join_conds.push_back(Expr::make_or(std::move(ors)));
                break;
            }
            case Connective::AnyCmp:
                jt = JoinType::Semi;
                origin = JoinOrigin::AnyCmp;
                join_conds.push_back(Expr::compare(cc.op, clone(cc.probe), subref(0)));
                break;
            case Connective::AllCmp:
                jt = JoinType::AntiSemi;
                origin = JoinOrigin::AllCmp;
                join_conds.push_back(Expr::compare(negate(cc.op), clone(cc.probe), subref(0)));
                break;
            case Connective::ScalarCmp:
                if (scalar_count) {
                    jt = JoinType::LeftOuter;
                    origin = JoinOrigin::ScalarCount;
                } else {
                    jt = JoinType::Semi;
                    origin = JoinOrigin::ScalarCmp;
                    join_conds.push_back(Expr::compare(cc.op, clone(cc.probe), subref(0)));
                }
                break;
        }

        // Optional Appendix-style rewrite: EXISTS with pure equality join
        // conditions becomes an inner join on a DISTINCT projection.
        if (opts_.equality_join_optimization && origin == JoinOrigin::Exists &&
            !join_conds.empty() && !sub.has_aggregation() && !sub.setop) {
            bool all_eq = true;
            for (const auto& e : join_conds) {
                if (!(e->kind == Expr::Kind::Compare && e->op == CompareOp::Eq &&
                      e->children[0]->kind == Expr::Kind::Column &&
                      e->children[1]->kind == Expr::Kind::Column))
                    all_eq = false;
            }
            if (all_eq) {
                // keep only the join columns in the select list
                std::vector<SelectItem> slim;
                for (const auto& e : join_conds) {
                    for (const auto& side : e->children) {
                        if (side->col.block_id == bid && side->col.item_alias == out_alias) {
                            for (const auto& it : sub.select_list)
                                if (it.alias == side->col.column) slim.push_back(it);
                        }
                    }
                }
                if (!slim.empty()) {
                    sub.select_list = slim;
                    sub.distinct = true;
                    jt = JoinType::Inner;
                }
            }
        }

        FromPtr node = FromNode::join(jt, b.from, FromNode::subquery(sub.id, out_alias),
                                      std::move(join_conds));
        node->origin = origin;
        b.from = node;

        if (origin == JoinOrigin::ScalarCount) {
            Condition c;
            c.kind = ConditionKind::Selection;
            c.expr = Expr::compare(cc.op, clone(cc.probe), Expr::null_default_zero(subref(0)));
            b.where.push_back(c);
        }
    }

    void verify_clean() {
        for (const auto& [id, b] : q_.blocks) {
            if (!b.connectives.empty())
                throw std::logic_error("connective children remain after decorrelation");
        }
        for (const auto& [id, b] : q_.blocks)
            for (const auto& c : b.where)
                if (c.kind == ConditionKind::Correlated)
                    throw UnsupportedCorrelation("unresolved correlation: " + to_string(c.expr));
    }
};

}  // namespace

QueryTree decorrelate(const QueryTree& q, const SchemaCatalog& catalog,
                      const DecorrelateOptions& opts) {
    QueryTree out = q.deep_copy();
    Decorrelator d(out, catalog, opts);
    d.run();
    return out;
}

bool is_decorrelated(const QueryTree& q) {
    for (const auto& [id, b] : q.blocks) {
        if (!b.connectives.empty()) return false;
        for (const auto& c : b.where)
            if (c.kind == ConditionKind::Correlated) return false;
    }
    return true;
}

}  // namespace qdgen
