#include "qdgen/query.hpp"

#include <functional>
#include <sstream>

#include "qdgen/errors.hpp"

namespace qdgen {

ExprPtr Expr::column(ColumnRef c) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Column;
    e->col = std::move(c);
    return e;
}
ExprPtr Expr::literal(Value v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Literal;
    e->lit = std::move(v);
    return e;
}
ExprPtr Expr::compare(CompareOp op, ExprPtr l, ExprPtr r) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Compare;
    e->op = op;
    e->children = {std::move(l), std::move(r)};
    return e;
}
ExprPtr Expr::make_and(std::vector<ExprPtr> cs) {
    if (cs.size() == 1) return cs[0];
    auto e = std::make_shared<Expr>();
    e->kind = Kind::And;
    e->children = std::move(cs);
    return e;
}
ExprPtr Expr::make_or(std::vector<ExprPtr> cs) {
    if (cs.size() == 1) return cs[0];
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Or;
    e->children = std::move(cs);
    return e;
}
ExprPtr Expr::make_not(ExprPtr c) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Not;
    e->children = {std::move(c)};
    return e;
}
ExprPtr Expr::is_null(ExprPtr c, bool negated) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::IsNull;
    e->negated = negated;
    e->children = {std::move(c)};
    return e;
}
ExprPtr Expr::like(ExprPtr column, std::string pattern, bool negated) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Like;
    e->pattern = std::move(pattern);
    e->negated = negated;
    e->children = {std::move(column)};
    return e;
}
ExprPtr Expr::agg_ref(int index) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::AggRef;
    e->agg_index = index;
    return e;
}
ExprPtr Expr::null_default_zero(ExprPtr c) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::NullDefaultZero;
    e->children = {std::move(c)};
    return e;
}

ExprPtr clone(const ExprPtr& e) {
    if (!e) return nullptr;
    auto c = std::make_shared<Expr>(*e);
    c->children.clear();
    for (const auto& ch : e->children) c->children.push_back(clone(ch));
    return c;
}

void collect_columns(const ExprPtr& e, std::vector<ColumnRef>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::Column) out.push_back(e->col);
    for (const auto& c : e->children) collect_columns(c, out);
}

std::string to_string(const ExprPtr& e) {
    if (!e) return "TRUE";
    switch (e->kind) {
        case Expr::Kind::Column: return e->col.to_string();
        case Expr::Kind::Literal:
            if (e->lit.kind() == Value::Kind::Str) return "'" + e->lit.as_str() + "'";
            return e->lit.to_string();
        case Expr::Kind::Compare:
            return to_string(e->children[0]) + " " + to_string(e->op) + " " +
                   to_string(e->children[1]);
        case Expr::Kind::And: {
            std::string s;
            for (size_t i = 0; i < e->children.size(); ++i) {
                if (i) s += " AND ";
                s += "(" + to_string(e->children[i]) + ")";
            }
            return s;
        }
        case Expr::Kind::Or: {
            std::string s;
            for (size_t i = 0; i < e->children.size(); ++i) {
                if (i) s += " OR ";
                s += "(" + to_string(e->children[i]) + ")";
            }
            return s;
        }
        case Expr::Kind::Not: return "NOT (" + to_string(e->children[0]) + ")";
        case Expr::Kind::IsNull:
            return to_string(e->children[0]) + (e->negated ? " IS NOT NULL" : " IS NULL");
        case Expr::Kind::Like:
            return to_string(e->children[0]) + (e->negated ? " NOT LIKE '" : " LIKE '") +
                   e->pattern + "'";
        case Expr::Kind::AggRef: return "$agg[" + std::to_string(e->agg_index) + "]";
        case Expr::Kind::NullDefaultZero:
            return "IFNULL(" + to_string(e->children[0]) + ", 0)";
    }
    return "?";
}

std::string to_string(AggFunc f) {
    switch (f) {
        case AggFunc::Count: return "COUNT";
        case AggFunc::CountStar: return "COUNT";
        case AggFunc::Sum: return "SUM";
        case AggFunc::Avg: return "AVG";
        case AggFunc::Min: return "MIN";
        case AggFunc::Max: return "MAX";
    }
    return "?";
}

std::string AggExpr::to_string() const {
    std::string s = qdgen::to_string(func) + "(";
    if (func == AggFunc::CountStar)
        s += "*";
    else {
        if (distinct) s += "DISTINCT ";
        s += arg.to_string();
    }
    return s + ")";
}

SemanticType AggExpr::result_type() const {
    switch (func) {
        case AggFunc::Count:
        case AggFunc::CountStar: return SemanticType::Integer;
        case AggFunc::Avg: return SemanticType::Real;
        case AggFunc::Sum:
        case AggFunc::Min:
        case AggFunc::Max: return arg.type;
    }
    return SemanticType::Integer;
}

std::string to_string(JoinType t) {
    switch (t) {
        case JoinType::Inner: return "JOIN";
        case JoinType::LeftOuter: return "LEFT OUTER JOIN";
        case JoinType::RightOuter: return "RIGHT OUTER JOIN";
        case JoinType::FullOuter: return "FULL OUTER JOIN";
        case JoinType::Semi: return "SEMI JOIN";
        case JoinType::AntiSemi: return "ANTI SEMI JOIN";
        case JoinType::Cross: return "CROSS JOIN";
    }
    return "?";
}

std::string to_string(Connective c) {
    switch (c) {
        case Connective::Exists: return "EXISTS";
        case Connective::NotExists: return "NOT EXISTS";
        case Connective::In: return "IN";
        case Connective::NotIn: return "NOT IN";
        case Connective::ScalarCmp: return "scalar-cmp";
        case Connective::AnyCmp: return "ANY";
        case Connective::AllCmp: return "ALL";
    }
    return "?";
}

std::string to_string(SetOpKind k) {
    switch (k) {
        case SetOpKind::Union: return "UNION";
        case SetOpKind::UnionAll: return "UNION ALL";
        case SetOpKind::Intersect: return "INTERSECT";
        case SetOpKind::IntersectAll: return "INTERSECT ALL";
        case SetOpKind::Except: return "EXCEPT";
        case SetOpKind::ExceptAll: return "EXCEPT ALL";
        case SetOpKind::SymDiff: return "SYMMETRIC DIFFERENCE";
    }
    return "?";
}

FromPtr FromNode::base(std::string table, std::string alias) {
    auto f = std::make_shared<FromNode>();
    f->kind = Kind::BaseTable;
    f->table = std::move(table);
    f->alias = std::move(alias);
    return f;
}
FromPtr FromNode::subquery(int block, std::string alias) {
    auto f = std::make_shared<FromNode>();
    f->kind = Kind::Subquery;
    f->subquery_block = block;
    f->alias = std::move(alias);
    return f;
}
FromPtr FromNode::join(JoinType t, FromPtr l, FromPtr r, std::vector<ExprPtr> conds) {
    auto f = std::make_shared<FromNode>();
    f->kind = Kind::Join;
    f->join_type = t;
    f->left = std::move(l);
    f->right = std::move(r);
    f->conditions = std::move(conds);
    return f;
}

FromPtr clone(const FromPtr& f) {
    if (!f) return nullptr;
    auto c = std::make_shared<FromNode>(*f);
    c->left = clone(f->left);
    c->right = clone(f->right);
    c->conditions.clear();
    for (const auto& e : f->conditions) c->conditions.push_back(clone(e));
    return c;
}

int QueryTree::new_block() {
    int id = next_id++;
    QueryBlock b;
    b.id = id;
    blocks.emplace(id, std::move(b));
    return id;
}

QueryTree QueryTree::deep_copy() const {
    QueryTree t;
    t.root = root;
    t.next_id = next_id;
    t.warnings = warnings;
    for (const auto& [id, b] : blocks) {
        QueryBlock c = b;
        c.from = clone(b.from);
        c.where.clear();
        for (const auto& w : b.where) c.where.push_back({w.kind, clone(w.expr), w.correlation_level});
        c.having.clear();
        for (const auto& h : b.having)
            c.having.push_back({h.kind, clone(h.expr), h.correlation_level});
        c.connectives.clear();
        for (const auto& cc : b.connectives)
            c.connectives.push_back({cc.conn, cc.subquery_block, clone(cc.probe), cc.op});
        t.blocks.emplace(id, std::move(c));
    }
    return t;
}

namespace {

void offset_expr(ExprPtr& e, int offset) {
    if (!e) return;
    if (e->kind == Expr::Kind::Column && e->col.block_id >= 0) e->col.block_id += offset;
    for (auto& c : e->children) offset_expr(c, offset);
}

void offset_from(FromPtr& f, int offset) {
    if (!f) return;
    if (f->subquery_block >= 0) f->subquery_block += offset;
    for (auto& c : f->conditions) offset_expr(c, offset);
    offset_from(f->left, offset);
    offset_from(f->right, offset);
}

}  // namespace

QueryTree QueryTree::deep_copy_with_offset(int offset) const {
    QueryTree t = deep_copy();
    QueryTree out;
    out.root = t.root + offset;
    out.next_id = t.next_id + offset;
    out.warnings = t.warnings;
    for (auto& [id, b] : t.blocks) {
        QueryBlock c = std::move(b);
        c.id = id + offset;
        offset_from(c.from, offset);
        for (auto& w : c.where) {
            offset_expr(w.expr, offset);
            if (w.correlation_level >= 0) w.correlation_level += offset;
        }
        for (auto& h : c.having) offset_expr(h.expr, offset);
        for (auto& g : c.group_by)
            if (g.block_id >= 0) g.block_id += offset;
        for (auto& a : c.aggregates)
            if (a.arg.block_id >= 0) a.arg.block_id += offset;
        for (auto& s : c.select_list)
            if (!s.is_aggregate && s.col.block_id >= 0) s.col.block_id += offset;
        for (auto& cc : c.connectives) {
            cc.subquery_block += offset;
            offset_expr(cc.probe, offset);
        }
        if (c.setop) {
            c.setop->left_block += offset;
            c.setop->right_block += offset;
        }
        out.blocks.emplace(id + offset, std::move(c));
    }
    return out;
}

std::vector<std::pair<std::string, std::vector<OutputCol>>> from_visible_schema(
    const QueryTree& q, const FromPtr& f, const SchemaCatalog& catalog) {
    std::vector<std::pair<std::string, std::vector<OutputCol>>> out;
    if (!f) return out;
    std::function<void(const FromPtr&, bool)> walk = [&](const FromPtr& node, bool nullable) {
        switch (node->kind) {
            case FromNode::Kind::BaseTable: {
                const TableDef& t = catalog.table(node->table);
                std::vector<OutputCol> cols;
                for (const auto& c : t.columns)
                    cols.push_back({c.name, c.type, nullable || c.nullable, c.class_id});
                out.emplace_back(node->alias, std::move(cols));
                break;
            }
            case FromNode::Kind::Subquery: {
                auto cols = output_schema(q, node->subquery_block, catalog);
                if (nullable)
                    for (auto& c : cols) c.nullable = true;
                out.emplace_back(node->alias, std::move(cols));
                break;
            }
            case FromNode::Kind::Join: {
                bool lnull = nullable, rnull = nullable;
                if (node->join_type == JoinType::LeftOuter) rnull = true;
                if (node->join_type == JoinType::RightOuter) lnull = true;
                if (node->join_type == JoinType::FullOuter) lnull = rnull = true;
                walk(node->left, lnull);
                if (node->join_type != JoinType::Semi && node->join_type != JoinType::AntiSemi)
                    walk(node->right, rnull);
                break;
            }
        }
    };
    walk(f, false);
    return out;
}

std::vector<OutputCol> output_schema(const QueryTree& q, int block_id,
                                     const SchemaCatalog& catalog) {
    const QueryBlock& b = q.block(block_id);
    if (b.setop) return output_schema(q, b.setop->left_block, catalog);
    std::vector<OutputCol> out;
    for (const auto& it : b.select_list) {
        OutputCol c;
        c.name = it.alias;
        if (it.is_aggregate) {
            const AggExpr& a = b.aggregates.at(it.agg_index);
            c.type = a.result_type();
            c.nullable = a.result_nullable();
            if (a.func != AggFunc::CountStar && a.func != AggFunc::Count &&
                a.func != AggFunc::Avg) {
                auto base = trace_to_base(q, catalog, a.arg);
                if (base) c.class_id = catalog.class_of(base->table, base->column);
            }
        } else {
            c.type = it.col.type;
            c.nullable = true;
            auto base = trace_to_base(q, catalog, it.col);
            if (base) c.class_id = catalog.class_of(base->table, base->column);
        }
        out.push_back(c);
    }
    return out;
}

namespace {

std::optional<ColumnId> trace_from_node(const QueryTree& q, const SchemaCatalog& cat,
                                        const FromPtr& f, const std::string& alias,
                                        const std::string& column) {
    if (!f) return std::nullopt;
    switch (f->kind) {
        case FromNode::Kind::BaseTable:
            if (f->alias == alias && cat.find_table(f->table) &&
                cat.table(f->table).find_column(column))
                return ColumnId{f->table, column};
            return std::nullopt;
        case FromNode::Kind::Subquery: {
            if (f->alias != alias) return std::nullopt;
            const QueryBlock& b = q.block(f->subquery_block);
            int bid = f->subquery_block;
            while (q.block(bid).setop) bid = q.block(bid).setop->left_block;
            const QueryBlock& leaf = q.block(bid);
            (void)b;
            for (const auto& it : leaf.select_list) {
                if (it.alias != column) continue;
                if (it.is_aggregate) {
                    const AggExpr& a = leaf.aggregates.at(it.agg_index);
                    if (a.func == AggFunc::Count || a.func == AggFunc::CountStar ||
                        a.func == AggFunc::Avg)
                        return std::nullopt;
                    return trace_to_base(q, cat, a.arg);
                }
                return trace_to_base(q, cat, it.col);
            }
            return std::nullopt;
        }
        case FromNode::Kind::Join: {
            auto l = trace_from_node(q, cat, f->left, alias, column);
            if (l) return l;
            return trace_from_node(q, cat, f->right, alias, column);
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<ColumnId> trace_to_base(const QueryTree& q, const SchemaCatalog& cat,
                                      const ColumnRef& ref) {
    if (ref.block_id < 0) return std::nullopt;
    auto it = q.blocks.find(ref.block_id);
    if (it == q.blocks.end()) return std::nullopt;
    return trace_from_node(q, cat, it->second.from, ref.item_alias, ref.column);
}

namespace {

std::string render_block(const QueryTree& q, int block_id);

std::string render_from(const QueryTree& q, const FromPtr& f) {
    switch (f->kind) {
        case FromNode::Kind::BaseTable:
            return f->table + (f->alias != f->table ? " AS " + f->alias : "");
        case FromNode::Kind::Subquery:
            return "(" + render_block(q, f->subquery_block) + ") AS " + f->alias;
        case FromNode::Kind::Join: {
            std::string s = render_from(q, f->left);
            s += " " + to_string(f->join_type) + " ";
            bool paren = f->right->kind == FromNode::Kind::Join;
            s += paren ? "(" + render_from(q, f->right) + ")" : render_from(q, f->right);
            if (!f->conditions.empty()) {
                s += " ON (";
                for (size_t i = 0; i < f->conditions.size(); ++i) {
                    if (i) s += " AND ";
                    s += to_string(f->conditions[i]);
                }
                s += ")";
            } else if (f->join_type != JoinType::Cross) {
                s += " ON (TRUE)";
            }
            return s;
        }
    }
    return "?";
}

std::string render_block(const QueryTree& q, int block_id) {
    const QueryBlock& b = q.block(block_id);
    if (b.setop) {
        return "(" + render_block(q, b.setop->left_block) + ") " + to_string(b.setop->kind) +
               " (" + render_block(q, b.setop->right_block) + ")";
    }
    std::ostringstream out;
    out << "SELECT ";
    if (b.distinct) out << "DISTINCT ";
    for (size_t i = 0; i < b.select_list.size(); ++i) {
        if (i) out << ", ";
        const SelectItem& it = b.select_list[i];
        std::string rendered;
        if (it.is_aggregate)
            rendered = b.aggregates.at(it.agg_index).to_string();
        else
            rendered = it.col.to_string();
        out << rendered;
        out << " AS " << it.alias;
    }
    out << " FROM " << render_from(q, b.from);
    std::vector<std::string> wheres;
    for (const auto& c : b.where) wheres.push_back(to_string(c.expr));
    for (const auto& cc : b.connectives) {
        std::string s;
        switch (cc.conn) {
            case Connective::Exists: s = "EXISTS ("; break;
            case Connective::NotExists: s = "NOT EXISTS ("; break;
            case Connective::In: s = to_string(cc.probe) + " IN ("; break;
            case Connective::NotIn: s = to_string(cc.probe) + " NOT IN ("; break;
            case Connective::ScalarCmp:
                s = to_string(cc.probe) + " " + to_string(cc.op) + " (";
                break;
            case Connective::AnyCmp:
                s = to_string(cc.probe) + " " + to_string(cc.op) + " ANY (";
                break;
            case Connective::AllCmp:
                s = to_string(cc.probe) + " " + to_string(cc.op) + " ALL (";
                break;
        }
        s += render_block(q, cc.subquery_block) + ")";
        wheres.push_back(s);
    }
    if (!wheres.empty()) {
        out << " WHERE ";
        for (size_t i = 0; i < wheres.size(); ++i) {
            if (i) out << " AND ";
            out << "(" << wheres[i] << ")";
        }
    }
    if (!b.group_by.empty()) {
        out << " GROUP BY ";
        for (size_t i = 0; i < b.group_by.size(); ++i) {
            if (i) out << ", ";
            out << b.group_by[i].to_string();
        }
    }
    if (!b.having.empty()) {
        out << " HAVING ";
        for (size_t i = 0; i < b.having.size(); ++i) {
            if (i) out << " AND ";
            // render aggregate refs through the block's aggregate list
            std::function<std::string(const ExprPtr&)> rend = [&](const ExprPtr& e) -> std::string {
                if (e->kind == Expr::Kind::AggRef) return b.aggregates.at(e->agg_index).to_string();
                if (e->kind == Expr::Kind::Compare)
                    return rend(e->children[0]) + " " + to_string(e->op) + " " +
                           rend(e->children[1]);
                if (e->kind == Expr::Kind::And || e->kind == Expr::Kind::Or) {
                    std::string s;
                    for (size_t k = 0; k < e->children.size(); ++k) {
                        if (k) s += e->kind == Expr::Kind::And ? " AND " : " OR ";
                        s += "(" + rend(e->children[k]) + ")";
                    }
                    return s;
                }
                if (e->kind == Expr::Kind::Not) return "NOT (" + rend(e->children[0]) + ")";
                if (e->kind == Expr::Kind::IsNull)
                    return rend(e->children[0]) + (e->negated ? " IS NOT NULL" : " IS NULL");
                return to_string(e);
            };
            out << "(" << rend(b.having[i].expr) << ")";
        }
    }
    return out.str();
}

}  // namespace

std::string to_sql(const QueryTree& q, int block_id) { return render_block(q, block_id); }

std::string to_sql(const QueryTree& q) { return render_block(q, q.root) + ";"; }

bool trees_equal(const QueryTree& a, const QueryTree& b) { return to_sql(a) == to_sql(b); }

}  // namespace qdgen
