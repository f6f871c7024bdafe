#include "qdgen/oracle.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "qdgen/errors.hpp"
#include "qdgen/parser.hpp"

namespace qdgen {

std::vector<std::vector<Value>> EvalRelation::sorted_rows() const {
    auto out = rows;
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
            if (a[i] < b[i]) return true;
            if (b[i] < a[i]) return false;
        }
        return a.size() < b.size();
    });
    return out;
}

std::string EvalRelation::to_csv_with_counts() const {
    auto sorted = sorted_rows();
    std::ostringstream out;
    for (size_t i = 0; i < col_names.size(); ++i) out << (i ? "," : "") << col_names[i];
    out << (col_names.empty() ? "count" : ",count") << "\n";
    size_t i = 0;
    while (i < sorted.size()) {
        size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        for (size_t k = 0; k < sorted[i].size(); ++k) {
            if (k) out << ",";
            if (!sorted[i][k].is_null()) out << sorted[i][k].to_string();
        }
        out << (sorted[i].empty() ? "" : ",") << (j - i) << "\n";
        i = j;
    }
    return out.str();
}

bool same_multiset(const EvalRelation& a, const EvalRelation& b) {
    if (a.rows.size() != b.rows.size()) return false;
    return a.sorted_rows() == b.sorted_rows();
}

namespace {

struct ColKey {
    std::string alias, col;
    bool operator<(const ColKey& o) const {
        return alias < o.alias || (alias == o.alias && col < o.col);
    }
};

/// Intermediate relation during from/where evaluation: columns addressed by
/// (alias, column).
struct Working {
    std::vector<ColKey> cols;
    std::vector<SemanticType> types;
    std::vector<std::vector<Value>> rows;

    int index_of(const std::string& alias, const std::string& col) const {
        for (size_t i = 0; i < cols.size(); ++i)
            if (cols[i].alias == alias && cols[i].col == col) return static_cast<int>(i);
        return -1;
    }
};

struct OuterBinding {
    int block_id;
    const Working* rel;
    const std::vector<Value>* row;
};

using Env = std::vector<OuterBinding>;

class Evaluator {
public:
    Evaluator(const SchemaCatalog& cat, const QueryTree& q, const Dataset& d)
        : cat_(cat), q_(q), d_(d) {}

    EvalRelation eval_root() { return eval_block(q_.root, {}); }

private:
    const SchemaCatalog& cat_;
    const QueryTree& q_;
    const Dataset& d_;

    // ---- value lookup ----

    Value lookup(const ColumnRef& ref, int block_id, const Working& rel,
                 const std::vector<Value>& row, const Env& env) const {
        if (ref.block_id == block_id) {
            int i = rel.index_of(ref.item_alias, ref.column);
            if (i < 0) throw UnknownColumn(ref.to_string() + " during evaluation");
            return row[static_cast<size_t>(i)];
        }
        for (auto it = env.rbegin(); it != env.rend(); ++it) {
            if (it->block_id != ref.block_id) continue;
            int i = it->rel->index_of(ref.item_alias, ref.column);
            if (i < 0) break;
            return (*it->row)[static_cast<size_t>(i)];
        }
        throw UnknownColumn(ref.to_string() + " (no binding in scope)");
    }

    // ---- expression evaluation (null comparisons are false) ----

    Value eval_scalar(const ExprPtr& e, int block_id, const Working& rel,
                      const std::vector<Value>& row, const Env& env) const {
        switch (e->kind) {
            case Expr::Kind::Column: return lookup(e->col, block_id, rel, row, env);
            case Expr::Kind::Literal: return e->lit;
            case Expr::Kind::NullDefaultZero: {
                Value v = eval_scalar(e->children[0], block_id, rel, row, env);
                return v.is_null() ? Value::integer(0) : v;
            }
            default: throw std::logic_error("scalar eval on boolean node");
        }
    }

    bool eval_bool(const ExprPtr& e, int block_id, const Working& rel,
                   const std::vector<Value>& row, const Env& env) const {
        switch (e->kind) {
            case Expr::Kind::Compare: {
                Value a = eval_scalar(e->children[0], block_id, rel, row, env);
                Value b = eval_scalar(e->children[1], block_id, rel, row, env);
                if (a.is_null() || b.is_null()) return false;
                return apply_compare(e->op, a, b);
            }
            case Expr::Kind::And:
                for (const auto& c : e->children)
                    if (!eval_bool(c, block_id, rel, row, env)) return false;
                return true;
            case Expr::Kind::Or:
                for (const auto& c : e->children)
                    if (eval_bool(c, block_id, rel, row, env)) return true;
                return false;
            case Expr::Kind::Not: return !eval_bool(e->children[0], block_id, rel, row, env);
            case Expr::Kind::IsNull: {
                Value v = eval_scalar(e->children[0], block_id, rel, row, env);
                return e->negated ? !v.is_null() : v.is_null();
            }
            case Expr::Kind::Like: {
                Value v = eval_scalar(e->children[0], block_id, rel, row, env);
                if (v.is_null()) return false;
                bool m = like_match(v.as_str(), e->pattern);
                return e->negated ? !m : m;
            }
            default: throw std::logic_error("boolean eval on scalar node");
        }
    }

    static bool like_match(const std::string& s, const std::string& pat) {
        // classic two-pointer LIKE with % and _
        std::function<bool(size_t, size_t)> go = [&](size_t si, size_t pi) -> bool {
            while (pi < pat.size()) {
                if (pat[pi] == '%') {
                    for (size_t k = si; k <= s.size(); ++k)
                        if (go(k, pi + 1)) return true;
                    return false;
                }
                if (si >= s.size()) return false;
                if (pat[pi] != '_' && pat[pi] != s[si]) return false;
                ++si;
                ++pi;
            }
            return si == s.size();
        };
        return go(0, 0);
    }

    // ---- from-tree evaluation ----

    Working eval_base(const std::string& table, const std::string& alias) const {
        const TableDef& t = cat_.table(table);
        Working w;
        for (const auto& c : t.columns) {
            w.cols.push_back({alias, c.name});
            w.types.push_back(c.type);
        }
        auto it = d_.tables.find(table);
        if (it != d_.tables.end()) w.rows = it->second;
        return w;
    }

    Working eval_from(const FromPtr& f, int block_id, const Env& env) const {
        switch (f->kind) {
            case FromNode::Kind::BaseTable: return eval_base(f->table, f->alias);
            case FromNode::Kind::Subquery: {
                EvalRelation sub = eval_block(f->subquery_block, env);
                Working w;
                for (size_t i = 0; i < sub.col_names.size(); ++i) {
                    w.cols.push_back({f->alias, sub.col_names[i]});
                    w.types.push_back(sub.col_types[i]);
                }
                w.rows = std::move(sub.rows);
                return w;
            }
            case FromNode::Kind::Join: {
                Working l = eval_from(f->left, block_id, env);
                Working r = eval_from(f->right, block_id, env);
                return eval_join(f, l, r, block_id, env);
            }
        }
        throw std::logic_error("unreachable");
    }

    Working eval_join(const FromPtr& f, const Working& l, const Working& r, int block_id,
                      const Env& env) const {
        Working combined;
        combined.cols = l.cols;
        combined.cols.insert(combined.cols.end(), r.cols.begin(), r.cols.end());
        combined.types = l.types;
        combined.types.insert(combined.types.end(), r.types.begin(), r.types.end());

        auto pair_matches = [&](const std::vector<Value>& lr,
                                const std::vector<Value>& rr) -> bool {
            std::vector<Value> row = lr;
            row.insert(row.end(), rr.begin(), rr.end());
            for (const auto& c : f->conditions)
                if (!eval_bool(c, block_id, combined, row, env)) return false;
            return true;
        };

        switch (f->join_type) {
            case JoinType::Inner:
            case JoinType::Cross: {
                Working w = combined;
                for (const auto& lr : l.rows)
                    for (const auto& rr : r.rows)
                        if (pair_matches(lr, rr)) {
                            std::vector<Value> row = lr;
                            row.insert(row.end(), rr.begin(), rr.end());
                            w.rows.push_back(std::move(row));
                        }
                return w;
            }
            case JoinType::LeftOuter:
            case JoinType::RightOuter:
            case JoinType::FullOuter: {
                Working w = combined;
                std::vector<bool> r_matched(r.rows.size(), false);
                for (const auto& lr : l.rows) {
                    bool matched = false;
                    for (size_t j = 0; j < r.rows.size(); ++j) {
                        if (pair_matches(lr, r.rows[j])) {
                            matched = true;
                            r_matched[j] = true;
                            std::vector<Value> row = lr;
                            row.insert(row.end(), r.rows[j].begin(), r.rows[j].end());
                            w.rows.push_back(std::move(row));
                        }
                    }
                    if (!matched && (f->join_type == JoinType::LeftOuter ||
                                     f->join_type == JoinType::FullOuter)) {
                        std::vector<Value> row = lr;
                        row.resize(combined.cols.size(), Value::null());
                        w.rows.push_back(std::move(row));
                    }
                }
                if (f->join_type == JoinType::RightOuter || f->join_type == JoinType::FullOuter) {
                    for (size_t j = 0; j < r.rows.size(); ++j) {
                        if (r_matched[j]) continue;
                        std::vector<Value> row(l.cols.size(), Value::null());
                        row.insert(row.end(), r.rows[j].begin(), r.rows[j].end());
                        w.rows.push_back(std::move(row));
                    }
                }
                return w;
            }
            case JoinType::Semi:
            case JoinType::AntiSemi: {
                Working w;
                w.cols = l.cols;
                w.types = l.types;
                for (const auto& lr : l.rows) {
                    bool any = false;
                    for (const auto& rr : r.rows)
                        if (pair_matches(lr, rr)) {
                            any = true;
                            break;
                        }
                    if (any == (f->join_type == JoinType::Semi)) w.rows.push_back(lr);
                }
                return w;
            }
        }
        throw std::logic_error("unreachable");
    }

    // ---- connectives on the original tree ----

    bool eval_connective(const ConnectiveChild& cc, int block_id, const Working& rel,
                         const std::vector<Value>& row, const Env& env) const {
        Env inner = env;
        inner.push_back({block_id, &rel, &row});
        EvalRelation sub = eval_block(cc.subquery_block, inner);
        switch (cc.conn) {
            case Connective::Exists: return !sub.empty();
            case Connective::NotExists: return sub.empty();
            case Connective::In: {
                Value probe = eval_scalar(cc.probe, block_id, rel, row, env);
                if (probe.is_null()) return false;
                for (const auto& r : sub.rows)
                    if (!r[0].is_null() && probe == r[0]) return true;
                return false;
            }
            case Connective::NotIn: {
                if (sub.empty()) return true;
                Value probe = eval_scalar(cc.probe, block_id, rel, row, env);
                if (probe.is_null()) return false;
                for (const auto& r : sub.rows) {
                    if (r[0].is_null()) return false;
                    if (probe == r[0]) return false;
                }
                return true;
            }
            case Connective::AnyCmp: {
                Value probe = eval_scalar(cc.probe, block_id, rel, row, env);
                if (probe.is_null()) return false;
                for (const auto& r : sub.rows)
                    if (!r[0].is_null() && apply_compare(cc.op, probe, r[0])) return true;
                return false;
            }
            case Connective::AllCmp: {
                Value probe = eval_scalar(cc.probe, block_id, rel, row, env);
                CompareOp neg = negate(cc.op);
                for (const auto& r : sub.rows) {
                    if (probe.is_null() || r[0].is_null()) continue;  // never blocks
                    if (apply_compare(neg, probe, r[0])) return false;
                }
                return true;
            }
            case Connective::ScalarCmp: {
                Value probe = eval_scalar(cc.probe, block_id, rel, row, env);
                if (sub.empty()) {
                    // scalar COUNT over an empty group compares against 0
                    const QueryBlock& sb = q_.block(cc.subquery_block);
                    if (!sb.setop && !sb.select_list.empty() && sb.select_list[0].is_aggregate &&
                        sb.group_by.empty()) {
                        AggFunc fn = sb.aggregates[sb.select_list[0].agg_index].func;
                        if (fn == AggFunc::Count || fn == AggFunc::CountStar) {
                            if (probe.is_null()) return false;
                            return apply_compare(cc.op, probe, Value::integer(0));
                        }
                    }
                    return false;
                }
                if (probe.is_null()) return false;
                for (const auto& r : sub.rows)
                    if (!r[0].is_null() && apply_compare(cc.op, probe, r[0])) return true;
                return false;
            }
        }
        return false;
    }

    // ---- block evaluation ----

    EvalRelation eval_block(int bid, const Env& env) const {
        const QueryBlock& b = q_.block(bid);
        if (b.setop) return eval_setop(b, env);

        Working rel = eval_from(b.from, bid, env);

        // WHERE: plain conditions then connectives
        std::vector<std::vector<Value>> filtered;
        for (const auto& row : rel.rows) {
            bool ok = true;
            for (const auto& c : b.where) {
                if (!eval_bool(c.expr, bid, rel, row, env)) {
                    ok = false;
                    break;
                }
            }
            if (ok)
                for (const auto& cc : b.connectives)
                    if (!eval_connective(cc, bid, rel, row, env)) {
                        ok = false;
                        break;
                    }
            if (ok) filtered.push_back(row);
        }
        rel.rows = std::move(filtered);

        EvalRelation out;
        auto schema = output_schema(q_, bid, cat_);
        for (const auto& c : schema) {
            out.col_names.push_back(c.name);
            out.col_types.push_back(c.type);
        }

        if (b.has_aggregation()) {
            // group rows
            std::map<std::vector<Value>, std::vector<const std::vector<Value>*>> groups;
            for (const auto& row : rel.rows) {
                std::vector<Value> key;
                for (const auto& g : b.group_by)
                    key.push_back(lookup(g, bid, rel, row, env));
                groups[key].push_back(&row);
            }
            for (const auto& [key, rows] : groups) {
                // aggregate values
                std::vector<Value> aggvals;
                for (const auto& a : b.aggregates)
                    aggvals.push_back(eval_aggregate(a, bid, rel, rows, env));
                // having
                bool pass = true;
                for (const auto& h : b.having) {
                    if (!eval_having(h.expr, b, key, aggvals, bid, rel, rows, env)) {
                        pass = false;
                        break;
                    }
                }
                if (!pass) continue;
                std::vector<Value> orow;
                for (const auto& it : b.select_list) {
                    if (it.is_aggregate) {
                        orow.push_back(aggvals[static_cast<size_t>(it.agg_index)]);
                    } else {
                        // group-by column: value from the key
                        int idx = -1;
                        for (size_t g = 0; g < b.group_by.size(); ++g)
                            if (b.group_by[g] == it.col) idx = static_cast<int>(g);
                        if (idx < 0) throw std::logic_error("select column missing from keys");
                        orow.push_back(key[static_cast<size_t>(idx)]);
                    }
                }
                out.rows.push_back(std::move(orow));
            }
        } else {
            for (const auto& row : rel.rows) {
                std::vector<Value> orow;
                for (const auto& it : b.select_list)
                    orow.push_back(lookup(it.col, bid, rel, row, env));
                out.rows.push_back(std::move(orow));
            }
        }

        if (b.distinct) {
            auto sorted = out.sorted_rows();
            sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
            out.rows = std::move(sorted);
        }
        return out;
    }

    Value eval_aggregate(const AggExpr& a, int bid, const Working& rel,
                         const std::vector<const std::vector<Value>*>& rows,
                         const Env& env) const {
        if (a.func == AggFunc::CountStar)
            return Value::integer(static_cast<long long>(rows.size()));
        std::vector<Value> vals;
        for (const auto* row : rows) {
            Value v = lookup(a.arg, bid, rel, *row, env);
            if (!v.is_null()) vals.push_back(v);
        }
        if (a.distinct) {
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        }
        switch (a.func) {
            case AggFunc::Count: return Value::integer(static_cast<long long>(vals.size()));
            case AggFunc::Sum: {
                if (vals.empty()) return Value::null();
                Rational s(0);
                bool any_real = false;
                for (const auto& v : vals) {
                    if (v.kind() == Value::Kind::Real) any_real = true;
                    s = s + v.numeric();
                }
                if (any_real || !s.is_integer()) return Value::real(s);
                return Value::integer(s.num());
            }
            case AggFunc::Avg: {
                if (vals.empty()) return Value::null();
                Rational s(0);
                for (const auto& v : vals) s = s + v.numeric();
                return Value::real(s / Rational(static_cast<long long>(vals.size())));
            }
            case AggFunc::Min:
            case AggFunc::Max: {
                if (vals.empty()) return Value::null();
                const Value* best = &vals[0];
                for (const auto& v : vals) {
                    bool better = a.func == AggFunc::Min ? v < *best : *best < v;
                    if (better) best = &v;
                }
                return *best;
            }
            default: break;
        }
        throw std::logic_error("unreachable aggregate");
    }

    bool eval_having(const ExprPtr& e, const QueryBlock& b, const std::vector<Value>& key,
                     const std::vector<Value>& aggvals, int bid, const Working& rel,
                     const std::vector<const std::vector<Value>*>& rows, const Env& env) const {
        std::function<Value(const ExprPtr&)> scalar = [&](const ExprPtr& x) -> Value {
            if (x->kind == Expr::Kind::AggRef)
                return aggvals.at(static_cast<size_t>(x->agg_index));
            if (x->kind == Expr::Kind::Column) {
                for (size_t g = 0; g < b.group_by.size(); ++g)
                    if (b.group_by[g] == x->col) return key[g];
                return lookup(x->col, bid, rel, *rows.at(0), env);  // correlated / constantal
            }
            if (x->kind == Expr::Kind::Literal) return x->lit;
            if (x->kind == Expr::Kind::NullDefaultZero) {
                Value v = scalar(x->children[0]);
                return v.is_null() ? Value::integer(0) : v;
            }
            throw std::logic_error("unexpected scalar in HAVING");
        };
        std::function<bool(const ExprPtr&)> boolean = [&](const ExprPtr& x) -> bool {
            switch (x->kind) {
                case Expr::Kind::Compare: {
                    Value a = scalar(x->children[0]);
                    Value c = scalar(x->children[1]);
                    if (a.is_null() || c.is_null()) return false;
                    return apply_compare(x->op, a, c);
                }
                case Expr::Kind::And:
                    for (const auto& ch : x->children)
                        if (!boolean(ch)) return false;
                    return true;
                case Expr::Kind::Or:
                    for (const auto& ch : x->children)
                        if (boolean(ch)) return true;
                    return false;
                case Expr::Kind::Not: return !boolean(x->children[0]);
                case Expr::Kind::IsNull: {
                    Value v = scalar(x->children[0]);
                    return x->negated ? !v.is_null() : v.is_null();
                }
                default: throw std::logic_error("unexpected HAVING node");
            }
        };
        return boolean(e);
    }

    EvalRelation eval_setop(const QueryBlock& b, const Env& env) const {
        EvalRelation l = eval_block(b.setop->left_block, env);
        EvalRelation r = eval_block(b.setop->right_block, env);
        if (l.col_names.size() != r.col_names.size())
            throw SchemaMismatch("set operation branch widths differ");
        EvalRelation out;
        out.col_names = l.col_names;
        out.col_types = l.col_types;

        std::map<std::vector<Value>, std::pair<long long, long long>> counts;
        for (const auto& row : l.rows) counts[row].first++;
        for (const auto& row : r.rows) counts[row].second++;
        for (const auto& [row, c] : counts) {
            long long q1 = c.first, q2 = c.second, n = 0;
            switch (b.setop->kind) {
                case SetOpKind::UnionAll: n = q1 + q2; break;
                case SetOpKind::Union: n = std::min<long long>(q1 + q2, 1); break;
                case SetOpKind::IntersectAll: n = std::min(q1, q2); break;
                case SetOpKind::Intersect: n = std::min<long long>(std::min(q1, q2), 1); break;
                case SetOpKind::ExceptAll: n = std::max<long long>(q1 - q2, 0); break;
                case SetOpKind::Except:
                    n = std::min<long long>(std::max<long long>(q1 - q2, 0), 1);
                    break;
                case SetOpKind::SymDiff: n = q1 > q2 ? q1 - q2 : q2 - q1; break;
            }
            for (long long k = 0; k < n; ++k) out.rows.push_back(row);
        }
        return out;
    }

};

}  // namespace

EvalRelation Oracle::evaluate(const QueryTree& q, const Dataset& d) const {
    Evaluator ev(cat_, q, d);
    return ev.eval_root();
}

std::vector<IntegrityViolation> Oracle::check_integrity(const Dataset& d) const {
    std::vector<IntegrityViolation> out;
    for (const auto& t : cat_.tables) {
        auto it = d.tables.find(t.name);
        const std::vector<std::vector<Value>> empty;
        const auto& rows = it == d.tables.end() ? empty : it->second;

        // not-null
        for (const auto& row : rows)
            for (size_t i = 0; i < t.columns.size(); ++i)
                if (!t.columns[i].nullable && row[i].is_null())
                    out.push_back({t.name, "null in NOT NULL column " + t.columns[i].name});

        // primary key uniqueness
        if (!t.primary_key.empty()) {
            std::vector<int> pk_idx;
            for (const auto& k : t.primary_key) pk_idx.push_back(t.column_index(k));
            std::map<std::vector<Value>, int> seen;
            for (const auto& row : rows) {
                std::vector<Value> key;
                for (int i : pk_idx) key.push_back(row[static_cast<size_t>(i)]);
                if (++seen[key] == 2) {
                    std::string s;
                    for (const auto& v : key) s += v.to_string() + " ";
                    out.push_back({t.name, "duplicate primary key (" + s + ")"});
                }
            }
        }

        // foreign keys (rows with any null FK column are exempt)
        for (const auto& fk : t.foreign_keys) {
            const TableDef& rt = cat_.table(fk.ref_table);
            auto rit = d.tables.find(rt.name);
            const auto& rrows = rit == d.tables.end() ? empty : rit->second;
            std::vector<int> lidx, ridx;
            for (const auto& c : fk.local_columns) lidx.push_back(t.column_index(c));
            for (const auto& c : fk.ref_columns) ridx.push_back(rt.column_index(c));
            for (const auto& row : rows) {
                bool any_null = false;
                for (int i : lidx)
                    if (row[static_cast<size_t>(i)].is_null()) any_null = true;
                if (any_null) continue;
                bool found = false;
                for (const auto& rrow : rrows) {
                    bool eq = true;
                    for (size_t k = 0; k < lidx.size(); ++k)
                        if (!(row[static_cast<size_t>(lidx[k])] ==
                              rrow[static_cast<size_t>(ridx[k])]))
                            eq = false;
                    if (eq) {
                        found = true;
                        break;
                    }
                }
                if (!found)
                    out.push_back({t.name, "foreign key to " + fk.ref_table + " has no match"});
            }
        }

        // check constraints: pass when true or any referenced column is null
        for (const auto& ck : t.check_constraints) {
            ExprPtr expr = parse_check_expr(ck.text, t);
            std::vector<ColumnRef> refs;
            collect_columns(expr, refs);
            for (const auto& row : rows) {
                bool any_null = false;
                for (const auto& r : refs) {
                    int i = t.column_index(r.column);
                    if (i >= 0 && row[static_cast<size_t>(i)].is_null()) any_null = true;
                }
                if (any_null) continue;
                std::function<Value(const ExprPtr&)> scalar = [&](const ExprPtr& x) -> Value {
                    if (x->kind == Expr::Kind::Column) {
                        int i = t.column_index(x->col.column);
                        return row[static_cast<size_t>(i)];
                    }
                    return x->lit;
                };
                std::function<bool(const ExprPtr&)> boolean = [&](const ExprPtr& x) -> bool {
                    switch (x->kind) {
                        case Expr::Kind::Compare: {
                            Value a = scalar(x->children[0]);
                            Value b = scalar(x->children[1]);
                            if (a.is_null() || b.is_null()) return false;
                            return apply_compare(x->op, a, b);
                        }
                        case Expr::Kind::And:
                            for (const auto& c : x->children)
                                if (!boolean(c)) return false;
                            return true;
                        case Expr::Kind::Or:
                            for (const auto& c : x->children)
                                if (boolean(c)) return true;
                            return false;
                        case Expr::Kind::Not: return !boolean(x->children[0]);
                        case Expr::Kind::IsNull: {
                            Value v = scalar(x->children[0]);
                            return x->negated ? !v.is_null() : v.is_null();
                        }
                        default: throw std::logic_error("unexpected check node");
                    }
                };
                if (!boolean(expr))
                    out.push_back({t.name, "check constraint failed: " + ck.text});
            }
        }
    }
    return out;
}

bool Oracle::distinguishes(const QueryTree& q1, const QueryTree& q2, const Dataset& d) const {
    EvalRelation a = evaluate(q1, d);
    EvalRelation b = evaluate(q2, d);
    if (a.col_names.size() != b.col_names.size())
        throw SchemaMismatch("result schemas do not align");
    for (size_t i = 0; i < a.col_types.size(); ++i) {
        bool astr = a.col_types[i] == SemanticType::String;
        bool bstr = b.col_types[i] == SemanticType::String;
        if (astr != bstr) throw SchemaMismatch("result column types do not align");
    }
    return !same_multiset(a, b);
}

}  // namespace qdgen
