#include "qdgen/parser.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "qdgen/errors.hpp"
#include "qdgen/lexer.hpp"

namespace qdgen {

namespace {

// Unresolved select-list entry; resolution happens once the block's FROM
// clause is known.
struct RawSelectItem {
    bool star = false;
    std::string star_qualifier;
    bool is_agg = false;
    AggFunc func = AggFunc::Count;
    bool agg_distinct = false;
    std::string arg_qual, arg_col;  // aggregate argument
    std::string qual, col;          // plain column
    std::string alias;
};

struct Scope {
    int block_id;
    std::vector<std::pair<std::string, std::vector<OutputCol>>> items;
};

bool is_join_start(const TokenStream& ts) {
    return ts.is_kw("JOIN") || ts.is_kw("INNER") || ts.is_kw("LEFT") || ts.is_kw("RIGHT") ||
           ts.is_kw("FULL") || ts.is_kw("CROSS") || ts.is_kw("NATURAL") || ts.is_kw("SEMI") ||
           ts.is_kw("ANTI");
}

class SqlParser {
public:
    SqlParser(const std::string& text, const SchemaCatalog& catalog)
        : ts_(lex_sql(text)), cat_(catalog) {}

    QueryTree parse() {
        tree_.root = parse_query_expr();
        if (!ts_.at_end()) {
            ts_.accept_sym(";");
            if (!ts_.at_end()) ts_.fail("trailing tokens after statement");
        }
        return std::move(tree_);
    }

private:
    TokenStream ts_;
    const SchemaCatalog& cat_;
    QueryTree tree_;
    std::vector<Scope> scopes_;  // innermost last

    // ---- query expression level (set operators) ----

    int parse_query_expr() {
        int left = parse_query_primary();
        while (true) {
            SetOpKind kind;
            if (ts_.is_kw("UNION")) {
                ts_.next();
                kind = ts_.accept_kw("ALL") ? SetOpKind::UnionAll : SetOpKind::Union;
            } else if (ts_.is_kw("INTERSECT")) {
                ts_.next();
                kind = ts_.accept_kw("ALL") ? SetOpKind::IntersectAll : SetOpKind::Intersect;
            } else if (ts_.is_kw("EXCEPT")) {
                ts_.next();
                kind = ts_.accept_kw("ALL") ? SetOpKind::ExceptAll : SetOpKind::Except;
            } else {
                break;
            }
            int right = parse_query_primary();
            validate_setop_schemas(left, right);
            int id = tree_.new_block();
            tree_.block(id).setop = SetOpNode{kind, left, right};
            left = id;
        }
        return left;
    }

    int parse_query_primary() {
        if (ts_.accept_sym("(")) {
            int id = parse_query_expr();
            ts_.expect_sym(")");
            return id;
        }
        return parse_select();
    }

    void validate_setop_schemas(int left, int right) {
        auto ls = output_schema(tree_, left, cat_);
        auto rs = output_schema(tree_, right, cat_);
        if (ls.size() != rs.size())
            throw SchemaMismatch("set operation branches have different column counts");
        for (size_t i = 0; i < ls.size(); ++i) {
            bool lstr = ls[i].type == SemanticType::String;
            bool rstr = rs[i].type == SemanticType::String;
            if (lstr != rstr)
                throw TypeClash("set operation column " + std::to_string(i + 1) +
                                " mixes string and numeric");
        }
    }

    // ---- SELECT block ----

    int parse_select() {
        ts_.expect_kw("SELECT");
        int id = tree_.new_block();
        QueryBlock& b = tree_.block(id);
        b.distinct = ts_.accept_kw("DISTINCT");
        if (ts_.accept_kw("ALL")) b.distinct = false;

        std::vector<RawSelectItem> raw_items = parse_raw_select_list();

        ts_.expect_kw("FROM");
        b.from = parse_from_list(id);

        scopes_.push_back(Scope{id, from_visible_schema(tree_, b.from, cat_)});

        if (ts_.accept_kw("WHERE")) parse_where(id);
        if (ts_.is_kw("GROUP")) {
            ts_.next();
            ts_.expect_kw("BY");
            do {
                auto [qual, col] = parse_qualified_name();
                tree_.block(id).group_by.push_back(resolve_column(qual, col, false));
            } while (ts_.accept_sym(","));
        }
        if (ts_.accept_kw("HAVING")) {
            ExprPtr h = parse_expr(id, /*allow_aggregates=*/true);
            for (auto& conjunct : split_conjuncts(h)) {
                if (contains_connective(conjunct))
                    throw UnsupportedFeature("subquery connective inside HAVING");
                tree_.block(id).having.push_back({ConditionKind::Selection, conjunct, -1});
            }
        }
        if (ts_.is_kw("ORDER")) {
            ts_.next();
            ts_.expect_kw("BY");
            do {
                parse_order_by_item(id);
            } while (ts_.accept_sym(","));
            tree_.block(id).order_by_present = true;
            tree_.warnings.push_back("ORDER BY is accepted but has no effect on generation");
        }
        if (ts_.accept_kw("LIMIT")) {
            if (ts_.peek().kind != Token::Kind::Number) ts_.fail("expected LIMIT count");
            ts_.next();
            tree_.warnings.push_back("LIMIT is accepted but has no effect on generation");
        }

        resolve_select_list(id, raw_items);
        validate_block(id);
        scopes_.pop_back();
        return id;
    }

    std::vector<RawSelectItem> parse_raw_select_list() {
        std::vector<RawSelectItem> items;
        do {
            RawSelectItem it;
            if (ts_.accept_sym("*")) {
                it.star = true;
            } else if (is_agg_keyword() && ts_.is_sym("(", 1)) {
                std::string fn = ts_.next().text;
                ts_.expect_sym("(");
                it.is_agg = true;
                if (fn == "COUNT" && ts_.accept_sym("*")) {
                    it.func = AggFunc::CountStar;
                } else {
                    it.agg_distinct = ts_.accept_kw("DISTINCT");
                    auto [q, c] = parse_qualified_name();
                    it.arg_qual = q;
                    it.arg_col = c;
                    it.func = agg_func_from(fn);
                    if (ts_.is_sym("+") || ts_.is_sym("-") || ts_.is_sym("*") || ts_.is_sym("/"))
                        throw UnsupportedFeature("aggregate arguments must be single columns");
                }
                ts_.expect_sym(")");
                if (ts_.accept_kw("AS")) it.alias = ts_.expect_ident("output alias");
            } else {
                auto [q, c] = parse_qualified_name();
                if (ts_.accept_sym("*")) {  // alias.* parsed as alias then '*'? handled below
                    it.star = true;
                    it.star_qualifier = q.empty() ? c : q;
                } else {
                    it.qual = q;
                    it.col = c;
                    if (ts_.accept_kw("AS"))
                        it.alias = ts_.expect_ident("output alias");
                    else if (ts_.peek().kind == Token::Kind::Ident && !reserved_after_item())
                        it.alias = ts_.next().raw;
                }
            }
            items.push_back(std::move(it));
        } while (ts_.accept_sym(","));
        return items;
    }

    bool reserved_after_item() const {
        static const char* kws[] = {"FROM", "WHERE", "GROUP",  "HAVING", "ORDER",
                                    "LIMIT", "UNION", "EXCEPT", "INTERSECT", "ON",
                                    "JOIN",  "LEFT",  "RIGHT",  "FULL",   "INNER",
                                    "CROSS", "NATURAL", "SEMI", "ANTI", "AS"};
        for (const char* k : kws)
            if (ts_.is_kw(k)) return true;
        return false;
    }

    bool is_agg_keyword() const {
        return ts_.is_kw("COUNT") || ts_.is_kw("SUM") || ts_.is_kw("AVG") || ts_.is_kw("MIN") ||
               ts_.is_kw("MAX");
    }

    static AggFunc agg_func_from(const std::string& fn) {
        if (fn == "COUNT") return AggFunc::Count;
        if (fn == "SUM") return AggFunc::Sum;
        if (fn == "AVG") return AggFunc::Avg;
        if (fn == "MIN") return AggFunc::Min;
        if (fn == "MAX") return AggFunc::Max;
        throw ParseError("unknown aggregate " + fn);
    }

    void parse_order_by_item(int block_id) {
        // column ref, aggregate, or position; all inert
        if (ts_.peek().kind == Token::Kind::Number) {
            ts_.next();
        } else if (is_agg_keyword() && ts_.is_sym("(", 1)) {
            int depth = 0;
            do {
                if (ts_.is_sym("(")) ++depth;
                if (ts_.is_sym(")")) --depth;
                ts_.next();
            } while (depth > 0 && !ts_.at_end());
        } else {
            parse_qualified_name();
        }
        (void)block_id;
        if (ts_.is_kw("ASC") || ts_.is_kw("DESC")) ts_.next();
    }

    // ---- FROM clause ----

    FromPtr parse_from_list(int block_id) {
        FromPtr acc = parse_from_item(block_id);
        while (ts_.accept_sym(",")) {
            FromPtr rhs = parse_from_item(block_id);
            acc = FromNode::join(JoinType::Cross, acc, rhs, {});
        }
        check_alias_uniqueness(acc);
        return acc;
    }

    FromPtr parse_from_item(int block_id) {
        FromPtr node = parse_from_primary(block_id);
        while (is_join_start(ts_)) {
            bool natural = ts_.accept_kw("NATURAL");
            JoinType jt = JoinType::Inner;
            if (ts_.accept_kw("INNER")) {
                jt = JoinType::Inner;
            } else if (ts_.accept_kw("LEFT")) {
                ts_.accept_kw("OUTER");
                jt = JoinType::LeftOuter;
            } else if (ts_.accept_kw("RIGHT")) {
                ts_.accept_kw("OUTER");
                jt = JoinType::RightOuter;
            } else if (ts_.accept_kw("FULL")) {
                ts_.accept_kw("OUTER");
                jt = JoinType::FullOuter;
            } else if (ts_.accept_kw("CROSS")) {
                jt = JoinType::Cross;
            } else if (ts_.accept_kw("SEMI")) {
                jt = JoinType::Semi;
            } else if (ts_.accept_kw("ANTI")) {
                ts_.expect_kw("SEMI");
                jt = JoinType::AntiSemi;
            }
            ts_.expect_kw("JOIN");
            FromPtr rhs = parse_from_primary(block_id);
            std::vector<ExprPtr> conds;
            if (natural) {
                if (jt != JoinType::Inner)
                    throw UnsupportedFeature("NATURAL combines only with inner joins here");
                conds = natural_join_conditions(block_id, node, rhs);
            } else if (ts_.accept_kw("ON")) {
                if (jt == JoinType::Cross) throw ParseError("CROSS JOIN takes no ON condition");
                // Temporarily expose both sides (semijoin right side is
                // visible inside its own ON condition).
                Scope tmp{block_id, {}};
                auto ls = from_visible_schema(tree_, node, cat_);
                auto rs = from_visible_schema(tree_, rhs, cat_);
                tmp.items = ls;
                tmp.items.insert(tmp.items.end(), rs.begin(), rs.end());
                scopes_.push_back(tmp);
                ExprPtr on = parse_expr(block_id, false);
                scopes_.pop_back();
                if (contains_connective(on))
                    throw UnsupportedFeature("subquery connective inside ON condition");
                conds = split_conjuncts(on);
            } else if (jt != JoinType::Cross) {
                throw ParseError("expected ON condition after " + to_string(jt));
            }
            if (ts_.accept_kw("USING")) throw UnsupportedFeature("USING join clause");
            node = FromNode::join(jt, node, rhs, std::move(conds));
        }
        return node;
    }

    FromPtr parse_from_primary(int block_id) {
        if (ts_.accept_sym("(")) {
            // subquery or parenthesized join tree
            if (ts_.is_kw("SELECT")) {
                int sub = parse_query_expr();
                ts_.expect_sym(")");
                ts_.accept_kw("AS");
                std::string alias = ts_.expect_ident("subquery alias");
                return FromNode::subquery(sub, alias);
            }
            FromPtr inner = parse_from_item(block_id);
            ts_.expect_sym(")");
            return inner;
        }
        std::string table = ts_.expect_ident("table name");
        if (!cat_.find_table(table)) throw DanglingReference("unknown table " + table);
        std::string alias = table;
        if (ts_.accept_kw("AS"))
            alias = ts_.expect_ident("table alias");
        else if (ts_.peek().kind == Token::Kind::Ident && !reserved_after_from_item())
            alias = ts_.next().raw;
        return FromNode::base(table, alias);
    }

    bool reserved_after_from_item() const {
        static const char* kws[] = {"WHERE", "GROUP", "HAVING", "ORDER", "LIMIT",  "UNION",
                                    "EXCEPT", "INTERSECT", "ON",  "JOIN", "LEFT",  "RIGHT",
                                    "FULL",  "INNER", "CROSS",  "NATURAL", "SEMI", "ANTI",
                                    "USING"};
        for (const char* k : kws)
            if (ts_.is_kw(k)) return true;
        return false;
    }

    std::vector<ExprPtr> natural_join_conditions(int block_id, const FromPtr& l,
                                                 const FromPtr& r) {
        auto ls = from_visible_schema(tree_, l, cat_);
        auto rs = from_visible_schema(tree_, r, cat_);
        std::vector<ExprPtr> conds;
        for (const auto& [la, lcols] : ls) {
            for (const auto& lc : lcols) {
                for (const auto& [ra, rcols] : rs) {
                    for (const auto& rc : rcols) {
                        if (lc.name == rc.name) {
                            ColumnRef a{block_id, la, lc.name, lc.type};
                            ColumnRef b{block_id, ra, rc.name, rc.type};
                            conds.push_back(Expr::compare(CompareOp::Eq, Expr::column(a),
                                                          Expr::column(b)));
                        }
                    }
                }
            }
        }
        if (conds.empty()) throw ParseError("NATURAL JOIN with no common columns");
        return conds;
    }

    void check_alias_uniqueness(const FromPtr& f) {
        std::set<std::string> seen;
        std::function<void(const FromPtr&)> walk = [&](const FromPtr& n) {
            if (!n) return;
            if (n->kind == FromNode::Kind::Join) {
                walk(n->left);
                walk(n->right);
            } else {
                if (!seen.insert(n->alias).second)
                    throw ParseError("duplicate from-item alias " + n->alias);
            }
        };
        walk(f);
    }

    // ---- WHERE / conditions ----

    void parse_where(int block_id) {
        ExprPtr w = parse_expr(block_id, false);
        for (auto& conjunct : split_conjuncts(w)) {
            if (is_connective_marker(conjunct)) continue;  // already registered on the block
            if (conjunct->kind == Expr::Kind::AggRef)
                throw ParseError("aggregates are not allowed in WHERE");
            if (contains_connective(conjunct))
                throw UnsupportedFeature(
                    "subquery connectives must be top-level WHERE conjuncts");
            tree_.block(block_id).where.push_back({ConditionKind::Selection, conjunct, -1});
        }
    }

    static std::vector<ExprPtr> split_conjuncts(const ExprPtr& e) {
        std::vector<ExprPtr> out;
        std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& x) {
            if (x->kind == Expr::Kind::And)
                for (const auto& c : x->children) walk(c);
            else
                out.push_back(x);
        };
        walk(e);
        return out;
    }

    static bool is_connective_marker(const ExprPtr& e) {
        return e->kind == Expr::Kind::AggRef && e->agg_index < 0;
    }

    static bool contains_connective(const ExprPtr& e) {
        if (is_connective_marker(e)) return true;
        for (const auto& c : e->children)
            if (contains_connective(c)) return true;
        return false;
    }

    ExprPtr connective_marker() {
        auto e = Expr::agg_ref(-2);  // sentinel; stripped before the tree leaves the parser
        return e;
    }

    ExprPtr parse_expr(int block_id, bool allow_aggregates) {
        return parse_or(block_id, allow_aggregates);
    }

    ExprPtr parse_or(int block_id, bool agg) {
        std::vector<ExprPtr> parts{parse_and(block_id, agg)};
        while (ts_.accept_kw("OR")) parts.push_back(parse_and(block_id, agg));
        return Expr::make_or(std::move(parts));
    }

    ExprPtr parse_and(int block_id, bool agg) {
        std::vector<ExprPtr> parts{parse_not(block_id, agg)};
        while (ts_.accept_kw("AND")) parts.push_back(parse_not(block_id, agg));
        return Expr::make_and(std::move(parts));
    }

    ExprPtr parse_not(int block_id, bool agg) {
        if (ts_.is_kw("NOT") && !ts_.is_kw("EXISTS", 1)) {
            ts_.next();
            return Expr::make_not(parse_not(block_id, agg));
        }
        return parse_predicate(block_id, agg);
    }

    ExprPtr parse_predicate(int block_id, bool agg) {
        // EXISTS / NOT EXISTS
        bool not_exists = false;
        if (ts_.is_kw("NOT") && ts_.is_kw("EXISTS", 1)) {
            ts_.next();
            not_exists = true;
        }
        if (ts_.accept_kw("EXISTS")) {
            ts_.expect_sym("(");
            int sub = parse_query_expr();
            ts_.expect_sym(")");
            tree_.block(block_id).connectives.push_back(
                {not_exists ? Connective::NotExists : Connective::Exists, sub, nullptr,
                 CompareOp::Eq});
            return connective_marker();
        }

        if (ts_.accept_sym("(")) {
            ExprPtr e = parse_expr(block_id, agg);
            ts_.expect_sym(")");
            return parse_predicate_tail(block_id, e);
        }

        ExprPtr operand = parse_operand(block_id, agg);
        return parse_predicate_tail(block_id, operand);
    }

    // After an operand (or parenthesized expr), parse IS NULL / LIKE / IN /
    // comparison tails.
    ExprPtr parse_predicate_tail(int block_id, ExprPtr operand) {
        if (ts_.is_kw("IS")) {
            ts_.next();
            bool neg = ts_.accept_kw("NOT");
            ts_.expect_kw("NULL");
            require_column(operand, "IS NULL");
            return Expr::is_null(operand, neg);
        }
        bool neg_like = false;
        if (ts_.is_kw("NOT") && ts_.is_kw("LIKE", 1)) {
            ts_.next();
            neg_like = true;
        }
        if (ts_.accept_kw("LIKE")) {
            require_column(operand, "LIKE");
            if (operand->col.type != SemanticType::String)
                throw TypeClash("LIKE on non-string column " + operand->col.to_string());
            if (ts_.peek().kind != Token::Kind::String)
                throw UnsupportedFeature("LIKE patterns must be constant strings");
            std::string pattern = ts_.next().raw;
            return Expr::like(operand, pattern, neg_like);
        }
        bool neg_in = false;
        if (ts_.is_kw("NOT") && ts_.is_kw("IN", 1)) {
            ts_.next();
            neg_in = true;
        }
        if (ts_.accept_kw("IN")) {
            ts_.expect_sym("(");
            if (!ts_.is_kw("SELECT"))
                throw UnsupportedFeature("IN with a literal list (subquery required)");
            int sub = parse_query_expr();
            ts_.expect_sym(")");
            tree_.block(block_id).connectives.push_back(
                {neg_in ? Connective::NotIn : Connective::In, sub, operand, CompareOp::Eq});
            return connective_marker();
        }
        // already a boolean expression (parenthesized condition)?
        bool is_boolean = operand->kind == Expr::Kind::Compare ||
                          operand->kind == Expr::Kind::And ||
                          operand->kind == Expr::Kind::Or ||
                          operand->kind == Expr::Kind::Not ||
                          operand->kind == Expr::Kind::IsNull ||
                          operand->kind == Expr::Kind::Like ||
                          is_connective_marker(operand);
        // comparison
        for (const char* opstr : {"<=", ">=", "<>", "=", "<", ">"}) {
            if (ts_.is_sym(opstr)) {
                ts_.next();
                CompareOp op = *compare_op_from_string(opstr);
                if (ts_.is_kw("ANY") || ts_.is_kw("SOME") || ts_.is_kw("ALL")) {
                    bool all_cmp = ts_.accept_kw("ALL");
                    if (!all_cmp) ts_.next();  // ANY / SOME
                    ts_.expect_sym("(");
                    int sub = parse_query_expr();
                    ts_.expect_sym(")");
                    tree_.block(block_id).connectives.push_back(
                        {all_cmp ? Connective::AllCmp : Connective::AnyCmp, sub, operand, op});
                    return connective_marker();
                }
                if (ts_.is_sym("(") && ts_.is_kw("SELECT", 1)) {
                    ts_.next();
                    int sub = parse_query_expr();
                    ts_.expect_sym(")");
                    tree_.block(block_id).connectives.push_back(
                        {Connective::ScalarCmp, sub, operand, op});
                    return connective_marker();
                }
                ExprPtr rhs = parse_operand(block_id, false);
                check_comparable(operand, rhs);
                return Expr::compare(op, operand, rhs);
            }
        }
        if (is_boolean) return operand;
        ts_.fail("expected predicate");
    }

    void require_column(const ExprPtr& e, const std::string& ctx) {
        if (e->kind != Expr::Kind::Column && e->kind != Expr::Kind::AggRef)
            throw ParseError(ctx + " applies to a column");
    }

    void check_comparable(const ExprPtr& l, const ExprPtr& r) {
        auto type_of = [&](const ExprPtr& e) -> std::optional<SemanticType> {
            if (e->kind == Expr::Kind::Column) return e->col.type;
            if (e->kind == Expr::Kind::Literal) {
                if (e->lit.kind() == Value::Kind::Str) return SemanticType::String;
                if (e->lit.kind() == Value::Kind::Null) return std::nullopt;
                return SemanticType::Integer;
            }
            return std::nullopt;  // aggregates: numeric or arg-typed, checked downstream
        };
        auto lt = type_of(l);
        auto rt = type_of(r);
        if (lt && rt && ((*lt == SemanticType::String) != (*rt == SemanticType::String)))
            throw TypeClash("comparing string with numeric");
    }

    ExprPtr parse_operand(int block_id, bool allow_aggregates) {
        const Token& t = ts_.peek();
        if (t.kind == Token::Kind::Number) {
            ts_.next();
            Rational r = Rational::from_string(t.raw);
            if (r.is_integer() && t.raw.find('.') == std::string::npos)
                return Expr::literal(Value::integer(r.num()));
            return Expr::literal(Value::real(r));
        }
        if (t.kind == Token::Kind::String) {
            ts_.next();
            return Expr::literal(Value::string(t.raw));
        }
        if (ts_.is_sym("-")) {
            ts_.next();
            if (ts_.peek().kind != Token::Kind::Number) ts_.fail("expected number after '-'");
            Token num = ts_.next();
            Rational r = Rational::from_string(num.raw);
            if (r.is_integer() && num.raw.find('.') == std::string::npos)
                return Expr::literal(Value::integer(-r.num()));
            return Expr::literal(Value::real(-r));
        }
        if (t.kind == Token::Kind::Ident) {
            if (allow_aggregates && is_agg_keyword() && ts_.is_sym("(", 1)) {
                std::string fn = ts_.next().text;
                ts_.expect_sym("(");
                AggExpr agg;
                if (fn == "COUNT" && ts_.accept_sym("*")) {
                    agg.func = AggFunc::CountStar;
                } else {
                    agg.distinct = ts_.accept_kw("DISTINCT");
                    auto [q, c] = parse_qualified_name();
                    agg.func = agg_func_from(fn);
                    agg.arg = resolve_column(q, c, false);
                }
                ts_.expect_sym(")");
                QueryBlock& b = tree_.block(block_id);
                for (size_t i = 0; i < b.aggregates.size(); ++i)
                    if (b.aggregates[i] == agg) return Expr::agg_ref(static_cast<int>(i));
                b.aggregates.push_back(agg);
                return Expr::agg_ref(static_cast<int>(b.aggregates.size() - 1));
            }
            auto [q, c] = parse_qualified_name();
            return Expr::column(resolve_column(q, c, true));
        }
        ts_.fail("expected operand");
    }

    std::pair<std::string, std::string> parse_qualified_name() {
        std::string a = ts_.expect_ident("column name");
        if (ts_.is_sym(".") && ts_.peek(1).kind == Token::Kind::Ident) {
            ts_.next();
            std::string b = ts_.expect_ident("column name");
            return {a, b};
        }
        if (ts_.is_sym(".") && ts_.is_sym("*", 1)) {
            ts_.next();  // leave '*' for the caller
            return {a, ""};
        }
        return {"", a};
    }

    /// Resolves (qualifier, column) against the innermost scope first, then
    /// enclosing scopes (correlation).
    ColumnRef resolve_column(const std::string& qual, const std::string& col,
                             bool allow_correlation) {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            std::optional<ColumnRef> found;
            for (const auto& [alias, cols] : it->items) {
                if (!qual.empty() && alias != qual) continue;
                for (const auto& c : cols) {
                    if (c.name != col) continue;
                    if (found)
                        throw ParseError("ambiguous column " + col);
                    found = ColumnRef{it->block_id, alias, col, c.type};
                }
            }
            if (found) {
                if (!allow_correlation && it->block_id != scopes_.back().block_id)
                    throw UnknownColumn(qual.empty() ? col : qual + "." + col);
                return *found;
            }
            if (!qual.empty()) {
                // qualifier bound to an alias of this scope but column absent?
                for (const auto& [alias, cols] : it->items)
                    if (alias == qual)
                        throw UnknownColumn(qual + "." + col);
            }
        }
        throw UnknownColumn(qual.empty() ? col : qual + "." + col);
    }

    // ---- select-list resolution + validation ----

    void resolve_select_list(int block_id, const std::vector<RawSelectItem>& raw) {
        QueryBlock& b = tree_.block(block_id);
        std::set<std::string> used;
        auto unique_alias = [&](std::string base) {
            for (auto& ch : base)
                if (ch == '.') ch = '_';
            std::string a = base;
            int n = 2;
            while (!used.insert(a).second) a = base + "_" + std::to_string(n++);
            return a;
        };
        const Scope& sc = scopes_.back();
        for (const auto& it : raw) {
            if (it.star) {
                for (const auto& [alias, cols] : sc.items) {
                    if (!it.star_qualifier.empty() && alias != it.star_qualifier) continue;
                    for (const auto& c : cols) {
                        SelectItem si;
                        si.col = ColumnRef{block_id, alias, c.name, c.type};
                        si.alias = unique_alias(c.name);
                        b.select_list.push_back(si);
                    }
                }
                continue;
            }
            if (it.is_agg) {
                AggExpr agg;
                agg.func = it.func;
                agg.distinct = it.agg_distinct;
                if (it.func != AggFunc::CountStar)
                    agg.arg = resolve_column(it.arg_qual, it.arg_col, false);
                int idx = -1;
                for (size_t i = 0; i < b.aggregates.size(); ++i)
                    if (b.aggregates[i] == agg) idx = static_cast<int>(i);
                if (idx < 0) {
                    b.aggregates.push_back(agg);
                    idx = static_cast<int>(b.aggregates.size() - 1);
                }
                SelectItem si;
                si.is_aggregate = true;
                si.agg_index = idx;
                std::string base = it.alias;
                if (base.empty()) {
                    base = to_string(it.func);
                    for (auto& ch : base) ch = std::tolower(static_cast<unsigned char>(ch));
                    base += it.func == AggFunc::CountStar ? "_star" : "_" + lower(it.arg_col);
                }
                si.alias = unique_alias(base);
                b.select_list.push_back(si);
                continue;
            }
            SelectItem si;
            si.col = resolve_column(it.qual, it.col, false);
            si.alias = unique_alias(it.alias.empty() ? it.col : it.alias);
            b.select_list.push_back(si);
        }
        if (b.select_list.empty()) throw ParseError("empty select list");
    }

    static std::string lower(std::string s) {
        for (auto& c : s) c = std::tolower(static_cast<unsigned char>(c));
        return s;
    }

    void validate_block(int block_id) {
        QueryBlock& b = tree_.block(block_id);
        if (b.has_aggregation()) {
            for (const auto& si : b.select_list) {
                if (si.is_aggregate) continue;
                bool in_gb = false;
                for (const auto& g : b.group_by)
                    if (g == si.col) in_gb = true;
                if (!in_gb)
                    throw ParseError("column " + si.col.to_string() +
                                     " must appear in GROUP BY");
            }
            for (const auto& h : b.having) {
                std::vector<ColumnRef> cols;
                collect_columns(h.expr, cols);
                for (const auto& c : cols) {
                    if (c.block_id != block_id) continue;  // correlated; checked elsewhere
                    bool in_gb = false;
                    for (const auto& g : b.group_by)
                        if (g == c) in_gb = true;
                    if (!in_gb)
                        throw ParseError("HAVING column " + c.to_string() +
                                         " must appear in GROUP BY");
                }
            }
        } else if (!b.having.empty()) {
            throw ParseError("HAVING without GROUP BY or aggregates");
        }
    }
};

}  // namespace

QueryTree parse_query(const std::string& sql_text, const SchemaCatalog& catalog) {
    SqlParser p(sql_text, catalog);
    QueryTree q = p.parse();
    classify_conditions(q, catalog);
    return q;
}

namespace {

// Enclosing-block chain for a block: parents via connective children and
// from-subqueries.
std::map<int, int> parent_map(const QueryTree& q) {
    std::map<int, int> parent;
    for (const auto& [id, b] : q.blocks) {
        for (const auto& cc : b.connectives) parent[cc.subquery_block] = id;
        std::function<void(const FromPtr&)> walk = [&](const FromPtr& f) {
            if (!f) return;
            if (f->kind == FromNode::Kind::Subquery) parent[f->subquery_block] = id;
            if (f->kind == FromNode::Kind::Join) {
                walk(f->left);
                walk(f->right);
            }
        };
        walk(b.from);
        if (b.setop) {
            parent[b.setop->left_block] = id;
            parent[b.setop->right_block] = id;
        }
    }
    return parent;
}

}  // namespace

void classify_conditions(QueryTree& q, const SchemaCatalog& catalog) {
    (void)catalog;
    for (auto& [id, b] : q.blocks) {
        for (auto& cond : b.where) {
            std::vector<ColumnRef> cols;
            collect_columns(cond.expr, cols);
            std::set<int> outer_blocks;
            std::set<std::string> outer_cols;
            std::set<std::string> local_items;
            for (const auto& c : cols) {
                if (c.block_id != id) {
                    outer_blocks.insert(c.block_id);
                    outer_cols.insert(c.to_string());
                } else {
                    local_items.insert(c.item_alias);
                }
            }
            if (!outer_blocks.empty()) {
                if (outer_cols.size() != 1)
                    throw UnsupportedCorrelation(
                        "correlated condition must reference exactly one outer column: " +
                        to_string(cond.expr));
                cond.kind = ConditionKind::Correlated;
                cond.correlation_level = *outer_blocks.begin();
                continue;
            }
            bool has_like = false;
            std::function<void(const ExprPtr&)> find_like = [&](const ExprPtr& e) {
                if (e->kind == Expr::Kind::Like) has_like = true;
                for (const auto& c : e->children) find_like(c);
            };
            find_like(cond.expr);
            if (has_like) {
                cond.kind = ConditionKind::StringLike;
                continue;
            }
            cond.kind = local_items.size() >= 2 ? ConditionKind::Join : ConditionKind::Selection;
        }
    }
    (void)parent_map(q);
}

ExprPtr parse_check_expr(const std::string& text, const TableDef& table) {
    TokenStream ts(lex_sql(text));
    // single-table expression grammar: comparisons, IS NULL, AND/OR/NOT
    std::function<ExprPtr()> parse_or_fn;
    std::function<ExprPtr()> parse_operand_fn = [&]() -> ExprPtr {
        const Token& t = ts.peek();
        if (t.kind == Token::Kind::Number) {
            ts.next();
            Rational r = Rational::from_string(t.raw);
            if (r.is_integer() && t.raw.find('.') == std::string::npos)
                return Expr::literal(Value::integer(r.num()));
            return Expr::literal(Value::real(r));
        }
        if (t.kind == Token::Kind::String) {
            ts.next();
            return Expr::literal(Value::string(t.raw));
        }
        if (ts.is_sym("-")) {
            ts.next();
            Token num = ts.next();
            if (num.kind != Token::Kind::Number) throw ParseError("expected number after '-'");
            Rational r = Rational::from_string(num.raw);
            if (r.is_integer() && num.raw.find('.') == std::string::npos)
                return Expr::literal(Value::integer(-r.num()));
            return Expr::literal(Value::real(-r));
        }
        std::string name = ts.expect_ident("column name");
        if (ts.is_sym(".")) {
            ts.next();
            name = ts.expect_ident("column name");
        }
        const ColumnDef* c = table.find_column(name);
        if (!c) throw UnknownColumn(table.name + "." + name + " in check constraint");
        return Expr::column(ColumnRef{-1, table.name, name, c->type});
    };
    std::function<ExprPtr()> parse_pred = [&]() -> ExprPtr {
        if (ts.accept_kw("NOT")) return Expr::make_not(parse_pred());
        if (ts.accept_sym("(")) {
            ExprPtr e = parse_or_fn();
            ts.expect_sym(")");
            return e;
        }
        ExprPtr lhs = parse_operand_fn();
        if (ts.is_kw("IS")) {
            ts.next();
            bool neg = ts.accept_kw("NOT");
            ts.expect_kw("NULL");
            return Expr::is_null(lhs, neg);
        }
        for (const char* opstr : {"<=", ">=", "<>", "=", "<", ">"}) {
            if (ts.is_sym(opstr)) {
                ts.next();
                return Expr::compare(*compare_op_from_string(opstr), lhs, parse_operand_fn());
            }
        }
        ts.fail("expected comparison in check constraint");
    };
    std::function<ExprPtr()> parse_and_fn = [&]() -> ExprPtr {
        std::vector<ExprPtr> parts{parse_pred()};
        while (ts.accept_kw("AND")) parts.push_back(parse_pred());
        return Expr::make_and(std::move(parts));
    };
    parse_or_fn = [&]() -> ExprPtr {
        std::vector<ExprPtr> parts{parse_and_fn()};
        while (ts.accept_kw("OR")) parts.push_back(parse_and_fn());
        return Expr::make_or(std::move(parts));
    };
    ExprPtr e = parse_or_fn();
    if (!ts.at_end()) throw ParseError("trailing tokens in check constraint: " + text);
    return e;
}

}  // namespace qdgen
