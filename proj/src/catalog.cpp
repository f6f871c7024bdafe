#include "qdgen/catalog.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "qdgen/errors.hpp"
#include "qdgen/lexer.hpp"
#include "qdgen/query.hpp"
#include "qdgen/vendor_json.hpp"

namespace qdgen {

bool ValueDomain::contains_string(const std::string& v) const {
    return std::binary_search(values.begin(), values.end(), v);
}

bool ValueDomain::add_string(const std::string& v) {
    auto it = std::lower_bound(values.begin(), values.end(), v);
    if (it != values.end() && *it == v) return false;
    values.insert(it, v);
    return true;
}

void ValueDomain::cover_numeric(const Rational& v) {
    if (v < lo) lo = v;
    if (hi < v) hi = v;
}

int ValueDomain::int_map(const std::string& v) const {
    auto it = std::lower_bound(values.begin(), values.end(), v);
    if (it == values.end() || *it != v) return -1;
    return static_cast<int>(it - values.begin()) + 1;
}

Value ValueDomain::null_value() const {
    if (type == SemanticType::String) return Value::string(string_null_sentinel);
    if (type == SemanticType::Real) return Value::real(numeric_null_sentinel);
    return Value::integer(numeric_null_sentinel.floor());
}

bool ValueDomain::is_null_value(const Value& v) const {
    if (v.is_null()) return true;
    if (type == SemanticType::String)
        return v.kind() == Value::Kind::Str && v.as_str() == string_null_sentinel;
    return !v.is_null() && v.kind() != Value::Kind::Str && v.numeric() == numeric_null_sentinel;
}

const ColumnDef* TableDef::find_column(const std::string& cname) const {
    for (const auto& c : columns)
        if (c.name == cname) return &c;
    return nullptr;
}

int TableDef::column_index(const std::string& cname) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == cname) return static_cast<int>(i);
    return -1;
}

bool TableDef::is_pk_column(const std::string& cname) const {
    return std::find(primary_key.begin(), primary_key.end(), cname) != primary_key.end();
}

const TableDef* SchemaCatalog::find_table(const std::string& name) const {
    for (const auto& t : tables)
        if (t.name == name) return &t;
    return nullptr;
}

const TableDef& SchemaCatalog::table(const std::string& name) const {
    const TableDef* t = find_table(name);
    if (!t) throw DanglingReference("no such table: " + name);
    return *t;
}

int SchemaCatalog::class_of(const std::string& table, const std::string& column) const {
    auto it = class_of_.find({table, column});
    if (it == class_of_.end()) throw UnknownColumn(table + "." + column);
    return it->second;
}

const ValueDomain& SchemaCatalog::domain(const std::string& table,
                                         const std::string& column) const {
    return class_domains_.at(class_of(table, column));
}

ValueDomain& SchemaCatalog::domain_mut(const std::string& table, const std::string& column) {
    return class_domains_.at(class_of(table, column));
}

std::vector<ColumnId> SchemaCatalog::class_members(int class_id) const {
    std::vector<ColumnId> out;
    for (const auto& [id, cls] : class_of_)
        if (cls == class_id) out.push_back(id);
    return out;
}

void SchemaCatalog::init_singleton_classes() {
    class_domains_.clear();
    class_of_.clear();
    for (auto& t : tables) {
        for (auto& c : t.columns) {
            ValueDomain d;
            d.type = c.type;
            if (c.type == SemanticType::String) d.string_null_sentinel = "";  // set on finalize
            c.class_id = static_cast<int>(class_domains_.size());
            class_of_[{t.name, c.name}] = c.class_id;
            class_domains_.push_back(d);
        }
    }
}

ValueDomain SchemaCatalog::merged_domain(const ValueDomain& a, const ValueDomain& b) {
    if (a.type == SemanticType::String) {
        ValueDomain d = a;
        for (const auto& v : b.values) d.add_string(v);
        return d;
    }
    ValueDomain d = a;
    // integer + real unify as real
    if (b.type == SemanticType::Real) d.type = SemanticType::Real;
    if (b.lo < d.lo) d.lo = b.lo;
    if (d.hi < b.hi) d.hi = b.hi;
    if (b.numeric_null_sentinel < d.numeric_null_sentinel)
        d.numeric_null_sentinel = b.numeric_null_sentinel;
    return d;
}

void SchemaCatalog::merge_classes(const ColumnId& a, const ColumnId& b) {
    int ca = class_of(a.table, a.column);
    int cb = class_of(b.table, b.column);
    if (ca == cb) return;
    const ValueDomain& da = class_domains_[ca];
    const ValueDomain& db = class_domains_[cb];
    if ((da.type == SemanticType::String) != (db.type == SemanticType::String))
        throw TypeClash(a.table + "." + a.column + " vs " + b.table + "." + b.column);
    int keep = std::min(ca, cb);
    int drop = std::max(ca, cb);
    class_domains_[keep] = merged_domain(da, db);
    for (auto& [id, cls] : class_of_)
        if (cls == drop) cls = keep;
    // propagate to column defs
    for (auto& t : tables)
        for (auto& c : t.columns) c.class_id = class_of(t.name, c.name);
}

namespace {

SemanticType parse_column_type(TokenStream& ts) {
    std::string ty = ts.expect_ident("column type");
    std::string TY = ty;
    for (auto& ch : TY) ch = std::toupper(static_cast<unsigned char>(ch));
    // swallow precision args like varchar(20), numeric(8,2)
    auto swallow_parens = [&] {
        if (ts.accept_sym("(")) {
            int depth = 1;
            while (depth > 0) {
                if (ts.at_end()) ts.fail("unterminated type arguments");
                if (ts.is_sym("(")) ++depth;
                if (ts.is_sym(")")) --depth;
                ts.next();
            }
        }
    };
    if (TY == "INT" || TY == "INTEGER" || TY == "BIGINT" || TY == "SMALLINT") {
        return SemanticType::Integer;
    }
    if (TY == "REAL" || TY == "FLOAT" || TY == "NUMERIC" || TY == "DECIMAL") {
        swallow_parens();
        return SemanticType::Real;
    }
    if (TY == "DOUBLE") {
        ts.accept_kw("PRECISION");
        return SemanticType::Real;
    }
    if (TY == "VARCHAR" || TY == "CHAR" || TY == "TEXT") {
        swallow_parens();
        return SemanticType::String;
    }
    if (TY == "DATE" || TY == "TIME" || TY == "TIMESTAMP")
        throw UnsupportedFeature("date/time types are not in the supported type set: " + ty);
    throw UnsupportedFeature("column type: " + ty);
}

// Captures the raw text of a parenthesized expression starting at '('.
std::string capture_parenthesized(TokenStream& ts) {
    ts.expect_sym("(");
    std::string out;
    int depth = 1;
    while (depth > 0) {
        if (ts.at_end()) ts.fail("unterminated parenthesized expression");
        if (ts.is_sym("(")) ++depth;
        if (ts.is_sym(")")) {
            --depth;
            if (depth == 0) {
                ts.next();
                break;
            }
        }
        Token t = ts.next();
        if (!out.empty()) out += ' ';
        if (t.kind == Token::Kind::String)
            out += "'" + t.raw + "'";
        else
            out += t.raw;
    }
    return out;
}

std::vector<std::string> parse_column_name_list(TokenStream& ts) {
    ts.expect_sym("(");
    std::vector<std::string> cols;
    while (true) {
        cols.push_back(ts.expect_ident("column name"));
        if (ts.accept_sym(",")) continue;
        ts.expect_sym(")");
        break;
    }
    return cols;
}

}  // namespace

SchemaCatalog load_schema(const std::string& ddl_text) {
    SchemaCatalog cat;
    TokenStream ts(lex_sql(ddl_text));
    while (!ts.at_end()) {
        ts.expect_kw("CREATE");
        ts.expect_kw("TABLE");
        TableDef t;
        t.name = ts.expect_ident("table name");
        if (cat.find_table(t.name)) throw ParseError("duplicate table: " + t.name);
        ts.expect_sym("(");
        while (true) {
            if (ts.is_kw("PRIMARY")) {
                ts.next();
                ts.expect_kw("KEY");
                if (!t.primary_key.empty()) throw ParseError("multiple primary keys on " + t.name);
                t.primary_key = parse_column_name_list(ts);
            } else if (ts.is_kw("FOREIGN")) {
                ts.next();
                ts.expect_kw("KEY");
                ForeignKeyDef fk;
                fk.local_columns = parse_column_name_list(ts);
                ts.expect_kw("REFERENCES");
                fk.ref_table = ts.expect_ident("referenced table");
                if (ts.is_sym("(")) fk.ref_columns = parse_column_name_list(ts);
                t.foreign_keys.push_back(fk);
            } else if (ts.is_kw("CHECK")) {
                ts.next();
                t.check_constraints.push_back({capture_parenthesized(ts)});
            } else if (ts.is_kw("UNIQUE") || ts.is_kw("CONSTRAINT")) {
                throw UnsupportedFeature("constraint kind '" + ts.peek().raw +
                                         "' is outside the DDL subset");
            } else {
                ColumnDef c;
                c.name = ts.expect_ident("column name");
                c.type = parse_column_type(ts);
                // column-level modifiers
                while (true) {
                    if (ts.is_kw("NOT") && ts.is_kw("NULL", 1)) {
                        ts.next();
                        ts.next();
                        c.nullable = false;
                    } else if (ts.is_kw("PRIMARY") && ts.is_kw("KEY", 1)) {
                        ts.next();
                        ts.next();
                        if (!t.primary_key.empty())
                            throw ParseError("multiple primary keys on " + t.name);
                        t.primary_key = {c.name};
                    } else if (ts.is_kw("CHECK")) {
                        ts.next();
                        t.check_constraints.push_back({capture_parenthesized(ts)});
                    } else if (ts.is_kw("REFERENCES")) {
                        ts.next();
                        ForeignKeyDef fk;
                        fk.local_columns = {c.name};
                        fk.ref_table = ts.expect_ident("referenced table");
                        if (ts.is_sym("(")) fk.ref_columns = parse_column_name_list(ts);
                        t.foreign_keys.push_back(fk);
                    } else if (ts.is_kw("DEFAULT") || ts.is_kw("UNIQUE")) {
                        throw UnsupportedFeature("column modifier '" + ts.peek().raw + "'");
                    } else {
                        break;
                    }
                }
                if (t.find_column(c.name)) throw ParseError("duplicate column " + c.name);
                t.columns.push_back(c);
            }
            if (ts.accept_sym(",")) continue;
            ts.expect_sym(")");
            break;
        }
        ts.accept_sym(";");
        cat.tables.push_back(t);
    }

    // validation + FK target resolution
    for (auto& t : cat.tables) {
        for (const auto& pk : t.primary_key) {
            const ColumnDef* c = t.find_column(pk);
            if (!c) throw ParseError("primary key column " + pk + " not declared in " + t.name);
        }
        // PK columns are implicitly not-null
        for (auto& c : t.columns)
            if (t.is_pk_column(c.name)) c.nullable = false;
        for (auto& fk : t.foreign_keys) {
            const TableDef* rt = cat.find_table(fk.ref_table);
            if (!rt) throw DanglingReference("foreign key in " + t.name + " references unknown table " +
                                             fk.ref_table);
            if (fk.ref_columns.empty()) fk.ref_columns = rt->primary_key;
            if (fk.ref_columns.empty())
                throw DanglingReference("foreign key in " + t.name + " references " + fk.ref_table +
                                        " which has no primary key");
            if (fk.ref_columns.size() != fk.local_columns.size())
                throw DanglingReference("foreign key arity mismatch in " + t.name);
            if (fk.ref_columns != rt->primary_key)
                throw UnsupportedFeature("foreign keys must reference the primary key");
            for (const auto& lc : fk.local_columns)
                if (!t.find_column(lc))
                    throw ParseError("foreign key column " + lc + " not declared in " + t.name);
            for (size_t i = 0; i < fk.local_columns.size(); ++i) {
                const ColumnDef* lc = t.find_column(fk.local_columns[i]);
                const ColumnDef* rc = rt->find_column(fk.ref_columns[i]);
                if (!rc) throw ParseError("referenced column missing: " + fk.ref_columns[i]);
                if ((lc->type == SemanticType::String) != (rc->type == SemanticType::String))
                    throw TypeClash("foreign key " + t.name + "." + lc->name + " vs " +
                                    fk.ref_table + "." + rc->name);
            }
        }
    }

    cat.init_singleton_classes();
    // FK columns share a comparison domain with the referenced key.
    for (const auto& t : cat.tables)
        for (const auto& fk : t.foreign_keys)
            for (size_t i = 0; i < fk.local_columns.size(); ++i)
                cat.merge_classes({t.name, fk.local_columns[i]},
                                  {fk.ref_table, fk.ref_columns[i]});
    return cat;
}

void load_sample_values(SchemaCatalog& catalog, const std::string& sample_dir,
                        std::vector<std::string>* warnings) {
    namespace fs = std::filesystem;
    for (auto& t : catalog.tables) {
        for (auto& c : t.columns) {
            fs::path p = fs::path(sample_dir) / (t.name + "." + c.name + ".txt");
            std::ifstream in(p);
            if (!in) {
                if (c.type == SemanticType::String) {
                    catalog.pending_string_synthesis.insert({t.name, c.name});
                    if (warnings)
                        warnings->push_back("no samples for string column " + t.name + "." +
                                            c.name + "; synthesized values will be used");
                }
                continue;
            }
            ValueDomain& d = catalog.domain_mut(t.name, c.name);
            bool first_numeric = true;
            std::string line;
            while (std::getline(in, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
                    line.pop_back();
                if (line.empty()) continue;
                if (c.type == SemanticType::String) {
                    d.add_string(line);
                } else {
                    Rational v = Rational::from_string(line);
                    if (first_numeric) {
                        d.lo = v;
                        d.hi = v;
                        first_numeric = false;
                    } else {
                        d.cover_numeric(v);
                    }
                }
            }
            if (c.type != SemanticType::String && !first_numeric) {
                // widen bounds by the configured fraction of the span
                Rational span = d.hi - d.lo;
                Rational pad = span * catalog.numeric_widening;
                if (pad == Rational(0)) pad = Rational(1);
                d.lo = d.lo - pad;
                d.hi = d.hi + pad;
                if (c.type == SemanticType::Integer) {
                    d.lo = Rational(d.lo.floor());
                    d.hi = Rational(d.hi.ceil());
                }
            }
        }
    }
    // finalize numeric null sentinels below the domain minimum
    for (auto& t : catalog.tables) {
        for (auto& c : t.columns) {
            ValueDomain& d = catalog.domain_mut(t.name, c.name);
            if (c.type != SemanticType::String) {
                Rational s(-99999);
                if (!(s < d.lo)) s = d.lo - Rational(100000);
                d.numeric_null_sentinel = s;
            }
        }
    }
}

void synthesize_missing_domains(SchemaCatalog& catalog,
                                const std::map<std::string, int>& table_bounds) {
    for (const auto& id : catalog.pending_string_synthesis) {
        ValueDomain& d = catalog.domain_mut(id.table, id.column);
        if (!d.values.empty()) continue;  // class already populated via another member
        int n = 4;
        auto it = table_bounds.find(id.table);
        if (it != table_bounds.end()) n = std::max(n, it->second);
        for (int i = 1; i <= n; ++i)
            d.add_string("v_" + id.column + "_" + std::to_string(i));
    }
    catalog.pending_string_synthesis.clear();
    // reserve string null sentinels distinct from every user value
    for (auto& t : catalog.tables) {
        for (auto& c : t.columns) {
            if (c.type != SemanticType::String) continue;
            ValueDomain& d = catalog.domain_mut(t.name, c.name);
            if (!d.string_null_sentinel.empty()) continue;
            std::string s = "NULL_" + c.name;
            while (d.contains_string(s)) s += "_";
            d.string_null_sentinel = s;
        }
    }
}

namespace {

void unify_compare(SchemaCatalog& cat, const QueryTree& q, const ExprPtr& l, const ExprPtr& r) {
    if (!l || !r) return;
    if (l->kind != Expr::Kind::Column || r->kind != Expr::Kind::Column) return;
    auto a = trace_to_base(q, cat, l->col);
    auto b = trace_to_base(q, cat, r->col);
    if (a && b) cat.merge_classes(*a, *b);
}

void walk_expr(SchemaCatalog& cat, const QueryTree& q, const ExprPtr& e) {
    if (!e) return;
    if (e->kind == Expr::Kind::Compare) unify_compare(cat, q, e->children[0], e->children[1]);
    for (const auto& c : e->children) walk_expr(cat, q, c);
}

void walk_from(SchemaCatalog& cat, const QueryTree& q, const FromPtr& f) {
    if (!f) return;
    if (f->kind == FromNode::Kind::Join) {
        for (const auto& c : f->conditions) walk_expr(cat, q, c);
        walk_from(cat, q, f->left);
        walk_from(cat, q, f->right);
    }
}

}  // namespace

void compute_equivalence_classes(SchemaCatalog& catalog, const QueryTree& q) {
    for (const auto& [id, b] : q.blocks) {
        walk_from(catalog, q, b.from);
        for (const auto& c : b.where) walk_expr(catalog, q, c.expr);
        for (const auto& c : b.having) walk_expr(catalog, q, c.expr);
        for (const auto& cc : b.connectives) {
            // probe op (first output of subquery): unify when both trace to base columns
            if (cc.probe && cc.probe->kind == Expr::Kind::Column &&
                (cc.conn == Connective::In || cc.conn == Connective::NotIn ||
                 cc.conn == Connective::ScalarCmp || cc.conn == Connective::AnyCmp ||
                 cc.conn == Connective::AllCmp)) {
                const QueryBlock& sub = q.block(cc.subquery_block);
                if (!sub.setop && !sub.select_list.empty() && !sub.select_list[0].is_aggregate) {
                    auto a = trace_to_base(q, catalog, cc.probe->col);
                    auto b2 = trace_to_base(q, catalog, sub.select_list[0].col);
                    if (a && b2) catalog.merge_classes(*a, *b2);
                }
            }
        }
        // set-operation branches compare columns positionally
        if (b.setop) {
            const QueryBlock& lb = q.block(b.setop->left_block);
            const QueryBlock& rb = q.block(b.setop->right_block);
            if (!lb.setop && !rb.setop && lb.select_list.size() == rb.select_list.size()) {
                for (size_t i = 0; i < lb.select_list.size(); ++i) {
                    if (lb.select_list[i].is_aggregate || rb.select_list[i].is_aggregate) continue;
                    auto a = trace_to_base(q, catalog, lb.select_list[i].col);
                    auto b2 = trace_to_base(q, catalog, rb.select_list[i].col);
                    if (a && b2) catalog.merge_classes(*a, *b2);
                }
            }
        }
    }
}

std::string SchemaCatalog::to_ddl() const {
    std::ostringstream out;
    for (const auto& t : tables) {
        out << "CREATE TABLE " << t.name << " (\n";
        bool first = true;
        for (const auto& c : t.columns) {
            if (!first) out << ",\n";
            first = false;
            out << "  " << c.name << " ";
            switch (c.type) {
                case SemanticType::Integer: out << "int"; break;
                case SemanticType::Real: out << "real"; break;
                case SemanticType::String: out << "varchar"; break;
            }
            if (!c.nullable && !t.is_pk_column(c.name)) out << " NOT NULL";
        }
        if (!t.primary_key.empty()) {
            out << ",\n  PRIMARY KEY (";
            for (size_t i = 0; i < t.primary_key.size(); ++i)
                out << (i ? ", " : "") << t.primary_key[i];
            out << ")";
        }
        for (const auto& fk : t.foreign_keys) {
            out << ",\n  FOREIGN KEY (";
            for (size_t i = 0; i < fk.local_columns.size(); ++i)
                out << (i ? ", " : "") << fk.local_columns[i];
            out << ") REFERENCES " << fk.ref_table << " (";
            for (size_t i = 0; i < fk.ref_columns.size(); ++i)
                out << (i ? ", " : "") << fk.ref_columns[i];
            out << ")";
        }
        for (const auto& ck : t.check_constraints) out << ",\n  CHECK (" << ck.text << ")";
        out << "\n);\n";
    }
    return out.str();
}

std::string SchemaCatalog::to_json() const {
    nlohmann::json j;
    for (const auto& t : tables) {
        nlohmann::json jt;
        jt["name"] = t.name;
        for (const auto& c : t.columns) {
            nlohmann::json jc;
            jc["name"] = c.name;
            jc["type"] = qdgen::to_string(c.type);
            jc["nullable"] = c.nullable;
            jc["class"] = c.class_id;
            const ValueDomain& d = class_domains_.at(class_of(t.name, c.name));
            if (c.type == SemanticType::String) {
                jc["domain"] = d.values;
                jc["null_sentinel"] = d.string_null_sentinel;
            } else {
                jc["lo"] = d.lo.to_string();
                jc["hi"] = d.hi.to_string();
                jc["null_sentinel"] = d.numeric_null_sentinel.to_string();
            }
            jt["columns"].push_back(jc);
        }
        jt["primary_key"] = t.primary_key;
        for (const auto& fk : t.foreign_keys) {
            nlohmann::json jf;
            jf["columns"] = fk.local_columns;
            jf["ref_table"] = fk.ref_table;
            jf["ref_columns"] = fk.ref_columns;
            jt["foreign_keys"].push_back(jf);
        }
        for (const auto& ck : t.check_constraints) jt["checks"].push_back(ck.text);
        j["tables"].push_back(jt);
    }
    return j.dump(2);
}

}  // namespace qdgen
