#include "qdgen/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdgen/errors.hpp"
#include "qdgen/lexer.hpp"

namespace qdgen {

namespace {

std::string sql_literal(const Value& v, SemanticType t) {
    if (v.is_null()) return "NULL";
    if (t == SemanticType::String) {
        std::string s = v.as_str();
        std::string esc;
        for (char c : s) {
            if (c == '\'') esc += "''";
            else esc += c;
        }
        return "'" + esc + "'";
    }
    return v.to_string();
}

}  // namespace

std::string Dataset::to_insert_sql(const SchemaCatalog& catalog) const {
    std::ostringstream out;
    for (const auto& t : catalog.tables) {
        auto it = tables.find(t.name);
        if (it == tables.end()) continue;
        for (const auto& row : it->second) {
            out << "INSERT INTO " << t.name << " (";
            for (size_t i = 0; i < t.columns.size(); ++i)
                out << (i ? ", " : "") << t.columns[i].name;
            out << ") VALUES (";
            for (size_t i = 0; i < t.columns.size(); ++i)
                out << (i ? ", " : "") << sql_literal(row.at(i), t.columns[i].type);
            out << ");\n";
        }
    }
    return out.str();
}

void Dataset::write_csv_dir(const SchemaCatalog& catalog, const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& t : catalog.tables) {
        auto it = tables.find(t.name);
        if (it == tables.end()) continue;
        std::ofstream out(fs::path(dir) / (t.name + ".csv"));
        for (size_t i = 0; i < t.columns.size(); ++i)
            out << (i ? "," : "") << t.columns[i].name;
        out << "\n";
        for (const auto& row : it->second) {
            for (size_t i = 0; i < t.columns.size(); ++i) {
                if (i) out << ",";
                const Value& v = row.at(i);
                if (!v.is_null()) out << v.to_string();
            }
            out << "\n";
        }
    }
}

std::string Dataset::canonical_text(const SchemaCatalog& catalog) const {
    std::ostringstream out;
    for (const auto& t : catalog.tables) {
        auto it = tables.find(t.name);
        if (it == tables.end() || it->second.empty()) continue;
        std::vector<std::string> lines;
        for (const auto& row : it->second) {
            std::string l;
            for (const auto& v : row) l += v.to_string() + "|";
            lines.push_back(l);
        }
        std::sort(lines.begin(), lines.end());
        out << t.name << ":";
        for (const auto& l : lines) out << l << ";";
        out << "\n";
    }
    return out.str();
}

Dataset load_dataset_sql(const std::string& text, const SchemaCatalog& catalog) {
    Dataset d;
    TokenStream ts(lex_sql(text));
    while (!ts.at_end()) {
        ts.expect_kw("INSERT");
        ts.expect_kw("INTO");
        std::string tname = ts.expect_ident("table name");
        const TableDef& t = catalog.table(tname);
        std::vector<std::string> cols;
        if (ts.is_sym("(")) {
            ts.next();
            while (true) {
                cols.push_back(ts.expect_ident("column name"));
                if (ts.accept_sym(",")) continue;
                ts.expect_sym(")");
                break;
            }
        } else {
            for (const auto& c : t.columns) cols.push_back(c.name);
        }
        ts.expect_kw("VALUES");
        ts.expect_sym("(");
        std::vector<Value> vals;
        while (true) {
            if (ts.accept_kw("NULL")) {
                vals.push_back(Value::null());
            } else if (ts.peek().kind == Token::Kind::String) {
                vals.push_back(Value::string(ts.next().raw));
            } else {
                bool neg = ts.accept_sym("-");
                if (ts.peek().kind != Token::Kind::Number) ts.fail("expected value");
                Token num = ts.next();
                Rational r = Rational::from_string(num.raw);
                if (neg) r = -r;
                if (r.is_integer() && num.raw.find('.') == std::string::npos)
                    vals.push_back(Value::integer(r.num()));
                else
                    vals.push_back(Value::real(r));
            }
            if (ts.accept_sym(",")) continue;
            ts.expect_sym(")");
            break;
        }
        ts.accept_sym(";");
        if (vals.size() != cols.size()) throw ParseError("INSERT arity mismatch for " + tname);
        std::vector<Value> row(t.columns.size(), Value::null());
        for (size_t i = 0; i < cols.size(); ++i) {
            int idx = t.column_index(cols[i]);
            if (idx < 0) throw UnknownColumn(tname + "." + cols[i]);
            // string values for numeric columns are a load error
            if (t.columns[idx].type != SemanticType::String &&
                vals[i].kind() == Value::Kind::Str)
                throw ParseError("numeric column " + cols[i] + " given string value");
            row[static_cast<size_t>(idx)] = vals[i];
        }
        d.tables[tname].push_back(std::move(row));
    }
    return d;
}

Dataset load_dataset_csv_dir(const std::string& dir, const SchemaCatalog& catalog) {
    namespace fs = std::filesystem;
    Dataset d;
    for (const auto& t : catalog.tables) {
        fs::path p = fs::path(dir) / (t.name + ".csv");
        std::ifstream in(p);
        if (!in) continue;
        std::string header;
        if (!std::getline(in, header)) continue;
        std::vector<std::string> cols;
        {
            std::stringstream ss(header);
            std::string c;
            while (std::getline(ss, c, ',')) {
                while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
                cols.push_back(c);
            }
        }
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::vector<std::string> fields;
            std::string cur;
            for (char c : line) {
                if (c == ',') {
                    fields.push_back(cur);
                    cur.clear();
                } else {
                    cur += c;
                }
            }
            fields.push_back(cur);
            if (fields.size() != cols.size()) throw ParseError("csv arity mismatch in " + t.name);
            std::vector<Value> row(t.columns.size(), Value::null());
            for (size_t i = 0; i < cols.size(); ++i) {
                int idx = t.column_index(cols[i]);
                if (idx < 0) throw UnknownColumn(t.name + "." + cols[i]);
                if (fields[i].empty()) {
                    row[static_cast<size_t>(idx)] = Value::null();
                } else if (t.columns[static_cast<size_t>(idx)].type == SemanticType::String) {
                    row[static_cast<size_t>(idx)] = Value::string(fields[i]);
                } else if (t.columns[static_cast<size_t>(idx)].type == SemanticType::Integer) {
                    row[static_cast<size_t>(idx)] =
                        Value::integer(Rational::from_string(fields[i]).num());
                } else {
                    row[static_cast<size_t>(idx)] = Value::real(Rational::from_string(fields[i]));
                }
            }
            d.tables[t.name].push_back(std::move(row));
        }
    }
    return d;
}

}  // namespace qdgen
