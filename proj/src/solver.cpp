#include "qdgen/solver.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "qdgen/errors.hpp"

namespace qdgen {

namespace {

bool executable_on_path(const std::string& name) {
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::stringstream ss(path);
    std::string dir;
    while (std::getline(ss, dir, ':')) {
        if (dir.empty()) continue;
        std::string cand = dir + "/" + name;
        if (access(cand.c_str(), X_OK) == 0) return true;
    }
    return false;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

}  // namespace

std::string resolve_solver_command(const std::string& explicit_cmd) {
    if (!explicit_cmd.empty()) return explicit_cmd;
    if (const char* env = std::getenv("QDGEN_SOLVER"); env && *env) return env;
    if (executable_on_path("z3")) return "z3";
#ifdef QDGEN_BUNDLED_SOLVER
    if (access(QDGEN_BUNDLED_SOLVER, X_OK) == 0) return QDGEN_BUNDLED_SOLVER;
#endif
    throw SolverCrash(
        "no SMT solver found: pass --solver, set QDGEN_SOLVER, or install the bundled runner "
        "(npm install in solver/)");
}

namespace {

// ---- s-expression reader for get-value responses ----

struct SExpr {
    bool atom = false;
    std::string text;
    std::vector<SExpr> items;
};

size_t parse_sexpr(const std::string& s, size_t i, SExpr& out) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) throw SolverCrash("truncated solver response");
    if (s[i] == '(') {
        out.atom = false;
        ++i;
        while (true) {
            while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
            if (i >= s.size()) throw SolverCrash("unbalanced solver response");
            if (s[i] == ')') return i + 1;
            SExpr child;
            i = parse_sexpr(s, i, child);
            out.items.push_back(std::move(child));
        }
    }
    out.atom = true;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) && s[j] != '(' &&
           s[j] != ')')
        ++j;
    out.text = s.substr(i, j - i);
    return j;
}

std::string render_sexpr(const SExpr& e) {
    if (e.atom) return e.text;
    std::string out = "(";
    for (size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += " ";
        out += render_sexpr(e.items[i]);
    }
    out += ")";
    return out;
}

}  // namespace

SolveResult solve(const std::string& script_text, std::chrono::milliseconds timeout,
                  const std::string& solver_cmd, const std::string& scratch_file) {
    {
        std::ofstream f(scratch_file);
        if (!f) throw SolverCrash("cannot write " + scratch_file);
        f << script_text;
    }
    double secs = static_cast<double>(timeout.count()) / 1000.0;
    char secbuf[32];
    std::snprintf(secbuf, sizeof secbuf, "%.3f", secs);
    std::string cmd = "timeout " + std::string(secbuf) + " " + solver_cmd + " " +
                      shell_quote(scratch_file) + " 2>&1";

    auto start = std::chrono::steady_clock::now();
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw SolverCrash("cannot launch solver: " + solver_cmd);
    std::string output;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, n);
    int rc = pclose(pipe);
    auto end = std::chrono::steady_clock::now();

    SolveResult res;
    res.raw_output = output;
    res.wall_seconds = std::chrono::duration<double>(end - start).count();

    int exit_code = -1;
    if (WIFEXITED(rc)) exit_code = WEXITSTATUS(rc);
    bool timed_out = exit_code == 124;  // timeout(1)

    // find the verdict line
    std::istringstream lines(output);
    std::string line;
    std::optional<SolveStatus> verdict;
    size_t verdict_end = 0;
    size_t consumed = 0;
    while (std::getline(lines, line)) {
        consumed += line.size() + 1;
        std::string t = line;
        while (!t.empty() && (t.back() == '\r' || t.back() == ' ')) t.pop_back();
        if (t == "sat") {
            verdict = SolveStatus::Sat;
            verdict_end = consumed;
            break;
        }
        if (t == "unsat") {
            verdict = SolveStatus::Unsat;
            verdict_end = consumed;
            break;
        }
        if (t == "unknown") {
            verdict = SolveStatus::Timeout;
            verdict_end = consumed;
            break;
        }
    }
    if (!verdict) {
        if (timed_out) {
            res.status = SolveStatus::Timeout;
            return res;
        }
        throw SolverCrash("solver produced no verdict (exit " + std::to_string(exit_code) +
                          "): " + output.substr(0, 400));
    }
    res.status = *verdict;
    if (res.status != SolveStatus::Sat) return res;

    // parse the get-value response that follows
    std::string rest = output.substr(verdict_end);
    size_t pos = rest.find('(');
    if (pos == std::string::npos) return res;  // sat with no model request
    SExpr top;
    parse_sexpr(rest, pos, top);
    for (const auto& pair : top.items) {
        if (pair.atom || pair.items.size() != 2) continue;
        res.values.emplace_back(render_sexpr(pair.items[0]), render_sexpr(pair.items[1]));
    }
    return res;
}

namespace {

Value decode_value(const BuildResult& build, const TField& f, const std::string& text) {
    // enum constant?
    if (f.type == SemanticType::String) {
        auto it = build.enum_sym_to_value.find(text);
        if (it != build.enum_sym_to_value.end()) return Value::string(it->second);
        const EmittedClass& ec = build.classes.at(f.class_id);
        if (text == ec.null_sym) return Value::null();
        throw ModelGap("unknown enum constant " + text);
    }
    // numeric forms: 5, (- 5), 5.0, (/ a b), (- (/ a b))
    std::function<Rational(const std::string&)> num = [&](const std::string& s) -> Rational {
        std::string t = s;
        // strip outer parens forms
        if (!t.empty() && t[0] == '(') {
            SExpr e;
            parse_sexpr(t, 0, e);
            if (!e.items.empty() && e.items[0].atom && e.items[0].text == "-")
                return -num(render_sexpr(e.items[1]));
            if (!e.items.empty() && e.items[0].atom && e.items[0].text == "/") {
                Rational a = num(render_sexpr(e.items[1]));
                Rational b = num(render_sexpr(e.items[2]));
                return a / b;
            }
            throw ModelGap("unparsable numeric value " + s);
        }
        return Rational::from_string(t);
    };
    Rational v = num(text);
    if (v == f.num_sentinel && f.nullable) return Value::null();
    if (f.type == SemanticType::Real) return Value::real(v);
    if (v == f.num_sentinel) {
        // non-nullable fields never decode to null; CNT and counts land here
        return Value::integer(v.floor());
    }
    return Value::integer(v.floor());
}

}  // namespace

ExtractedModel decode_model(const BuildResult& build, const SolveResult& solved) {
    if (solved.values.size() != build.value_slots.size())
        throw ModelGap("solver returned " + std::to_string(solved.values.size()) +
                       " values, expected " + std::to_string(build.value_slots.size()));
    ExtractedModel m;
    for (const auto& t : build.templates)
        m.slots[t.name].assign(t.max_tuples, std::vector<Value>(t.fields.size()));
    for (size_t i = 0; i < solved.values.size(); ++i) {
        const auto& vs = build.value_slots[i];
        const RelationTemplate& t = build.templates[vs.tmpl];
        const TField& f = t.fields[vs.field];
        m.slots[t.name][vs.slot - 1][vs.field] =
            decode_value(build, f, solved.values[i].second);
    }
    return m;
}

std::vector<std::vector<Value>> expanded_valid_rows(const BuildResult& build,
                                                    const ExtractedModel& model,
                                                    const std::string& tmpl) {
    const RelationTemplate& t = build.tmpl(tmpl);
    std::vector<std::vector<Value>> out;
    for (const auto& slot : model.slots.at(tmpl)) {
        long long cnt = slot[t.cnt_index].is_null() ? 0 : slot[t.cnt_index].as_int();
        if (cnt <= 0) continue;
        std::vector<Value> row;
        for (size_t fi = 0; fi < t.fields.size(); ++fi) {
            if (static_cast<int>(fi) == t.cnt_index || t.fields[fi].is_aux) continue;
            row.push_back(slot[fi]);
        }
        for (long long k = 0; k < cnt; ++k) out.push_back(row);
    }
    return out;
}

Dataset extract_dataset(const BuildResult& build, const SolveResult& solved,
                        const SchemaCatalog& catalog) {
    ExtractedModel m = decode_model(build, solved);
    Dataset d;
    for (const auto& t : catalog.tables) {
        auto it = build.template_by_name.find(t.name);
        if (it == build.template_by_name.end()) continue;
        const RelationTemplate& rt = build.templates[it->second];
        if (rt.plan_node >= 0) continue;  // not a base table template
        for (const auto& slot : m.slots.at(rt.name)) {
            long long cnt = slot[rt.cnt_index].as_int();
            for (long long k = 0; k < cnt; ++k) {
                std::vector<Value> row(slot.begin(), slot.begin() + t.columns.size());
                d.tables[t.name].push_back(row);
            }
        }
        if (!d.tables.count(t.name)) d.tables[t.name] = {};
    }
    return d;
}

bool smtlib2_well_formed(const std::string& script, std::string* error) {
    static const std::set<std::string> commands = {
        "set-logic",     "set-option",  "set-info",    "declare-sort", "declare-datatypes",
        "declare-fun",   "declare-const", "define-fun", "define-sort", "assert",
        "check-sat",     "get-value",   "get-model",   "push",         "pop",
        "exit",          "echo"};
    size_t i = 0;
    const size_t n = script.size();
    auto fail = [&](const std::string& msg) {
        if (error) *error = msg;
        return false;
    };
    bool saw_any = false;
    while (i < n) {
        while (i < n && (std::isspace(static_cast<unsigned char>(script[i])) || script[i] == ';')) {
            if (script[i] == ';')
                while (i < n && script[i] != '\n') ++i;
            else
                ++i;
        }
        if (i >= n) break;
        if (script[i] != '(') return fail("top-level form must start with '('");
        size_t start = i;
        int depth = 0;
        bool in_str = false;
        for (; i < n; ++i) {
            char c = script[i];
            if (in_str) {
                if (c == '"') in_str = false;
                continue;
            }
            if (c == '"') in_str = true;
            if (c == '(') ++depth;
            if (c == ')') {
                --depth;
                if (depth == 0) {
                    ++i;
                    break;
                }
            }
        }
        if (depth != 0) return fail("unbalanced parentheses");
        // head symbol
        size_t h = start + 1;
        while (h < n && std::isspace(static_cast<unsigned char>(script[h]))) ++h;
        size_t he = h;
        while (he < n && !std::isspace(static_cast<unsigned char>(script[he])) &&
               script[he] != '(' && script[he] != ')')
            ++he;
        std::string head = script.substr(h, he - h);
        if (!commands.count(head)) return fail("unknown command '" + head + "'");
        saw_any = true;
    }
    if (!saw_any) return fail("empty script");
    return true;
}

}  // namespace qdgen
