#include "qdgen/smt_ir.hpp"

#include <sstream>
#include <variant>

namespace qdgen::smt {

std::string Sort::smt() const {
    switch (kind) {
        case SortKind::Bool: return "Bool";
        case SortKind::Int: return "Int";
        case SortKind::Real: return "Real";
        case SortKind::Enum: return name;
    }
    return "?";
}

namespace {
NodePtr mk(Node n) { return std::make_shared<const Node>(std::move(n)); }
}  // namespace

NodePtr ilit(long long v) {
    Node n;
    n.kind = Node::Kind::IntLit;
    n.ival = v;
    return mk(std::move(n));
}
NodePtr rlit(const Rational& v) {
    Node n;
    n.kind = Node::Kind::RealLit;
    n.rval = v;
    return mk(std::move(n));
}
NodePtr elit(std::string constant) {
    Node n;
    n.kind = Node::Kind::EnumLit;
    n.sym = std::move(constant);
    return mk(std::move(n));
}
NodePtr blit(bool v) {
    Node n;
    n.kind = Node::Kind::BoolLit;
    n.bval = v;
    return mk(std::move(n));
}
NodePtr var(std::string name) {
    Node n;
    n.kind = Node::Kind::Var;
    n.sym = std::move(name);
    return mk(std::move(n));
}
NodePtr app(std::string op, std::vector<NodePtr> args) {
    Node n;
    n.kind = Node::Kind::App;
    n.sym = std::move(op);
    n.args = std::move(args);
    return mk(std::move(n));
}
NodePtr select(std::string array, NodePtr index) {
    Node n;
    n.kind = Node::Kind::Select;
    n.sym = std::move(array);
    n.args = {std::move(index)};
    return mk(std::move(n));
}

bool is_true(const NodePtr& n) { return n->kind == Node::Kind::BoolLit && n->bval; }
bool is_false(const NodePtr& n) { return n->kind == Node::Kind::BoolLit && !n->bval; }

NodePtr and_(std::vector<NodePtr> xs) {
    std::vector<NodePtr> flat;
    for (auto& x : xs) {
        if (is_true(x)) continue;
        if (is_false(x)) return blit(false);
        if (x->kind == Node::Kind::App && x->sym == "and") {
            for (const auto& a : x->args) flat.push_back(a);
        } else {
            flat.push_back(x);
        }
    }
    if (flat.empty()) return blit(true);
    if (flat.size() == 1) return flat[0];
    return app("and", std::move(flat));
}

NodePtr or_(std::vector<NodePtr> xs) {
    std::vector<NodePtr> flat;
    for (auto& x : xs) {
        if (is_false(x)) continue;
        if (is_true(x)) return blit(true);
        if (x->kind == Node::Kind::App && x->sym == "or") {
            for (const auto& a : x->args) flat.push_back(a);
        } else {
            flat.push_back(x);
        }
    }
    if (flat.empty()) return blit(false);
    if (flat.size() == 1) return flat[0];
    return app("or", std::move(flat));
}

NodePtr not_(NodePtr x) {
    if (is_true(x)) return blit(false);
    if (is_false(x)) return blit(true);
    if (x->kind == Node::Kind::App && x->sym == "not") return x->args[0];
    return app("not", {std::move(x)});
}

NodePtr implies(NodePtr a, NodePtr b) {
    if (is_true(a)) return b;
    if (is_false(a)) return blit(true);
    if (is_true(b)) return blit(true);
    if (is_false(b)) return not_(std::move(a));
    return app("=>", {std::move(a), std::move(b)});
}

NodePtr eq(NodePtr a, NodePtr b) { return app("=", {std::move(a), std::move(b)}); }

NodePtr ite(NodePtr c, NodePtr t, NodePtr f) {
    if (is_true(c)) return t;
    if (is_false(c)) return f;
    return app("ite", {std::move(c), std::move(t), std::move(f)});
}

NodePtr forall(std::string v, long long lo, long long hi, NodePtr body) {
    if (is_true(body)) return blit(true);
    Node n;
    n.kind = Node::Kind::Forall;
    n.sym = std::move(v);
    n.lo = lo;
    n.hi = hi;
    n.args = {std::move(body)};
    return mk(std::move(n));
}

NodePtr exists(std::string v, long long lo, long long hi, NodePtr body) {
    if (is_false(body)) return blit(false);
    Node n;
    n.kind = Node::Kind::Exists;
    n.sym = std::move(v);
    n.lo = lo;
    n.hi = hi;
    n.args = {std::move(body)};
    return mk(std::move(n));
}

NodePtr substitute(const NodePtr& n, const std::string& name, const NodePtr& repl) {
    switch (n->kind) {
        case Node::Kind::Var:
            return n->sym == name ? repl : n;
        case Node::Kind::IntLit:
        case Node::Kind::RealLit:
        case Node::Kind::EnumLit:
        case Node::Kind::BoolLit:
            return n;
        default: break;
    }
    if ((n->kind == Node::Kind::Forall || n->kind == Node::Kind::Exists) && n->sym == name)
        return n;  // shadowed
    bool changed = false;
    std::vector<NodePtr> args;
    args.reserve(n->args.size());
    for (const auto& a : n->args) {
        NodePtr s = substitute(a, name, repl);
        changed |= (s != a);
        args.push_back(std::move(s));
    }
    if (!changed) return n;
    Node c = *n;
    c.args = std::move(args);
    return mk(std::move(c));
}

namespace {

NodePtr unfold_node(const NodePtr& n) {
    switch (n->kind) {
        case Node::Kind::Forall: {
            NodePtr body = unfold_node(n->args[0]);
            std::vector<NodePtr> parts;
            for (long long i = n->lo; i <= n->hi; ++i)
                parts.push_back(substitute(body, n->sym, ilit(i)));
            return and_(std::move(parts));
        }
        case Node::Kind::Exists: {
            NodePtr body = unfold_node(n->args[0]);
            std::vector<NodePtr> parts;
            for (long long i = n->lo; i <= n->hi; ++i)
                parts.push_back(substitute(body, n->sym, ilit(i)));
            return or_(std::move(parts));
        }
        default: break;
    }
    if (n->args.empty()) return n;
    bool changed = false;
    std::vector<NodePtr> args;
    args.reserve(n->args.size());
    for (const auto& a : n->args) {
        NodePtr u = unfold_node(a);
        changed |= (u != a);
        args.push_back(std::move(u));
    }
    if (!changed) return n;
    Node c = *n;
    c.args = std::move(args);
    return mk(std::move(c));
}

bool node_has_quantifier(const NodePtr& n) {
    if (n->kind == Node::Kind::Forall || n->kind == Node::Kind::Exists) return true;
    for (const auto& a : n->args)
        if (node_has_quantifier(a)) return true;
    return false;
}

void print_node(std::ostringstream& out, const NodePtr& n) {
    switch (n->kind) {
        case Node::Kind::IntLit:
            if (n->ival < 0)
                out << "(- " << -n->ival << ")";
            else
                out << n->ival;
            return;
        case Node::Kind::RealLit: {
            const Rational& r = n->rval;
            long long num = r.num() < 0 ? -r.num() : r.num();
            if (r.num() < 0) out << "(- ";
            if (r.den() == 1)
                out << num << ".0";
            else
                out << "(/ " << num << ".0 " << r.den() << ".0)";
            if (r.num() < 0) out << ")";
            return;
        }
        case Node::Kind::EnumLit:
        case Node::Kind::Var:
            out << n->sym;
            return;
        case Node::Kind::BoolLit:
            out << (n->bval ? "true" : "false");
            return;
        case Node::Kind::Select:
            out << "(select " << n->sym << " ";
            print_node(out, n->args[0]);
            out << ")";
            return;
        case Node::Kind::App:
            out << "(" << n->sym;
            for (const auto& a : n->args) {
                out << " ";
                print_node(out, a);
            }
            out << ")";
            return;
        case Node::Kind::Forall:
        case Node::Kind::Exists: {
            bool fa = n->kind == Node::Kind::Forall;
            out << "(" << (fa ? "forall" : "exists") << " ((" << n->sym << " Int)) ";
            if (fa) {
                out << "(=> (and (>= " << n->sym << " " << n->lo << ") (<= " << n->sym << " "
                    << n->hi << ")) ";
                print_node(out, n->args[0]);
                out << ")";
            } else {
                out << "(and (>= " << n->sym << " " << n->lo << ") (<= " << n->sym << " "
                    << n->hi << ") ";
                print_node(out, n->args[0]);
                out << ")";
            }
            out << ")";
            return;
        }
    }
}

}  // namespace

bool ConstraintProgram::has_quantifiers() const {
    for (const auto& [label, a] : assertions)
        if (node_has_quantifier(a)) return true;
    return false;
}

ConstraintProgram unfold(const ConstraintProgram& p) {
    ConstraintProgram out = p;
    out.assertions.clear();
    for (const auto& [label, a] : p.assertions) {
        NodePtr u = unfold_node(a);
        if (is_true(u)) continue;
        out.assertions.emplace_back(label, std::move(u));
    }
    return out;
}

std::string serialize_node(const NodePtr& n) {
    std::ostringstream out;
    print_node(out, n);
    return out.str();
}

std::string serialize(const ConstraintProgram& p) {
    std::ostringstream out;
    for (const auto& d : p.decls) {
        if (const auto* e = std::get_if<EnumDecl>(&d)) {
            out << "(declare-datatypes ((" << e->name << " 0)) ((";
            for (const auto& c : e->constants) out << "(" << c << ") ";
            out << ")))\n";
        } else if (const auto* f = std::get_if<DeclareFun>(&d)) {
            out << "(declare-fun " << f->name << " (";
            for (size_t i = 0; i < f->args.size(); ++i) out << (i ? " " : "") << f->args[i].smt();
            out << ") " << f->ret.smt() << ")\n";
        } else if (const auto* g = std::get_if<DefineFun>(&d)) {
            out << "(define-fun " << g->name << " (";
            for (const auto& [pn, ps] : g->params) out << "(" << pn << " " << ps.smt() << ") ";
            out << ") " << g->ret.smt() << " " << serialize_node(g->body) << ")\n";
        } else if (const auto* t = std::get_if<TupleDecl>(&d)) {
            out << "(declare-datatypes ((" << t->sort_name << " 0)) (((" << t->ctor;
            for (const auto& [fn, fs] : t->fields) out << " (" << fn << " " << fs.smt() << ")";
            out << "))))\n";
        } else if (const auto* a = std::get_if<ArrayDecl>(&d)) {
            out << "(declare-fun " << a->name << " () (Array Int " << a->tuple_sort << "))\n";
        }
    }
    std::string last_label;
    for (const auto& [label, a] : p.assertions) {
        if (!label.empty() && label != last_label) {
            out << "; " << label << "\n";
            last_label = label;
        }
        out << "(assert " << serialize_node(a) << ")\n";
    }
    out << "(check-sat)\n";
    if (!p.get_values.empty()) {
        out << "(get-value (";
        for (const auto& g : p.get_values) out << "\n  " << g;
        out << "))\n";
    }
    return out.str();
}

}  // namespace qdgen::smt
