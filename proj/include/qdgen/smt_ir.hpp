#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "qdgen/value.hpp"

namespace qdgen::smt {

enum class SortKind { Bool, Int, Real, Enum };

struct Sort {
    SortKind kind = SortKind::Int;
    std::string name;  // Enum sort name

    static Sort boolean() { return {SortKind::Bool, ""}; }
    static Sort integer() { return {SortKind::Int, ""}; }
    static Sort real() { return {SortKind::Real, ""}; }
    static Sort enumeration(std::string n) { return {SortKind::Enum, std::move(n)}; }
    std::string smt() const;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Expression node of the bounded-quantifier constraint IR. Quantifiers
/// carry explicit inclusive integer bounds so they can be unfolded into
/// finite connectives before solving.
struct Node {
    enum class Kind { IntLit, RealLit, EnumLit, BoolLit, Var, App, Select, Forall, Exists };

    Kind kind;
    std::string sym;  // op / accessor / enum constant / variable / array name
    long long ival = 0;
    Rational rval;
    bool bval = false;
    std::vector<NodePtr> args;
    long long lo = 0, hi = 0;  // quantifier bounds
};

NodePtr ilit(long long v);
NodePtr rlit(const Rational& v);
NodePtr elit(std::string constant);
NodePtr blit(bool v);
NodePtr var(std::string name);
NodePtr app(std::string op, std::vector<NodePtr> args);
NodePtr select(std::string array, NodePtr index);

// connective helpers with basic folding
NodePtr and_(std::vector<NodePtr> xs);
NodePtr or_(std::vector<NodePtr> xs);
NodePtr not_(NodePtr x);
NodePtr implies(NodePtr a, NodePtr b);
NodePtr eq(NodePtr a, NodePtr b);
NodePtr ite(NodePtr c, NodePtr t, NodePtr f);

NodePtr forall(std::string v, long long lo, long long hi, NodePtr body);
NodePtr exists(std::string v, long long lo, long long hi, NodePtr body);

bool is_true(const NodePtr& n);
bool is_false(const NodePtr& n);

/// Substitutes every Var(name) with the replacement term.
NodePtr substitute(const NodePtr& n, const std::string& name, const NodePtr& repl);

struct EnumDecl {
    std::string name;
    std::vector<std::string> constants;
};

struct TupleDecl {
    std::string sort_name;
    std::string ctor;
    std::vector<std::pair<std::string, Sort>> fields;  // accessor name, sort
};

struct ArrayDecl {
    std::string name;
    std::string tuple_sort;
};

struct DeclareFun {
    std::string name;
    std::vector<Sort> args;
    Sort ret;
};

struct DefineFun {
    std::string name;
    std::vector<std::pair<std::string, Sort>> params;
    Sort ret;
    NodePtr body;
};

/// Ordered declarations + assertions; serializable to SMT-LIB2 text.
/// Declarations keep emission order so every symbol precedes its first use.
struct ConstraintProgram {
    using Decl = std::variant<EnumDecl, DeclareFun, DefineFun, TupleDecl, ArrayDecl>;
    std::vector<Decl> decls;
    std::vector<std::pair<std::string, NodePtr>> assertions;  // comment label, term
    std::vector<std::string> get_values;  // serialized terms, emission order

    bool has_quantifiers() const;
};

/// Bounded foralls become conjunctions over index instantiations, bounded
/// exists become disjunctions. The result is quantifier-free.
ConstraintProgram unfold(const ConstraintProgram& p);

/// SMT-LIB2 v2.6 script: declarations, define-funs, assertions, check-sat,
/// get-value. Byte-stable for identical inputs.
std::string serialize(const ConstraintProgram& p);

std::string serialize_node(const NodePtr& n);

}  // namespace qdgen::smt
