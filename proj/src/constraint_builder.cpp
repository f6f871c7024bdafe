#include "qdgen/constraint_builder.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <set>

#include "qdgen/errors.hpp"
#include "qdgen/parser.hpp"

namespace qdgen {

using smt::and_;
using smt::app;
using smt::blit;
using smt::elit;
using smt::eq;
using smt::exists;
using smt::forall;
using smt::ilit;
using smt::implies;
using smt::ite;
using smt::NodePtr;
using smt::not_;
using smt::or_;
using smt::rlit;
using smt::var;

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = std::tolower(static_cast<unsigned char>(c));
    return s;
}
std::string upper(std::string s) {
    for (auto& c : s) c = std::toupper(static_cast<unsigned char>(c));
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// LIKE pattern handling
// ---------------------------------------------------------------------------

bool like_matches(const std::string& value, const std::string& pattern) {
    std::function<bool(size_t, size_t)> go = [&](size_t si, size_t pi) -> bool {
        while (pi < pattern.size()) {
            if (pattern[pi] == '%') {
                for (size_t k = si; k <= value.size(); ++k)
                    if (go(k, pi + 1)) return true;
                return false;
            }
            if (si >= value.size()) return false;
            if (pattern[pi] != '_' && pattern[pi] != value[si]) return false;
            ++si;
            ++pi;
        }
        return si == value.size();
    };
    return go(0, 0);
}

std::string like_expand_match(const std::string& pattern) {
    std::string out;
    for (char c : pattern) {
        if (c == '%') continue;
        out += c == '_' ? 'a' : c;
    }
    return out;
}

std::string like_expand_nonmatch(const std::string& pattern) {
    static const char* candidates[] = {"zz", "qx", "nomatch", "zzz", "aa", "b"};
    for (const char* c : candidates)
        if (!like_matches(c, pattern)) return c;
    std::string probe = "z";
    for (int i = 0; i < 64; ++i) {
        if (!like_matches(probe, pattern)) return probe;
        probe += "z";
    }
    throw UnsatisfiablePattern("pattern '" + pattern + "' matches every candidate value");
}

namespace {

void walk_conditions(QueryTree& q, const std::function<void(ExprPtr&)>& fn) {
    std::function<void(ExprPtr&)> walk_expr = [&](ExprPtr& e) {
        if (!e) return;
        fn(e);
        for (auto& c : e->children) walk_expr(c);
    };
    std::function<void(FromPtr&)> walk_from = [&](FromPtr& f) {
        if (!f) return;
        if (f->kind == FromNode::Kind::Join) {
            for (auto& c : f->conditions) walk_expr(c);
            walk_from(f->left);
            walk_from(f->right);
        }
    };
    for (auto& [id, b] : q.blocks) {
        walk_from(b.from);
        for (auto& w : b.where) walk_expr(w.expr);
        for (auto& h : b.having) walk_expr(h.expr);
    }
}

}  // namespace

void compile_string_conditions(SchemaCatalog& catalog, QueryTree& q) {
    // Replace LIKE by equality with a satisfying value and inject every
    // string constant compared against a column into the column's domain.
    std::function<void(ExprPtr&)> rewrite = [&](ExprPtr& e) {
        if (!e) return;
        for (auto& c : e->children) rewrite(c);
        if (e->kind == Expr::Kind::Like) {
            std::string v =
                e->negated ? like_expand_nonmatch(e->pattern) : like_expand_match(e->pattern);
            ExprPtr col = e->children[0];
            auto base = trace_to_base(q, catalog, col->col);
            if (base) catalog.domain_mut(base->table, base->column).add_string(v);
            e = Expr::compare(CompareOp::Eq, col, Expr::literal(Value::string(v)));
        } else if (e->kind == Expr::Kind::Compare) {
            const ExprPtr& l = e->children[0];
            const ExprPtr& r = e->children[1];
            auto inject = [&](const ExprPtr& colside, const ExprPtr& litside) {
                if (colside->kind != Expr::Kind::Column ||
                    litside->kind != Expr::Kind::Literal)
                    return;
                if (litside->lit.kind() != Value::Kind::Str) return;
                auto base = trace_to_base(q, catalog, colside->col);
                if (base)
                    catalog.domain_mut(base->table, base->column)
                        .add_string(litside->lit.as_str());
            };
            inject(l, r);
            inject(r, l);
        }
    };
    std::function<void(FromPtr&)> walk_from = [&](FromPtr& f) {
        if (!f) return;
        if (f->kind == FromNode::Kind::Join) {
            for (auto& c : f->conditions) rewrite(c);
            walk_from(f->left);
            walk_from(f->right);
        }
    };
    for (auto& [id, b] : q.blocks) {
        walk_from(b.from);
        for (auto& w : b.where) rewrite(w.expr);
        for (auto& h : b.having) rewrite(h.expr);
    }
}

void cover_numeric_literals(SchemaCatalog& catalog, QueryTree& q) {
    walk_conditions(q, [&](ExprPtr& e) {
        if (e->kind != Expr::Kind::Compare) return;
        const ExprPtr& l = e->children[0];
        const ExprPtr& r = e->children[1];
        auto cover = [&](const ExprPtr& colside, const ExprPtr& litside) {
            if (colside->kind != Expr::Kind::Column || litside->kind != Expr::Kind::Literal)
                return;
            if (litside->lit.is_null() || litside->lit.kind() == Value::Kind::Str) return;
            auto base = trace_to_base(q, catalog, colside->col);
            if (!base) return;
            ValueDomain& d = catalog.domain_mut(base->table, base->column);
            if (d.type == SemanticType::String) return;
            Rational v = litside->lit.numeric();
            d.cover_numeric(v - Rational(1));
            d.cover_numeric(v + Rational(1));
        };
        cover(l, r);
        cover(r, l);
    });
}

// ---------------------------------------------------------------------------
// Builder implementation
// ---------------------------------------------------------------------------

namespace {

struct BoundAtom {
    const RelationTemplate* tmpl;
    NodePtr idx;
    std::string alias;  // "" for structured inputs
};

}  // namespace

class BuilderImpl {
public:
    BuilderImpl(const SchemaCatalog& cat, const QueryTree& q, const BuildPlan& plan,
                const BuilderOptions& opts, BuildResult* existing)
        : cat_(cat), q_(q), plan_(plan), opts_(opts) {
        if (existing) {
            res_ = existing;
        } else {
            owned_ = std::make_unique<BuildResult>();
            res_ = owned_.get();
        }
    }

    BuildResult take() { return std::move(*owned_); }

    // ---- driving ----

    void build_all() {
        emit_classes();
        // templates for every base table in the size plan (including tables
        // pulled in only through foreign keys), then integrity constraints
        // once all referenced templates exist
        for (const auto& [table, size] : plan_.base_sizes) emit_base_template(table);
        for (const auto& [table, size] : plan_.base_sizes)
            emit_base_integrity(res_->templates[res_->template_by_name.at(table)],
                                cat_.table(table));
        for (const auto& n : plan_.nodes) {
            switch (n.kind) {
                case PlanNode::Kind::Base:
                    res_->node_template[n.id] = res_->template_by_name.at(n.table);
                    break;
                case PlanNode::Kind::Join: emit_join(n); break;
                case PlanNode::Kind::Semi:
                case PlanNode::Kind::Anti: emit_semi(n); break;
                case PlanNode::Kind::Outer: emit_outer(n); break;
                case PlanNode::Kind::Agg: emit_agg(n); break;
                case PlanNode::Kind::Project: emit_project(n); break;
                case PlanNode::Kind::SetOp: emit_setop(n); break;
            }
        }
        res_->root_template = res_->node_template.at(plan_.root);
        if (opts_.assert_nonempty)
            assert_node("non-empty result", nonempty_term());
        register_get_values();
    }

    NodePtr nonempty_term() {
        const RelationTemplate& t = res_->templates[res_->root_template];
        std::vector<NodePtr> parts;
        for (int k = 1; k <= t.max_tuples; ++k)
            parts.push_back(app(">", {t.cnt_term(ilit(k)), ilit(0)}));
        return or_(std::move(parts));
    }

    // ---- equivalence classes ----

    void emit_classes() {
        for (int cid = 0; cid < cat_.class_count(); ++cid) {
            auto members = cat_.class_members(cid);
            if (members.empty()) continue;
            const ValueDomain& d = cat_.class_domain(cid);
            EmittedClass ec;
            ec.lo = d.lo;
            ec.hi = d.hi;
            ec.sentinel = d.numeric_null_sentinel;
            if (d.type == SemanticType::String) {
                std::string sort_name = reg_.fresh(upper(members[0].column));
                ec.sort = smt::Sort::enumeration(sort_name);
                smt::EnumDecl ed;
                ed.name = sort_name;
                for (const auto& v : d.values) {
                    std::string sym = reg_.fresh(sort_name + "__" + v);
                    ec.const_syms[v] = sym;
                    res_->enum_sym_to_value[sym] = v;
                    ed.constants.push_back(sym);
                }
                ec.null_sym = reg_.fresh("NULL_" + sort_name);
                ed.constants.push_back(ec.null_sym);
                res_->program.decls.push_back(ed);
                // null check
                ec.isnull_fn = reg_.fresh("ISNULL_" + sort_name);
                smt::DefineFun f;
                f.name = ec.isnull_fn;
                f.params = {{"x", ec.sort}};
                f.ret = smt::Sort::boolean();
                f.body = eq(var("x"), elit(ec.null_sym));
                res_->program.decls.push_back(f);
                // lexicographic order map
                ec.map_fn = reg_.fresh(sort_name + "Map");
                smt::DeclareFun mf;
                mf.name = ec.map_fn;
                mf.args = {ec.sort};
                mf.ret = smt::Sort::integer();
                res_->program.decls.push_back(mf);
                int rank = 1;
                for (const auto& v : d.values)
                    assert_node("string order map " + sort_name,
                                eq(app(ec.map_fn, {elit(ec.const_syms[v])}), ilit(rank++)));
            } else {
                ec.sort = d.type == SemanticType::Real ? smt::Sort::real() : smt::Sort::integer();
            }
            res_->classes[cid] = std::move(ec);
        }
    }

    // ---- templates ----

    RelationTemplate& new_template(const std::string& name, int max_tuples, int plan_node) {
        RelationTemplate t;
        t.name = reg_.fresh(name);
        t.sort_name = reg_.fresh(t.name + "_Tuple");
        t.ctor = reg_.fresh("mk_" + t.name);
        t.array_sym = reg_.fresh("O_" + t.name);
        t.max_tuples = max_tuples;
        t.plan_node = plan_node;
        res_->templates.push_back(std::move(t));
        res_->template_by_name[res_->templates.back().name] =
            static_cast<int>(res_->templates.size() - 1);
        if (plan_node >= 0) res_->node_template[plan_node] =
            static_cast<int>(res_->templates.size() - 1);
        return res_->templates.back();
    }

    void add_field(RelationTemplate& t, TField f) {
        std::string base = f.name;
        int n = 2;
        while (t.field_by_name(f.name) >= 0) f.name = base + "_" + std::to_string(n++);
        f.accessor = reg_.fresh(t.name + "_" + f.name);
        t.fields.push_back(std::move(f));
    }

    void finish_template(RelationTemplate& t) {
        TField cnt;
        cnt.name = "cnt";
        cnt.src_alias = "";
        cnt.src_col = "";
        cnt.type = SemanticType::Integer;
        cnt.nullable = false;
        cnt.is_aux = false;
        add_field(t, std::move(cnt));
        t.cnt_index = static_cast<int>(t.fields.size()) - 1;
        if (t.fields.size() < 2)
            throw std::logic_error("relation template with no attributes: " + t.name);
        smt::TupleDecl td;
        td.sort_name = t.sort_name;
        td.ctor = t.ctor;
        for (const auto& f : t.fields) td.fields.emplace_back(f.accessor, field_sort(f));
        res_->program.decls.push_back(td);
        res_->program.decls.push_back(smt::ArrayDecl{t.array_sym, t.sort_name});
        // CNT is nonnegative and bounded
        std::string v = qvar();
        assert_node(t.name + " cnt bounds",
                    forall(v, 1, t.max_tuples,
                           and_({app(">=", {t.cnt_term(var(v)), ilit(0)}),
                                 app("<=", {t.cnt_term(var(v)), ilit(opts_.cnt_max)})})));
    }

    smt::Sort field_sort(const TField& f) const {
        if (f.type == SemanticType::String) {
            auto it = res_->classes.find(f.class_id);
            if (it == res_->classes.end())
                throw std::logic_error("string field without emitted class: " + f.name);
            return it->second.sort;
        }
        return f.type == SemanticType::Real ? smt::Sort::real() : smt::Sort::integer();
    }

    // ---- null machinery / typed literals ----

    NodePtr sentinel_lit(const TField& f) const {
        if (f.type == SemanticType::String)
            return elit(res_->classes.at(f.class_id).null_sym);
        if (f.type == SemanticType::Real) return rlit(f_sentinel(f));
        return ilit(f_sentinel(f).floor());
    }

    Rational f_sentinel(const TField& f) const { return f.num_sentinel; }

    NodePtr isnull_term(const TField& f, const NodePtr& term) const {
        if (f.type == SemanticType::String) {
            const EmittedClass& ec = res_->classes.at(f.class_id);
            return app(ec.isnull_fn, {term});
        }
        return eq(term, sentinel_lit(f));
    }

    NodePtr value_term(const TField& f, const Value& v) const {
        if (v.is_null()) return sentinel_lit(f);
        if (f.type == SemanticType::String) {
            const EmittedClass& ec = res_->classes.at(f.class_id);
            auto it = ec.const_syms.find(v.as_str());
            if (it == ec.const_syms.end())
                throw std::logic_error("string constant outside domain: " + v.as_str());
            return elit(it->second);
        }
        if (f.type == SemanticType::Real) return rlit(v.numeric());
        return ilit(v.numeric().floor());
    }

    // ---- condition compilation ----

    struct CondCtx {
        std::vector<BoundAtom> atoms;
        const RelationTemplate* agg_tmpl = nullptr;
        const std::map<int, int>* agg_fields = nullptr;
        NodePtr agg_idx;
    };

    std::pair<NodePtr, const TField*> resolve(const CondCtx& ctx, const ColumnRef& ref) const {
        for (const auto& a : ctx.atoms) {
            if (!a.alias.empty()) {
                if (ref.item_alias != a.alias) continue;
                int f = a.tmpl->field_by_name(ref.column);
                if (f >= 0) return {a.tmpl->field_term(f, a.idx), &a.tmpl->fields[f]};
            } else {
                int f = a.tmpl->field_by_src(ref.item_alias, ref.column);
                if (f >= 0) return {a.tmpl->field_term(f, a.idx), &a.tmpl->fields[f]};
            }
        }
        throw ArityMismatch("condition references attribute outside its inputs: " +
                            ref.to_string());
    }

    struct Scalar {
        NodePtr term;
        const TField* field = nullptr;  // null for literals
        Value lit;
        bool is_literal = false;
        bool guarded = false;  // null handled internally (NullDefaultZero)
    };

    Scalar compile_scalar(const CondCtx& ctx, const ExprPtr& e) const {
        Scalar s;
        switch (e->kind) {
            case Expr::Kind::Column: {
                auto [term, f] = resolve(ctx, e->col);
                s.term = term;
                s.field = f;
                return s;
            }
            case Expr::Kind::Literal:
                s.is_literal = true;
                s.lit = e->lit;
                return s;
            case Expr::Kind::AggRef: {
                if (!ctx.agg_tmpl) throw UnknownAggregate("aggregate outside HAVING context");
                auto it = ctx.agg_fields->find(e->agg_index);
                if (it == ctx.agg_fields->end())
                    throw UnknownAggregate("aggregate " + std::to_string(e->agg_index));
                s.field = &ctx.agg_tmpl->fields[it->second];
                s.term = ctx.agg_tmpl->field_term(it->second, ctx.agg_idx);
                return s;
            }
            case Expr::Kind::NullDefaultZero: {
                Scalar in = compile_scalar(ctx, e->children[0]);
                if (!in.field) throw std::logic_error("IFNULL over literal");
                NodePtr zero = in.field->type == SemanticType::Real ? rlit(Rational(0))
                                                                    : ilit(0);
                s.term = ite(isnull_term(*in.field, in.term), zero, in.term);
                s.field = in.field;
                s.guarded = true;
                return s;
            }
            default: throw std::logic_error("scalar compile on boolean node");
        }
    }

    NodePtr compile_compare(const CondCtx& ctx, CompareOp op, const ExprPtr& le,
                            const ExprPtr& re) const {
        Scalar l = compile_scalar(ctx, le);
        Scalar r = compile_scalar(ctx, re);
        const TField* typed = l.field ? l.field : r.field;
        if (!typed) {
            // constant condition, e.g. a tautological HAVING 1 = 1
            if (l.lit.is_null() || r.lit.is_null()) return blit(false);
            return blit(apply_compare(op, l.lit, r.lit));
        }
        bool is_string = typed->type == SemanticType::String;
        bool needs_real = (l.field && l.field->type == SemanticType::Real) ||
                          (r.field && r.field->type == SemanticType::Real) ||
                          (l.is_literal && !l.lit.is_null() &&
                           l.lit.kind() == Value::Kind::Real) ||
                          (r.is_literal && !r.lit.is_null() &&
                           r.lit.kind() == Value::Kind::Real);
        auto materialize = [&](Scalar& s, const TField* peer) -> NodePtr {
            if (!s.is_literal) {
                NodePtr t = s.term;
                if (!is_string && needs_real && s.field->type == SemanticType::Integer)
                    t = app("to_real", {t});
                return t;
            }
            if (s.lit.is_null()) {
                const TField* f = peer ? peer : typed;
                return sentinel_lit(*f);
            }
            if (is_string) {
                const TField* f = peer ? peer : typed;
                const EmittedClass& ec = res_->classes.at(f->class_id);
                auto it = ec.const_syms.find(s.lit.as_str());
                if (it == ec.const_syms.end())
                    throw std::logic_error("string constant outside domain: " + s.lit.as_str());
                return elit(it->second);
            }
            return needs_real ? rlit(s.lit.numeric()) : ilit(s.lit.numeric().floor());
        };
        NodePtr lt = materialize(l, r.field);
        NodePtr rt = materialize(r, l.field);

        NodePtr cmp;
        if (is_string && op != CompareOp::Eq && op != CompareOp::Ne) {
            const EmittedClass& ec = res_->classes.at(typed->class_id);
            NodePtr lm = app(ec.map_fn, {lt});
            NodePtr rm = app(ec.map_fn, {rt});
            cmp = app(to_string(op), {lm, rm});
        } else if (op == CompareOp::Ne) {
            cmp = not_(eq(lt, rt));
        } else {
            cmp = app(to_string(op), {lt, rt});
        }
        // null guards: comparisons are false when either side is null
        std::vector<NodePtr> parts{cmp};
        if (l.field && l.field->nullable && !l.guarded)
            parts.push_back(not_(isnull_term(*l.field, l.term)));
        if (r.field && r.field->nullable && !r.guarded)
            parts.push_back(not_(isnull_term(*r.field, r.term)));
        return and_(std::move(parts));
    }

    NodePtr compile_cond(const CondCtx& ctx, const ExprPtr& e) const {
        switch (e->kind) {
            case Expr::Kind::Compare:
                return compile_compare(ctx, e->op, e->children[0], e->children[1]);
            case Expr::Kind::And: {
                std::vector<NodePtr> parts;
                for (const auto& c : e->children) parts.push_back(compile_cond(ctx, c));
                return and_(std::move(parts));
            }
            case Expr::Kind::Or: {
                std::vector<NodePtr> parts;
                for (const auto& c : e->children) parts.push_back(compile_cond(ctx, c));
                return or_(std::move(parts));
            }
            case Expr::Kind::Not: return not_(compile_cond(ctx, e->children[0]));
            case Expr::Kind::IsNull: {
                Scalar s = compile_scalar(ctx, e->children[0]);
                if (!s.field) {
                    bool isn = s.lit.is_null();
                    return blit(e->negated ? !isn : isn);
                }
                if (!s.field->nullable) return blit(e->negated);
                NodePtr t = isnull_term(*s.field, s.term);
                return e->negated ? not_(t) : t;
            }
            case Expr::Kind::Like:
                throw std::logic_error(
                    "LIKE reached the constraint builder; run compile_string_conditions first");
            default: throw std::logic_error("unexpected condition node");
        }
    }

    // ---- helpers ----

    std::string qvar() { return "i" + std::to_string(qvar_++); }

    void assert_node(const std::string& label, NodePtr n) {
        if (smt::is_true(n)) return;
        res_->program.assertions.emplace_back(label, std::move(n));
    }

    const RelationTemplate& input_tmpl(const PlanNode& n, int i) const {
        return res_->templates[res_->node_template.at(n.inputs[i])];
    }

    // ---- base tables ----

    void emit_base_template(const std::string& table) {
        const TableDef& td = cat_.table(table);
        RelationTemplate& t = new_template(table, plan_.base_sizes.at(table), -1);
        for (const auto& c : td.columns) {
            TField f;
            f.name = c.name;
            f.type = c.type;
            f.class_id = c.class_id;
            f.nullable = c.nullable;
            if (c.type != SemanticType::String)
                f.num_sentinel = cat_.class_domain(c.class_id).numeric_null_sentinel;
            add_field(t, std::move(f));
        }
        finish_template(t);
    }

    void emit_base_integrity(const RelationTemplate& t, const TableDef& td) {
        const int N = t.max_tuples;
        // domain + not-null per column
        for (size_t ci = 0; ci < td.columns.size(); ++ci) {
            const ColumnDef& c = td.columns[ci];
            const TField& f = t.fields[ci];
            std::string v = qvar();
            NodePtr term = t.field_term(static_cast<int>(ci), var(v));
            if (c.type != SemanticType::String) {
                const ValueDomain& d = cat_.class_domain(c.class_id);
                NodePtr lo = c.type == SemanticType::Real ? rlit(d.lo) : ilit(d.lo.floor());
                NodePtr hi = c.type == SemanticType::Real ? rlit(d.hi) : ilit(d.hi.ceil());
                NodePtr in_bounds = and_({app(">=", {term, lo}), app("<=", {term, hi})});
                NodePtr dom = c.nullable ? or_({in_bounds, eq(term, sentinel_lit(f))})
                                         : in_bounds;
                assert_node(td.name + " domain " + c.name, forall(v, 1, N, dom));
            }
            if (!c.nullable) {
                std::string v2 = qvar();
                assert_node(td.name + " not null " + c.name,
                            forall(v2, 1, N,
                                   not_(isnull_term(f, t.field_term(static_cast<int>(ci),
                                                                    var(v2))))));
            }
        }
        // primary key: CNT in {0,1} and pairwise uniqueness
        if (!td.primary_key.empty()) {
            std::string v = qvar();
            assert_node(td.name + " pk cnt",
                        forall(v, 1, N,
                               or_({eq(t.cnt_term(var(v)), ilit(0)),
                                    eq(t.cnt_term(var(v)), ilit(1))})));
            for (int a = 1; a <= N; ++a) {
                for (int b = a + 1; b <= N; ++b) {
                    std::vector<NodePtr> keq;
                    for (const auto& k : td.primary_key) {
                        int fi = t.field_by_name(k);
                        keq.push_back(eq(t.field_term(fi, ilit(a)), t.field_term(fi, ilit(b))));
                    }
                    assert_node(td.name + " pk unique",
                                implies(and_(std::move(keq)),
                                        or_({eq(t.cnt_term(ilit(a)), ilit(0)),
                                             eq(t.cnt_term(ilit(b)), ilit(0))})));
                }
            }
        } else {
            emit_dup_blocking(t, td.name);
        }
        // foreign keys
        for (const auto& fk : td.foreign_keys) {
            const RelationTemplate* rt =
                &res_->templates[res_->template_by_name.at(fk.ref_table)];
            std::string vi = qvar();
            std::string vj = qvar();
            std::vector<NodePtr> escape;
            for (const auto& lc : fk.local_columns) {
                int fi = t.field_by_name(lc);
                escape.push_back(isnull_term(t.fields[fi], t.field_term(fi, var(vi))));
            }
            escape.push_back(eq(t.cnt_term(var(vi)), ilit(0)));
            std::vector<NodePtr> keq{rt->valid(var(vj))};
            for (size_t k = 0; k < fk.local_columns.size(); ++k) {
                int fi = t.field_by_name(fk.local_columns[k]);
                int fj = rt->field_by_name(fk.ref_columns[k]);
                keq.push_back(
                    eq(t.field_term(fi, var(vi)), rt->field_term(fj, var(vj))));
            }
            escape.insert(escape.begin(),
                          exists(vj, 1, rt->max_tuples, and_(std::move(keq))));
            assert_node(td.name + " fk " + fk.ref_table,
                        forall(vi, 1, N, or_(std::move(escape))));
        }
        // check constraints (pass when true or any referenced column null)
        for (const auto& ck : td.check_constraints) {
            ExprPtr expr = parse_check_expr_cached(td, ck.text);
            std::string v = qvar();
            CondCtx ctx;
            ctx.atoms.push_back({&t, var(v), td.name});
            NodePtr compiled = compile_cond(ctx, expr);
            std::vector<ColumnRef> refs;
            collect_columns(expr, refs);
            std::vector<NodePtr> parts{compiled};
            std::set<std::string> seen;
            for (const auto& rref : refs) {
                if (!seen.insert(rref.column).second) continue;
                int fi = t.field_by_name(rref.column);
                if (fi >= 0 && t.fields[fi].nullable)
                    parts.push_back(isnull_term(t.fields[fi], t.field_term(fi, var(v))));
            }
            assert_node(td.name + " check", forall(v, 1, N, or_(std::move(parts))));
        }
    }

    ExprPtr parse_check_expr_cached(const TableDef& td, const std::string& text) const;

    void emit_dup_blocking(const RelationTemplate& t, const std::string& label) {
        for (int a = 1; a <= t.max_tuples; ++a) {
            for (int b = a + 1; b <= t.max_tuples; ++b) {
                std::vector<NodePtr> feq;
                for (size_t fi = 0; fi + 1 < t.fields.size(); ++fi) {  // excl. own CNT
                    if (static_cast<int>(fi) == t.cnt_index) continue;
                    feq.push_back(eq(t.field_term(static_cast<int>(fi), ilit(a)),
                                     t.field_term(static_cast<int>(fi), ilit(b))));
                }
                assert_node(label + " duplicate blocking",
                            implies(and_(std::move(feq)),
                                    or_({eq(t.cnt_term(ilit(a)), ilit(0)),
                                         eq(t.cnt_term(ilit(b)), ilit(0))})));
            }
        }
    }

    // ---- field copying for join-style result tables ----

    struct CopyInfo {
        std::vector<int> field_map;  // input field index → result field index
        int cnt_copy = -1;           // result field holding the input CNT
    };

    CopyInfo copy_input_fields(RelationTemplate& t, const RelationTemplate& in,
                               const std::string& alias, bool force_nullable) {
        CopyInfo info;
        info.field_map.assign(in.fields.size(), -1);
        std::string prefix = alias.empty() ? in.name : alias;
        for (size_t fi = 0; fi < in.fields.size(); ++fi) {
            const TField& f = in.fields[fi];
            if (static_cast<int>(fi) == in.cnt_index || f.is_aux) continue;
            TField c;
            c.name = prefix + "__" + f.name;
            if (alias.empty()) {
                c.src_alias = f.src_alias;
                c.src_col = f.src_col;
            } else {
                c.src_alias = alias;
                c.src_col = f.name;
            }
            c.type = f.type;
            c.class_id = f.class_id;
            c.num_sentinel = f.num_sentinel;
            c.nullable = f.nullable || force_nullable;
            add_field(t, std::move(c));
            info.field_map[fi] = static_cast<int>(t.fields.size()) - 1;
        }
        TField cc;
        cc.name = prefix + "__cnt";
        cc.type = SemanticType::Integer;
        cc.nullable = false;
        cc.is_aux = true;
        add_field(t, std::move(cc));
        info.cnt_copy = static_cast<int>(t.fields.size()) - 1;
        return info;
    }

    /// define-fun mapping input tuple i to result tuple k (attribute
    /// equalities + CNT copy).
    std::string emit_map_fun(const RelationTemplate& t, const RelationTemplate& in,
                             const CopyInfo& info) {
        std::string fname = reg_.fresh(t.name + "_map_" + in.name);
        std::vector<NodePtr> eqs;
        for (size_t fi = 0; fi < in.fields.size(); ++fi) {
            int rf = info.field_map[fi];
            if (rf < 0) continue;
            eqs.push_back(eq(t.field_term(rf, var("x_k")),
                             in.field_term(static_cast<int>(fi), var("x_i"))));
        }
        eqs.push_back(eq(t.field_term(info.cnt_copy, var("x_k")), in.cnt_term(var("x_i"))));
        smt::DefineFun f;
        f.name = fname;
        f.params = {{"x_i", smt::Sort::integer()}, {"x_k", smt::Sort::integer()}};
        f.ret = smt::Sort::boolean();
        f.body = and_(std::move(eqs));
        res_->program.decls.push_back(f);
        return fname;
    }

    /// define-fun setting the copied fields of one input side to null
    /// sentinels with CNT copy = 1 (outer join null extension).
    std::string emit_nullmap_fun(const RelationTemplate& t, const RelationTemplate& in,
                                 const CopyInfo& info, const std::string& tag) {
        std::string fname = reg_.fresh(t.name + "_nullmap_" + tag);
        std::vector<NodePtr> eqs;
        for (size_t fi = 0; fi < in.fields.size(); ++fi) {
            int rf = info.field_map[fi];
            if (rf < 0) continue;
            eqs.push_back(eq(t.field_term(rf, var("x_k")), sentinel_lit(t.fields[rf])));
        }
        eqs.push_back(eq(t.field_term(info.cnt_copy, var("x_k")), ilit(1)));
        smt::DefineFun f;
        f.name = fname;
        f.params = {{"x_k", smt::Sort::integer()}};
        f.ret = smt::Sort::boolean();
        f.body = and_(std::move(eqs));
        res_->program.decls.push_back(f);
        return fname;
    }

    // ---- inner (n-ary) join ----

    void emit_join(const PlanNode& n) {
        RelationTemplate& t = new_template(n.name, n.max_tuples, n.id);
        std::vector<CopyInfo> infos;
        for (size_t i = 0; i < n.inputs.size(); ++i)
            infos.push_back(copy_input_fields(t, input_tmpl(n, i), n.input_aliases[i], false));
        finish_template(t);

        std::vector<std::string> maps;
        for (size_t i = 0; i < n.inputs.size(); ++i)
            maps.push_back(emit_map_fun(t, input_tmpl(n, i), infos[i]));

        const int m = static_cast<int>(n.inputs.size());
        // forward: every valid condition-satisfying combination maps into t
        std::vector<std::string> ivars;
        for (int i = 0; i < m; ++i) ivars.push_back(qvar());
        CondCtx fwd;
        for (int i = 0; i < m; ++i)
            fwd.atoms.push_back({&input_tmpl(n, i), var(ivars[i]), n.input_aliases[i]});
        std::vector<NodePtr> pre;
        for (int i = 0; i < m; ++i) pre.push_back(input_tmpl(n, i).valid(var(ivars[i])));
        for (const auto& c : n.conditions) pre.push_back(compile_cond(fwd, c));
        std::string kv = qvar();
        std::vector<NodePtr> post{t.valid(var(kv))};
        for (int i = 0; i < m; ++i)
            post.push_back(app(maps[i], {var(ivars[i]), var(kv)}));
        NodePtr body = implies(and_(std::move(pre)),
                               exists(kv, 1, t.max_tuples, and_(std::move(post))));
        for (int i = m - 1; i >= 0; --i)
            body = forall(ivars[i], 1, input_tmpl(n, i).max_tuples, body);
        assert_node(t.name + " forward mapping", body);

        // backward: valid result tuples satisfy renamed conditions, take the
        // CNT product, and map back to valid inputs
        std::string kb = qvar();
        CondCtx bwd;
        bwd.atoms.push_back({&t, var(kb), ""});
        std::vector<NodePtr> back;
        for (const auto& c : n.conditions) back.push_back(compile_cond(bwd, c));
        std::vector<NodePtr> prod;
        for (int i = 0; i < m; ++i) prod.push_back(t.field_term(infos[i].cnt_copy, var(kb)));
        back.push_back(eq(t.cnt_term(var(kb)),
                          prod.size() == 1 ? prod[0] : app("*", std::move(prod))));
        for (int i = 0; i < m; ++i) {
            std::string iv = qvar();
            back.push_back(exists(iv, 1, input_tmpl(n, i).max_tuples,
                                  and_({input_tmpl(n, i).valid(var(iv)),
                                        app(maps[i], {var(iv), var(kb)})})));
        }
        assert_node(t.name + " backward mapping",
                    forall(kb, 1, t.max_tuples,
                           implies(t.valid(var(kb)), and_(std::move(back)))));

        emit_dup_blocking(t, t.name);
    }

    // ---- semijoin / anti-semijoin ----

    void emit_semi(const PlanNode& n) {
        bool anti = n.kind == PlanNode::Kind::Anti;
        const RelationTemplate& L = input_tmpl(n, 0);
        const RelationTemplate& R = input_tmpl(n, 1);
        RelationTemplate& t = new_template(n.name, n.max_tuples, n.id);
        CopyInfo linfo = copy_input_fields(t, L, n.input_aliases[0], false);
        finish_template(t);
        std::string lmap = emit_map_fun(t, L, linfo);

        auto cond_ij = [&](const std::string& iv, const std::string& jv) {
            CondCtx ctx;
            ctx.atoms.push_back({&L, var(iv), n.input_aliases[0]});
            ctx.atoms.push_back({&R, var(jv), n.input_aliases[1]});
            std::vector<NodePtr> cs;
            for (const auto& c : n.conditions) cs.push_back(compile_cond(ctx, c));
            return and_(std::move(cs));
        };

        std::string iv = qvar();
        std::string jv = qvar();
        std::string kv = qvar();
        NodePtr match_j =
            exists(jv, 1, R.max_tuples, and_({R.valid(var(jv)), cond_ij(iv, jv)}));
        NodePtr fwd_pre = anti ? and_({L.valid(var(iv)), not_(match_j)})
                               : and_({L.valid(var(iv)), match_j});
        assert_node(t.name + " forward mapping",
                    forall(iv, 1, L.max_tuples,
                           implies(fwd_pre, exists(kv, 1, t.max_tuples,
                                                   and_({t.valid(var(kv)),
                                                         app(lmap, {var(iv), var(kv)})})))));

        std::string kb = qvar();
        std::string ib = qvar();
        std::string jb = qvar();
        NodePtr match_b =
            exists(jb, 1, R.max_tuples, and_({R.valid(var(jb)), cond_ij(ib, jb)}));
        NodePtr witness = exists(
            ib, 1, L.max_tuples,
            and_({L.valid(var(ib)), app(lmap, {var(ib), var(kb)}),
                  anti ? not_(match_b) : match_b}));
        assert_node(t.name + " backward mapping",
                    forall(kb, 1, t.max_tuples,
                           implies(t.valid(var(kb)),
                                   and_({eq(t.cnt_term(var(kb)),
                                            t.field_term(linfo.cnt_copy, var(kb))),
                                         witness}))));
        emit_dup_blocking(t, t.name);
    }

    // ---- outer joins ----

    void emit_outer(const PlanNode& n) {
        const RelationTemplate& L = input_tmpl(n, 0);
        const RelationTemplate& R = input_tmpl(n, 1);
        bool null_left = n.join_type == JoinType::RightOuter ||
                         n.join_type == JoinType::FullOuter;
        bool null_right = n.join_type == JoinType::LeftOuter ||
                          n.join_type == JoinType::FullOuter;
        RelationTemplate& t = new_template(n.name, n.max_tuples, n.id);
        CopyInfo linfo = copy_input_fields(t, L, n.input_aliases[0], null_left);
        CopyInfo rinfo = copy_input_fields(t, R, n.input_aliases[1], null_right);
        finish_template(t);
        std::string lmap = emit_map_fun(t, L, linfo);
        std::string rmap = emit_map_fun(t, R, rinfo);
        std::string lnull = emit_nullmap_fun(t, L, linfo, "left");
        std::string rnull = emit_nullmap_fun(t, R, rinfo, "right");

        auto cond_ij = [&](const std::string& iv, const std::string& jv) {
            CondCtx ctx;
            ctx.atoms.push_back({&L, var(iv), n.input_aliases[0]});
            ctx.atoms.push_back({&R, var(jv), n.input_aliases[1]});
            std::vector<NodePtr> cs;
            for (const auto& c : n.conditions) cs.push_back(compile_cond(ctx, c));
            return and_(std::move(cs));
        };

        // matched combinations (inner-join forward)
        {
            std::string iv = qvar(), jv = qvar(), kv = qvar();
            assert_node(
                t.name + " forward mapping",
                forall(iv, 1, L.max_tuples,
                       forall(jv, 1, R.max_tuples,
                              implies(and_({L.valid(var(iv)), R.valid(var(jv)),
                                            cond_ij(iv, jv)}),
                                      exists(kv, 1, t.max_tuples,
                                             and_({t.valid(var(kv)),
                                                   app(lmap, {var(iv), var(kv)}),
                                                   app(rmap, {var(jv), var(kv)})}))))));
        }
        if (null_right) {
            std::string iv = qvar(), jv = qvar(), kv = qvar();
            NodePtr unmatched = not_(
                exists(jv, 1, R.max_tuples, and_({R.valid(var(jv)), cond_ij(iv, jv)})));
            assert_node(t.name + " forward unmatched left",
                        forall(iv, 1, L.max_tuples,
                               implies(and_({L.valid(var(iv)), unmatched}),
                                       exists(kv, 1, t.max_tuples,
                                              and_({t.valid(var(kv)),
                                                    app(lmap, {var(iv), var(kv)}),
                                                    app(rnull, {var(kv)})})))));
        }
        if (null_left) {
            std::string iv = qvar(), jv = qvar(), kv = qvar();
            NodePtr unmatched = not_(
                exists(iv, 1, L.max_tuples, and_({L.valid(var(iv)), cond_ij(iv, jv)})));
            assert_node(t.name + " forward unmatched right",
                        forall(jv, 1, R.max_tuples,
                               implies(and_({R.valid(var(jv)), unmatched}),
                                       exists(kv, 1, t.max_tuples,
                                              and_({t.valid(var(kv)),
                                                    app(rmap, {var(jv), var(kv)}),
                                                    app(lnull, {var(kv)})})))));
        }

        // backward
        std::string kb = qvar();
        CondCtx bwd;
        bwd.atoms.push_back({&t, var(kb), ""});
        std::vector<NodePtr> bcond;
        for (const auto& c : n.conditions) bcond.push_back(compile_cond(bwd, c));
        std::string ib = qvar(), jb = qvar();
        NodePtr matched_branch =
            and_({and_(bcond),
                  exists(ib, 1, L.max_tuples,
                         and_({L.valid(var(ib)), app(lmap, {var(ib), var(kb)})})),
                  exists(jb, 1, R.max_tuples,
                         and_({R.valid(var(jb)), app(rmap, {var(jb), var(kb)})}))});
        std::vector<NodePtr> branches{matched_branch};
        if (null_right) {
            std::string iu = qvar(), ju = qvar();
            branches.push_back(
                and_({app(rnull, {var(kb)}),
                      exists(iu, 1, L.max_tuples,
                             and_({L.valid(var(iu)), app(lmap, {var(iu), var(kb)}),
                                   not_(exists(ju, 1, R.max_tuples,
                                               and_({R.valid(var(ju)),
                                                     cond_ij(iu, ju)})))}))}));
        }
        if (null_left) {
            std::string iu = qvar(), ju = qvar();
            branches.push_back(
                and_({app(lnull, {var(kb)}),
                      exists(ju, 1, R.max_tuples,
                             and_({R.valid(var(ju)), app(rmap, {var(ju), var(kb)}),
                                   not_(exists(iu, 1, L.max_tuples,
                                               and_({L.valid(var(iu)),
                                                     cond_ij(iu, ju)})))}))}));
        }
        assert_node(t.name + " backward mapping",
                    forall(kb, 1, t.max_tuples,
                           implies(t.valid(var(kb)),
                                   and_({eq(t.cnt_term(var(kb)),
                                            app("*", {t.field_term(linfo.cnt_copy, var(kb)),
                                                      t.field_term(rinfo.cnt_copy,
                                                                   var(kb))})),
                                         or_(std::move(branches))}))));
        emit_dup_blocking(t, t.name);
    }

    // ---- aggregation ----

    void emit_agg(const PlanNode& n) {
        const RelationTemplate& in = input_tmpl(n, 0);
        RelationTemplate& t = new_template(n.name, n.max_tuples, n.id);
        // group-by fields
        std::vector<int> gb_fields;
        std::vector<int> gb_input_fields;
        for (const auto& g : n.group_by) {
            int fi = in.field_by_src(g.item_alias, g.column);
            if (fi < 0) fi = in.field_by_name(g.column);
            if (fi < 0)
                throw ArityMismatch("group-by column not in input: " + g.to_string());
            const TField& f = in.fields[fi];
            TField c;
            c.name = sanitize_symbol(g.item_alias + "__" + g.column);
            c.src_alias = g.item_alias;
            c.src_col = g.column;
            c.type = f.type;
            c.class_id = f.class_id;
            c.num_sentinel = f.num_sentinel;
            c.nullable = f.nullable;
            add_field(t, std::move(c));
            gb_fields.push_back(static_cast<int>(t.fields.size()) - 1);
            gb_input_fields.push_back(fi);
        }
        // aggregate fields
        std::vector<int> agg_arg_field(n.aggs.size(), -1);
        for (size_t ai = 0; ai < n.aggs.size(); ++ai) {
            const AggExpr& a = n.aggs[ai];
            TField f;
            f.name = lower(to_string(a.func)) + "_" +
                     (a.func == AggFunc::CountStar ? "star" : lower(a.arg.column));
            f.type = a.result_type();
            f.nullable = a.result_nullable();
            if (a.func != AggFunc::CountStar) {
                int fi = in.field_by_src(a.arg.item_alias, a.arg.column);
                if (fi < 0) fi = in.field_by_name(a.arg.column);
                if (fi < 0)
                    throw ArityMismatch("aggregate argument not in input: " + a.arg.to_string());
                agg_arg_field[ai] = fi;
                f.class_id = in.fields[fi].class_id;
                if (f.type != SemanticType::String) {
                    Rational s = in.fields[fi].num_sentinel;
                    if (a.func == AggFunc::Sum) {
                        // a sum of bounded values can undershoot the element
                        // sentinel; push it below N*cnt_max*lo
                        Rational lo = f.class_id >= 0 ? cat_.class_domain(f.class_id).lo
                                                      : Rational(0);
                        if (lo < Rational(0)) {
                            Rational reach = lo * Rational(in.max_tuples) *
                                             Rational(opts_.cnt_max);
                            if (!(s < reach)) s = reach - Rational(1);
                        }
                        if (f.type == SemanticType::Integer) s = Rational(s.floor());
                    }
                    f.num_sentinel = s;
                }
            } else {
                f.num_sentinel = Rational(-99999);
            }
            add_field(t, std::move(f));
            t.agg_fields[static_cast<int>(ai)] = static_cast<int>(t.fields.size()) - 1;
        }
        finish_template(t);

        const int N = t.max_tuples;
        const int M = in.max_tuples;

        // ART CNT is 0/1 and groups are unique
        {
            std::string v = qvar();
            assert_node(t.name + " cnt 0/1",
                        forall(v, 1, N,
                               or_({eq(t.cnt_term(var(v)), ilit(0)),
                                    eq(t.cnt_term(var(v)), ilit(1))})));
        }
        for (int a = 1; a <= N; ++a) {
            for (int b = a + 1; b <= N; ++b) {
                std::vector<NodePtr> keq;
                for (int gf : gb_fields)
                    keq.push_back(eq(t.field_term(gf, ilit(a)), t.field_term(gf, ilit(b))));
                assert_node(t.name + " group uniqueness",
                            implies(and_(std::move(keq)),
                                    or_({eq(t.cnt_term(ilit(a)), ilit(0)),
                                         eq(t.cnt_term(ilit(b)), ilit(0))})));
            }
        }

        auto gb_eq = [&](const NodePtr& i, const NodePtr& k) {
            std::vector<NodePtr> eqs;
            for (size_t g = 0; g < gb_fields.size(); ++g)
                eqs.push_back(eq(t.field_term(gb_fields[g], k),
                                 in.field_term(gb_input_fields[g], i)));
            return and_(std::move(eqs));
        };

        // forward / backward group mappings
        {
            std::string iv = qvar(), kv = qvar();
            assert_node(t.name + " forward mapping",
                        forall(iv, 1, M,
                               implies(in.valid(var(iv)),
                                       exists(kv, 1, N,
                                              and_({t.valid(var(kv)),
                                                    gb_eq(var(iv), var(kv))})))));
        }
        {
            std::string kv = qvar(), iv = qvar();
            assert_node(t.name + " backward mapping",
                        forall(kv, 1, N,
                               implies(t.valid(var(kv)),
                                       exists(iv, 1, M,
                                              and_({in.valid(var(iv)),
                                                    gb_eq(var(iv), var(kv))})))));
        }

        // aggregate value constraints
        for (size_t ai = 0; ai < n.aggs.size(); ++ai) {
            const AggExpr& a = n.aggs[ai];
            int af = t.agg_fields.at(static_cast<int>(ai));
            const TField& f = t.fields[af];
            int arg = agg_arg_field[ai];
            std::string kv = qvar();
            NodePtr k = var(kv);

            auto member_cond = [&](const NodePtr& i) {
                std::vector<NodePtr> cs{in.valid(i), gb_eq(i, k)};
                if (a.func != AggFunc::CountStar) {
                    const TField& av = in.fields[arg];
                    if (av.nullable)
                        cs.push_back(not_(isnull_term(av, in.field_term(arg, i))));
                }
                return and_(std::move(cs));
            };

            bool real_arith = f.type == SemanticType::Real;
            auto count_sum = [&]() {
                std::vector<NodePtr> terms;
                for (int i = 1; i <= M; ++i)
                    terms.push_back(ite(member_cond(ilit(i)), in.cnt_term(ilit(i)), ilit(0)));
                return terms.size() == 1 ? terms[0] : app("+", std::move(terms));
            };
            auto value_sum = [&]() {
                std::vector<NodePtr> terms;
                for (int i = 1; i <= M; ++i) {
                    NodePtr v = in.field_term(arg, ilit(i));
                    NodePtr c = in.cnt_term(ilit(i));
                    NodePtr prod;
                    if (real_arith) {
                        if (in.fields[arg].type == SemanticType::Integer)
                            v = app("to_real", {v});
                        prod = app("*", {v, app("to_real", {c})});
                    } else {
                        prod = app("*", {v, c});
                    }
                    terms.push_back(ite(member_cond(ilit(i)), prod,
                                        real_arith ? rlit(Rational(0)) : ilit(0)));
                }
                return terms.size() == 1 ? terms[0] : app("+", std::move(terms));
            };

            NodePtr value_def;
            switch (a.func) {
                case AggFunc::Count:
                case AggFunc::CountStar:
                    value_def = eq(t.field_term(af, k), count_sum());
                    break;
                case AggFunc::Sum:
                    value_def = eq(t.field_term(af, k),
                                   ite(eq(count_sum(), ilit(0)), sentinel_lit(f),
                                       value_sum()));
                    break;
                case AggFunc::Avg: {
                    NodePtr cnt_r = app("to_real", {count_sum()});
                    value_def =
                        eq(t.field_term(af, k),
                           ite(eq(count_sum(), ilit(0)), sentinel_lit(f),
                               app("/", {value_sum(), cnt_r})));
                    break;
                }
                case AggFunc::Min:
                case AggFunc::Max: {
                    bool is_min = a.func == AggFunc::Min;
                    NodePtr fld = t.field_term(af, k);
                    // membership: null or equal to some member value
                    std::string mi = qvar();
                    NodePtr member = exists(
                        mi, 1, M,
                        and_({member_cond(var(mi)), eq(in.field_term(arg, var(mi)), fld)}));
                    NodePtr membership = or_({isnull_term(f, fld), member});
                    // bound: every member value is beyond the extremum
                    std::string bi = qvar();
                    NodePtr mv = in.field_term(arg, var(bi));
                    NodePtr cmp;
                    if (f.type == SemanticType::String) {
                        const EmittedClass& ec = res_->classes.at(f.class_id);
                        cmp = app(is_min ? "<=" : ">=",
                                  {app(ec.map_fn, {fld}), app(ec.map_fn, {mv})});
                    } else {
                        cmp = app(is_min ? "<=" : ">=", {fld, mv});
                    }
                    NodePtr bound =
                        forall(bi, 1, M,
                               implies(member_cond(var(bi)),
                                       and_({not_(isnull_term(f, fld)), cmp})));
                    assert_node(t.name + " " + f.name + " bound",
                                forall(kv, 1, N, implies(t.valid(k), bound)));
                    value_def = membership;
                    break;
                }
            }
            assert_node(t.name + " " + f.name,
                        forall(kv, 1, N, implies(t.valid(k), value_def)));
        }

        // HAVING directly on the aggregation result
        for (const auto& h : n.having) {
            std::string kv = qvar();
            CondCtx ctx;
            ctx.atoms.push_back({&t, var(kv), ""});
            ctx.agg_tmpl = &t;
            ctx.agg_fields = &t.agg_fields;
            ctx.agg_idx = var(kv);
            assert_node(t.name + " having",
                        forall(kv, 1, N, implies(t.valid(var(kv)), compile_cond(ctx, h))));
        }
    }

    // ---- projection (plain and duplicate-removing) ----

    void emit_project(const PlanNode& n) {
        const RelationTemplate& in = input_tmpl(n, 0);
        RelationTemplate& t = new_template(n.name, n.max_tuples, n.id);
        std::vector<int> item_in_field(n.items.size(), -1);
        for (size_t ii = 0; ii < n.items.size(); ++ii) {
            const SelectItem& it = n.items[ii];
            TField f;
            f.name = it.alias;
            if (it.is_aggregate) {
                int fi = in.agg_fields.at(it.agg_index);
                const TField& src = in.fields[fi];
                f.type = src.type;
                f.class_id = src.class_id;
                f.num_sentinel = src.num_sentinel;
                f.nullable = src.nullable;
                item_in_field[ii] = fi;
            } else {
                int fi = in.field_by_src(it.col.item_alias, it.col.column);
                if (fi < 0) fi = in.field_by_name(it.col.column);
                if (fi < 0)
                    throw ArityMismatch("projected column not in input: " + it.col.to_string());
                const TField& src = in.fields[fi];
                f.type = src.type;
                f.class_id = src.class_id;
                f.num_sentinel = src.num_sentinel;
                f.nullable = src.nullable;
                f.src_alias = it.col.item_alias;
                f.src_col = it.col.column;
                item_in_field[ii] = fi;
            }
            add_field(t, std::move(f));
        }
        int dup_field = -1;
        if (n.distinct) {
            TField f;
            f.name = "dupcnt";
            f.type = SemanticType::Integer;
            f.nullable = false;
            f.is_aux = true;
            add_field(t, std::move(f));
            dup_field = static_cast<int>(t.fields.size()) - 1;
        }
        finish_template(t);

        const int N = t.max_tuples;
        const int M = in.max_tuples;
        auto item_eq = [&](const NodePtr& i, const NodePtr& k) {
            std::vector<NodePtr> eqs;
            for (size_t ii = 0; ii < n.items.size(); ++ii)
                eqs.push_back(eq(t.field_term(static_cast<int>(ii), k),
                                 in.field_term(item_in_field[ii], i)));
            return and_(std::move(eqs));
        };

        {
            std::string iv = qvar(), kv = qvar();
            assert_node(t.name + " forward mapping",
                        forall(iv, 1, M,
                               implies(in.valid(var(iv)),
                                       exists(kv, 1, N,
                                              and_({t.valid(var(kv)),
                                                    item_eq(var(iv), var(kv))})))));
        }
        {
            std::string kv = qvar(), iv = qvar();
            assert_node(t.name + " backward mapping",
                        forall(kv, 1, N,
                               implies(t.valid(var(kv)),
                                       exists(iv, 1, M,
                                              and_({in.valid(var(iv)),
                                                    item_eq(var(iv), var(kv))})))));
        }
        // group uniqueness over the projected columns
        for (int a = 1; a <= N; ++a) {
            for (int b = a + 1; b <= N; ++b) {
                std::vector<NodePtr> keq;
                for (size_t ii = 0; ii < n.items.size(); ++ii)
                    keq.push_back(eq(t.field_term(static_cast<int>(ii), ilit(a)),
                                     t.field_term(static_cast<int>(ii), ilit(b))));
                assert_node(t.name + " group uniqueness",
                            implies(and_(std::move(keq)),
                                    or_({eq(t.cnt_term(ilit(a)), ilit(0)),
                                         eq(t.cnt_term(ilit(b)), ilit(0))})));
            }
        }
        // CNT: group count, or 1 with the count kept in dupcnt
        auto group_count = [&](const NodePtr& k) {
            std::vector<NodePtr> terms;
            for (int i = 1; i <= M; ++i)
                terms.push_back(ite(and_({in.valid(ilit(i)), item_eq(ilit(i), k)}),
                                    in.cnt_term(ilit(i)), ilit(0)));
            return terms.size() == 1 ? terms[0] : app("+", std::move(terms));
        };
        {
            std::string kv = qvar();
            if (n.distinct) {
                assert_node(t.name + " distinct cnt",
                            forall(kv, 1, N,
                                   implies(t.valid(var(kv)),
                                           and_({eq(t.cnt_term(var(kv)), ilit(1)),
                                                 eq(t.field_term(dup_field, var(kv)),
                                                    group_count(var(kv)))}))));
            } else {
                assert_node(t.name + " cnt",
                            forall(kv, 1, N,
                                   implies(t.valid(var(kv)),
                                           eq(t.cnt_term(var(kv)), group_count(var(kv))))));
            }
        }
    }

    // ---- set operations ----

    NodePtr setop_formula(SetOpKind kind, const NodePtr& q1, const NodePtr& q2) const {
        auto min2 = [](NodePtr a, NodePtr b) {
            return ite(app("<=", {a, b}), a, b);
        };
        auto max0 = [](NodePtr x) { return ite(app(">=", {x, ilit(0)}), x, ilit(0)); };
        switch (kind) {
            case SetOpKind::UnionAll: return app("+", {q1, q2});
            case SetOpKind::Union: return min2(app("+", {q1, q2}), ilit(1));
            case SetOpKind::IntersectAll: return min2(q1, q2);
            case SetOpKind::Intersect: return min2(min2(q1, q2), ilit(1));
            case SetOpKind::ExceptAll: return max0(app("-", {q1, q2}));
            case SetOpKind::Except: return min2(max0(app("-", {q1, q2})), ilit(1));
            case SetOpKind::SymDiff:
                return ite(app(">=", {app("-", {q1, q2}), ilit(0)}), app("-", {q1, q2}),
                           app("-", {q2, q1}));
        }
        return ilit(0);
    }

    void emit_setop(const PlanNode& n) {
        const RelationTemplate& L = input_tmpl(n, 0);
        const RelationTemplate& R = input_tmpl(n, 1);
        std::vector<int> luser, ruser;
        for (size_t i = 0; i < L.fields.size(); ++i)
            if (!L.fields[i].is_aux && static_cast<int>(i) != L.cnt_index)
                luser.push_back(static_cast<int>(i));
        for (size_t i = 0; i < R.fields.size(); ++i)
            if (!R.fields[i].is_aux && static_cast<int>(i) != R.cnt_index)
                ruser.push_back(static_cast<int>(i));
        if (luser.size() != ruser.size())
            throw SchemaMismatch("set operation branches have different widths");

        RelationTemplate& t = new_template(n.name, n.max_tuples, n.id);
        for (int fi : luser) {
            const TField& f = L.fields[fi];
            TField c;
            c.name = f.name;
            c.type = f.type;
            c.class_id = f.class_id;
            c.num_sentinel = f.num_sentinel;
            c.nullable = true;
            add_field(t, std::move(c));
        }
        TField q1f;
        q1f.name = "q1_cnt";
        q1f.type = SemanticType::Integer;
        q1f.nullable = false;
        q1f.is_aux = true;
        add_field(t, std::move(q1f));
        int q1 = static_cast<int>(t.fields.size()) - 1;
        TField q2f;
        q2f.name = "q2_cnt";
        q2f.type = SemanticType::Integer;
        q2f.nullable = false;
        q2f.is_aux = true;
        add_field(t, std::move(q2f));
        int q2 = static_cast<int>(t.fields.size()) - 1;
        finish_template(t);

        const int N = t.max_tuples;
        auto occ = [&](const NodePtr& k) {
            return or_({app(">", {t.field_term(q1, k), ilit(0)}),
                        app(">", {t.field_term(q2, k), ilit(0)})});
        };
        auto attrs_eq = [&](const RelationTemplate& side, const std::vector<int>& fields,
                            const NodePtr& i, const NodePtr& k) {
            std::vector<NodePtr> eqs;
            for (size_t p = 0; p < fields.size(); ++p)
                eqs.push_back(
                    eq(t.field_term(static_cast<int>(p), k), side.field_term(fields[p], i)));
            return and_(std::move(eqs));
        };

        // forward per side
        {
            std::string iv = qvar(), kv = qvar();
            assert_node(t.name + " forward left",
                        forall(iv, 1, L.max_tuples,
                               implies(L.valid(var(iv)),
                                       exists(kv, 1, N,
                                              and_({occ(var(kv)),
                                                    attrs_eq(L, luser, var(iv), var(kv)),
                                                    eq(t.field_term(q1, var(kv)),
                                                       L.cnt_term(var(iv)))})))));
        }
        {
            std::string iv = qvar(), kv = qvar();
            assert_node(t.name + " forward right",
                        forall(iv, 1, R.max_tuples,
                               implies(R.valid(var(iv)),
                                       exists(kv, 1, N,
                                              and_({occ(var(kv)),
                                                    attrs_eq(R, ruser, var(iv), var(kv)),
                                                    eq(t.field_term(q2, var(kv)),
                                                       R.cnt_term(var(iv)))})))));
        }
        // backward: occupied slots justify their side counts
        {
            std::string kv = qvar(), iv = qvar(), jv = qvar();
            NodePtr lwit = exists(iv, 1, L.max_tuples,
                                  and_({L.valid(var(iv)), attrs_eq(L, luser, var(iv), var(kv)),
                                        eq(t.field_term(q1, var(kv)), L.cnt_term(var(iv)))}));
            NodePtr rwit = exists(jv, 1, R.max_tuples,
                                  and_({R.valid(var(jv)), attrs_eq(R, ruser, var(jv), var(kv)),
                                        eq(t.field_term(q2, var(kv)), R.cnt_term(var(jv)))}));
            assert_node(
                t.name + " backward mapping",
                forall(kv, 1, N,
                       and_({app(">=", {t.field_term(q1, var(kv)), ilit(0)}),
                             app(">=", {t.field_term(q2, var(kv)), ilit(0)}),
                             implies(occ(var(kv)),
                                     and_({or_({eq(t.field_term(q1, var(kv)), ilit(0)), lwit}),
                                           or_({eq(t.field_term(q2, var(kv)), ilit(0)),
                                                rwit})}))})));
        }
        // CNT by kind
        {
            std::string kv = qvar();
            assert_node(t.name + " cnt " + to_string(n.setop),
                        forall(kv, 1, N,
                               eq(t.cnt_term(var(kv)),
                                  ite(occ(var(kv)),
                                      setop_formula(n.setop, t.field_term(q1, var(kv)),
                                                    t.field_term(q2, var(kv))),
                                      ilit(0)))));
        }
        // duplicate blocking over occupied slots
        for (int a = 1; a <= N; ++a) {
            for (int b = a + 1; b <= N; ++b) {
                std::vector<NodePtr> keq;
                for (size_t p = 0; p < luser.size(); ++p)
                    keq.push_back(eq(t.field_term(static_cast<int>(p), ilit(a)),
                                     t.field_term(static_cast<int>(p), ilit(b))));
                assert_node(t.name + " duplicate blocking",
                            implies(and_(std::move(keq)),
                                    or_({not_(occ(ilit(a))), not_(occ(ilit(b)))})));
            }
        }
    }

    // ---- get-values ----

    void register_get_values() {
        for (size_t ti = 0; ti < res_->templates.size(); ++ti) {
            const RelationTemplate& t = res_->templates[ti];
            for (int k = 1; k <= t.max_tuples; ++k) {
                for (size_t fi = 0; fi < t.fields.size(); ++fi) {
                    res_->program.get_values.push_back(
                        smt::serialize_node(t.field_term(static_cast<int>(fi), ilit(k))));
                    res_->value_slots.push_back(
                        {static_cast<int>(ti), k, static_cast<int>(fi)});
                }
            }
        }
    }

    // ---- state ----

    const SchemaCatalog& cat_;
    const QueryTree& q_;
    const BuildPlan& plan_;
    BuilderOptions opts_;
    BuildResult* res_;
    std::unique_ptr<BuildResult> owned_;
    NameRegistry reg_;
    int qvar_ = 0;
    mutable std::map<std::string, ExprPtr> check_cache_;
};

ExprPtr BuilderImpl::parse_check_expr_cached(const TableDef& td, const std::string& text) const {
    std::string key = td.name + "\n" + text;
    auto it = check_cache_.find(key);
    if (it != check_cache_.end()) return it->second;
    ExprPtr e = parse_check_expr(text, td);
    check_cache_[key] = e;
    return e;
}

// ---------------------------------------------------------------------------
// public surface
// ---------------------------------------------------------------------------

ConstraintBuilder::ConstraintBuilder(const SchemaCatalog& catalog, const QueryTree& q,
                                     const BuildPlan& plan, BuilderOptions opts)
    : cat_(catalog), q_(q), plan_(plan), opts_(opts) {}

BuildResult ConstraintBuilder::build() {
    BuilderImpl impl(cat_, q_, plan_, opts_, nullptr);
    impl.build_all();
    return impl.take();
}

smt::NodePtr ConstraintBuilder::nonempty(const BuildResult& r) const {
    const RelationTemplate& t = r.templates[r.root_template];
    std::vector<NodePtr> parts;
    for (int k = 1; k <= t.max_tuples; ++k)
        parts.push_back(app(">", {t.cnt_term(ilit(k)), ilit(0)}));
    return or_(std::move(parts));
}

smt::NodePtr ConstraintBuilder::pin_field(const BuildResult& r, const std::string& tmpl,
                                          int slot, const std::string& field,
                                          const Value& v) const {
    BuilderImpl impl(cat_, q_, plan_, opts_, const_cast<BuildResult*>(&r));
    const RelationTemplate& t = r.tmpl(tmpl);
    int fi = t.field_by_name(field);
    if (fi < 0) throw UnknownColumn(tmpl + "." + field);
    return eq(t.field_term(fi, ilit(slot)), impl.value_term(t.fields[fi], v));
}

namespace {

// shared helper: compile join conditions between the two inputs of a binary
// structured node
NodePtr binary_cond(BuilderImpl& impl, const BuildResult& r, const PlanNode& n,
                    const NodePtr& i, const NodePtr& j) {
    BuilderImpl::CondCtx ctx;
    const RelationTemplate& L = r.templates[r.node_template.at(n.inputs[0])];
    const RelationTemplate& R = r.templates[r.node_template.at(n.inputs[1])];
    ctx.atoms.push_back({&L, i, n.input_aliases[0]});
    ctx.atoms.push_back({&R, j, n.input_aliases[1]});
    std::vector<NodePtr> cs;
    for (const auto& c : n.conditions) cs.push_back(impl.compile_cond(ctx, c));
    return and_(std::move(cs));
}

}  // namespace

smt::NodePtr ConstraintBuilder::unmatched_tuple(const BuildResult& r, int plan_node,
                                                int side) const {
    BuilderImpl impl(cat_, q_, plan_, opts_, const_cast<BuildResult*>(&r));
    const PlanNode& n = plan_.node(plan_node);
    if (n.inputs.size() != 2) throw InvalidLocation("unmatched_tuple needs a binary join");
    const RelationTemplate& X = r.templates[r.node_template.at(n.inputs[side])];
    const RelationTemplate& Y = r.templates[r.node_template.at(n.inputs[1 - side])];
    std::string iv = "u_i", jv = "u_j";
    NodePtr cond = side == 0 ? binary_cond(impl, r, n, var(iv), var(jv))
                             : binary_cond(impl, r, n, var(jv), var(iv));
    return exists(iv, 1, X.max_tuples,
                  and_({X.valid(var(iv)),
                        not_(exists(jv, 1, Y.max_tuples,
                                    and_({Y.valid(var(jv)), cond})))}));
}

smt::NodePtr ConstraintBuilder::unmatched_on_condition(const BuildResult& r, int plan_node,
                                                       int cond_index, bool left_side) const {
    BuilderImpl impl(cat_, q_, plan_, opts_, const_cast<BuildResult*>(&r));
    const PlanNode& n = plan_.node(plan_node);
    if (cond_index < 0 || cond_index >= static_cast<int>(n.conditions.size()))
        throw InvalidLocation("condition index out of range");
    const ExprPtr& cond = n.conditions[cond_index];
    std::vector<ColumnRef> refs;
    collect_columns(cond, refs);
    // locate the two atoms the condition touches
    std::vector<int> touched;
    for (size_t ai = 0; ai < n.inputs.size(); ++ai) {
        const RelationTemplate& t = r.templates[r.node_template.at(n.inputs[ai])];
        for (const auto& ref : refs) {
            bool hit = false;
            if (!n.input_aliases[ai].empty()) {
                hit = ref.item_alias == n.input_aliases[ai] &&
                      t.field_by_name(ref.column) >= 0;
            } else {
                hit = t.field_by_src(ref.item_alias, ref.column) >= 0;
            }
            if (hit) {
                if (touched.empty() || touched.back() != static_cast<int>(ai))
                    touched.push_back(static_cast<int>(ai));
                break;
            }
        }
    }
    if (touched.size() != 2)
        throw InvalidLocation("condition does not relate exactly two inputs");
    int xi = left_side ? touched[0] : touched[1];
    int yi = left_side ? touched[1] : touched[0];
    const RelationTemplate& X = r.templates[r.node_template.at(n.inputs[xi])];
    const RelationTemplate& Y = r.templates[r.node_template.at(n.inputs[yi])];
    std::string iv = "u_i", jv = "u_j";
    BuilderImpl::CondCtx ctx;
    ctx.atoms.push_back({&X, var(iv), n.input_aliases[xi]});
    ctx.atoms.push_back({&Y, var(jv), n.input_aliases[yi]});
    NodePtr c = impl.compile_cond(ctx, cond);
    return exists(iv, 1, X.max_tuples,
                  and_({X.valid(var(iv)),
                        not_(exists(jv, 1, Y.max_tuples, and_({Y.valid(var(jv)), c})))}));
}

smt::NodePtr ConstraintBuilder::group_split(const BuildResult& r, int agg_node,
                                            const std::vector<ColumnRef>& same,
                                            const ColumnRef& differ) const {
    const PlanNode& n = plan_.node(agg_node);
    const RelationTemplate& in = r.templates[r.node_template.at(n.inputs[0])];
    auto find_f = [&](const ColumnRef& c) {
        int fi = in.field_by_src(c.item_alias, c.column);
        if (fi < 0) fi = in.field_by_name(c.column);
        if (fi < 0) throw InvalidLocation("column not in aggregation input: " + c.to_string());
        return fi;
    };
    std::string iv = "g_i", jv = "g_j";
    std::vector<NodePtr> parts{in.valid(var(iv)), in.valid(var(jv)),
                               not_(eq(var(iv), var(jv)))};
    for (const auto& c : same) {
        int fi = find_f(c);
        parts.push_back(eq(in.field_term(fi, var(iv)), in.field_term(fi, var(jv))));
    }
    int df = find_f(differ);
    BuilderImpl impl(cat_, q_, plan_, opts_, const_cast<BuildResult*>(&r));
    const TField& dfield = in.fields[df];
    if (dfield.nullable) {
        parts.push_back(not_(impl.isnull_term(dfield, in.field_term(df, var(iv)))));
        parts.push_back(not_(impl.isnull_term(dfield, in.field_term(df, var(jv)))));
    }
    parts.push_back(not_(eq(in.field_term(df, var(iv)), in.field_term(df, var(jv)))));
    return exists(iv, 1, in.max_tuples,
                  exists(jv, 1, in.max_tuples, and_(std::move(parts))));
}

smt::NodePtr ConstraintBuilder::agg_value_split(const BuildResult& r, int agg_node,
                                                const AggExpr& agg) const {
    const PlanNode& n = plan_.node(agg_node);
    const RelationTemplate& in = r.templates[r.node_template.at(n.inputs[0])];
    int af = in.field_by_src(agg.arg.item_alias, agg.arg.column);
    if (af < 0) af = in.field_by_name(agg.arg.column);
    if (af < 0) throw InvalidLocation("aggregate argument not in input");
    BuilderImpl impl(cat_, q_, plan_, opts_, const_cast<BuildResult*>(&r));
    std::string iv = "g_i", jv = "g_j";
    std::vector<NodePtr> parts{in.valid(var(iv)), in.valid(var(jv)),
                               not_(eq(var(iv), var(jv)))};
    for (const auto& g : n.group_by) {
        int fi = in.field_by_src(g.item_alias, g.column);
        if (fi < 0) fi = in.field_by_name(g.column);
        if (fi >= 0)
            parts.push_back(eq(in.field_term(fi, var(iv)), in.field_term(fi, var(jv))));
    }
    const TField& f = in.fields[af];
    if (f.nullable) {
        parts.push_back(not_(impl.isnull_term(f, in.field_term(af, var(iv)))));
        parts.push_back(not_(impl.isnull_term(f, in.field_term(af, var(jv)))));
    }
    parts.push_back(not_(eq(in.field_term(af, var(iv)), in.field_term(af, var(jv)))));
    if (f.type != SemanticType::String) {
        parts.push_back(app(">", {in.field_term(af, var(iv)), ilit(2)}));
        parts.push_back(app(">", {in.field_term(af, var(jv)), ilit(2)}));
        // single multiplicities keep COUNT distinguishable
        parts.push_back(eq(in.cnt_term(var(iv)), ilit(1)));
        parts.push_back(eq(in.cnt_term(var(jv)), ilit(1)));
    }
    return exists(iv, 1, in.max_tuples,
                  exists(jv, 1, in.max_tuples, and_(std::move(parts))));
}

smt::NodePtr ConstraintBuilder::agg_duplicate_arg(const BuildResult& r, int agg_node,
                                                  const AggExpr& agg, bool positive,
                                                  bool need_third_distinct) const {
    const PlanNode& n = plan_.node(agg_node);
    const RelationTemplate& in = r.templates[r.node_template.at(n.inputs[0])];
    int af = in.field_by_src(agg.arg.item_alias, agg.arg.column);
    if (af < 0) af = in.field_by_name(agg.arg.column);
    if (af < 0) throw InvalidLocation("aggregate argument not in input");
    BuilderImpl impl(cat_, q_, plan_, opts_, const_cast<BuildResult*>(&r));
    const TField& f = in.fields[af];
    std::string iv = "g_i", jv = "g_j", kv = "g_k";
    auto same_group = [&](const std::string& a, const std::string& b) {
        std::vector<NodePtr> eqs;
        for (const auto& g : n.group_by) {
            int fi = in.field_by_src(g.item_alias, g.column);
            if (fi < 0) fi = in.field_by_name(g.column);
            if (fi >= 0) eqs.push_back(eq(in.field_term(fi, var(a)), in.field_term(fi, var(b))));
        }
        return and_(std::move(eqs));
    };
    // duplicate multiplicity either as two equal-valued slots or one slot
    // with CNT >= 2
    std::vector<NodePtr> two_slots{in.valid(var(iv)), in.valid(var(jv)),
                                   not_(eq(var(iv), var(jv))), same_group(iv, jv),
                                   eq(in.field_term(af, var(iv)), in.field_term(af, var(jv)))};
    std::vector<NodePtr> one_slot{in.valid(var(iv)),
                                  app(">=", {in.cnt_term(var(iv)), ilit(2)})};
    if (f.nullable) {
        NodePtr nn = not_(impl.isnull_term(f, in.field_term(af, var(iv))));
        two_slots.push_back(nn);
        one_slot.push_back(nn);
    }
    if (positive && f.type != SemanticType::String) {
        two_slots.push_back(app(">", {in.field_term(af, var(iv)), ilit(0)}));
        one_slot.push_back(app(">", {in.field_term(af, var(iv)), ilit(0)}));
    }
    NodePtr dup = or_({exists(iv, 1, in.max_tuples,
                              exists(jv, 1, in.max_tuples, and_(std::move(two_slots)))),
                       exists(iv, 1, in.max_tuples, and_(std::move(one_slot)))});
    if (!need_third_distinct) return dup;
    std::vector<NodePtr> third{in.valid(var(iv)), in.valid(var(kv)), same_group(iv, kv),
                               not_(eq(in.field_term(af, var(iv)),
                                       in.field_term(af, var(kv))))};
    if (f.nullable)
        third.push_back(not_(impl.isnull_term(f, in.field_term(af, var(kv)))));
    return and_({dup, exists(iv, 1, in.max_tuples,
                             exists(kv, 1, in.max_tuples, and_(std::move(third))))});
}

smt::NodePtr ConstraintBuilder::result_count_at_least(const BuildResult& r, int project_node,
                                                      int nmin) const {
    const PlanNode& n = plan_.node(project_node);
    const RelationTemplate& t = r.tmpl_of_node(project_node);
    std::string kv = "d_k";
    NodePtr counter;
    if (n.distinct) {
        int df = t.field_by_name("dupcnt");
        if (df < 0) throw InvalidLocation("distinct projection without dupcnt");
        counter = t.field_term(df, var(kv));
    } else {
        counter = t.cnt_term(var(kv));
    }
    return exists(kv, 1, t.max_tuples,
                  and_({t.valid(var(kv)), app(">=", {counter, ilit(nmin)})}));
}

smt::NodePtr ConstraintBuilder::setop_diff(const BuildResult& r, int setop_node,
                                           SetOpKind mutated) const {
    const PlanNode& n = plan_.node(setop_node);
    const RelationTemplate& t = r.tmpl_of_node(setop_node);
    BuilderImpl impl(cat_, q_, plan_, opts_, const_cast<BuildResult*>(&r));
    int q1 = t.field_by_name("q1_cnt");
    int q2 = t.field_by_name("q2_cnt");
    std::string kv = "d_k";
    NodePtr occ = or_({app(">", {t.field_term(q1, var(kv)), ilit(0)}),
                       app(">", {t.field_term(q2, var(kv)), ilit(0)})});
    NodePtr f1 = impl.setop_formula(n.setop, t.field_term(q1, var(kv)),
                                    t.field_term(q2, var(kv)));
    NodePtr f2 = impl.setop_formula(mutated, t.field_term(q1, var(kv)),
                                    t.field_term(q2, var(kv)));
    return exists(kv, 1, t.max_tuples, and_({occ, not_(eq(f1, f2))}));
}

}  // namespace qdgen
