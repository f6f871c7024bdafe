#include "qdgen/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "qdgen/constraint_builder.hpp"
#include "qdgen/decorrelate.hpp"
#include "qdgen/errors.hpp"
#include "qdgen/oracle.hpp"
#include "qdgen/parser.hpp"
#include "qdgen/solver.hpp"
#include "qdgen/vendor_json.hpp"

namespace qdgen {

namespace fs = std::filesystem;

std::string to_string(DatasetStatus s) {
    switch (s) {
        case DatasetStatus::Generated: return "generated";
        case DatasetStatus::Killed: return "killed";
        case DatasetStatus::KilledByEarlier: return "killed-by-earlier";
        case DatasetStatus::NotKilled: return "not-killed (possibly equivalent at bound)";
        case DatasetStatus::Unsat: return "unsat";
        case DatasetStatus::Timeout: return "timeout";
        case DatasetStatus::Error: return "error";
    }
    return "?";
}

PreparedQuery prepare_query(const SchemaCatalog& base_catalog, const std::string& sql,
                            const std::string& name, const GenOptions& opts) {
    PreparedQuery p;
    p.catalog = base_catalog;
    p.name = name;
    p.original = parse_query(sql, p.catalog);
    DecorrelateOptions dopts;
    dopts.equality_join_optimization = opts.equality_join_opt;
    p.decorrelated = decorrelate(p.original, p.catalog, dopts);
    compute_equivalence_classes(p.catalog, p.decorrelated);
    return p;
}

namespace {

/// Replaces the op of a comparison condition (where/having/join) with the
/// region probe operator.
CompareOp region_op(Region r) {
    switch (r) {
        case Region::Lt: return CompareOp::Lt;
        case Region::Eq: return CompareOp::Eq;
        case Region::Gt: return CompareOp::Gt;
    }
    return CompareOp::Eq;
}

void set_condition_op(QueryTree& t, const NodePath& loc, CompareOp op) {
    QueryBlock& b = t.block(loc.block_id);
    ExprPtr* target = nullptr;
    if (loc.target == NodePath::Target::WhereCondition)
        target = &b.where.at(loc.index).expr;
    else if (loc.target == NodePath::Target::HavingCondition)
        target = &b.having.at(loc.index).expr;
    else if (loc.target == NodePath::Target::JoinCondition) {
        FromPtr j = resolve_join_node(t, loc);
        target = &j->conditions.at(loc.index);
    }
    if (!target || (*target)->kind != Expr::Kind::Compare)
        throw InvalidLocation(loc.to_string());
    ExprPtr c = clone(*target);
    const_cast<Expr&>(*c).op = op;
    *target = c;
}

/// Finds the plan node for a from-tree join location. The planner preserves
/// block ids and from-node identity through flattening, so we look the node
/// up by re-walking the variant tree.
int find_structured_node(const BuildPlan& plan, const QueryTree& tree, const NodePath& loc) {
    QueryTree& mutable_tree = const_cast<QueryTree&>(tree);
    FromPtr j = resolve_join_node(mutable_tree, loc);
    // structured nodes are Semi/Anti/Outer plan nodes of the same block,
    // matched by condition identity rendering
    std::string want;
    for (const auto& c : j->conditions) want += to_string(c) + ";";
    for (const auto& n : plan.nodes) {
        if (n.block_id != loc.block_id) continue;
        if (n.kind != PlanNode::Kind::Semi && n.kind != PlanNode::Kind::Anti &&
            n.kind != PlanNode::Kind::Outer)
            continue;
        std::string have;
        for (const auto& c : n.conditions) have += to_string(c) + ";";
        if (have == want) return n.id;
    }
    throw InvalidLocation("no structured plan node for " + loc.to_string());
}

int find_agg_node(const BuildPlan& plan, int block) {
    for (const auto& n : plan.nodes)
        if (n.kind == PlanNode::Kind::Agg && n.block_id == block) return n.id;
    throw InvalidLocation("no aggregation node in block " + std::to_string(block));
}

int find_project_node(const BuildPlan& plan, int block) {
    for (auto it = plan.nodes.rbegin(); it != plan.nodes.rend(); ++it)
        if (it->kind == PlanNode::Kind::Project && it->block_id == block) return it->id;
    throw InvalidLocation("no projection node in block " + std::to_string(block));
}

int find_setop_node(const BuildPlan& plan, int block) {
    for (const auto& n : plan.nodes)
        if (n.kind == PlanNode::Kind::SetOp && n.block_id == block) return n.id;
    throw InvalidLocation("no set operation node in block " + std::to_string(block));
}

/// Finds the n-ary join node holding a condition that came from the given
/// from-tree join node, by matching the condition's rendered text.
std::pair<int, int> find_inner_condition(const BuildPlan& plan, const QueryTree& tree,
                                         const NodePath& loc) {
    QueryTree& mutable_tree = const_cast<QueryTree&>(tree);
    FromPtr j = resolve_join_node(mutable_tree, loc);
    std::string want = to_string(j->conditions.at(loc.index));
    for (const auto& n : plan.nodes) {
        if (n.block_id != loc.block_id || n.kind != PlanNode::Kind::Join) continue;
        for (size_t ci = 0; ci < n.conditions.size(); ++ci)
            if (to_string(n.conditions[ci]) == want) return {n.id, static_cast<int>(ci)};
    }
    throw InvalidLocation("condition not found in plan: " + loc.to_string());
}

struct RunArtifacts {
    SolveResult solved;
    BuildResult build;
    SchemaCatalog catalog;
    SizePlan sizes;
    smt::ConstraintProgram folded;
};

/// Builds and solves one task; returns the solver artifacts.
RunArtifacts run_task(const PreparedQuery& prep, const GenOptions& opts, QueryTree variant,
                      bool assert_nonempty, int base_bump,
                      const std::function<smt::NodePtr(ConstraintBuilder&, const BuildResult&,
                                                       const BuildPlan&, const QueryTree&)>& hook,
                      const std::string& scratch_base) {
    RunArtifacts art;
    art.catalog = prep.catalog;
    compute_equivalence_classes(art.catalog, variant);
    cover_numeric_literals(art.catalog, variant);
    compile_string_conditions(art.catalog, variant);
    BuildPlan plan = lower_to_plan(variant, art.catalog);
    SizerOptions sopts;
    sopts.cap = opts.cap;
    sopts.base_bump = base_bump;
    art.sizes = size_plan(variant, plan, art.catalog, sopts);
    synthesize_missing_domains(art.catalog, art.sizes.base_sizes);
    BuilderOptions bopts;
    bopts.cnt_max = opts.cap;
    bopts.assert_nonempty = assert_nonempty;
    ConstraintBuilder builder(art.catalog, variant, plan, bopts);
    art.build = builder.build();
    if (hook) {
        smt::NodePtr extra = hook(builder, art.build, plan, variant);
        art.build.program.assertions.emplace_back("mutation target", extra);
    }
    art.folded = art.build.program;
    smt::ConstraintProgram unfolded = smt::unfold(art.build.program);
    std::string script = smt::serialize(unfolded);
    std::string solver = resolve_solver_command(opts.solver_cmd);
    art.solved = solve(script, opts.timeout, solver, scratch_base + ".smt2");
    std::ofstream(scratch_base + ".out") << art.solved.raw_output;
    return art;
}

}  // namespace

DatasetOutcome generate_base_dataset(const PreparedQuery& prep, const GenOptions& opts) {
    DatasetOutcome out;
    out.name = "base";
    fs::create_directories(fs::path(opts.out_dir) / prep.name);
    std::string base = (fs::path(opts.out_dir) / prep.name / "base").string();
    out.smt2_path = base + ".smt2";
    out.model_path = base + ".out";
    auto t0 = std::chrono::steady_clock::now();
    try {
        RunArtifacts art = run_task(prep, opts, prep.decorrelated.deep_copy(), true, 0, {}, base);
        out.wall_seconds = art.solved.wall_seconds;
        if (art.solved.status == SolveStatus::Timeout) {
            out.status = DatasetStatus::Timeout;
            return out;
        }
        if (art.solved.status == SolveStatus::Unsat) {
            out.status = DatasetStatus::Unsat;
            out.detail = "bounds too small? sizes: " + art.sizes.to_json();
            return out;
        }
        Dataset d = extract_dataset(art.build, art.solved, art.catalog);
        d.query_name = prep.name;
        d.kind = "non-empty";
        Oracle oracle(art.catalog);
        auto violations = oracle.check_integrity(d);
        if (!violations.empty()) {
            out.status = DatasetStatus::Error;
            out.detail = "integrity violation: " + violations[0].table + ": " +
                         violations[0].detail;
            return out;
        }
        EvalRelation res = oracle.evaluate(prep.original, d);
        if (res.empty()) {
            out.status = DatasetStatus::Error;
            out.detail = "oracle found an empty result on the generated dataset";
            return out;
        }
        out.sql_path = base + ".sql";
        std::ofstream(out.sql_path) << d.to_insert_sql(art.catalog);
        d.write_csv_dir(art.catalog, base + "_csv");
        out.dataset = std::move(d);
        out.status = DatasetStatus::Generated;
    } catch (const std::exception& e) {
        out.status = DatasetStatus::Error;
        out.detail = e.what();
    }
    auto t1 = std::chrono::steady_clock::now();
    if (out.wall_seconds == 0.0)
        out.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    return out;
}

namespace {

std::string safe_filename(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                c == '.')
                   ? c
                   : '_';
    return out;
}

}  // namespace

DatasetOutcome generate_mutation_dataset(const PreparedQuery& prep, const MutationStruct& ms,
                                         const GenOptions& opts) {
    DatasetOutcome out;
    out.name = ms.describe();
    fs::create_directories(fs::path(opts.out_dir) / prep.name);
    std::string base =
        (fs::path(opts.out_dir) / prep.name / safe_filename(out.name)).string();
    out.smt2_path = base + ".smt2";
    out.model_path = base + ".out";
    auto t0 = std::chrono::steady_clock::now();
    try {
        // generation variant + optional extra assertion
        QueryTree variant = prep.decorrelated.deep_copy();
        bool assert_nonempty = true;
        int base_bump = 0;
        std::function<smt::NodePtr(ConstraintBuilder&, const BuildResult&, const BuildPlan&,
                                   const QueryTree&)>
            hook;

        switch (ms.type) {
            case MutationType::SelectionComparison:
            case MutationType::HavingComparison:
                set_condition_op(variant, ms.location, region_op(ms.region));
                break;
            case MutationType::NonEquiJoinRelop:
                set_condition_op(variant, ms.location, region_op(ms.region));
                break;
            case MutationType::StringLikeClass:
            case MutationType::NullCondition:
            case MutationType::SubqueryConnective:
                variant = mutate(prep.decorrelated, ms);
                break;
            case MutationType::SubqueryMissing: {
                FromPtr j = resolve_join_node(variant, ms.location);
                j->join_type =
                    j->join_type == JoinType::Semi ? JoinType::AntiSemi : JoinType::Semi;
                base_bump = 1;
                break;
            }
            case MutationType::JoinType: {
                variant = mutate(prep.decorrelated, ms);
                NodePath loc = ms.location;
                int side = ms.unmatched_side;
                base_bump = 1;
                hook = [loc, side](ConstraintBuilder& cb, const BuildResult& r,
                                   const BuildPlan& plan, const QueryTree& tree) {
                    return cb.unmatched_tuple(r, find_structured_node(plan, tree, loc), side);
                };
                break;
            }
            case MutationType::JoinConditionMissing: {
                NodePath loc = ms.location;
                base_bump = 1;
                hook = [loc](ConstraintBuilder& cb, const BuildResult& r,
                             const BuildPlan& plan, const QueryTree& tree) {
                    auto [node, ci] = find_inner_condition(plan, tree, loc);
                    return cb.unmatched_on_condition(r, node, ci, true);
                };
                break;
            }
            case MutationType::GroupByMissing: {
                NodePath loc = ms.location;
                base_bump = 1;
                hook = [loc](ConstraintBuilder& cb, const BuildResult& r,
                             const BuildPlan& plan, const QueryTree& tree) {
                    const QueryBlock& b = tree.block(loc.block_id);
                    std::vector<ColumnRef> same;
                    for (size_t g = 0; g < b.group_by.size(); ++g)
                        if (static_cast<int>(g) != loc.index) same.push_back(b.group_by[g]);
                    return cb.group_split(r, find_agg_node(plan, loc.block_id), same,
                                          b.group_by.at(loc.index));
                };
                break;
            }
            case MutationType::GroupByExtra: {
                NodePath loc = ms.location;
                ColumnRef extra = ms.extra_column;
                base_bump = 1;
                hook = [loc, extra](ConstraintBuilder& cb, const BuildResult& r,
                                    const BuildPlan& plan, const QueryTree& tree) {
                    const QueryBlock& b = tree.block(loc.block_id);
                    return cb.group_split(r, find_agg_node(plan, loc.block_id), b.group_by,
                                          extra);
                };
                break;
            }
            case MutationType::AggregateFunction: {
                NodePath loc = ms.location;
                base_bump = 1;
                hook = [loc](ConstraintBuilder& cb, const BuildResult& r,
                             const BuildPlan& plan, const QueryTree& tree) {
                    const QueryBlock& b = tree.block(loc.block_id);
                    return cb.agg_value_split(r, find_agg_node(plan, loc.block_id),
                                              b.aggregates.at(loc.index));
                };
                break;
            }
            case MutationType::AggregateDistinct: {
                NodePath loc = ms.location;
                bool pos = true;
                bool third = false;
                {
                    const QueryBlock& b = prep.decorrelated.block(loc.block_id);
                    const AggExpr& a = b.aggregates.at(loc.index);
                    third = a.func == AggFunc::Avg;
                    pos = a.func != AggFunc::Count;
                }
                base_bump = third ? 2 : 1;
                hook = [loc, pos, third](ConstraintBuilder& cb, const BuildResult& r,
                                         const BuildPlan& plan, const QueryTree& tree) {
                    const QueryBlock& b = tree.block(loc.block_id);
                    return cb.agg_duplicate_arg(r, find_agg_node(plan, loc.block_id),
                                                b.aggregates.at(loc.index), pos, third);
                };
                break;
            }
            case MutationType::SelectDistinct: {
                NodePath loc = ms.location;
                base_bump = 1;
                hook = [loc](ConstraintBuilder& cb, const BuildResult& r,
                             const BuildPlan& plan, const QueryTree& tree) {
                    (void)tree;
                    return cb.result_count_at_least(r, find_project_node(plan, loc.block_id),
                                                    2);
                };
                break;
            }
            case MutationType::SetOpKindMutation: {
                NodePath loc = ms.location;
                SetOpKind mut = ms.new_setop;
                assert_nonempty = false;
                hook = [loc, mut](ConstraintBuilder& cb, const BuildResult& r,
                                  const BuildPlan& plan, const QueryTree& tree) {
                    (void)tree;
                    return cb.setop_diff(r, find_setop_node(plan, loc.block_id), mut);
                };
                break;
            }
        }

        RunArtifacts art =
            run_task(prep, opts, std::move(variant), assert_nonempty, base_bump, hook, base);
        out.wall_seconds = art.solved.wall_seconds;
        if (art.solved.status == SolveStatus::Timeout) {
            out.status = DatasetStatus::Timeout;
            return out;
        }
        if (art.solved.status == SolveStatus::Unsat) {
            out.status = DatasetStatus::Unsat;
            out.detail = "possibly equivalent at these bounds";
            return out;
        }
        Dataset d = extract_dataset(art.build, art.solved, art.catalog);
        d.query_name = prep.name;
        d.kind = out.name;
        Oracle oracle(art.catalog);
        auto violations = oracle.check_integrity(d);
        if (!violations.empty()) {
            out.status = DatasetStatus::Error;
            out.detail = "integrity violation: " + violations[0].detail;
            return out;
        }
        QueryTree mutant = mutate(prep.decorrelated, ms);
        bool killed = oracle.distinguishes(prep.decorrelated, mutant, d);
        out.sql_path = base + ".sql";
        std::ofstream(out.sql_path) << d.to_insert_sql(art.catalog);
        d.write_csv_dir(art.catalog, base + "_csv");
        out.dataset = std::move(d);
        out.status = killed ? DatasetStatus::Killed : DatasetStatus::NotKilled;
    } catch (const std::exception& e) {
        out.status = DatasetStatus::Error;
        out.detail = e.what();
    }
    auto t1 = std::chrono::steady_clock::now();
    if (out.wall_seconds == 0.0)
        out.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    return out;
}

std::vector<DatasetOutcome> generate_all_datasets(const PreparedQuery& prep,
                                                  const GenOptions& opts) {
    std::vector<DatasetOutcome> outcomes;
    outcomes.push_back(generate_base_dataset(prep, opts));

    std::vector<MutationStruct> structs =
        collect_mutation_structs(prep.decorrelated, prep.catalog);
    std::vector<DatasetOutcome> mouts(structs.size());
    Oracle oracle(prep.catalog);

    std::mutex mu;
    std::vector<const Dataset*> produced;
    if (outcomes[0].dataset) produced.push_back(&*outcomes[0].dataset);

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= structs.size()) break;
            MutationStruct ms = structs[i];
            // expiry: an earlier dataset may already kill this struct
            if (opts.skip_expired) {
                bool expired = false;
                QueryTree mutant;
                try {
                    mutant = mutate(prep.decorrelated, ms);
                    std::lock_guard<std::mutex> lk(mu);
                    for (const Dataset* d : produced) {
                        if (oracle.distinguishes(prep.decorrelated, mutant, *d)) {
                            expired = true;
                            break;
                        }
                    }
                } catch (const std::exception&) {
                    expired = false;
                }
                if (expired) {
                    DatasetOutcome o;
                    o.name = ms.describe();
                    o.status = DatasetStatus::KilledByEarlier;
                    mouts[i] = std::move(o);
                    continue;
                }
            }
            DatasetOutcome o = generate_mutation_dataset(prep, ms, opts);
            {
                std::lock_guard<std::mutex> lk(mu);
                if (o.dataset) produced.push_back(&*o.dataset);
            }
            mouts[i] = std::move(o);
        }
    };
    int nthreads = std::max(1, opts.parallel);
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& o : mouts) outcomes.push_back(std::move(o));
    return outcomes;
}

std::string dump_constraints_text(const PreparedQuery& prep, const GenOptions& opts,
                                  bool folded) {
    SchemaCatalog cat = prep.catalog;
    QueryTree variant = prep.decorrelated.deep_copy();
    compute_equivalence_classes(cat, variant);
    cover_numeric_literals(cat, variant);
    compile_string_conditions(cat, variant);
    BuildPlan plan = lower_to_plan(variant, cat);
    SizerOptions sopts;
    sopts.cap = opts.cap;
    SizePlan sizes = size_plan(variant, plan, cat, sopts);
    synthesize_missing_domains(cat, sizes.base_sizes);
    BuilderOptions bopts;
    bopts.cnt_max = opts.cap;
    ConstraintBuilder builder(cat, variant, plan, bopts);
    BuildResult res = builder.build();
    if (folded) return smt::serialize(res.program);
    return smt::serialize(smt::unfold(res.program));
}

void write_report(const PreparedQuery& prep, const std::vector<DatasetOutcome>& outcomes,
                  const GenOptions& opts) {
    nlohmann::json j;
    j["query"] = prep.name;
    j["sql"] = to_sql(prep.original);
    std::set<std::string> seen_datasets;
    int killed = 0, total_mutation_targets = 0;
    for (const auto& o : outcomes) {
        nlohmann::json jo;
        jo["name"] = o.name;
        jo["status"] = to_string(o.status);
        if (!o.detail.empty()) jo["detail"] = o.detail;
        jo["wall_seconds"] = o.wall_seconds;
        if (!o.sql_path.empty()) jo["dataset"] = o.sql_path;
        if (o.dataset) {
            std::string canon = o.dataset->canonical_text(prep.catalog);
            jo["duplicate_of_earlier"] = !seen_datasets.insert(canon).second;
        }
        if (o.name != "base") {
            ++total_mutation_targets;
            if (o.status == DatasetStatus::Killed ||
                o.status == DatasetStatus::KilledByEarlier)
                ++killed;
        }
        j["datasets"].push_back(jo);
    }
    j["mutation_targets"] = total_mutation_targets;
    j["killed"] = killed;
    fs::path dir = fs::path(opts.out_dir) / prep.name;
    fs::create_directories(dir);
    std::ofstream(dir / "manifest.json") << j.dump(2) << "\n";
    // human-readable table
    std::ofstream txt(dir / "report.txt");
    txt << prep.name << "\n";
    for (const auto& o : outcomes) {
        char line[512];
        std::snprintf(line, sizeof line, "  %-60s %-40s %7.2fs\n", o.name.c_str(),
                      to_string(o.status).c_str(), o.wall_seconds);
        txt << line;
    }
    txt << "  mutation targets: " << total_mutation_targets << ", killed or expired: " << killed
        << "\n";
}

}  // namespace qdgen
