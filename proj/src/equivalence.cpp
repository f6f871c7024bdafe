#include "qdgen/equivalence.hpp"

#include <filesystem>
#include <fstream>

#include "qdgen/constraint_builder.hpp"
#include "qdgen/decorrelate.hpp"
#include "qdgen/errors.hpp"
#include "qdgen/oracle.hpp"
#include "qdgen/parser.hpp"
#include "qdgen/solver.hpp"

namespace qdgen {

namespace fs = std::filesystem;

EquivalenceVerdict check_equivalence(const SchemaCatalog& base_catalog, const std::string& sql1,
                                     const std::string& sql2, int bound,
                                     const GenOptions& opts) {
    if (bound > opts.cap) throw UnsatisfiableBound("bound exceeds the result-table cap");
    SchemaCatalog cat = base_catalog;
    QueryTree q1 = parse_query(sql1, cat);
    QueryTree q2 = parse_query(sql2, cat);
    {
        auto s1 = output_schema(q1, q1.root, cat);
        auto s2 = output_schema(q2, q2.root, cat);
        if (s1.size() != s2.size())
            throw SchemaMismatch("queries have different result widths");
        for (size_t i = 0; i < s1.size(); ++i)
            if ((s1[i].type == SemanticType::String) != (s2[i].type == SemanticType::String))
                throw SchemaMismatch("result column " + std::to_string(i + 1) +
                                     " types do not align");
    }
    QueryTree d1 = decorrelate(q1, cat);
    QueryTree d2 = decorrelate(q2, cat);

    // merge into one tree: blocks of d1, blocks of d2 shifted, plus a
    // symmetric-difference root over shared base-table arrays
    QueryTree merged = d1.deep_copy();
    int offset = merged.next_id;
    QueryTree shifted = d2.deep_copy_with_offset(offset);
    for (auto& [id, b] : shifted.blocks) merged.blocks.emplace(id, std::move(b));
    merged.next_id = shifted.next_id;
    int symdiff = merged.new_block();
    merged.block(symdiff).setop = SetOpNode{SetOpKind::SymDiff, merged.root, shifted.root};
    merged.root = symdiff;

    compute_equivalence_classes(cat, merged);
    cover_numeric_literals(cat, merged);
    compile_string_conditions(cat, merged);

    BuildPlan plan = lower_to_plan(merged, cat);
    SizerOptions sopts;
    sopts.cap = opts.cap;
    sopts.base_override = bound;
    SizePlan sizes = size_plan(merged, plan, cat, sopts);
    synthesize_missing_domains(cat, sizes.base_sizes);

    BuilderOptions bopts;
    bopts.cnt_max = opts.cap;
    bopts.assert_nonempty = true;  // at least one symmetric-difference tuple
    ConstraintBuilder builder(cat, merged, plan, bopts);
    BuildResult res = builder.build();

    smt::ConstraintProgram unfolded = smt::unfold(res.program);
    std::string script = smt::serialize(unfolded);
    fs::create_directories(opts.out_dir);
    std::string scratch = (fs::path(opts.out_dir) / "check_equiv.smt2").string();
    std::string solver = resolve_solver_command(opts.solver_cmd);
    SolveResult solved = solve(script, opts.timeout, solver, scratch);

    EquivalenceVerdict v;
    v.wall_seconds = solved.wall_seconds;
    if (solved.status == SolveStatus::Timeout) {
        v.timeout = true;
        return v;
    }
    if (solved.status == SolveStatus::Unsat) return v;  // no counterexample within bound

    Dataset witness = extract_dataset(res, solved, cat);
    Oracle oracle(cat);
    if (!oracle.distinguishes(q1, q2, witness))
        throw SolverCrash("solver model is not a witness: oracle evaluates both queries equal");
    v.non_equivalent = true;
    v.witness = std::move(witness);
    return v;
}

}  // namespace qdgen
