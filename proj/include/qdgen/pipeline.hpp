#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "qdgen/catalog.hpp"
#include "qdgen/dataset.hpp"
#include "qdgen/mutation.hpp"
#include "qdgen/plan.hpp"
#include "qdgen/query.hpp"
#include "qdgen/sizer.hpp"

namespace qdgen {

struct GenOptions {
    int cap = 16;  // --max-result-tuples
    std::chrono::milliseconds timeout{120000};
    std::string solver_cmd;  // "" → resolve_solver_command
    std::string out_dir = ".";
    int parallel = 1;
    bool dump_constraints = false;  // keep the pre-unfolding .smt2 next to outputs
    bool equality_join_opt = false;
    bool skip_expired = true;  // reuse earlier datasets that already kill a struct
};

/// Everything derived once per query.
struct PreparedQuery {
    SchemaCatalog catalog;  // per-query copy with equivalence classes applied
    QueryTree original;     // parsed + classified
    QueryTree decorrelated;
    std::string name;
};

PreparedQuery prepare_query(const SchemaCatalog& base_catalog, const std::string& sql,
                            const std::string& name, const GenOptions& opts);

enum class DatasetStatus {
    Generated,       // base dataset produced and oracle-verified non-empty
    Killed,          // mutation dataset produced; oracle confirms the kill
    KilledByEarlier, // struct expired: an earlier dataset already kills it
    NotKilled,       // dataset produced but the mutant agrees (possibly equivalent)
    Unsat,           // constraints unsatisfiable at these bounds
    Timeout,
    Error,
};

std::string to_string(DatasetStatus s);

struct DatasetOutcome {
    std::string name;  // "base" or the mutation description
    DatasetStatus status = DatasetStatus::Error;
    std::string detail;
    std::optional<Dataset> dataset;
    double wall_seconds = 0.0;
    std::string smt2_path;
    std::string model_path;
    std::string sql_path;
};

/// Runs the full generation for one query: the non-empty dataset plus one
/// dataset per mutation structure (subject to expiry), writing artifacts
/// under opts.out_dir. One task's failure never aborts the run.
std::vector<DatasetOutcome> generate_all_datasets(const PreparedQuery& prep,
                                                  const GenOptions& opts);

/// The non-empty dataset only.
DatasetOutcome generate_base_dataset(const PreparedQuery& prep, const GenOptions& opts);

/// Generation for one mutation structure (no expiry logic).
DatasetOutcome generate_mutation_dataset(const PreparedQuery& prep, const MutationStruct& ms,
                                         const GenOptions& opts);

/// Per-dataset constraint program text (pre-unfolding when `folded`).
std::string dump_constraints_text(const PreparedQuery& prep, const GenOptions& opts,
                                  bool folded);

/// Writes report.json + report.txt for a finished run.
void write_report(const PreparedQuery& prep, const std::vector<DatasetOutcome>& outcomes,
                  const GenOptions& opts);

}  // namespace qdgen
