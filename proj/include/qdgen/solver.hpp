#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdgen/constraint_builder.hpp"
#include "qdgen/dataset.hpp"
#include "qdgen/smt_ir.hpp"

namespace qdgen {

enum class SolveStatus { Sat, Unsat, Timeout };

struct SolveResult {
    SolveStatus status = SolveStatus::Timeout;
    /// Raw term→value pairs parsed from the get-value response.
    std::vector<std::pair<std::string, std::string>> values;
    std::string raw_output;
    double wall_seconds = 0.0;
};

/// Resolution order: explicit argument, QDGEN_SOLVER env var, `z3` on PATH,
/// the bundled runner. Throws SolverCrash when nothing is available.
std::string resolve_solver_command(const std::string& explicit_cmd = "");

/// Runs `<command> <script-file>` with an external timeout and parses the
/// check-sat verdict plus get-value response. A solver that answers
/// `unknown` is reported as Timeout (it gave up); a missing verdict raises
/// SolverCrash.
SolveResult solve(const std::string& script_text, std::chrono::milliseconds timeout,
                  const std::string& solver_cmd, const std::string& scratch_file);

/// Typed model view: every tuple slot of every template, decoded.
struct ExtractedModel {
    /// templates[i] rows: slot-major, one Value per field (sentinels decoded
    /// to SQL NULL).
    std::map<std::string, std::vector<std::vector<Value>>> slots;
};

ExtractedModel decode_model(const BuildResult& build, const SolveResult& solved);

/// Valid tuples of one template with CNT multiplicities expanded; columns
/// restricted to user fields.
std::vector<std::vector<Value>> expanded_valid_rows(const BuildResult& build,
                                                    const ExtractedModel& model,
                                                    const std::string& tmpl);

/// Builds the concrete dataset from the base-table arrays of a model:
/// CNT=0 slots dropped, CNT=k expanded to k rows, sentinels as NULL.
Dataset extract_dataset(const BuildResult& build, const SolveResult& solved,
                        const SchemaCatalog& catalog);

/// Light SMT-LIB2 well-formedness check: balanced parens, non-empty
/// top-level forms, every head symbol from the v2.6 command set.
bool smtlib2_well_formed(const std::string& script, std::string* error = nullptr);

}  // namespace qdgen
