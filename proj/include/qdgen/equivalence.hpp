#pragma once

#include <optional>
#include <string>

#include "qdgen/dataset.hpp"
#include "qdgen/pipeline.hpp"
#include "qdgen/query.hpp"

namespace qdgen {

/// Bounded non-equivalence check via the symmetric-difference construction.
/// There is deliberately no "Equivalent" verdict: an unsatisfiable program
/// only means no counterexample exists within the bound.
struct EquivalenceVerdict {
    bool non_equivalent = false;
    bool timeout = false;
    std::optional<Dataset> witness;  // oracle-verified when non_equivalent
    double wall_seconds = 0.0;
};

EquivalenceVerdict check_equivalence(const SchemaCatalog& catalog, const std::string& sql1,
                                     const std::string& sql2, int bound,
                                     const GenOptions& opts);

}  // namespace qdgen
