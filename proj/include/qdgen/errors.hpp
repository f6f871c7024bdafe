#pragma once

#include <stdexcept>
#include <string>

namespace qdgen {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& m) : std::runtime_error("parse error: " + m) {}
};

struct UnsupportedFeature : std::runtime_error {
    explicit UnsupportedFeature(const std::string& m)
        : std::runtime_error("unsupported feature: " + m) {}
};

struct DanglingReference : std::runtime_error {
    explicit DanglingReference(const std::string& m)
        : std::runtime_error("dangling reference: " + m) {}
};

struct UnknownColumn : std::runtime_error {
    explicit UnknownColumn(const std::string& m) : std::runtime_error("unknown column: " + m) {}
};

struct TypeClash : std::runtime_error {
    explicit TypeClash(const std::string& m) : std::runtime_error("type clash: " + m) {}
};

struct UnsupportedCorrelation : std::runtime_error {
    explicit UnsupportedCorrelation(const std::string& m)
        : std::runtime_error("unsupported correlation: " + m) {}
};

struct UnsatisfiableBound : std::runtime_error {
    explicit UnsatisfiableBound(const std::string& m)
        : std::runtime_error("unsatisfiable size bound: " + m) {}
};

struct ArityMismatch : std::runtime_error {
    explicit ArityMismatch(const std::string& m) : std::runtime_error("arity mismatch: " + m) {}
};

struct SchemaMismatch : std::runtime_error {
    explicit SchemaMismatch(const std::string& m) : std::runtime_error("schema mismatch: " + m) {}
};

struct UnknownAggregate : std::runtime_error {
    explicit UnknownAggregate(const std::string& m)
        : std::runtime_error("unknown aggregate: " + m) {}
};

struct UnsatisfiablePattern : std::runtime_error {
    explicit UnsatisfiablePattern(const std::string& m)
        : std::runtime_error("unsatisfiable pattern: " + m) {}
};

struct SolverCrash : std::runtime_error {
    explicit SolverCrash(const std::string& m) : std::runtime_error("solver crash: " + m) {}
};

struct ModelGap : std::runtime_error {
    explicit ModelGap(const std::string& m) : std::runtime_error("model gap: " + m) {}
};

struct InvalidLocation : std::runtime_error {
    explicit InvalidLocation(const std::string& m)
        : std::runtime_error("invalid mutation location: " + m) {}
};

}  // namespace qdgen
