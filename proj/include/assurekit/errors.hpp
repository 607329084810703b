#pragma once

#include <stdexcept>
#include <string>

namespace assurekit {

/// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed model/property/query text. Carries a 1-based source position.
struct SyntaxError : Error {
    int line = 0;
    int column = 0;
    SyntaxError(const std::string& what, int line_, int col_)
        : Error("syntax error at " + std::to_string(line_) + ":" + std::to_string(col_) +
                ": " + what),
          line(line_), column(col_) {}
};

struct DuplicateName : Error {
    using Error::Error;
};

struct UnboundIdentifier : Error {
    using Error::Error;
};

struct KindMismatch : Error {
    using Error::Error;
};

struct UnknownConstant : Error {
    using Error::Error;
};

struct ProbabilityOutOfRange : Error {
    using Error::Error;
};

struct DivisionByZero : Error {
    using Error::Error;
};

/// Structural model defect found outside the parser (domains, ownership, ...).
struct ModelError : Error {
    using Error::Error;
};

struct NondeterministicState : Error {
    using Error::Error;
};

struct ConflictingAssignment : Error {
    using Error::Error;
};

struct StateSpaceLimitExceeded : Error {
    using Error::Error;
};

struct NonTerminatingChain : Error {
    using Error::Error;
};

struct UnsupportedPattern : Error {
    using Error::Error;
};

struct AtomResolutionError : Error {
    using Error::Error;
};

struct NumericalNonConvergence : Error {
    using Error::Error;
};

struct PathCapExceeded : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

struct CountInconsistency : Error {
    using Error::Error;
};

struct InvalidWeights : Error {
    using Error::Error;
};

struct InvalidParams : Error {
    using Error::Error;
};

struct InvalidCounts : Error {
    using Error::Error;
};

struct MixedKinds : Error {
    using Error::Error;
};

struct MixedRequirements : Error {
    using Error::Error;
};

struct CorruptLedger : Error {
    using Error::Error;
};

struct ZeroOpportunities : Error {
    using Error::Error;
};

}  // namespace assurekit
