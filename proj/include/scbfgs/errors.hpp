#pragma once

#include <stdexcept>
#include <string>

namespace scbfgs {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

/// Evaluation requested outside the objective's open domain.
struct DomainViolation : Error {
    using Error::Error;
};

struct NotDescentDirection : Error {
    using Error::Error;
};

/// Line search exhausted its loop budget; carries the best bracket found.
struct MaxLoopsExceeded : Error {
    MaxLoopsExceeded(const std::string& what, double eta_lo, double eta_hi, int n_loops)
        : Error(what), eta_min(eta_lo), eta_max(eta_hi), loops(n_loops) {}
    double eta_min;
    double eta_max;
    int loops;
};

/// s'y fell below the curvature threshold; the BFGS update would be singular.
struct CurvatureViolation : Error {
    using Error::Error;
};

struct NonFiniteValue : Error {
    using Error::Error;
};

struct SingularTransform : Error {
    using Error::Error;
};

struct HeuristicFailed : Error {
    using Error::Error;
};

/// The self-concordance parameter M is required but absent.
struct MissingM : Error {
    using Error::Error;
};

/// A per-iteration certificate was violated; carries the offending iteration.
struct CertificateViolation : Error {
    CertificateViolation(const std::string& what, int iteration)
        : Error(what), t(iteration) {}
    int t;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace scbfgs
