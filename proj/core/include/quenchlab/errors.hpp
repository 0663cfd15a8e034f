#pragma once

#include <stdexcept>
#include <string>

namespace quenchlab {

enum class ErrorKind {
    usage,
    validation,
    domain,
    numerical,
    accuracy,
    stiffness,
    singular_integrand,
    degenerate_fit,
    budget,
    corrupt_file,
    unsupported_version,
};

const char* to_string(ErrorKind kind) noexcept;

/// Process exit code used by the CLI for each error kind.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) {
        throw Error(kind, what);
    }
}

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::usage: return "usage";
        case ErrorKind::validation: return "validation";
        case ErrorKind::domain: return "domain";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::accuracy: return "accuracy";
        case ErrorKind::stiffness: return "stiffness";
        case ErrorKind::singular_integrand: return "singular_integrand";
        case ErrorKind::degenerate_fit: return "degenerate_fit";
        case ErrorKind::budget: return "budget";
        case ErrorKind::corrupt_file: return "corrupt_file";
        case ErrorKind::unsupported_version: return "unsupported_version";
    }
    return "unknown";
}

inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::usage:
        case ErrorKind::validation:
        case ErrorKind::domain:
            return 2;
        case ErrorKind::numerical:
        case ErrorKind::accuracy:
        case ErrorKind::stiffness:
        case ErrorKind::singular_integrand:
        case ErrorKind::degenerate_fit:
            return 3;
        case ErrorKind::budget:
            return 4;
        case ErrorKind::corrupt_file:
        case ErrorKind::unsupported_version:
            return 5;
    }
    return 1;
}

}  // namespace quenchlab
