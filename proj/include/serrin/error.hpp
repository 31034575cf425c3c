#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace serrin {

enum class ErrorKind {
    invalid_input,
    domain,
    degenerate_argument,
    inadmissible,
    unsupported_regime,
    no_root,
    out_of_range,
    singular,
    invalid_domain,
    solver_failure,
    inconsistent_model,
    not_applicable,
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate_argument: return "degenerate-argument";
    case ErrorKind::inadmissible: return "inadmissible";
    case ErrorKind::unsupported_regime: return "unsupported-regime";
    case ErrorKind::no_root: return "no-root";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::singular: return "singular-evaluation";
    case ErrorKind::invalid_domain: return "invalid-domain";
    case ErrorKind::solver_failure: return "solver-failure";
    case ErrorKind::inconsistent_model: return "inconsistent-model";
    case ErrorKind::not_applicable: return "not-applicable";
    }
    return "unknown";
}

/// Every failure in the library is reported through this exception; `kind()`
/// is what callers (notably the CLI exit-code mapping) dispatch on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace serrin
