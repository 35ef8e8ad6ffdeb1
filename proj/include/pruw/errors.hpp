#pragma once

#include <stdexcept>
#include <string>

namespace pruw {

// Every failure mode in the library maps to one of these codes so callers
// (and tests) can match on identity instead of message text.
enum class Errc {
    not_prime,
    division_by_zero,
    singular,
    degenerate_constants,
    infeasible_params,
    too_few_databases,
    storage_out_of_range,
    field_too_small,
    shape_mismatch,
    bad_index,
    incomplete,
    too_large,
    corrupt,
    overflow,
    bad_value,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::not_prime: return "not_prime";
        case Errc::division_by_zero: return "division_by_zero";
        case Errc::singular: return "singular";
        case Errc::degenerate_constants: return "degenerate_constants";
        case Errc::infeasible_params: return "infeasible_params";
        case Errc::too_few_databases: return "too_few_databases";
        case Errc::storage_out_of_range: return "storage_out_of_range";
        case Errc::field_too_small: return "field_too_small";
        case Errc::shape_mismatch: return "shape_mismatch";
        case Errc::bad_index: return "bad_index";
        case Errc::incomplete: return "incomplete";
        case Errc::too_large: return "too_large";
        case Errc::corrupt: return "corrupt";
        case Errc::overflow: return "overflow";
        case Errc::bad_value: return "bad_value";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

} // namespace pruw
