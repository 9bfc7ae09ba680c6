#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace omitlab {

/// Bad input: malformed configuration, violated preconditions, unknown keys.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Per-point numerical condition. Grid operations record these in-place;
/// single-point operations raise them as NumericalError.
enum class Flag {
    Ok,
    DegenerateDenominator,
    NearZeroTransmission,
    StepTooLarge,
    SingularSystem,
    IllConditionedFit,
    BlowUp,
    StepFailure,
    RootRefinement,
    Invalid,
};

inline std::string_view to_string(Flag f) {
    switch (f) {
    case Flag::Ok: return "ok";
    case Flag::DegenerateDenominator: return "degenerate_denominator";
    case Flag::NearZeroTransmission: return "near_zero_transmission";
    case Flag::StepTooLarge: return "step_too_large";
    case Flag::SingularSystem: return "singular_system";
    case Flag::IllConditionedFit: return "ill_conditioned_fit";
    case Flag::BlowUp: return "blow_up";
    case Flag::StepFailure: return "step_failure";
    case Flag::RootRefinement: return "root_refinement";
    case Flag::Invalid: return "invalid";
    }
    return "unknown";
}

/// True for conditions that make a result unusable (as opposed to a
/// well-defined but noteworthy value).
inline bool is_failure(Flag f) {
    return f == Flag::DegenerateDenominator || f == Flag::SingularSystem
        || f == Flag::BlowUp || f == Flag::StepFailure;
}

class NumericalError : public std::runtime_error {
public:
    NumericalError(Flag flag, const std::string& what)
        : std::runtime_error(what), flag_(flag) {}

    Flag flag() const noexcept { return flag_; }

private:
    Flag flag_;
};

} // namespace omitlab
