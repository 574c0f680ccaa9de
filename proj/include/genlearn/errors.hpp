#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace genlearn {

// Data-dependent numeric failures (as opposed to caller bugs, which throw
// std::invalid_argument or a subclass of it).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularDesign : NumericError {
    using NumericError::NumericError;
};

struct StepSizeTooLarge : NumericError {
    using NumericError::NumericError;
};

struct DegenerateSpectrum : NumericError {
    using NumericError::NumericError;
};

struct ComponentCollapse : NumericError {
    ComponentCollapse(std::size_t component, const std::string& what)
        : NumericError(what), component(component) {}
    std::size_t component;
};

struct TrainingDivergence : NumericError {
    TrainingDivergence(std::size_t step, const std::string& what)
        : NumericError(what), step(step) {}
    std::size_t step;
};

struct AccuracyFailure : NumericError {
    using NumericError::NumericError;
};

struct NonDifferentiableActivation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ContextTooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidSchedule : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidModel : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace genlearn
