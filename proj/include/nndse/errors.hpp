#pragma once

#include <stdexcept>
#include <string>

namespace nndse {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BoundsError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleTopologyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when SGD produces a non-finite loss; carries the offending epoch.
struct DivergenceError : std::runtime_error {
    int epoch;
    DivergenceError(const std::string& what, int epoch_index)
        : std::runtime_error(what), epoch(epoch_index) {}
};

struct EvaluatorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Proposal loop exhausted its cap without a single acceptance.
struct StallError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResumeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NormalizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace nndse
