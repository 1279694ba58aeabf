#pragma once

#include <stdexcept>
#include <string>

namespace kahan {

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidStructure : std::invalid_argument {
    explicit InvalidStructure(const std::string& what) : std::invalid_argument(what) {}
};

struct SingularMatrix : std::runtime_error {
    explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

/// The step's linear system is singular: x lies on det(I - h/2 f'(x)) = 0.
struct SingularStep : std::runtime_error {
    explicit SingularStep(const std::string& what) : std::runtime_error(what) {}
};

struct SingularSet : std::runtime_error {
    explicit SingularSet(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct StepSizeUnderflow : std::runtime_error {
    explicit StepSizeUnderflow(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateFit : std::invalid_argument {
    explicit DegenerateFit(const std::string& what) : std::invalid_argument(what) {}
};

struct InsufficientSamples : std::invalid_argument {
    explicit InsufficientSamples(const std::string& what) : std::invalid_argument(what) {}
};

struct UnsupportedParameter : std::invalid_argument {
    explicit UnsupportedParameter(const std::string& what) : std::invalid_argument(what) {}
};

namespace detail {

inline void require_dim(long got, long want, const char* what) {
    if (got != want) {
        throw DimensionMismatch(std::string(what) + ": expected dimension " + std::to_string(want) +
                                ", got " + std::to_string(got));
    }
}

}  // namespace detail
}  // namespace kahan
