#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace agentnet {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when an operation that requires a DAG meets a cycle. Carries a
// witness walk ending where it started, e.g. {0, 1, 0}.
struct CycleError : std::runtime_error {
    explicit CycleError(std::vector<std::uint32_t> w)
        : std::runtime_error("cycle detected"), witness(std::move(w)) {}
    std::vector<std::uint32_t> witness;
};

struct InsufficientDataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace agentnet
