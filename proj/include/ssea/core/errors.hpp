#pragma once

#include <stdexcept>
#include <string>

namespace ssea {

// Failure categories; the CLI maps each one to its own exit code.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct PrecisionError : std::runtime_error {
    int required_bits;
    PrecisionError(const std::string& what, int bits) : std::runtime_error(what), required_bits(bits) {}
};

struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string stage_tag, const std::string& what)
        : std::runtime_error(stage_tag + ": " + what), stage(std::move(stage_tag)) {}
};

struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ssea
