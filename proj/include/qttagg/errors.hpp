#pragma once

#include <stdexcept>
#include <string>

namespace qttagg {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a size or bond-dimension cap is exceeded. `step` is the
// pipeline step that tripped the cap, or -1 when not inside a pipeline.
class ResourceLimitError : public std::runtime_error {
public:
    ResourceLimitError(const std::string& what, long bond = 0, int step = -1)
        : std::runtime_error(what), bond_(bond), step_(step) {}
    long bond() const { return bond_; }
    int step() const { return step_; }
    ResourceLimitError with_step(int step) const {
        return ResourceLimitError(what(), bond_, step);
    }

private:
    long bond_;
    int step_;
};

class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceFailure : public NumericFailure {
public:
    ConvergenceFailure(const std::string& what, double achieved)
        : NumericFailure(what), achieved_(achieved) {}
    double achieved() const { return achieved_; }

private:
    double achieved_;
};

}  // namespace qttagg
