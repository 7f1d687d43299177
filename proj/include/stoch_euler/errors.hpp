#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stoch_euler {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (non-square input, mismatched sizes).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A parameter outside its admissible range (h <= 0, k = 0, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A theorem hypothesis is violated, e.g. an eigenvalue with nonnegative real part.
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// Evaluation outside the time range covered by a path.
class RangeError : public Error {
public:
    using Error::Error;
};

/// A problem lacks an optional field that the requested dynamics need.
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Two evaluation routes disagree beyond their stated tolerance.
class NumericConsistencyError : public Error {
public:
    using Error::Error;
};

/// Too few usable rows for a regression.
class FitError : public Error {
public:
    using Error::Error;
};

/// Iterative method did not converge. Carries whatever was computed before giving up.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<std::complex<double>> partial = {})
        : Error(what), partial_(std::move(partial)) {}

    [[nodiscard]] const std::vector<std::complex<double>>& partial() const noexcept { return partial_; }

private:
    std::vector<std::complex<double>> partial_;
};

/// A trajectory left the representable range (non-finite or above the blow-up threshold).
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t jump_index, double time)
        : Error(what), jump_index_(jump_index), time_(time) {}

    [[nodiscard]] std::size_t jump_index() const noexcept { return jump_index_; }
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    std::size_t jump_index_;
    double time_;
};

}  // namespace stoch_euler
