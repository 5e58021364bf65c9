#pragma once

#include <stdexcept>
#include <string>

namespace itr {

// Base for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data, schema or configuration. The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

// Numerical failure: non-convergence, infeasibility, singular designs.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace itr
