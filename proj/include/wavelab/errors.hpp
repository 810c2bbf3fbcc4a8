#pragma once

#include <stdexcept>
#include <string>

namespace wavelab {

// Base of every numerical or parameter failure raised by the library.
// The CLI maps ValidationError to exit code 2 and everything else to 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class PositivityError : public Error {
public:
    using Error::Error;
};

class DegenerateRayError : public Error {
public:
    using Error::Error;
};

class StiffnessError : public Error {
public:
    using Error::Error;
};

class ConditionNotCertifiedError : public Error {
public:
    using Error::Error;
};

class CausticError : public Error {
public:
    CausticError(const std::string& what, double largest_valid_window)
        : Error(what), largest_valid_window(largest_valid_window) {}
    double largest_valid_window;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class StabilityError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DivergentNormError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace wavelab
