#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace magconf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! Bad curve/collar parameters, or a point outside the chart's domain.
class ChartError : public Error {
public:
    using Error::Error;
};

//! The magnetic field is not finite at the evaluation point.
class FieldSingular : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double estimated_error)
        : Error(what), estimated_error_(estimated_error) {}
    double estimated_error() const { return estimated_error_; }

private:
    double estimated_error_;
};

//! Syntax error in a field expression; `position` is a 0-based character offset.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class ScenarioError : public Error {
public:
    using Error::Error;
};

} // namespace magconf
