#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qc {

// Every library error carries the module and operation that raised it.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string op, const std::string& msg)
        : std::runtime_error("[" + module + "::" + op + "] " + msg),
          module_(std::move(module)), op_(std::move(op)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& op() const noexcept { return op_; }

private:
    std::string module_;
    std::string op_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class PoleProximityError : public Error {
public:
    PoleProximityError(std::string module, std::string op, const std::string& msg,
                       std::complex<double> where)
        : Error(std::move(module), std::move(op), msg), where_(where) {}
    std::complex<double> where() const noexcept { return where_; }

private:
    std::complex<double> where_;
};

class DegeneracyError : public Error {
public:
    using Error::Error;
};

// Raised when one of the standing network assumptions (numbered 1..6) fails.
class AssumptionViolation : public Error {
public:
    AssumptionViolation(std::string module, std::string op, const std::string& msg, int assumption)
        : Error(std::move(module), std::move(op), msg), assumption_(assumption) {}
    int assumption() const noexcept { return assumption_; }

private:
    int assumption_;
};

class NumericalFailure : public Error {
public:
    using Error::Error;
};

// A root of the contour target lies too close to the contour.
class NearBoundaryError : public NumericalFailure {
public:
    NearBoundaryError(std::string module, std::string op, const std::string& msg,
                      std::complex<double> where)
        : NumericalFailure(std::move(module), std::move(op), msg), where_(where) {}
    std::complex<double> where() const noexcept { return where_; }

private:
    std::complex<double> where_;
};

}  // namespace qc
