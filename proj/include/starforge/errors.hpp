#pragma once

#include <stdexcept>
#include <string>

namespace starforge {

// All engine failures derive from EngineError so callers can catch one type.
// Subclasses carry the condition they report in their name; messages add
// the offending values.
struct EngineError : std::runtime_error {
    explicit EngineError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonInvertible : EngineError {
    explicit NonInvertible(const std::string& msg = "constant term is zero")
        : EngineError("NonInvertible: " + msg) {}
};

struct ZeroElement : EngineError {
    explicit ZeroElement(const std::string& msg = "degree of zero is infinite")
        : EngineError("ZeroElement: " + msg) {}
};

struct NonDivisible : EngineError {
    explicit NonDivisible(const std::string& msg)
        : EngineError("NonDivisible: " + msg) {}
};

struct ArityMismatch : EngineError {
    explicit ArityMismatch(const std::string& msg)
        : EngineError("ArityMismatch: " + msg) {}
};

struct ZerothOrderViolation : EngineError {
    explicit ZerothOrderViolation(const std::string& msg)
        : EngineError("ZerothOrderViolation: " + msg) {}
};

struct NonConstantZerothOrder : EngineError {
    explicit NonConstantZerothOrder(const std::string& msg)
        : EngineError("NonConstantZerothOrder: " + msg) {}
};

struct IncompatibleConnection : EngineError {
    explicit IncompatibleConnection(const std::string& msg)
        : EngineError("IncompatibleConnection: " + msg) {}
};

struct NotDeltaFlat : EngineError {
    explicit NotDeltaFlat(const std::string& msg)
        : EngineError("NotDeltaFlat: " + msg) {}
};

struct FiltrationViolation : EngineError {
    explicit FiltrationViolation(const std::string& msg)
        : EngineError("FiltrationViolation: " + msg) {}
};

struct NoConvergence : EngineError {
    explicit NoConvergence(const std::string& msg)
        : EngineError("NoConvergence: " + msg) {}
};

struct NotAntisymmetric : EngineError {
    explicit NotAntisymmetric(const std::string& msg)
        : EngineError("NotAntisymmetric: " + msg) {}
};

struct DegeneratePi1 : EngineError {
    explicit DegeneratePi1(const std::string& msg)
        : EngineError("DegeneratePi1: " + msg) {}
};

struct NotClosed : EngineError {
    explicit NotClosed(const std::string& msg)
        : EngineError("NotClosed: " + msg) {}
};

struct NonConstantCocycle : EngineError {
    explicit NonConstantCocycle(const std::string& msg)
        : EngineError("NonConstantCocycle: " + msg) {}
};

struct DegenerateOmega : EngineError {
    explicit DegenerateOmega(const std::string& msg)
        : EngineError("DegenerateOmega: " + msg) {}
};

struct ParseError : EngineError {
    explicit ParseError(const std::string& msg)
        : EngineError("ParseError: " + msg) {}
};

struct ProfileError : EngineError {
    explicit ProfileError(const std::string& msg)
        : EngineError("ProfileError: " + msg) {}
};

}  // namespace starforge
