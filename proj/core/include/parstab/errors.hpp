#pragma once

#include <stdexcept>
#include <string>

namespace parstab {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Point outside the box, or not on the control face.
class DomainError : public Error {
public:
    using Error::Error;
};

// Search radius too small to guarantee the requested eigenvalues.
class EnumerationError : public Error {
public:
    using Error::Error;
};

// Multiplicity pattern or list length not usable by the design.
class SpectrumError : public Error {
public:
    using Error::Error;
};

// Zero denominator in a lifting coefficient.
class AdmissibilityError : public Error {
public:
    explicit AdmissibilityError(const std::string& what, int index = -1)
        : Error(what), index_(index) {}
    int index() const { return index_; }

private:
    int index_;
};

class SynthesisError : public Error {
public:
    using Error::Error;
};

class SensorPlacementError : public SynthesisError {
public:
    SensorPlacementError(const std::string& what, int index)
        : SynthesisError("sensor-placement: " + what), index_(index) {}
    int index() const { return index_; }

private:
    int index_;
};

class CertificationError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& pointer, const std::string& what)
        : Error(pointer + ": " + what), pointer_(pointer), message_(what) {}
    const std::string& pointer() const { return pointer_; }
    const std::string& message() const { return message_; }

private:
    std::string pointer_;
    std::string message_;
};

}  // namespace parstab
