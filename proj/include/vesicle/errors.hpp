#ifndef VESICLE_ERRORS_HPP
#define VESICLE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vesicle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateElementError : public Error {
public:
    using Error::Error;
};

class SelfIntersectionError : public Error {
public:
    using Error::Error;
};

class InvalidShapeError : public Error {
public:
    using Error::Error;
};

class SingularSystemError : public Error {
public:
    using Error::Error;
};

/// Raised when two vesicles touch or a distance witness collapses.
class ContactError : public Error {
public:
    using Error::Error;
};

class NoConvergenceError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Rethrows the library error being handled with `context` prefixed to its
/// message, keeping its dynamic type. Call only from inside a catch block.
[[noreturn]] inline void rethrow_with_context(const std::string& context)
{
    try {
        throw;
    } catch (const DegenerateElementError& e) {
        throw DegenerateElementError(context + ": " + e.what());
    } catch (const SelfIntersectionError& e) {
        throw SelfIntersectionError(context + ": " + e.what());
    } catch (const InvalidShapeError& e) {
        throw InvalidShapeError(context + ": " + e.what());
    } catch (const SingularSystemError& e) {
        throw SingularSystemError(context + ": " + e.what());
    } catch (const ContactError& e) {
        throw ContactError(context + ": " + e.what());
    } catch (const NoConvergenceError& e) {
        throw NoConvergenceError(context + ": " + e.what());
    } catch (const PreconditionError& e) {
        throw PreconditionError(context + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(context + ": " + e.what());
    } catch (const Error& e) {
        throw Error(context + ": " + e.what());
    }
}

} // namespace vesicle

#endif
