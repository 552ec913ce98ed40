#pragma once

#include <stdexcept>
#include <string>

namespace fracrte {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument or input violated a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// An iterative solver failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A hypothesis of the stability theory (det R != 0, r(0,v) = 0, ...) does not hold.
class HypothesisError : public Error {
public:
    using Error::Error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

}  // namespace fracrte
