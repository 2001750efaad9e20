#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trimstokes {

using Index = std::ptrdiff_t;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments to a construction routine (bad knots, out-of-range degree, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Singular or inconsistent geometry (Jacobian, tangency, primitive definitions).
class GeometryFault : public Error {
public:
    using Error::Error;
};

/// The mesh cannot support the requested construction (e.g. no good neighbor).
class MeshFault : public Error {
public:
    using Error::Error;
};

/// Factorization, eigen-iteration or solve failures.
class SolverFault : public Error {
public:
    using Error::Error;
};

/// Malformed or schema-violating experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace trimstokes
