#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace adapod {

/// Base for all structured errors raised by the library.
class Error : public std::runtime_error
{
public:
    explicit Error(const std::string & what) : std::runtime_error(what) {}
};

/// Invalid mesh input or a violated nesting / root-compatibility requirement.
class MeshError : public Error
{
public:
    explicit MeshError(const std::string & what) : Error(what) {}
};

/// Linear or nonlinear solver failure. `residual` holds the last residual norm
/// when it is meaningful (NaN otherwise).
class SolverError : public Error
{
public:
    SolverError(const std::string & what, double residual)
        : Error(what), residual_(residual) {}
    explicit SolverError(const std::string & what)
        : Error(what), residual_(std::numeric_limits<double>::quiet_NaN()) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

class ConfigError : public Error
{
public:
    explicit ConfigError(const std::string & what) : Error(what) {}
};

class IoError : public Error
{
public:
    IoError(const std::string & path, const std::string & what)
        : Error(path + ": " + what), path_(path) {}

    const std::string & path() const { return path_; }

private:
    std::string path_;
};

} // namespace adapod
