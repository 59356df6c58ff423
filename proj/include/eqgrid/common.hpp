// Shared aliases and error types used across the engine.
#ifndef EQGRID_COMMON_HPP
#define EQGRID_COMMON_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace eqgrid {

using Series = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Fault raised on numerical or structural failures that cannot be expressed
// as data (solver breakdowns, dimension mismatches, bad files).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class SolverError : public Error {
public:
    explicit SolverError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace eqgrid

#endif
