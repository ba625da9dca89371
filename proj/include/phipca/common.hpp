#pragma once

#include <stdexcept>
#include <string>

namespace phipca {

// Error classes map 1:1 onto CLI exit codes.
enum class ErrorClass { Parse = 2, Domain = 3, Config = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass c, const std::string& msg) : std::runtime_error(msg), class_(c) {}
    ErrorClass error_class() const noexcept { return class_; }
    int exit_code() const noexcept { return static_cast<int>(class_); }

private:
    ErrorClass class_;
};

struct ParseError : Error {
    explicit ParseError(const std::string& m) : Error(ErrorClass::Parse, m) {}
};

// Numerical/domain violations (nonpositive eigenvalue under an inverse-power
// transform, near-degenerate spectrum, insufficient data in a block, ...).
struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error(ErrorClass::Domain, m) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorClass::Config, m) {}
};

}  // namespace phipca
