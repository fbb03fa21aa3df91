#pragma once

#include <stdexcept>
#include <string>

namespace stnn {

// Base for every error the library raises. Each subclass maps to one failure
// category so callers (the CLI in particular) can turn it into an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class PlanningError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t epoch)
        : Error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace stnn
