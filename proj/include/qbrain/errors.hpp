#pragma once

#include <stdexcept>
#include <string>

namespace qbrain {

// Base for every error raised by the library. Each subclass maps onto one
// failure category; the CLI translates categories into exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class NumericalError : public Error { public: using Error::Error; };
class InvariantError : public Error { public: using Error::Error; };
class RangeError : public Error { public: using Error::Error; };
class DataError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class FixtureError : public Error { public: using Error::Error; };

// Malformed binary container; carries the byte offset where decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace qbrain
