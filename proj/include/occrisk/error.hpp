#pragma once

#include <stdexcept>
#include <string>

namespace occrisk {

// Base for every error raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses name the contract that
// was broken.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error { public: using Error::Error; };
class ArityError : public Error { public: using Error::Error; };
class DegenerateInputError : public Error { public: using Error::Error; };
class ContainmentError : public Error { public: using Error::Error; };
class ConfigurationError : public Error { public: using Error::Error; };
class SaturationError : public Error { public: using Error::Error; };
class InfeasibleError : public Error { public: using Error::Error; };
class MergeError : public Error { public: using Error::Error; };

/// Raised while ingesting an intersection document. `entity()` names the
/// offending lane, route or building.
class LoadError : public Error {
public:
    LoadError(const std::string& what, std::string entity)
        : Error(what), entity_(std::move(entity)) {}
    const std::string& entity() const noexcept { return entity_; }

private:
    std::string entity_;
};

}  // namespace occrisk
