#pragma once

#include <stdexcept>
#include <string>

namespace safesched {

/// Invalid route specification, distribution or configuration.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Internal inconsistency in the transition semantics (a caller broke a
/// precondition that the semantics rely on).
class SemanticsError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Enumeration exceeded the configured state cap.
class StateExplosion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation requires a safe state / schedulable system and did not get one.
class UnsafeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace safesched
