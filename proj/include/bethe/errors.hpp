#pragma once

#include <stdexcept>
#include <string>

namespace bethe {

/// Invalid user-supplied configuration: bad law tables, grids that cannot hold
/// the data, malformed config files. The CLI maps this to exit status 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Caller violated an operation precondition (mismatched grids or pool sizes,
/// path longer than the tree, ...).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// A tail certificate could not be propagated because the hyperbolic
/// contraction is unavailable (|w| r >= 1).
class CertificateBreakdown : public std::runtime_error {
public:
    explicit CertificateBreakdown(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bethe
