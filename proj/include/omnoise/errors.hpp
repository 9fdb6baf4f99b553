#pragma once

#include <stdexcept>
#include <string>

namespace omnoise {

/// Bad user input: violated invariant, malformed config, empty range.
class invalid_parameter : public std::invalid_argument {
public:
    explicit invalid_parameter(const std::string& what)
        : std::invalid_argument(what) {}
};

/// Config file failed schema validation; carries the offending field name.
class schema_error : public invalid_parameter {
public:
    schema_error(const std::string& field, const std::string& what)
        : invalid_parameter("config field '" + field + "': " + what),
          field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Numerical failure: non-convergence, singular system, instability.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what)
        : std::runtime_error(what) {}
};

} // namespace omnoise
