#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semloft {

/// Stable error taxonomy shared by the library and the CLI error JSON.
enum class ErrorKind {
    Io,
    Format,
    Geometry,
    Config,
    Capacity,
    Stall,
    InconsistentEvidence,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace semloft
