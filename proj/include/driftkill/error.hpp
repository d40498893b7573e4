#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace driftkill {

enum class ErrorKind {
    InvalidInput,
    NonConvergence,
    ZeroDt,
    EmptyWindow,
    SchemaMismatch,
    ParseError,
    NonMonotonicTime,
    EmptyInput,
    DegenerateFeature,
    TooShort,
    DimensionMismatch,
    LengthMismatch,
    EmptyDataset,
    MissingSeed,
    WrongLength,
    Empty,
    SequenceMismatch,
    DivZero,
    InvalidSpec,
    Divergence,
    Format,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so callers (the CLI, the
// Python bindings) can map it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace driftkill
