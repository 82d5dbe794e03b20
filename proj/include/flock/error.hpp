#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flocking {

enum class ErrorKind {
    ParseError,
    ConstraintViolation,
    DuplicateSlotId,
    UnknownSlot,
    EmptyFormation,
    OutOfWindow,
    DegenerateSpec,
    InfeasibleYaw,
    CountMismatch,
    SetupConflict,
    UnknownAgent,
    EmptyWindow,
    IoError,
    MalformedMessage,
    PortInUse,
    UnknownFormation,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries one of the kinds above so that
// callers (CLI exit codes, command replies) can map it without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace flocking
