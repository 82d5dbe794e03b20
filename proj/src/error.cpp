#include "flock/error.hpp"

namespace flocking {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConstraintViolation: return "ConstraintViolation";
    case ErrorKind::DuplicateSlotId: return "DuplicateSlotId";
    case ErrorKind::UnknownSlot: return "UnknownSlot";
    case ErrorKind::EmptyFormation: return "EmptyFormation";
    case ErrorKind::OutOfWindow: return "OutOfWindow";
    case ErrorKind::DegenerateSpec: return "DegenerateSpec";
    case ErrorKind::InfeasibleYaw: return "InfeasibleYaw";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::SetupConflict: return "SetupConflict";
    case ErrorKind::UnknownAgent: return "UnknownAgent";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::MalformedMessage: return "MalformedMessage";
    case ErrorKind::PortInUse: return "PortInUse";
    case ErrorKind::UnknownFormation: return "UnknownFormation";
    }
    return "Unknown";
}

} // namespace flocking
