#include "semloft/error.hpp"

namespace semloft {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Config: return "config";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Stall: return "stall";
    case ErrorKind::InconsistentEvidence: return "inconsistent-evidence";
    }
    return "unknown";
}

}  // namespace semloft
