#include "driftkill/error.hpp"

namespace driftkill {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::ZeroDt: return "ZeroDt";
        case ErrorKind::EmptyWindow: return "EmptyWindow";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::DegenerateFeature: return "DegenerateFeature";
        case ErrorKind::TooShort: return "TooShort";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::MissingSeed: return "MissingSeed";
        case ErrorKind::WrongLength: return "WrongLength";
        case ErrorKind::Empty: return "Empty";
        case ErrorKind::SequenceMismatch: return "SequenceMismatch";
        case ErrorKind::DivZero: return "DivZero";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::Divergence: return "Divergence";
        case ErrorKind::Format: return "Format";
    }
    return "Unknown";
}

}  // namespace driftkill
