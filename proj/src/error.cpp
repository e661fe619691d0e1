#include "deltaforge/error.hpp"

namespace deltaforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedTiff: return "UnsupportedTiff";
    case ErrorCode::CorruptTiff: return "CorruptTiff";
    case ErrorCode::MissingGeoreference: return "MissingGeoreference";
    case ErrorCode::CorruptGridpack: return "CorruptGridpack";
    case ErrorCode::UnsupportedGridpack: return "UnsupportedGridpack";
    case ErrorCode::EmptyBand: return "EmptyBand";
    case ErrorCode::BadBandSelection: return "BadBandSelection";
    case ErrorCode::BadRaster: return "BadRaster";
    case ErrorCode::StaleLabels: return "StaleLabels";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::DegenerateTraining: return "DegenerateTraining";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::BadPalette: return "BadPalette";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::DegenerateGcps: return "DegenerateGcps";
    case ErrorCode::BadZone: return "BadZone";
    case ErrorCode::UnknownCrs: return "UnknownCrs";
    case ErrorCode::NoSuchComponent: return "NoSuchComponent";
    case ErrorCode::RejectedGeometry: return "RejectedGeometry";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::IncompatibleSnapshot: return "IncompatibleSnapshot";
    case ErrorCode::CorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::UnmappedClass: return "UnmappedClass";
    case ErrorCode::NotGeoreferenced: return "NotGeoreferenced";
    case ErrorCode::NoModel: return "NoModel";
    case ErrorCode::NoClassMap: return "NoClassMap";
    case ErrorCode::EmptyExport: return "EmptyExport";
    case ErrorCode::Busy: return "Busy";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::int64_t> detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(detail) {}

}  // namespace deltaforge
