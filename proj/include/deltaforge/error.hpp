#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace deltaforge {

enum class ErrorCode {
  // raster_io
  UnsupportedTiff,
  CorruptTiff,
  MissingGeoreference,
  CorruptGridpack,
  UnsupportedGridpack,
  EmptyBand,
  BadBandSelection,
  BadRaster,
  // classify
  StaleLabels,
  BadK,
  DegenerateTraining,
  ShapeMismatch,
  EmptyEvaluation,
  UnknownClass,
  BadPalette,
  BadLabel,
  // georef
  SingularTransform,
  DegenerateGcps,
  BadZone,
  UnknownCrs,
  // vectorize
  NoSuchComponent,
  // primitive_store
  RejectedGeometry,
  NotFound,
  IllegalTransition,
  IncompatibleSnapshot,
  CorruptSnapshot,
  // osm_export
  UnmappedClass,
  NotGeoreferenced,
  // workflow
  NoModel,
  NoClassMap,
  EmptyExport,
  Busy,
  BadRequest,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `detail` carries the numeric
/// context some errors need (TIFF tag id, byte offset, snapshot line number).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::int64_t> detail = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::int64_t> detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> detail_;
};

}  // namespace deltaforge
