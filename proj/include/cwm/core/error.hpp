#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cwm {

/// Machine-readable error categories shared by every module.
enum class Errc {
  kSyntax,
  kSchema,
  kInvariant,
  kRange,
  kUnknownId,
  kInvalidParam,
  kPlacement,
  kParse,
  kUnknownKeyword,
  kHorizon,
  kTransport,
  kBudgetExceeded,
  kInvalidReply,
  kDimensionMismatch,
  kTooSmall,
  kTooShort,
  kRangeMismatch,
  kUnknownShape,
  kUnknownColor,
  kFrameCountMismatch,
  kUnsupportedIntervention,
  kConsistencyRejected,
  kConfig,
  kBind,
  kIo,
  kNotFound,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kSyntax: return "SyntaxError";
    case Errc::kSchema: return "SchemaError";
    case Errc::kInvariant: return "InvariantError";
    case Errc::kRange: return "RangeError";
    case Errc::kUnknownId: return "UnknownId";
    case Errc::kInvalidParam: return "InvalidParam";
    case Errc::kPlacement: return "PlacementError";
    case Errc::kParse: return "ParseError";
    case Errc::kUnknownKeyword: return "UnknownKeyword";
    case Errc::kHorizon: return "HorizonError";
    case Errc::kTransport: return "TransportError";
    case Errc::kBudgetExceeded: return "BudgetExceeded";
    case Errc::kInvalidReply: return "InvalidReply";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kTooSmall: return "TooSmall";
    case Errc::kTooShort: return "TooShort";
    case Errc::kRangeMismatch: return "RangeMismatch";
    case Errc::kUnknownShape: return "UnknownShape";
    case Errc::kUnknownColor: return "UnknownColor";
    case Errc::kFrameCountMismatch: return "FrameCountMismatch";
    case Errc::kUnsupportedIntervention: return "UnsupportedIntervention";
    case Errc::kConsistencyRejected: return "ConsistencyRejected";
    case Errc::kConfig: return "ConfigError";
    case Errc::kBind: return "BindError";
    case Errc::kIo: return "IoError";
    case Errc::kNotFound: return "NotFound";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return errc_name(code_); }

 private:
  Errc code_;
};

/// Missing or mistyped field; `path()` is a JSON-pointer-like location.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(Errc::kSchema, path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Positioned failure while reading text (intervention DSL, documents).
class ParseError : public Error {
 public:
  ParseError(Errc code, std::size_t offset, const std::string& message)
      : Error(code, "at offset " + std::to_string(offset) + ": " + message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A pipeline failure tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, Errc code, const std::string& message)
      : Error(code, stage + ": " + message), stage_(std::move(stage)), detail_(message) {}

  const std::string& stage() const noexcept { return stage_; }
  /// The message without the stage prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string stage_;
  std::string detail_;
};

}  // namespace cwm
