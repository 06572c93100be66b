#pragma once

#include <stdexcept>
#include <string>

namespace scpt {

// Base class for every error the library raises on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- data / shape errors ---
struct ShapeMismatch : Error { using Error::Error; };
struct NonFiniteInput : Error { using Error::Error; };
struct TooShort : Error { using Error::Error; };
struct EmptyBand : Error { using Error::Error; };
struct EmptyClip : Error { using Error::Error; };
struct ClipTooLong : Error { using Error::Error; };
struct TooFewSubjects : Error { using Error::Error; };
struct EmptyEvalSet : Error { using Error::Error; };
struct InvalidLabel : Error { using Error::Error; };
struct RankOutOfRange : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct AllZero : Error { using Error::Error; };

// --- numerical failures ---
struct NonFinite : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };

// --- file / config errors ---
struct CorruptFile : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// CLI usage problems (mapped to exit code 1).
struct UsageError : Error { using Error::Error; };

}  // namespace scpt
