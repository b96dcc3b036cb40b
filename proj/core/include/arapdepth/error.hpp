#pragma once

#include <stdexcept>
#include <string>

namespace arapdepth {

/// Failure categories. The CLI maps these onto its exit codes.
enum class ErrorCode {
  kDomain,                // argument outside an operation's domain
  kConfiguration,         // invalid configuration or camera model
  kParse,                 // malformed input file
  kIo,                    // file could not be opened / written
  kDegenerateTriple,      // three points (nearly) collinear
  kGrazingRay,            // ray (nearly) parallel to a plane
  kBehindCamera,          // intersection behind the camera
  kDegenerateSuperpixel,  // superpixel too small or collinear for a triple
  kNumericalFailure,      // NaN/Inf during optimization
  kUnusablePrior,         // reference depth missing where it is required
  kEmptyEvaluation,       // metric over zero pixels
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Error raised by a file reader; carries the byte offset at which parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, long long byte_offset = -1)
      : Error(ErrorCode::kParse, byte_offset >= 0
                                     ? message + " (at byte " + std::to_string(byte_offset) + ")"
                                     : message),
        byte_offset_(byte_offset) {}

  long long byte_offset() const noexcept { return byte_offset_; }

 private:
  long long byte_offset_;
};

/// Optimizer produced a non-finite value; `iteration` is where it was detected.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& message, int iteration)
      : Error(ErrorCode::kNumericalFailure,
              message + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace arapdepth
