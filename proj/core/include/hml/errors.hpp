#ifndef HML_ERRORS_HPP
#define HML_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hml {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The edge relation of a label hierarchy contains a cycle.
struct CyclicHierarchy : Error {
  using Error::Error;
};

/// A node identifier does not exist in the hierarchy.
struct UnknownNode : Error {
  using Error::Error;
};

/// Matrix dimensions do not match what an operation expects.
struct ShapeError : Error {
  using Error::Error;
};

/// Checkpoint/dataset dimensions are incompatible.
struct DimensionMismatch : Error {
  using Error::Error;
};

/// An ensemble is too small for the requested statistic.
struct InsufficientEnsemble : Error {
  using Error::Error;
};

/// A metric is undefined for the given inputs (e.g. AP with no positives).
struct NotDefined : Error {
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
struct ParseError : Error {
  int line = 0;
  ParseError(const std::string& msg, int line_no = 0)
      : Error(line_no > 0 ? msg + " (line " + std::to_string(line_no) + ")" : msg),
        line(line_no) {}
};

/// Invalid configuration value or flag combination.
struct ConfigError : Error {
  using Error::Error;
};

/// Training produced a non-finite loss.
struct TrainDiverged : Error {
  using Error::Error;
};

}  // namespace hml

#endif  // HML_ERRORS_HPP
