#ifndef LFP_ERRORS_HPP_
#define LFP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace lfp {

/// Base class for every error this library throws on its own behalf.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A text input violated its line-oriented format. Carries the 1-based line.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& detail)
      : Error(path + ":" + std::to_string(line) + ": " + detail),
        path_(path),
        line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

/// A point exactly at the sensor origin has no direction.
class DegeneratePointError : public Error {
 public:
  using Error::Error;
};

/// CAD model with fewer points than a surface can be made of.
class InsufficientModelError : public Error {
 public:
  using Error::Error;
};

/// CAD model with zero extent on some axis.
class DegenerateModelError : public Error {
 public:
  using Error::Error;
};

/// Geometry that the requested operation is undefined for,
/// e.g. a box containing the sensor origin.
class InvalidGeometryError : public Error {
 public:
  using Error::Error;
};

/// Binary file whose length is not a whole number of records.
class TruncatedFileError : public Error {
 public:
  using Error::Error;
};

class MissingCalibrationError : public Error {
 public:
  using Error::Error;
};

class InvalidCalibrationError : public Error {
 public:
  using Error::Error;
};

/// Recall is undefined when there are no ground truths.
class UndefinedRecallError : public Error {
 public:
  using Error::Error;
};

/// Two evaluation reports that cannot be compared.
class InvalidComparisonError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace lfp

#endif  // LFP_ERRORS_HPP_
