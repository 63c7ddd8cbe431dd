#pragma once

#include <stdexcept>
#include <string>

namespace hfp {

// Every failure the library reports derives from Error so callers can catch
// one type; the subclasses let the CLI map failures to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or inconsistent configuration (bad weights, missing PPA entry, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed B*-tree or other broken internal structure.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// Input that can never produce a legal floorplan (e.g. a hard IP locked to a
/// technology no die provides).
class InfeasibleInput : public Error {
 public:
  using Error::Error;
};

/// Operation called on an object in the wrong state (e.g. evaluating an
/// unpacked die).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Design file problems. `path` is a JSON-pointer-like location of the
/// offending field, `kind` one of "parse", "schema", "integrity".
class DesignFileError : public Error {
 public:
  DesignFileError(std::string kind, std::string path, const std::string& reason)
      : Error(kind + " error at " + path + ": " + reason),
        kind_(std::move(kind)),
        path_(std::move(path)) {}

  const std::string& kind() const { return kind_; }
  const std::string& path() const { return path_; }

 private:
  std::string kind_;
  std::string path_;
};

}  // namespace hfp
