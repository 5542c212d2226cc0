#pragma once

#include <stdexcept>
#include <string>

namespace stochfet {

// Base class for everything thrown by this library, so callers can catch
// stochfet::error at the CLI boundary and map it to a nonzero exit code.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values (out-of-range quantiles, non-positive sigma, ...).
class domain_error : public error {
 public:
  explicit domain_error(const std::string& msg) : error(msg) {}
};

// Root finder called with endpoints that do not bracket a sign change.
class bracket_error : public error {
 public:
  explicit bracket_error(const std::string& msg) : error(msg) {}
};

// Iterative method exceeded its iteration cap.
class convergence_error : public error {
 public:
  explicit convergence_error(const std::string& msg) : error(msg) {}
};

// Mismatched vector/matrix dimensions.
class shape_error : public error {
 public:
  explicit shape_error(const std::string& msg) : error(msg) {}
};

// Unknown device id or other failed lookup.
class lookup_error : public error {
 public:
  explicit lookup_error(const std::string& msg) : error(msg) {}
};

// Malformed input file; message carries the line number where applicable.
class parse_error : public error {
 public:
  explicit parse_error(const std::string& msg) : error(msg) {}
};

// File could not be opened, read, or written.
class io_error : public error {
 public:
  explicit io_error(const std::string& msg) : error(msg) {}
};

// Invalid configuration (bad hyperparameters, inconsistent model file, ...).
class config_error : public error {
 public:
  explicit config_error(const std::string& msg) : error(msg) {}
};

// A mixture component whose mass above the truncation point is numerically
// zero; carries the component index so callers can report which one.
class degenerate_component_error : public error {
 public:
  degenerate_component_error(const std::string& msg, int component)
      : error(msg), component_(component) {}
  int component() const { return component_; }

 private:
  int component_;
};

// Metric undefined for the given data (e.g. R^2 with zero target variance).
class metric_error : public error {
 public:
  explicit metric_error(const std::string& msg) : error(msg) {}
};

}  // namespace stochfet
